#include <cmath>

#include "doctest.h"
#include "mwlab/sparse.hpp"
#include "mwlab/rng.hpp"
#include "mwlab/summation.hpp"
#include "oracles.hpp"

using namespace mwlab;

namespace {

GridFunction constant_ones(const GridGeometry& g, int n = 1) {
    GridFunction f(g, n);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        for (int i = 0; i < n; ++i) f.at(c, i) = 1.0;
    return f;
}

GridFunction random_field(Rng& rng, const GridGeometry& g, int n) {
    GridFunction f(g, n);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        for (int i = 0; i < n; ++i) f.at(c, i) = rng.uniform(-1.0, 1.0);
    return f;
}

// independent scalar sparse sum: sum_Q <|f|>_{r,Q} <|g|>_{s,Q} |Q|
double scalar_sparse_oracle(const GridFunction& f, const GridFunction& g,
                            const SparseFamily& fam, double r, double s) {
    const auto& geom = f.geometry();
    double total = 0.0;
    for (const SparseCube& sc : fam.cubes) {
        double fr = 0.0, gs = 0.0;
        std::int64_t cnt = 0;
        for_each_cell(geom, sc.region, [&](std::int64_t c) {
            fr += std::pow(std::abs(f.at(c)), r);
            gs += std::pow(std::abs(g.at(c)), s);
            ++cnt;
        });
        fr = std::pow(fr / cnt, 1.0 / r);
        gs = std::pow(gs / cnt, 1.0 / s);
        total += fr * gs * (static_cast<double>(cnt) * geom.cell_measure());
    }
    return total;
}

}  // namespace

TEST_CASE("exceptional_set: zero function, infinite thresholds, brute force") {
    GridGeometry g(1, 5);
    auto t = KernelOperator::hilbert(g);
    DyadicCube q0{1, 0, 0};

    GridFunction zero(g, 1);
    auto exz = exceptional_set(t, zero, zero, q0, 1.0, 1.0, 1.0, 1.0, 2.0);
    CHECK(exz.omega_cells == 0);

    Rng rng(3);
    GridFunction f = random_field(rng, g, 2);
    GridFunction h = random_field(rng, g, 2);
    auto ex_inf = exceptional_set(t, f, h, q0, 1e300, 1e300, 1.0, 1.0, 2.0);
    CHECK(ex_inf.omega_cells == 0);

    // brute-force re-evaluation of the defining sets
    const double a1 = 0.8, a2 = 0.9, q = 1.0, r = 1.0, s = 2.0;
    auto ex = exceptional_set(t, f, h, q0, a1, a2, q, r, s);
    const GridRegion q3 = tripled_region(g, q0);
    const GridRegion q0r = cube_region(g, q0);
    std::int64_t count = 0;
    for (int x = q0r.x0; x < q0r.x1; ++x) {
        bool in = false;
        for (int i = 0; i < 2; ++i) {
            GridFunction fi = f.component(i);
            GridFunction hi = h.component(i);
            const double favg_q = p_average(fi, q3, q);
            GridFunction tfi = apply_masked(t, fi, q3);
            if (std::abs(tfi.at(x)) > a1 * favg_q) in = true;
            const double fr = p_average(fi, q3, r), hs = p_average(hi, q3, s);
            auto mt = bilinear_sharp_maximal_local(t, fi, hi, q0);
            if (mt.at(x) > a2 * fr * hs) in = true;
        }
        CHECK(static_cast<bool>(ex.mask[x]) == in);
        if (in) ++count;
    }
    CHECK(count == ex.omega_cells);
}

TEST_CASE("build_local_sparse: atom input gives an ancestor chain, trace invariants") {
    GridGeometry g(1, 5);
    auto t = KernelOperator::hilbert(g);
    GridFunction f(g, 1);
    f.at(13) = 1.0;
    GridFunction ones = constant_ones(g);

    SparseExponents exps{1.0, 1.0, 2.0};
    auto local = build_local_sparse(t, f, ones, DyadicCube{0, 0, 0}, ThresholdMode::Adaptive, exps);

    REQUIRE_FALSE(local.family.empty());
    CHECK(local.trace.iterations.size() == local.family.size());
    for (const auto& rec : local.trace.iterations) {
        CHECK(rec.omega_bound_ok);
        CHECK(rec.cz_half_ok);
        CHECK(rec.cz_pointwise_ok);
    }
    // retained sets are at least half of each cube and pairwise disjoint
    std::vector<std::uint8_t> seen(g.cell_count(), 0);
    for (std::size_t i = 0; i < local.family.size(); ++i) {
        const auto r = cube_region(g, local.family[i]);
        CHECK(2 * static_cast<std::int64_t>(local.retained_cells[i].size()) >= r.cells(g.d));
        for (std::int64_t c : local.retained_cells[i]) {
            CHECK_FALSE(seen[c]);
            seen[c] = 1;
        }
    }
    // the family is a chain of ancestors of the atom (hand simulation)
    for (std::size_t i = 1; i < local.family.size(); ++i)
        CHECK(cube_contains_cell(g, local.family[i], 13));
    for (std::size_t i = 0; i + 1 < local.family.size(); ++i) {
        const auto ri = cube_region(g, local.family[i]);
        const auto rj = cube_region(g, local.family[i + 1]);
        CHECK(ri.contains(rj));
    }
}

TEST_CASE("build_global_sparse: empty input, partition structure, eta certificate") {
    GridGeometry g(1, 5);
    auto t = KernelOperator::hilbert(g);
    GridFunction zero(g, 1);
    GridFunction ones = constant_ones(g);
    SparseExponents exps{1.0, 1.0, 2.0};

    auto empty = build_global_sparse(t, zero, ones, ThresholdMode::Adaptive, exps);
    CHECK(empty.family.cubes.empty());

    Rng rng(7);
    // f supported inside a small dyadic cube so the ring partition is real
    GridFunction f(g, 1);
    for (int x = 8; x < 12; ++x) f.at(x) = rng.uniform(-1.0, 1.0);
    GridFunction h = random_field(rng, g, 1);

    auto gs = build_global_sparse(t, f, h, ThresholdMode::Adaptive, exps);
    REQUIRE_FALSE(gs.family.cubes.empty());
    CHECK(gs.partition.size() > 1);

    // partition covers the domain disjointly and 3R contains supp f
    std::vector<std::uint8_t> cover(g.cell_count(), 0);
    for (const auto& rj : gs.partition) {
        for_each_cell(g, cube_region(g, rj), [&](std::int64_t c) {
            CHECK_FALSE(cover[c]);
            cover[c] = 1;
        });
        const auto r3 = tripled_region(g, rj);
        for (int x = 8; x < 12; ++x) CHECK((x >= r3.x0 && x < r3.x1));
    }
    for (std::int64_t c = 0; c < g.cell_count(); ++c) CHECK(cover[c]);

    const double eta = 1.0 / (2.0 * std::pow(3.0, g.d));
    auto cert = sparse_certify(gs.family, eta);
    CHECK(cert.flow_feasible);
    CHECK(cert.carleson <= 2.0 * std::pow(3.0, g.d) + 1e-12);

    // untripled union is 1/2-sparse
    SparseFamily untripled;
    untripled.geom = g;
    for (const auto& q : gs.untripled)
        untripled.cubes.push_back({q, false, cube_region(g, q)});
    auto cert2 = sparse_certify(untripled, 0.5);
    CHECK(cert2.flow_feasible);
    CHECK(cert2.carleson <= 2.0 + 1e-12);

    for (const auto& rec : gs.trace.iterations) {
        CHECK(rec.omega_bound_ok);
        CHECK(rec.cz_half_ok);
        CHECK(rec.cz_pointwise_ok);
    }
}

TEST_CASE("sparse_certify: nested chain, level partition, flow implies Carleson") {
    GridGeometry g(1, 4);
    SparseFamily chain;
    chain.geom = g;
    for (int l = 0; l < 3; ++l) chain.cubes.push_back({DyadicCube{l, 0, 0}, false,
                                                       cube_region(g, DyadicCube{l, 0, 0})});
    auto cert = sparse_certify(chain, 0.5);
    CHECK(chain.carleson_constant == doctest::Approx(1.75).epsilon(1e-15));  // 1 + 1/2 + 1/4
    CHECK(cert.carleson <= 2.0);
    CHECK(cert.flow_feasible);
    REQUIRE(chain.has_assignment);
    // assignment: disjoint, inside the cube, at least eta |Q|
    std::vector<double> used(g.cell_count(), 0.0);
    for (std::size_t i = 0; i < chain.cubes.size(); ++i) {
        double mass = 0.0;
        for (const auto& [cell, frac] : chain.assignment[i]) {
            CHECK(frac > 0.0);
            CHECK(frac <= 1.0 + 1e-15);
            used[cell] += frac;
            mass += frac;
            CHECK(cube_contains_cell(g, chain.cubes[i].base, cell));
        }
        CHECK(mass + 1e-12 >= 0.5 * chain.cubes[i].region.cells(g.d));
    }
    for (double u : used) CHECK(u <= 1.0 + 1e-12);

    // a full level is a partition: carleson 1, eta = 1 feasible
    SparseFamily level;
    level.geom = g;
    for (int x = 0; x < 4; ++x)
        level.cubes.push_back({DyadicCube{2, x, 0}, false, cube_region(g, DyadicCube{2, x, 0})});
    auto cl = sparse_certify(level, 1.0);
    CHECK(cl.carleson == doctest::Approx(1.0));
    CHECK(cl.flow_feasible);

    // random families: flow feasibility at eta implies carleson <= 1/eta
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        SparseFamily fam;
        fam.geom = g;
        const int count = 2 + static_cast<int>(rng.below(6));
        for (int k = 0; k < count; ++k) {
            const int l = static_cast<int>(rng.below(g.L + 1));
            const int x = static_cast<int>(rng.below(1 << l));
            fam.cubes.push_back({DyadicCube{l, x, 0}, false, cube_region(g, DyadicCube{l, x, 0})});
        }
        const double eta = 0.25 + 0.5 * rng.uniform();
        auto c = sparse_certify(fam, std::round(eta * 16.0) / 16.0);
        if (c.flow_feasible) CHECK(c.carleson <= 1.0 / (std::round(eta * 16.0) / 16.0) + 1e-9);
    }
}

TEST_CASE("domination_ratio: zero input and scalar oracle agreement") {
    GridGeometry g(1, 5);
    auto t = KernelOperator::hilbert(g);
    GridFunction zero(g, 1);
    GridFunction ones = constant_ones(g);
    SparseExponents exps{1.0, 1.0, 2.0};

    SparseFamily none;
    none.geom = g;
    auto dz = domination_ratio(t, zero, ones, none, 1.0, 2.0);
    CHECK(dz.lhs == 0.0);
    CHECK(dz.rhs_upper == 0.0);

    Rng rng(13);
    GridFunction f(g, 1);
    for (int x = 4; x < 16; ++x) f.at(x) = rng.uniform(-1.0, 1.0);
    GridFunction h = random_field(rng, g, 1);
    auto gs = build_global_sparse(t, f, h, ThresholdMode::Adaptive, exps);
    auto dom = domination_ratio(t, f, h, gs.family, 1.0, 2.0);

    // scalar bodies collapse to products of averages; bracket must be tight
    const double oracle = scalar_sparse_oracle(f, h, gs.family, 1.0, 2.0);
    CHECK(dom.rhs_lower == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(dom.rhs_upper == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(dom.lhs > 0.0);
    CHECK(std::isfinite(dom.ratio_lower));

    // vector instance: bracket sandwich and a finite measured constant
    GridFunction fv(g, 2), hv(g, 2);
    for (int x = 4; x < 16; ++x)
        for (int i = 0; i < 2; ++i) fv.at(x, i) = rng.uniform(-1.0, 1.0);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        for (int i = 0; i < 2; ++i) hv.at(c, i) = rng.uniform(-1.0, 1.0);
    auto gv = build_global_sparse(t, fv, hv, ThresholdMode::Adaptive, exps);
    auto dv = domination_ratio(t, fv, hv, gv.family, 1.0, 2.0);
    CHECK(dv.rhs_lower <= dv.rhs_upper * (1.0 + 1e-12));
    CHECK(dv.rhs_upper <= 2.0 * dv.rhs_lower + 1e-6 * dv.rhs_upper);  // n = 2 sandwich
    CHECK(dv.ratio_lower > 0.0);
    CHECK(std::isfinite(dv.ratio_upper));
}

TEST_CASE("build_local_sparse: paper thresholds mode records its constants") {
    GridGeometry g(1, 5);
    auto t = KernelOperator::hilbert(g);
    Rng rng(17);
    GridFunction f(g, 1);
    for (int x = 8; x < 24; ++x) f.at(x) = rng.uniform(-1.0, 1.0);
    GridFunction h = random_field(rng, g, 1);

    SparseExponents exps{1.0, 1.0, 2.0};
    auto prof = weak_norm_estimate(t, exps.q, 8, 99);
    const double mt = mt_product_norm_estimate(t, exps.r, exps.s, 4, 99);
    auto local = build_local_sparse(t, f, h, DyadicCube{0, 0, 0}, ThresholdMode::PaperThresholds,
                                    exps, &prof, mt);
    REQUIRE_FALSE(local.trace.iterations.empty());
    const auto& rec0 = local.trace.iterations.front();
    const double a1_expect = prof.weak_qq * std::pow(3.0, 1.0 / exps.q) *
                             std::pow(2.0, 4.0 / exps.q) * 1.0;
    if (rec0.doubling_rounds == 0) CHECK(rec0.a1 == doctest::Approx(a1_expect).epsilon(1e-12));
    for (const auto& rec : local.trace.iterations) {
        CHECK(rec.omega_bound_ok);
        CHECK(rec.cz_half_ok);
    }
    CHECK_THROWS_AS(build_local_sparse(t, f, h, DyadicCube{0, 0, 0},
                                       ThresholdMode::PaperThresholds, exps, nullptr),
                    InvalidInputError);
}
