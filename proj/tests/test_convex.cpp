#include <cmath>

#include "doctest.h"
#include "mwlab/convex_body.hpp"
#include "mwlab/rng.hpp"
#include "oracles.hpp"

using namespace mwlab;

namespace {

GridFunction random_vector_field(Rng& rng, const GridGeometry& g, int n, double amp = 1.0) {
    GridFunction f(g, n);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        for (int i = 0; i < n; ++i) f.at(c, i) = amp * rng.uniform(-1.0, 1.0);
    return f;
}

// projected-gradient maximization of <e, avg f phi> over the normalized
// L^{p'} ball, independent of the closed-form dual alignment. The
// projection is the true Euclidean one, solved by nested bisection on the
// KKT system phi + lambda p' |phi|^{p'-1} sign(phi) = y.
double support_duality_oracle(const ConvexBodyAverage& body, const VecN& e) {
    const auto& vals = body.cell_values();
    const std::size_t m = vals.size();
    const double p = body.exponent();
    const double pp = p > 1.0 ? p / (p - 1.0) : std::numeric_limits<double>::infinity();
    std::vector<double> phi(m, 0.0), grad(m);
    for (std::size_t i = 0; i < m; ++i) grad[i] = vals[i].dot(e);

    const auto pp_mass = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += std::pow(std::abs(x), pp);
        return s;
    };
    const auto shrink = [&](double y, double lambda) {
        // solve phi + lambda p' phi^{p'-1} = y for phi in [0, y], y >= 0
        double lo = 0.0, hi = y;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double val = mid + lambda * pp * std::pow(mid, pp - 1.0);
            (val < y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    const auto project = [&](std::vector<double>& v) {
        if (p <= 1.0) {
            for (double& x : v) x = std::clamp(x, -1.0, 1.0);
            return;
        }
        if (pp_mass(v) <= static_cast<double>(m)) return;
        double lam_lo = 0.0, lam_hi = 1.0;
        std::vector<double> tmp(v.size());
        const auto mass_at = [&](double lambda) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double s = shrink(std::abs(v[i]), lambda);
                tmp[i] = v[i] >= 0.0 ? s : -s;
            }
            return pp_mass(tmp);
        };
        while (mass_at(lam_hi) > static_cast<double>(m)) lam_hi *= 2.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lam_lo + lam_hi);
            (mass_at(mid) > static_cast<double>(m) ? lam_lo : lam_hi) = mid;
        }
        mass_at(lam_hi);
        v = tmp;
    };

    double best = 0.0;
    const double eta = 0.5;
    for (int it = 0; it < 300; ++it) {
        for (std::size_t i = 0; i < m; ++i) phi[i] += eta * grad[i];
        project(phi);
        double val = 0.0;
        for (std::size_t i = 0; i < m; ++i) val += grad[i] * phi[i];
        best = std::max(best, val / m);
    }
    return best;
}

}  // namespace

TEST_CASE("support: constant f gives the segment body") {
    GridGeometry g(1, 3);
    GridFunction f(g, 3);
    VecN c = VecN::zero(3);
    c[0] = 1.5;
    c[1] = -0.5;
    c[2] = 2.0;
    for (std::int64_t i = 0; i < g.cell_count(); ++i) f.set_value(i, c);
    ConvexBodyAverage body(f, DyadicCube{0, 0, 0}, 2.0);
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        VecN e = oracles::random_unit(rng, 3);
        CHECK(body.support(e) == doctest::Approx(std::abs(c.dot(e))).epsilon(1e-12));
    }
    CHECK(body.degenerate_rank() == 1);
}

TEST_CASE("support: p=2 Gram oracle and homogeneity") {
    GridGeometry g(1, 4);
    Rng rng(7);
    GridFunction f = random_vector_field(rng, g, 3);
    ConvexBodyAverage body(f, DyadicCube{1, 0, 0}, 2.0);
    Mat gram = body.gram();
    for (int t = 0; t < 30; ++t) {
        VecN e = oracles::random_unit(rng, 3);
        const double h = body.support(e);
        double q = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) q += e[i] * gram(i, j) * e[j];
        CHECK(h * h == doctest::Approx(q).epsilon(1e-12));
        CHECK(body.support(e.scaled(-2.5)) == doctest::Approx(2.5 * h).epsilon(1e-12));
        VecN e2 = oracles::random_unit(rng, 3);
        CHECK(body.support(e + e2) <= body.support(e) + body.support(e2) + 1e-12);
    }
}

TEST_CASE("support: numerical duality against projected gradient") {
    GridGeometry g(1, 3);
    Rng rng(11);
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        GridFunction f = random_vector_field(rng, g, 2);
        ConvexBodyAverage body(f, DyadicCube{0, 0, 0}, p);
        for (int t = 0; t < 5; ++t) {
            VecN e = oracles::random_unit(rng, 2);
            const double h = body.support(e);
            const double dual = support_duality_oracle(body, e);
            CHECK(dual == doctest::Approx(h).epsilon(1e-3));
            CHECK(dual <= h * (1.0 + 1e-9));  // oracle stays feasible
            // support_point realizes the support value
            CHECK(body.support_point(e).dot(e) == doctest::Approx(h).epsilon(1e-10));
        }
    }
}

TEST_CASE("support: monotone in p on corpus") {
    GridGeometry g(1, 4);
    Rng rng(13);
    GridFunction f = random_vector_field(rng, g, 2);
    ConvexBodyAverage b1(f, DyadicCube{0, 0, 0}, 1.0);
    ConvexBodyAverage b2(f, DyadicCube{0, 0, 0}, 2.0);
    ConvexBodyAverage b3(f, DyadicCube{0, 0, 0}, 3.5);
    for (int t = 0; t < 30; ++t) {
        VecN e = oracles::random_unit(rng, 2);
        CHECK(b1.support(e) <= b2.support(e) * (1.0 + 1e-12));
        CHECK(b2.support(e) <= b3.support(e) * (1.0 + 1e-12));
    }
}

TEST_CASE("ellipsoid_surrogate: zero body, Gram closed form, brackets") {
    GridGeometry g(1, 3);
    GridFunction zero(g, 2);
    ConvexBodyAverage zb(zero, DyadicCube{0, 0, 0}, 2.0);
    auto zs = ellipsoid_surrogate(zb);
    CHECK(zs.rank == 0);

    Rng rng(17);
    GridFunction f = random_vector_field(rng, g, 3);
    ConvexBodyAverage body(f, DyadicCube{0, 0, 0}, 2.0);
    auto s = ellipsoid_surrogate(body);
    REQUIRE(s.rank == 3);
    SpdMatrix groot = frac_power(SpdMatrix::from(body.gram()), 0.5);
    Mat emb = s.embedded(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(emb(i, j) == doctest::Approx(groot(i, j)).epsilon(1e-8));

    // p=1, two-valued field: polytope-like body, bracket within John range
    GridFunction tv(g, 2);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        tv.at(c, 0) = (c % 2 == 0) ? 1.0 : -0.3;
        tv.at(c, 1) = (c % 3 == 0) ? 0.4 : 1.1;
    }
    ConvexBodyAverage pb(tv, DyadicCube{0, 0, 0}, 1.0);
    auto ps = ellipsoid_surrogate(pb);
    CHECK(ps.bracket_lo >= 1.0 - 1e-6);
    CHECK(ps.bracket_up <= std::sqrt(2.0) + 1e-6);
}

TEST_CASE("body_product_bracket: segment, ellipsoid closed form, sign oracle") {
    GridGeometry g(1, 3);
    GridFunction seg(g, 2);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) seg.at(c, 0) = 1.0;
    ConvexBodyAverage sa(seg, DyadicCube{0, 0, 0}, 1.0);
    auto br = body_product_bracket(sa, sa);
    CHECK(br.lower <= 1.0 + 1e-10);
    CHECK(br.upper >= 1.0 - 1e-10);
    CHECK(br.lower == doctest::Approx(1.0).epsilon(1e-9));

    Rng rng(19);
    GridFunction f = random_vector_field(rng, g, 2);
    GridFunction h = random_vector_field(rng, g, 2);
    ConvexBodyAverage fa(f, DyadicCube{0, 0, 0}, 2.0);
    ConvexBodyAverage hb(h, DyadicCube{0, 0, 0}, 2.0);
    auto b2 = body_product_bracket(fa, hb);
    SpdMatrix ga = frac_power(SpdMatrix::from(fa.gram()), 0.5);
    SpdMatrix gb = frac_power(SpdMatrix::from(hb.gram()), 0.5);
    const double exact = op_norm(gb.mat() * ga.mat());
    CHECK(b2.lower <= exact * (1.0 + 1e-8));
    CHECK(b2.upper >= exact * (1.0 - 1e-8));
    CHECK(b2.lower == doctest::Approx(exact).epsilon(1e-6));  // ellipsoids: alternation is tight

    // p = s = 1 brute force over sign patterns on a coarse grid
    for (int n : {2, 3}) {
        for (int t = 0; t < 3; ++t) {
            GridFunction u = random_vector_field(rng, g, n);
            GridFunction v = random_vector_field(rng, g, n);
            ConvexBodyAverage ub(u, DyadicCube{0, 0, 0}, 1.0);
            ConvexBodyAverage vb(v, DyadicCube{0, 0, 0}, 1.0);
            auto br1 = body_product_bracket(ub, vb);
            const std::int64_t m = g.cell_count();
            double exact1 = 0.0;
            for (std::int64_t sa_mask = 0; sa_mask < (1 << m); ++sa_mask)
                for (std::int64_t sb_mask = 0; sb_mask < (1 << m); ++sb_mask) {
                    VecN pa = VecN::zero(n), pb = VecN::zero(n);
                    for (std::int64_t c = 0; c < m; ++c)
                        for (int i = 0; i < n; ++i) {
                            pa[i] += ((sa_mask >> c) & 1 ? 1.0 : -1.0) * u.at(c, i) / m;
                            pb[i] += ((sb_mask >> c) & 1 ? 1.0 : -1.0) * v.at(c, i) / m;
                        }
                    exact1 = std::max(exact1, pa.dot(pb));
                }
            CHECK(br1.lower <= exact1 * (1.0 + 1e-9));
            CHECK(br1.upper >= exact1 * (1.0 - 1e-9));
            // sandwich: upper <= inflation^2-ish * lower; spec asks n*lower
            CHECK(br1.lower <= br1.upper * (1.0 + 1e-12));
            CHECK(br1.upper <= n * br1.lower + 1e-6 * br1.upper);
        }
    }
}

TEST_CASE("john_normalize: already-normalized, degenerate, sqrt(n) bound") {
    GridGeometry g(1, 3);

    // f whose body is the unit ball: orthonormal frame spread over cells
    GridFunction f(g, 2);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const double th = 3.14159265358979 * (c + 0.5) / g.cell_count();
        // scaled so that <f e, f e> averages to 1 per direction
        f.at(c, 0) = std::sqrt(2.0) * std::cos(th);
        f.at(c, 1) = std::sqrt(2.0) * std::sin(th);
    }
    auto jn = john_normalize(f, DyadicCube{0, 0, 0}, 2.0);
    REQUIRE(jn.rank == 2);
    // p=2 body of f is close to the unit disc; map is close to identity
    CHECK(jn.map(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(jn.map(1, 1) == doctest::Approx(1.0).epsilon(1e-6));

    // constant f: rank-1 degenerate signal
    GridFunction cf(g, 2);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) cf.at(c, 0) = 2.0;
    auto dj = john_normalize(cf, DyadicCube{0, 0, 0}, 2.0);
    CHECK(dj.degenerate);
    CHECK(dj.rank == 1);
    // M f~ reconstructs f on the span
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        double recon = dj.span(0, 0) * dj.map(0, 0) * dj.normalized.at(c, 0);
        CHECK(recon == doctest::Approx(cf.at(c, 0)).epsilon(1e-9));
    }

    // random fields: normalized components meet the sqrt(n) bound and the
    // normalized body's own surrogate is the unit ball
    Rng rng(23);
    for (int n : {2, 3}) {
        for (double p : {1.0, 2.0, 3.0}) {
            for (int t = 0; t < 5; ++t) {
                GridFunction rf = random_vector_field(rng, GridGeometry(1, 4), n);
                const DyadicCube q{1, 1, 0};
                auto norm = john_normalize(rf, q, p);
                REQUIRE(norm.rank == n);
                const GridRegion r = cube_region(rf.geometry(), q);
                for (int j = 0; j < n; ++j) {
                    const double comp_avg = p_average(norm.normalized.component(j), q, p);
                    CHECK(comp_avg <= std::sqrt(static_cast<double>(n)) + 1e-6);
                }
                // John ellipsoid of the normalized body = unit ball, checked
                // on the construction probes mapped through the
                // normalization (MVEE is equivariant on the mapped points)
                ConvexBodyAverage nb(norm.normalized, r, p);
                {
                    auto dirs = probe_directions(n, 64 * n);
                    std::vector<VecN> pts;
                    for (const VecN& u : dirs) {
                        // construction probes live in span coordinates already
                        VecN mu = norm.map * u;
                        const double h = nb.support(mu);
                        REQUIRE(h > 0.0);
                        pts.push_back(mu.scaled(1.0 / h));
                    }
                    auto ball = mvee_symmetric(pts, 1e-11, 100000, 6000);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) {
                            const double target = i == j ? 1.0 : 0.0;
                            CHECK(std::abs(ball.shape(i, j) - target) <= 1e-6);
                        }
                }
                // reconstruction M f~ = f
                for (std::int64_t c = 0; c < rf.geometry().cell_count(); ++c) {
                    VecN ft = norm.normalized.value(c);
                    VecN mf = norm.map * ft;
                    for (int i = 0; i < n; ++i) {
                        double recon = 0.0;
                        for (int a = 0; a < n; ++a) recon += norm.span(i, a) * mf[a];
                        CHECK(recon == doctest::Approx(rf.at(c, i)).epsilon(1e-9));
                    }
                }
            }
        }
    }
}
