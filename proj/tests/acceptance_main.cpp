// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <vector>

#include "mwlab/config.hpp"
#include "mwlab/convex_body.hpp"
#include "mwlab/io.hpp"
#include "mwlab/rng.hpp"
#include "mwlab/run.hpp"
#include "mwlab/sparse.hpp"
#include "mwlab/verify.hpp"
#include "oracles.hpp"

using namespace mwlab;
using clock_type = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    double seconds = 0.0;
};

void parallel_for(int count, const std::function<void(int)>& fn) {
    const int workers = std::min(2u, std::max(1u, std::thread::hardware_concurrency()));
    if (workers == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

// ----- corpus of (f, g, T) instances for criteria 1 and 2 --------------------

struct SparseInstance {
    GridGeometry geom{1, 10};
    TSpec op;
    int n = 1;
    std::uint64_t seed = 0;
    SparseExponents exps{1.0, 1.0, 2.0};
};

std::vector<SparseInstance> sparse_corpus() {
    std::vector<SparseInstance> out;
    for (int i = 0; i < 38; ++i) {
        SparseInstance inst;
        inst.geom = GridGeometry(1, 10);
        inst.n = 1 + i % 3;
        inst.seed = 100 + i;
        if (i % 2 == 0) {
            inst.op.kind = KernelKind::Hilbert;
            inst.exps = SparseExponents{1.0, 1.0, 2.0};
        } else {
            inst.op.kind = KernelKind::HormanderExample;
            inst.op.r = 1.5;
            inst.exps = SparseExponents{1.0, 1.5, 1.0};
        }
        out.push_back(inst);
    }
    for (int i = 0; i < 12; ++i) {
        SparseInstance inst;
        inst.geom = GridGeometry(2, 6);
        inst.n = 2;
        inst.seed = 500 + i;
        inst.op.kind = KernelKind::Rough;
        inst.op.omega_bins = 16;
        inst.op.omega_seed = 13 + i;
        inst.exps = SparseExponents{1.0, 1.0, 2.0};
        out.push_back(inst);
    }
    return out;
}

struct SparseRunData {
    bool guarantees_ok = true;
    bool flow_ok = true;
    double ratio_lower = 0.0;        // lhs / rhs_upper
    double ratio_lower_refined = 0.0;
    double scalar_oracle_err = 0.0;  // n = 1 instances only
    std::string note;
};

double scalar_sparse_sum(const GridFunction& f, const GridFunction& g, const SparseFamily& fam,
                         double r, double s) {
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
        total += std::pow(fr / cnt, 1.0 / r) * std::pow(gs / cnt, 1.0 / s) *
                 (static_cast<double>(cnt) * geom.cell_measure());
    }
    return total;
}

SparseRunData run_sparse_instance(const SparseInstance& inst, bool refine) {
    SparseRunData data;
    KernelOperator t = make_operator(inst.op, inst.geom);
    GridFunction f = vector_trial(inst.geom, inst.n, inst.seed, static_cast<int>(inst.seed % 5));
    GridFunction g = vector_trial(inst.geom, inst.n, inst.seed ^ 0xabcdefULL, 2);

    GlobalSparseResult built = build_global_sparse(t, f, g, ThresholdMode::Adaptive, inst.exps);
    for (const IterationRecord& rec : built.trace.iterations)
        data.guarantees_ok =
            data.guarantees_ok && rec.omega_bound_ok && rec.cz_half_ok && rec.cz_pointwise_ok;
    data.guarantees_ok = data.guarantees_ok && !built.trace.resolution_exhausted;

    const double eta = 1.0 / (2.0 * std::pow(3.0, inst.geom.d));
    CertifyResult cert = sparse_certify(built.family, eta);
    data.flow_ok = cert.flow_feasible;

    DominationResult dom =
        domination_ratio(t, f, g, built.family, inst.exps.r, inst.exps.s);
    data.ratio_lower = dom.ratio_lower;

    if (inst.n == 1 && !built.family.cubes.empty()) {
        const double oracle = scalar_sparse_sum(f, g, built.family, inst.exps.r, inst.exps.s);
        data.scalar_oracle_err =
            std::max(std::abs(dom.rhs_lower - oracle), std::abs(dom.rhs_upper - oracle)) /
            std::max(oracle, 1e-300);
    }

    if (refine) {
        GridGeometry fine(inst.geom.d, inst.geom.L + 1);
        KernelOperator tf = make_operator(inst.op, fine);
        GridFunction ff = f.refined();
        GridFunction gf = g.refined();
        GlobalSparseResult built2 =
            build_global_sparse(tf, ff, gf, ThresholdMode::Adaptive, inst.exps);
        DominationResult dom2 =
            domination_ratio(tf, ff, gf, built2.family, inst.exps.r, inst.exps.s);
        data.ratio_lower_refined = dom2.ratio_lower;
    }
    return data;
}

std::vector<SparseRunData> g_sparse_results;  // shared between criteria 1 and 2

Outcome criterion1_sparse_guarantees() {
    Outcome out;
    const auto corpus = sparse_corpus();
    g_sparse_results.assign(corpus.size(), SparseRunData{});
    parallel_for(static_cast<int>(corpus.size()),
                 [&](int i) { g_sparse_results[i] = run_sparse_instance(corpus[i], true); });

    int bad = 0;
    for (const auto& r : g_sparse_results)
        if (!r.guarantees_ok || !r.flow_ok) ++bad;
    out.pass = bad == 0;
    std::ostringstream os;
    os << corpus.size() << " instances, " << bad
       << " violations of {eta flow, |Omega| bound, CZ half bound}";
    out.detail = os.str();
    return out;
}

Outcome criterion2_domination() {
    Outcome out;
    double c_base = 0.0, c_fine = 0.0, worst_scalar = 0.0;
    for (const auto& r : g_sparse_results) {
        c_base = std::max(c_base, r.ratio_lower);
        c_fine = std::max(c_fine, r.ratio_lower_refined);
        worst_scalar = std::max(worst_scalar, r.scalar_oracle_err);
    }
    const bool stable = c_fine <= 1.25 * c_base;
    const bool scalar_ok = worst_scalar <= 1e-8;
    out.pass = stable && scalar_ok && c_base > 0.0 && std::isfinite(c_base);
    std::ostringstream os;
    os << "corpus constant C=" << c_base << ", refined C'=" << c_fine
       << " (growth x" << (c_base > 0 ? c_fine / c_base : 0.0)
       << "), scalar-oracle err=" << worst_scalar;
    out.detail = os.str();
    return out;
}

Outcome criterion3_scalar_reductions() {
    Outcome out;
    double worst = 0.0;
    double worst_identity = 0.0;
    for (int d : {1, 2}) {
        GridGeometry g(d, d == 1 ? 6 : 3);
        GridFunction ones(g, 1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) ones.at(c) = 1.0;

        std::vector<ScalarGridFunction> scalars;
        Rng rng(19 + d);
        scalars.push_back(oracles::random_weight_scalar(rng, g, 1.5));
        {
            ScalarGridFunction two(g, 1);
            for (std::int64_t c = 0; c < g.cell_count(); ++c)
                two.at(c) = g.cell_x(c) < g.side() / 2 ? 1.0 : 30.0;
            scalars.push_back(two);
        }

        for (int n : {1, 2, 3}) {
            MatrixWeight id = MatrixWeight::scalar_embedded(ones, n);
            worst_identity = std::max(worst_identity, std::abs(matrix_a1(id) - 1.0));
            worst_identity = std::max(worst_identity, std::abs(ainfty_sc(id, 2.0, 2 * n + 6) - 1.0));
            for (double p : {1.5, 2.0, 4.0})
                worst_identity =
                    std::max(worst_identity, std::abs(matrix_ap(id, p).value - 1.0));

            for (const auto& ws : scalars) {
                MatrixWeight w = MatrixWeight::scalar_embedded(ws, n);
                for (double p : {1.5, 2.0, 4.0}) {
                    const double sap = scalar_ap(ws, p);
                    worst = std::max(worst, std::abs(matrix_ap(w, p).value - sap) / sap);
                }
                double sa1 = 0.0;
                {
                    auto sums = level_sums(ws);
                    for (const auto& q : all_dyadic_cubes(g)) {
                        const auto r = cube_region(g, q);
                        double mn = 1e300;
                        for_each_cell(g, r, [&](std::int64_t c) { mn = std::min(mn, ws.at(c)); });
                        const std::size_t idx =
                            g.d == 1 ? static_cast<std::size_t>(q.x)
                                     : (static_cast<std::size_t>(q.y) << q.level) + q.x;
                        const double cells = static_cast<double>(r.cells(g.d));
                        sa1 = std::max(sa1, sums[q.level][idx] / cells / mn);
                    }
                }
                worst = std::max(worst, std::abs(matrix_a1(w) - sa1) / sa1);
                const double fa = fujii_ainfty(ws);
                worst = std::max(worst, std::abs(ainfty_sc(w, 2.0, 2 * n + 6) - fa) / fa);
                worst = std::max(worst, std::abs(ainfty_sc(w, 1.0, 2 * n + 6) - fa) / fa);
            }
        }
    }
    out.pass = worst <= 1e-10 && worst_identity <= 1e-12;
    std::ostringstream os;
    os << "scalar-embedding max rel err=" << worst << ", identity max err=" << worst_identity;
    out.detail = os.str();
    return out;
}

Outcome criterion4_reverse_holder() {
    Outcome out;
    int violations = 0, checks = 0;
    double worst_scalar = 0.0, worst_matrix = 0.0;

    for (int d : {1, 2}) {
        GridGeometry g(d, d == 1 ? 7 : 4);
        Rng rng(23 + d);
        for (int t = 0; t < 6; ++t) {
            auto w = oracles::random_weight_scalar(rng, g, 1.0 + 0.3 * t);
            const double r = 1.0 + 1.0 / (std::pow(2.0, d + 11) * fujii_ainfty(w));
            const double ratio = reverse_holder_ratio(w, r);
            worst_scalar = std::max(worst_scalar, ratio);
            ++checks;
            if (ratio > 2.0) ++violations;
        }
    }

    for (int d : {1, 2}) {
        const int L = d == 1 ? 5 : 3;
        for (int n : {2, 3}) {
            if (d == 2 && n == 3) continue;
            for (auto& cw : certificate_corpus(d, L, n, 900 + d)) {
                Rng rng(41);
                for (double p : {1.5, 2.0}) {
                    const double k = ainfty_sc(cw.weight, p, ainfty_directions(n));
                    const double r = 1.0 + 1.0 / (std::pow(2.0, d + 11) * k);
                    std::vector<SpdMatrix> mats{SpdMatrix::identity(n),
                                                oracles::random_spd(rng, n, 1e4)};
                    mats.push_back(
                        reducing_matrix(cw.weight, p, DyadicCube{0, 0, 0}, ReducingSide::Direct)
                            .matrix);
                    for (const auto& a : mats) {
                        const double ratio = matrix_rh_check(cw.weight, p, a, r);
                        worst_matrix = std::max(worst_matrix, ratio / (2.0 * n));
                        ++checks;
                        if (ratio > 2.0 * n) ++violations;
                    }
                }
            }
        }
    }
    out.pass = violations == 0;
    std::ostringstream os;
    os << checks << " checks, " << violations << " violations; scalar worst=" << worst_scalar
       << ", matrix worst/2n=" << worst_matrix;
    out.detail = os.str();
    return out;
}

Outcome criterion5_matrix_lemmas() {
    Outcome out;
    std::atomic<int> violations{0};
    const int pairs = 10000;
    const double alphas[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    parallel_for(8, [&](int chunk) {
        Rng rng(7000 + chunk);
        const int lo = chunk * pairs / 8, hi = (chunk + 1) * pairs / 8;
        for (int i = lo; i < hi; ++i) {
            const int n = 2 + static_cast<int>(rng.below(3));
            SpdMatrix a = oracles::random_spd(rng, n, 1e6);
            SpdMatrix b = oracles::random_spd(rng, n, 1e6);
            for (double alpha : alphas) {
                auto bb = bownik_bound(a, b, alpha);
                if (!(bb.lhs <= bb.rhs * (1.0 + 1e-12))) ++violations;
            }
            VecN e = oracles::random_unit(rng, n);
            for (double alpha : alphas) {
                auto hm = holder_mccarthy_check(a, alpha, e);
                if (!(hm.lhs <= hm.rhs * (1.0 + 1e-12))) ++violations;
            }
        }
    });
    out.pass = violations == 0;
    std::ostringstream os;
    os << pairs << " SPD pairs x 9 alphas (bownik + holder-mccarthy), " << violations
       << " violations";
    out.detail = os.str();
    return out;
}

Outcome criterion6_param_lemmas() {
    Outcome out;
    ParamLemmaReport rep = param_lemma_checks();
    out.pass = rep.points >= 10000 && rep.violations == 0;
    std::ostringstream os;
    os << rep.points << " exact-rational points, " << rep.violations << " violations, "
       << rep.skipped << " hypothesis-gated";
    out.detail = os.str();
    return out;
}

Outcome criterion7_john_reducing() {
    Outcome out;
    double worst_closed = 0.0, worst_lo = 0.0, worst_up = 0.0, worst_comp = 0.0;

    Rng rng(555);
    for (int n : {2, 3}) {
        GridGeometry g(1, 5);
        for (int t = 0; t < 6; ++t) {
            MatrixWeight w(g, n);
            for (std::int64_t c = 0; c < g.cell_count(); ++c)
                w.set_cell(c, oracles::random_spd(rng, n, 1e4).mat());
            w.finalize();
            for (const DyadicCube& q :
                 {DyadicCube{0, 0, 0}, DyadicCube{2, 1, 0}, DyadicCube{3, 5, 0}}) {
                // p = 2 closed form
                auto rm = reducing_matrix(w, 2.0, q, ReducingSide::Direct);
                Mat avg(n);
                std::int64_t cnt = 0;
                for_each_cell(g, cube_region(g, q), [&](std::int64_t c) {
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) avg(i, j) += w.cell(c)(i, j);
                    ++cnt;
                });
                SpdMatrix closed = frac_power(SpdMatrix::from(avg.scaled(1.0 / cnt)), 0.5);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        worst_closed = std::max(
                            worst_closed, std::abs(rm.matrix(i, j) - closed(i, j)) /
                                              std::max(1.0, op_norm(closed)));
                // brackets for several exponents and both sides
                for (double p : {1.5, 2.0, 3.0}) {
                    for (auto side : {ReducingSide::Direct, ReducingSide::Dual}) {
                        auto rr = reducing_matrix(w, p, q, side);
                        worst_lo = std::max(worst_lo, 1.0 - rr.bracket_lo);
                        worst_up = std::max(worst_up, rr.bracket_up - std::sqrt(double(n)));
                    }
                }
            }
        }
    }

    // John normalization component bound on 1000 random instances
    std::atomic<int> comp_checked{0};
    std::vector<double> comp_worst(4, 0.0);
    parallel_for(4, [&](int chunk) {
        Rng crng(9000 + chunk);
        GridGeometry g(1, 4);
        double local = 0.0;
        for (int t = 0; t < 250; ++t) {
            const int n = 2 + static_cast<int>(crng.below(2));
            const double p = 1.0 + 2.0 * crng.uniform();
            GridFunction f(g, n);
            for (std::int64_t c = 0; c < g.cell_count(); ++c)
                for (int i = 0; i < n; ++i) f.at(c, i) = crng.uniform(-1.0, 1.0);
            const DyadicCube q{1, static_cast<int>(crng.below(2)), 0};
            auto jn = john_normalize(f, q, p);
            if (jn.rank == 0) continue;
            for (int j = 0; j < jn.rank; ++j) {
                const double avg = p_average(jn.normalized.component(j), q, p);
                local = std::max(local, avg - std::sqrt(double(jn.rank)));
            }
            ++comp_checked;
        }
        comp_worst[chunk] = local;
    });
    for (double v : comp_worst) worst_comp = std::max(worst_comp, v);

    out.pass = worst_closed <= 1e-8 && worst_lo <= 1e-6 && worst_up <= 1e-6 && worst_comp <= 1e-6;
    std::ostringstream os;
    os << "p=2 closed-form err=" << worst_closed << ", bracket lo slack=" << worst_lo
       << ", up slack=" << worst_up << ", john component slack=" << worst_comp << " ("
       << comp_checked << " instances)";
    out.detail = os.str();
    return out;
}

struct KindSetup {
    std::string id;
    int d, L, n;
    double p;
    double q_aux = 0.0;
    TSpec op;
};

Outcome criterion8_theorem_certificates() {
    Outcome out;
    std::vector<KindSetup> kinds;
    {
        TSpec hil;
        hil.kind = KernelKind::Hilbert;
        TSpec horm;
        horm.kind = KernelKind::HormanderExample;
        horm.r = 1.5;
        TSpec horm2 = horm;
        horm2.r = 2.0;
        TSpec rough;
        rough.kind = KernelKind::Rough;
        rough.omega_bins = 16;
        rough.omega_seed = 5;
        kinds.push_back({"rough-ap", 1, 6, 2, 2.0, 0.0, hil});
        kinds.push_back({"horm-ap", 1, 6, 2, 3.0, 0.0, horm});
        kinds.push_back({"a1", 1, 6, 2, 2.0, 0.0, hil});
        kinds.push_back({"aq", 1, 6, 2, 3.0, 1.5, hil});
        kinds.push_back({"cf-czo", 1, 6, 2, 2.0, 0.0, hil});
        kinds.push_back({"cf-rough", 2, 4, 2, 2.0, 0.0, rough});
        kinds.push_back({"cf-hormander", 1, 6, 2, 3.0, 0.0, horm});
        kinds.push_back({"endpoint-rough", 2, 4, 2, 2.0, 0.0, rough});
        kinds.push_back({"endpoint-hormander", 1, 6, 2, 2.0, 0.0, horm2});
    }

    int fail = 0, inconclusive = 0, total = 0;
    double worst_side = 0.0;
    std::ostringstream notes;
    const int trials = 6;
    const std::uint64_t seed = 31;

    for (const KindSetup& ks : kinds) {
        GridGeometry g(ks.d, ks.L);
        GridFunction ones(g, 1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) ones.at(c) = 1.0;
        MatrixWeight identity = MatrixWeight::scalar_embedded(ones, ks.n);

        auto corpus = certificate_corpus(ks.d, ks.L, ks.n, 1234 + total);
        CertificateReport cal;
        const auto run_one = [&](const MatrixWeight& w,
                                 double calibration) -> CertificateReport {
            if (ks.id == "rough-ap")
                return verify_strong(w, ks.p, ks.op, StrongKind::RoughAp, trials, seed, 0.0,
                                     calibration);
            if (ks.id == "horm-ap")
                return verify_strong(w, ks.p, ks.op, StrongKind::HormAp, trials, seed, 0.0,
                                     calibration);
            if (ks.id == "a1")
                return verify_strong(w, ks.p, ks.op, StrongKind::A1, trials, seed, 0.0,
                                     calibration);
            if (ks.id == "aq")
                return verify_strong(w, ks.p, ks.op, StrongKind::Aq, trials, seed, ks.q_aux,
                                     calibration);
            if (ks.id == "cf-czo")
                return verify_cf(w, ks.p, ks.op, CfKind::Czo, trials, seed, calibration);
            if (ks.id == "cf-rough")
                return verify_cf(w, ks.p, ks.op, CfKind::Rough, trials, seed, calibration);
            if (ks.id == "cf-hormander")
                return verify_cf(w, ks.p, ks.op, CfKind::Hormander, trials, seed, calibration);
            if (ks.id == "endpoint-rough")
                return verify_endpoint(w, ks.op, EndpointKind::Rough, trials, seed, calibration);
            return verify_endpoint(w, ks.op, EndpointKind::HormanderR, trials, seed, calibration);
        };
        cal = run_one(identity, 0.0);

        for (auto& cw : corpus) {
            ++total;
            CertificateReport rep = run_one(cw.weight, cal.ratio);
            if (rep.status == "fail") {
                ++fail;
                notes << " [" << ks.id << "/" << cw.name << " ratio=" << rep.ratio
                      << " bound=" << rep.pass_bound << "]";
            } else if (rep.status == "inconclusive") {
                ++inconclusive;
            }
            // exponent side conditions
            if (ks.id == "rough-ap") {
                auto expo = certificate_exponents(cw.weight, ks.p, "rough-ap");
                worst_side = std::max(worst_side, expo.extras.at("side_sgamma_residual"));
            } else if (ks.id == "horm-ap") {
                certificate_exponents(cw.weight, ks.p, "horm-ap", 0.0, ks.op.r);
            } else if (ks.id == "aq") {
                certificate_exponents(cw.weight, ks.p, "aq", ks.q_aux);
            }
        }
    }

    const bool inconclusive_ok = inconclusive * 10 < total;
    out.pass = fail == 0 && inconclusive_ok && worst_side <= 1e-12;
    std::ostringstream os;
    os << total << " certificates over 9 kinds, " << fail << " failures, " << inconclusive
       << " inconclusive, worst exponent-identity residual=" << worst_side << notes.str();
    out.detail = os.str();
    return out;
}

Outcome criterion9_determinism() {
    Outcome out;
    namespace fs = std::filesystem;
    auto cfg = parse_config_text(R"({"d":1,"L":6,"n":2,"p":2.0,
        "weight":{"kind":"random-log-lipschitz","params":{"amp":0.9},"seed":5},
        "operator":{"kind":"hilbert"},
        "theorems":["rough-ap","a1","aq","cf-czo","endpoint-rough"],
        "q":1.5,
        "sparse":true,"lemmas":true,"refinement":true,
        "trials":5,"seed":17,"sparse_seeds":[3,4]})");
    const fs::path d1 = fs::temp_directory_path() / "mwlab_accept_det_a";
    const fs::path d2 = fs::temp_directory_path() / "mwlab_accept_det_b";
    fs::remove_all(d1);
    fs::remove_all(d2);
    const int c1 = run_experiment(cfg, d1.string());
    const int c2 = run_experiment(cfg, d2.string());

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    const std::string r1 = slurp(d1 / "report.json");
    const std::string r2 = slurp(d2 / "report.json");
    out.pass = c1 == kExitPass && c2 == kExitPass && !r1.empty() && r1 == r2;
    std::ostringstream os;
    os << "two full runs: exit codes " << c1 << "/" << c2 << ", report.json "
       << (r1 == r2 ? "byte-identical" : "DIFFERS") << " (" << r1.size() << " bytes)";
    out.detail = os.str();
    return out;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Outcome()> fn;
        double budget_seconds;  // 0 = no stated budget
    };
    const std::vector<Entry> criteria{
        {"1 sparse construction guarantees", criterion1_sparse_guarantees, 300.0},
        {"2 domination inequality + refinement", criterion2_domination, 0.0},
        {"3 scalar reductions", criterion3_scalar_reductions, 0.0},
        {"4 reverse Holder", criterion4_reverse_holder, 0.0},
        {"5 matrix lemmas (Bownik / Holder-McCarthy)", criterion5_matrix_lemmas, 60.0},
        {"6 parameter lemmas (exact rational)", criterion6_param_lemmas, 30.0},
        {"7 John / reducing machinery", criterion7_john_reducing, 0.0},
        {"8 theorem certificates", criterion8_theorem_certificates, 0.0},
        {"9 determinism", criterion9_determinism, 0.0},
    };

    bool all_pass = true;
    for (const auto& entry : criteria) {
        const auto t0 = clock_type::now();
        Outcome o;
        try {
            o = entry.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        o.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
        if (entry.budget_seconds > 0.0 && o.seconds > entry.budget_seconds) {
            o.pass = false;
            o.detail += " [over time budget]";
        }
        std::printf("[%s] criterion %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", entry.name,
                    o.detail.c_str(), o.seconds);
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }
    std::printf("%s\n", all_pass ? "ACCEPTANCE: ALL CRITERIA PASS" : "ACCEPTANCE: FAILURES");
    return all_pass ? 0 : 1;
}
