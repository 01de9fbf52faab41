#include "mwlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <boost/multiprecision/cpp_int.hpp>

#include "mwlab/convex_body.hpp"
#include "mwlab/rng.hpp"
#include "mwlab/summation.hpp"

namespace mwlab {

KernelOperator make_operator(const TSpec& ts, const GridGeometry& g) {
    switch (ts.kind) {
        case KernelKind::Hilbert: return KernelOperator::hilbert(g);
        case KernelKind::HormanderExample: return KernelOperator::hormander_example(g);
        case KernelKind::Rough: {
            Rng rng(ts.omega_seed);
            std::vector<double> omega(ts.omega_bins);
            for (double& v : omega) v = rng.uniform(-1.0, 1.0);
            return KernelOperator::rough(g, std::move(omega), ts.enforce_mean_zero);
        }
    }
    throw ConfigError("make_operator: unknown kind");
}

double omega_sup_norm(const KernelOperator& t) {
    if (t.kind() == KernelKind::Rough) {
        double m = 0.0;
        for (double v : t.omega()) m = std::max(m, std::abs(v));
        return m;
    }
    return 1.0;  // Hilbert is the d=1 rough integral with Omega = sign
}

GridFunction vector_trial(const GridGeometry& g, int n, std::uint64_t seed, int k) {
    Rng rng(seed * 0xd1342543de82ef95ULL + static_cast<std::uint64_t>(k) * 0xaf251af3b0f025b5ULL +
            0x9e3779b97f4a7c15ULL);
    GridFunction f(g, n);
    const int mode = k % 3;
    if (mode == 2) {
        for (std::int64_t c = 0; c < g.cell_count(); ++c)
            for (int i = 0; i < n; ++i) f.at(c, i) = rng.uniform(-1.0, 1.0);
        return f;
    }
    ScalarGridFunction base = trial_input(g, seed ^ 0x5851f42d4c957f2dULL, k);
    VecN dir = VecN::zero(n);
    if (mode == 0) {
        dir[(k / 3) % n] = 1.0;
    } else {
        double nrm = 0.0;
        while (nrm < 1e-9) {
            for (int i = 0; i < n; ++i) dir[i] = rng.gaussian();
            nrm = dir.norm();
        }
        dir = dir.scaled(1.0 / nrm);
    }
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        for (int i = 0; i < n; ++i) f.at(c, i) = base.at(c) * dir[i];
    return f;
}

namespace {

double conj_exp(double x) { return x / (x - 1.0); }

MatrixWeight power_weight(const MatrixWeight& w, double alpha) {
    MatrixWeight out(w.geometry(), w.vdim());
    const auto& field = w.power_field(alpha);
    for (std::int64_t c = 0; c < w.geometry().cell_count(); ++c) out.set_cell(c, field[c]);
    out.finalize();
    out.kind = w.kind + "^" + std::to_string(alpha);
    return out;
}

bool constants_conclusive(const std::map<std::string, double>& consts) {
    for (const auto& [k, v] : consts)
        if (!std::isfinite(v) || v > 1e10) return false;
    return true;
}

// ||  |W^{1/p} T (W^{-1/p} f)|  ||_p  /  ||f||_p, maximized over trials
double strong_empirical(const MatrixWeight& w, double p, const KernelOperator& t, int trials,
                        std::uint64_t seed) {
    const GridGeometry& g = w.geometry();
    const int n = w.vdim();
    const auto& wm = w.power_field(-1.0 / p);
    const auto& wp = w.power_field(1.0 / p);
    double best = 0.0;
    for (int k = 0; k < trials; ++k) {
        GridFunction f = vector_trial(g, n, seed, k);
        const double fn = lp_norm(f, p);
        if (fn == 0.0) continue;
        GridFunction u(g, n);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) u.set_value(c, wm[c] * f.value(c));
        GridFunction v = apply(t, u);
        ScalarGridFunction s(g, 1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) s.at(c) = (wp[c] * v.value(c)).norm();
        best = std::max(best, lp_norm(s, p) / fn);
    }
    return best;
}

void finalize_report(CertificateReport& rep, double calibration_ratio) {
    if (!constants_conclusive(rep.weight_constants)) {
        rep.status = "inconclusive";
        return;
    }
    rep.ratio = rep.constant_expression > 0.0 ? rep.empirical / rep.constant_expression : 0.0;
    if (calibration_ratio > 0.0) {
        rep.pass_bound = 10.0 * calibration_ratio;
        rep.status = rep.ratio <= rep.pass_bound ? "pass" : "fail";
    } else {
        rep.status = "raw";
    }
}

}  // namespace

CertificateReport certificate_exponents(const MatrixWeight& w, double p, const std::string& kind,
                                        double q_aux, double r_aux, MaximalMode mode) {
    const int d = w.geometry().d;
    const int dirs = ainfty_directions(w.vdim());
    const double tau = tau_dimensional(d);
    CertificateReport rep;
    rep.theorem_id = "exponents:" + kind;
    rep.weight_kind = w.kind;

    if (kind == "rough-ap") {
        if (p <= 1.0) throw DomainError("rough-ap: p > 1 required");
        const double pp = conj_exp(p);
        const double k1 = ainfty_sc(w, p, dirs, mode);
        const double k2 = ainfty_sc(power_weight(w, -pp / p), pp, dirs, mode);
        rep.weight_constants["ainfty_p"] = k1;
        rep.weight_constants["ainfty_dual"] = k2;
        const double c = (pp + 1.0) / 2.0;
        const double r = 1.0 + 1.0 / (tau * k2);
        const double gamma = 1.0 + 1.0 / (c * tau * k1);
        const double s = c * (1.0 + tau * k1) / (1.0 + c * tau * k1);
        rep.exponents["r"] = r;
        rep.exponents["gamma"] = gamma;
        rep.exponents["s"] = s;
        rep.exponents["s_prime"] = conj_exp(s);
        // s * gamma = 1 + 1/(2^{d+11} [W]) exactly; the paper's s' <~ p[W]
        // carries the hidden dimensional factor tau_d
        const double target = 1.0 + 1.0 / (tau * k1);
        rep.extras["side_sgamma_residual"] = std::abs(s * gamma - target);
        rep.extras["side_sprime_bound"] = 4.0 * p * tau * k1;
        if (rep.extras["side_sgamma_residual"] > 1e-12 * target)
            throw NumericError("rough-ap exponents: s*gamma identity failed");
        if (conj_exp(s) > 4.0 * p * tau * k1 * (1.0 + 1e-12))
            throw NumericError("rough-ap exponents: s' bound failed");
    } else if (kind == "horm-ap") {
        const double r = r_aux;
        if (!(r > 1.0 && p > r)) throw DomainError("horm-ap: requires 1 < r < p");
        const double pr = p / r;
        const double prp = conj_exp(pr);
        const double k2 = ainfty_sc(power_weight(w, -(r / p) * prp), prp, dirs, mode);
        const double k1 = ainfty_sc(w, pr, dirs, mode);
        rep.weight_constants["ainfty_pr"] = k1;
        rep.weight_constants["ainfty_dual"] = k2;
        rep.exponents["alpha"] = 1.0 + 1.0 / (tau * k2);
        rep.exponents["beta"] = 1.0 + 1.0 / (tau * k1);
        rep.exponents["r"] = r;
    } else if (kind == "a1") {
        const double kinf = ainfty_sc(w, 1.0, dirs, mode);
        rep.weight_constants["ainfty_1"] = kinf;
        rep.exponents["s"] = r_aux > 1.0 ? r_aux : (p + 1.0) / 2.0;
        rep.exponents["beta"] = 1.0 + 1.0 / (tau * kinf);
        if (!(rep.exponents["s"] < p)) throw DomainError("a1: s < p required");
    } else if (kind == "aq") {
        const double q = q_aux;
        if (!(q > 1.0 && q < p)) throw DomainError("aq: requires 1 < q < p");
        if (r_aux > 1.0 && !(p / q > r_aux)) throw DomainError("aq: requires p/q > r");
        const double kq = ainfty_sc(w, q, dirs, mode);
        rep.weight_constants["ainfty_q"] = kq;
        rep.exponents["s"] = r_aux > 1.0 ? r_aux : (p / q + 1.0) / 2.0;
        rep.exponents["beta"] = 1.0 + 1.0 / (tau * kq);
    } else if (kind == "cf") {
        const double k1 = ainfty_sc(w, p, dirs, mode);
        rep.weight_constants["ainfty_p"] = k1;
        const double c = (conj_exp(p) + 1.0) / 2.0;
        rep.exponents["r_czo"] = 1.0 + 1.0 / (tau * k1);
        rep.exponents["r_rough"] = 1.0 + 1.0 / (c * tau * k1);
        rep.exponents["s_rough"] = c * (1.0 + tau * k1) / (1.0 + c * tau * k1);
        if (r_aux > 1.0 && p > r_aux)
            rep.exponents["alpha_horm"] = 1.0 + 1.0 / (tau * ainfty_sc(w, p / r_aux, dirs, mode));
    } else {
        throw DomainError("certificate_exponents: unknown kind " + kind);
    }

    for (const auto& [name, val] : rep.exponents)
        if (!(val > 1.0)) throw NumericError("exponent " + name + " must exceed 1");
    rep.status = constants_conclusive(rep.weight_constants) ? "pass" : "inconclusive";
    return rep;
}

CertificateReport verify_strong(const MatrixWeight& w, double p, const TSpec& ts, StrongKind kind,
                                int trials, std::uint64_t seed, double q_aux,
                                double calibration_ratio) {
    const GridGeometry& g = w.geometry();
    const int dirs = ainfty_directions(w.vdim());
    KernelOperator t = make_operator(ts, g);
    CertificateReport rep;
    rep.weight_kind = w.kind;

    switch (kind) {
        case StrongKind::RoughAp: {
            if (p <= 1.0) throw DomainError("verify_strong rough-ap: p > 1");
            rep.theorem_id = "rough-ap";
            const double pp = conj_exp(p);
            const double ap = matrix_ap(w, p).value;
            const double k1 = ainfty_sc(w, p, dirs);
            const double k2 = ainfty_sc(power_weight(w, -pp / p), pp, dirs);
            rep.weight_constants["matrix_ap"] = ap;
            rep.weight_constants["ainfty_p"] = k1;
            rep.weight_constants["ainfty_dual"] = k2;
            rep.constant_expression = omega_sup_norm(t) * std::pow(ap, 1.0 / p) *
                                      std::pow(k2, 1.0 / p) * std::pow(k1, 1.0 / pp) *
                                      std::min(k1, k2);
            // the theorem displays min{...}; the proof's two one-sided
            // routes are logged alongside
            rep.extras["one_sided_k1"] = omega_sup_norm(t) * std::pow(ap, 1.0 / p) *
                                         std::pow(k2, 1.0 / p) * std::pow(k1, 1.0 / pp) * k1;
            rep.extras["one_sided_k2"] = omega_sup_norm(t) * std::pow(ap, 1.0 / p) *
                                         std::pow(k2, 1.0 / p) * std::pow(k1, 1.0 / pp) * k2;
            break;
        }
        case StrongKind::HormAp: {
            const double r = ts.r;
            if (!(r > 1.0 && p > r)) throw DomainError("verify_strong horm-ap: 1 < r < p");
            rep.theorem_id = "horm-ap";
            const double pr = p / r;
            const double prp = conj_exp(pr);
            const double apr = matrix_ap(w, pr).value;
            const double k2 = ainfty_sc(power_weight(w, -(r / p) * prp), prp, dirs);
            const double k1 = ainfty_sc(w, pr, dirs);
            rep.weight_constants["matrix_ap_pr"] = apr;
            rep.weight_constants["ainfty_pr"] = k1;
            rep.weight_constants["ainfty_dual"] = k2;
            rep.constant_expression = std::pow(apr, 1.0 / p) * std::pow(k2, 1.0 / p) *
                                      std::pow(k1, 1.0 / conj_exp(p));
            break;
        }
        case StrongKind::A1: {
            if (p <= 1.0) throw DomainError("verify_strong a1: p > 1");
            rep.theorem_id = "a1";
            const double a1 = matrix_a1(w);
            const double kinf = ainfty_sc(w, 1.0, dirs);
            rep.weight_constants["matrix_a1"] = a1;
            rep.weight_constants["ainfty_1"] = kinf;
            double flavor = omega_sup_norm(t);
            if (ts.kind == KernelKind::HormanderExample) {
                if (!(p > ts.r)) throw DomainError("verify_strong a1 (hormander): p > r");
                flavor = conj_exp(p / ts.r);
            }
            rep.constant_expression =
                flavor * std::pow(a1, 1.0 / p) * std::pow(kinf, 1.0 / conj_exp(p));
            break;
        }
        case StrongKind::Aq: {
            const double q = q_aux;
            if (!(q > 1.0 && q < p)) throw DomainError("verify_strong aq: 1 < q < p");
            rep.theorem_id = "aq";
            const double aq = matrix_ap(w, q).value;
            const double kq = ainfty_sc(w, q, dirs);
            rep.weight_constants["matrix_aq"] = aq;
            rep.weight_constants["ainfty_q"] = kq;
            double flavor = omega_sup_norm(t);
            if (ts.kind == KernelKind::HormanderExample) {
                if (!(p / q > ts.r)) throw DomainError("verify_strong aq (hormander): p/q > r");
                flavor = conj_exp(p / (ts.r * q));
            }
            rep.constant_expression =
                flavor * std::pow(aq, 1.0 / p) * std::pow(kq, 1.0 / conj_exp(p));
            break;
        }
    }

    rep.empirical = strong_empirical(w, p, t, trials, seed);
    finalize_report(rep, calibration_ratio);
    return rep;
}

CertificateReport verify_cf(const MatrixWeight& w, double p, const TSpec& ts, CfKind kind,
                            int trials, std::uint64_t seed, double calibration_ratio) {
    const GridGeometry& g = w.geometry();
    const int dirs = ainfty_directions(w.vdim());
    const int n = w.vdim();
    KernelOperator t = make_operator(ts, g);
    CertificateReport rep;
    rep.weight_kind = w.kind;

    double red_p = p;  // reducing-matrix exponent
    double inner_r = 1.0;
    double power_of_red = -1.0;  // V_Q = red^{power}; maximal uses V_Q^{-1}
    if (kind == CfKind::Czo) {
        rep.theorem_id = "cf-czo";
        const double k = ainfty_sc(w, p, dirs);
        rep.weight_constants["ainfty_p"] = k;
        rep.constant_expression = std::pow(k, 1.0 / p);
    } else if (kind == CfKind::Rough) {
        rep.theorem_id = "cf-rough";
        const double k = ainfty_sc(w, p, dirs);
        rep.weight_constants["ainfty_p"] = k;
        rep.constant_expression = std::pow(k, 1.0 + 1.0 / p);
        rep.extras["czo_expression"] = std::pow(k, 1.0 / p);  // reported for comparison
    } else {
        if (!(ts.r > 1.0 && p > ts.r)) throw DomainError("verify_cf hormander: p > r required");
        rep.theorem_id = "cf-hormander";
        const double k = ainfty_sc(w, p / ts.r, dirs);
        rep.weight_constants["ainfty_p_over_r"] = k;
        rep.constant_expression = std::pow(k, 1.0 / p);
        red_p = p / ts.r;
        inner_r = ts.r;
        power_of_red = -1.0 / ts.r;
    }

    // reducing matrices per cube, cached across trials
    std::map<std::tuple<int, int, int>, SpdMatrix> cache;
    const auto v_of = [&](const DyadicCube& q) -> SpdMatrix {
        const auto key = std::make_tuple(q.level, q.x, q.y);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        ReducingMatrix rm = reducing_matrix(w, red_p, q, ReducingSide::Direct);
        SpdMatrix v = frac_power(rm.matrix, power_of_red);
        cache.emplace(key, v);
        return v;
    };

    const auto& wm = w.power_field(-1.0 / p);
    const auto& wp = w.power_field(1.0 / p);
    double best = 0.0;
    for (int k = 0; k < trials; ++k) {
        GridFunction f = vector_trial(g, n, seed, k);
        GridFunction u(g, n);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) u.set_value(c, wm[c] * f.value(c));
        GridFunction tv = apply(t, u);
        ScalarGridFunction s(g, 1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) s.at(c) = (wp[c] * tv.value(c)).norm();
        const double lhs = lp_norm(s, p);
        ScalarGridFunction mx = grand_maximal(f, w, v_of, p, inner_r, GrandSign::MinusOneOverP);
        const double rhs = lp_norm(mx, p);
        if (rhs > 0.0) best = std::max(best, lhs / rhs);
    }
    rep.empirical = best;
    finalize_report(rep, calibration_ratio);
    return rep;
}

double cpq_exterior_mass(const GridGeometry& g, const DyadicCube& q, double qexp) {
    if (qexp <= 1.0) throw DomainError("cpq exterior: q > 1 required for a finite tail");
    const double len = std::ldexp(1.0, -q.level);
    if (g.d == 1) {
        const double a = q.x * len;
        const double b = a + len;
        // continuum M(chi_Q)(t) = len/(t-a) right of the domain, len/(b-t)
        // left of it; exact integrals from the domain edges
        const double right = std::pow(len, qexp) * std::pow(1.0 - a, 1.0 - qexp) / (qexp - 1.0);
        const double left = std::pow(len, qexp) * std::pow(b, 1.0 - qexp) / (qexp - 1.0);
        return left + right;
    }
    // radial upper-bound surrogate M(chi_Q)(x) <= min(1, 2^d (len/dist)^d)
    const double cx = (q.x + 0.5) * len, cy = (q.y + 0.5) * len;
    const double edge = std::min(std::min(cx, 1.0 - cx), std::min(cy, 1.0 - cy));
    const double r1 = std::max(std::max(edge, len), 2.0 * len);
    const double cap_area = 4.0 * 3.14159265358979323846 * len * len;
    const double tail = 2.0 * 3.14159265358979323846 *
                        std::pow(4.0 * len * len, qexp) * std::pow(r1, 2.0 - 2.0 * qexp) /
                        (2.0 * qexp - 2.0);
    return cap_area + tail;
}

CpqResult cpq_check(const MatrixWeight& w, double p, double q, double gamma, double c_bound) {
    if (!(p > 1.0)) throw DomainError("cpq_check: p > 1");
    if (!(q > p)) throw DomainError("cpq_check: q > p required");
    if (!(gamma > 1.0)) throw DomainError("cpq_check: gamma > 1");
    const GridGeometry& g = w.geometry();
    const auto& wp = w.power_field(1.0 / p);

    CpqResult res;
    for (const DyadicCube& cube : all_dyadic_cubes(g)) {
        ReducingMatrix rm = reducing_matrix(w, p, cube, ReducingSide::Direct);
        SpdMatrix red_inv = frac_power(rm.matrix, -1.0);
        const GridRegion r = cube_region(g, cube);

        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(r.cells(g.d)));
        for_each_cell(g, r, [&](std::int64_t c) {
            terms.push_back(std::pow(op_norm(red_inv.mat() * wp[c]), gamma * p));
        });
        const double numer =
            std::pow(pairwise_sum(terms) / static_cast<double>(terms.size()), 1.0 / gamma);

        // denominator: (1/|Q|) ( sum over the grid of M(chi_Q)^q + exterior )
        ScalarGridFunction chi(g, 1);
        for_each_cell(g, r, [&](std::int64_t c) { chi.at(c) = 1.0; });
        ScalarGridFunction m = maximal_function(chi, MaximalMode::AllCubes);
        std::vector<double> mq(static_cast<std::size_t>(g.cell_count()));
        for (std::int64_t c = 0; c < g.cell_count(); ++c) mq[c] = std::pow(m.at(c), q);
        const double interior = pairwise_sum(mq) * g.cell_measure();
        const double exterior = cpq_exterior_mass(g, cube, q);
        const double denom = (interior + exterior) / cube_measure(g, cube);

        const double ratio = numer / denom;
        if (ratio > res.worst_ratio) {
            res.worst_ratio = ratio;
            res.worst_cube = cube;
            res.exterior_mass = exterior;
        }
    }
    res.holds = res.worst_ratio <= c_bound;
    return res;
}

CertificateReport verify_endpoint(const MatrixWeight& w, const TSpec& ts, EndpointKind kind,
                                  int trials, std::uint64_t seed, double calibration_ratio) {
    const GridGeometry& g = w.geometry();
    const int dirs = ainfty_directions(w.vdim());
    const int n = w.vdim();
    KernelOperator t = make_operator(ts, g);
    CertificateReport rep;
    rep.weight_kind = w.kind;

    const double a1 = matrix_a1(w);
    const double kinf = ainfty_sc(w, 1.0, dirs);
    rep.weight_constants["matrix_a1"] = a1;
    rep.weight_constants["ainfty_1"] = kinf;

    double weight_power, weak_q;
    if (kind == EndpointKind::Rough) {
        rep.theorem_id = "endpoint-rough";
        weight_power = 1.0;
        weak_q = 1.0;
        rep.constant_expression = omega_sup_norm(t) * a1 * kinf *
                                  std::max(std::log(a1 + 2.718281828459045), kinf);
    } else {
        if (!(ts.r > 1.0)) throw DomainError("verify_endpoint hormander: r > 1");
        rep.theorem_id = "endpoint-hormander";
        weight_power = 1.0 / ts.r;
        weak_q = ts.r;
        rep.constant_expression = std::pow(a1, 1.0 / ts.r) * kinf;
    }

    const auto& wm = w.power_field(-weight_power);
    const auto& wp = w.power_field(weight_power);
    double best = 0.0;
    for (int k = 0; k < trials; ++k) {
        GridFunction f = vector_trial(g, n, seed, k);
        const double fn = kind == EndpointKind::Rough ? lp_norm(f, 1.0) : lp_norm(f, ts.r);
        if (fn == 0.0) continue;
        GridFunction u(g, n);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) u.set_value(c, wm[c] * f.value(c));
        GridFunction tv = apply(t, u);
        ScalarGridFunction s(g, 1);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) s.at(c) = (wp[c] * tv.value(c)).norm();
        best = std::max(best, weak_quasinorm(s, weak_q) / fn);
    }
    rep.empirical = best;
    finalize_report(rep, calibration_ratio);
    return rep;
}

// ----- exact rational parameter lemmas ---------------------------------------

namespace {

using Rat = boost::multiprecision::cpp_rational;

Rat conj_rat(const Rat& x) { return x / (x - 1); }  // x' for x > 1

Rat pow_rat(Rat base, long long e) {
    Rat r = 1;
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

}  // namespace

ParamLemmaReport param_lemma_checks() {
    ParamLemmaReport rep;
    const std::vector<long long> taus{3, 4, 8};
    const std::vector<long long> kappas{1, 2, 4, 16};

    // (i) + (ii): rho, beta on the 1 + k/8 grid
    for (int kr = 1; kr <= 64; ++kr) {
        const Rat rho = 1 + Rat(kr, 8);
        const Rat rho_c = conj_rat(rho);
        for (int kb = 1; kb <= 64; ++kb) {
            const Rat beta = 1 + Rat(kb, 8);
            ++rep.points;
            const Rat rb = rho * beta;
            const Rat lhs = conj_rat(rho_c / conj_rat(rb));
            const Rat closed = (rb - 1) / (beta - 1);
            bool ok = lhs == closed;                 // closed form
            ok = ok && lhs <= rho * conj_rat(beta);  // (i) inequality
            // (ii) identity
            ok = ok && Rat(1) / conj_rat(rb) == Rat(1) / conj_rat(beta) + Rat(1) / (rho_c * beta);
            if (!ok) {
                ++rep.violations;
                rep.notes.push_back("param1(i/ii) violated at rho=1+" + std::to_string(kr) +
                                    "/8, beta=1+" + std::to_string(kb) + "/8");
            }
        }
    }

    // (iii): beta = 1 + 1/(tau kappa); check beta' = tau kappa + 1 and the
    // bound [(rho'/(rho beta)')']^{1/(gamma beta)'} <= 2 e rho tau kappa^{1/gamma'}
    // through the exact sufficient chain
    //   X <= (5/2)^{beta'},  X <= 2 rho tau kappa,  X >= 1, gamma > 1
    // which gives X^{1/beta'} X^{1/(gamma' beta)} <= (5/2) (2 rho tau)^{1/gamma'}
    // kappa^{1/gamma'} <= 2 e rho tau kappa^{1/gamma'} since 5 < 2e.
    const std::vector<int> gamma_ks{1, 2, 4, 8, 16, 32, 48, 64};
    for (int kr = 1; kr <= 64; ++kr) {
        const Rat rho = 1 + Rat(kr, 8);
        for (long long tau : taus)
            for (long long kappa : kappas)
                for (int kg : gamma_ks) {
                    ++rep.points;
                    const long long tk = tau * kappa;
                    const Rat beta = 1 + Rat(1, tk);
                    const Rat beta_conj = conj_rat(beta);
                    bool ok = beta_conj == Rat(tk + 1);  // beta' = tau kappa + 1
                    const Rat x = (rho * beta - 1) / (beta - 1);
                    ok = ok && x == conj_rat(conj_rat(rho) / conj_rat(rho * beta));
                    ok = ok && x >= 1;
                    ok = ok && x <= pow_rat(Rat(5, 2), tk + 1);
                    ok = ok && x <= 2 * rho * Rat(tk);
                    const Rat gamma = 1 + Rat(kg, 8);
                    ok = ok && gamma > 1;
                    if (!ok) {
                        ++rep.violations;
                        rep.notes.push_back("param1(iii) violated at rho=1+" +
                                            std::to_string(kr) + "/8, tau=" +
                                            std::to_string(tau) + ", kappa=" +
                                            std::to_string(kappa));
                    }
                }
    }

    // (iv): p on the grid, beta = 1 + 1/(((p'+1)/2) tau delta),
    // s beta = 1 + 1/(tau delta). Premise identity is exact; the closed
    // form of the conclusion is (2p-1) tau delta + 2p, and the displayed
    // bound <= 2 p tau delta holds iff tau delta >= 2p (gated, logged).
    for (int kp = 1; kp <= 64; ++kp) {
        const Rat p = 1 + Rat(kp, 8);
        const Rat pc = conj_rat(p);
        const Rat c = (pc + 1) / 2;
        for (long long tau : taus)
            for (long long delta : kappas) {
                ++rep.points;
                const Rat m = Rat(tau * delta);
                const Rat beta = 1 + 1 / (c * m);
                const Rat s = (1 + 1 / m) / beta;
                const Rat pb = p * beta;
                bool ok = s > 1 || s == 1;  // s >= 1 on this grid
                // premise p' > s (p beta)'
                const Rat spbc = s * conj_rat(pb);
                ok = ok && pc > spbc;
                // premise identity (p beta - 1) - s (p-1) beta = 1/((p'+1) tau delta)
                ok = ok && (pb - 1) - s * (p - 1) * beta == 1 / ((pc + 1) * m);
                // conclusion closed form
                const Rat concl = conj_rat(pc / spbc);
                ok = ok && concl == (2 * p - 1) * m + 2 * p;
                if (!ok) {
                    ++rep.violations;
                    rep.notes.push_back("param2 identity violated at p=1+" + std::to_string(kp) +
                                        "/8, tau*delta=" + std::to_string(tau * delta));
                    continue;
                }
                if (m >= 2 * p) {
                    if (!(concl <= 2 * p * m)) {
                        ++rep.violations;
                        rep.notes.push_back("param2 conclusion violated at p=1+" +
                                            std::to_string(kp) + "/8");
                    }
                } else {
                    ++rep.skipped;  // hypothesis gate: display bound needs tau delta >= 2p
                }
            }
    }
    return rep;
}

KeyApReport keyap_check(const MatrixWeight& w, double p, double r, double s,
                        const SparseFamily& family, const GridFunction& h, const GridFunction& g,
                        const std::function<SpdMatrix(const DyadicCube&)>& u,
                        const std::function<SpdMatrix(const DyadicCube&)>& v) {
    const GridGeometry& geom = w.geometry();
    const int n = w.vdim();
    const auto& wm = w.power_field(-1.0 / p);
    const auto& wp = w.power_field(1.0 / p);

    GridFunction wh(geom, n), wg(geom, n);
    for (std::int64_t c = 0; c < geom.cell_count(); ++c) {
        wh.set_value(c, wm[c] * h.value(c));
        wg.set_value(c, wp[c] * g.value(c));
    }

    KeyApReport rep;
    std::vector<double> lhs_terms;
    for (const SparseCube& sc : family.cubes) {
        ConvexBodyAverage bh(wh, sc.region, r);
        ConvexBodyAverage bg(wg, sc.region, s);
        ProductBracket br = body_product_bracket(bh, bg);
        lhs_terms.push_back(br.upper * static_cast<double>(sc.region.cells(geom.d)) *
                            geom.cell_measure());
        rep.sup_uv = std::max(rep.sup_uv, op_norm(u(sc.base).mat() * v(sc.base).mat()));
    }
    rep.lhs = pairwise_sum(lhs_terms);

    ScalarGridFunction mv = grand_maximal(h, w, v, p, r, GrandSign::MinusOneOverP);
    ScalarGridFunction mu = grand_maximal(g, w, u, p, s, GrandSign::PlusOneOverP);
    const double eta = family.eta_claimed > 0.0 ? family.eta_claimed : 0.5;
    rep.rhs = (1.0 / eta) * rep.sup_uv * lp_norm(mv, p) * lp_norm(mu, conj_exp(p));
    rep.slack = rep.lhs > 0.0 ? rep.rhs / rep.lhs : std::numeric_limits<double>::infinity();
    return rep;
}

ApFromRhReport apfromrh_check(const MatrixWeight& w, double q, double r, double s,
                              const DyadicCube& cube) {
    if (!(q > 1.0 && r > 1.0 && s > 1.0)) throw DomainError("apfromrh_check: q, r, s > 1");
    const GridGeometry& g = w.geometry();
    const int n = w.vdim();
    const GridRegion region = cube_region(g, cube);
    const double qp = conj_exp(q);
    const auto dirs = probe_directions(n, 64 * n);

    const auto region_avg_norm = [&](double alpha, double t, const VecN& e) {
        const auto& field = w.power_field(alpha);
        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(region.cells(g.d)));
        for_each_cell(g, region,
                      [&](std::int64_t c) { terms.push_back(std::pow((field[c] * e).norm(), t)); });
        return std::pow(pairwise_sum(terms) / static_cast<double>(terms.size()), 1.0 / t);
    };

    ApFromRhReport rep;
    for (const VecN& e : dirs) {
        rep.rh_v = std::max(rep.rh_v, region_avg_norm(-1.0 / q, qp * r, e) /
                                          region_avg_norm(-1.0 / q, qp, e));
        rep.rh_u = std::max(rep.rh_u,
                            region_avg_norm(1.0 / q, q * s, e) / region_avg_norm(1.0 / q, q, e));
    }
    rep.applicable = rep.rh_v <= 2.0 * n && rep.rh_u <= 2.0 * n;
    if (!rep.applicable) return rep;

    ReducingMatrix vq = reducing_matrix_general(w, -1.0 / q, qp * r, region);
    ReducingMatrix uq = reducing_matrix_general(w, 1.0 / q, q * s, region);
    ReducingMatrix wq = reducing_matrix(w, q, cube, ReducingSide::Direct);
    ReducingMatrix wq_dual = reducing_matrix(w, q, cube, ReducingSide::Dual);

    Mat vu = vq.matrix.mat() * uq.matrix.mat();
    Mat ww = wq.matrix.mat() * wq_dual.matrix.mat();
    for (const VecN& e : dirs) {
        const double denom = (ww * e).norm();
        if (denom <= 0.0) continue;
        rep.max_ratio = std::max(rep.max_ratio, (vu * e).norm() / denom);
    }
    rep.bound = n * rep.rh_v * rep.rh_u;
    rep.holds = rep.max_ratio <= rep.bound * (1.0 + 1e-9);
    return rep;
}

std::vector<CorpusWeight> certificate_corpus(int d, int L, int n, std::uint64_t seed) {
    std::vector<CorpusWeight> out;
    const std::map<std::string, double> base{{"d", double(d)}, {"L", double(L)},
                                             {"n", double(n)}};

    auto with = [&](std::map<std::string, double> extra) {
        std::map<std::string, double> m = base;
        for (auto& [k, v] : extra) m[k] = v;
        return m;
    };

    out.push_back({generate_weight(WeightKind::ScalarEmbedded, with({{"a", 0.5}, {"amp", 0.0}}),
                                   seed + 1),
                   "scalar-power"});
    out.push_back({generate_weight(WeightKind::ScalarEmbedded, with({{"a", 0.0}, {"amp", 1.2}}),
                                   seed + 2),
                   "scalar-log"});
    out.push_back({generate_weight(WeightKind::RandomLogLipschitz, with({{"amp", 0.9}}), seed + 3),
                   "log-lipschitz"});
    out.push_back({generate_weight(WeightKind::BlockDiagonal, with({{"amp", 1.0}, {"a", 0.4}}),
                                   seed + 4),
                   "block-diagonal"});
    if (n >= 2)
        out.push_back({generate_weight(WeightKind::RotatingPower,
                                       with({{"a", 0.6}, {"freq", 1.0}}), seed + 5),
                       "rotating-power"});
    return out;
}

}  // namespace mwlab
