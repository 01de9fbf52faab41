#include "mwlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "mwlab/rng.hpp"
#include "mwlab/summation.hpp"

namespace mwlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// per-dyadic-scale modulation of the Hormander example kernel
double scale_amplitude(double t) {
    const int j = static_cast<int>(std::floor(std::log2(t)));
    return 1.0 + 0.4 * std::sin(1.7 * j + 0.3);
}

}  // namespace

KernelOperator KernelOperator::hilbert(const GridGeometry& g) {
    if (g.d != 1) throw DomainError("hilbert kernel requires d = 1");
    KernelOperator t(KernelKind::Hilbert, g);
    t.build_cache();
    return t;
}

KernelOperator KernelOperator::rough(const GridGeometry& g, std::vector<double> omega_samples,
                                     bool enforce_mean_zero) {
    if (g.d != 2) throw DomainError("rough kernel requires d = 2");
    if (omega_samples.size() < 8) throw DomainError("rough kernel needs >= 8 angular samples");
    KernelOperator t(KernelKind::Rough, g);
    t.omega_ = std::move(omega_samples);
    if (enforce_mean_zero) {
        double mean = pairwise_sum(t.omega_) / static_cast<double>(t.omega_.size());
        for (double& v : t.omega_) v -= mean;
    }
    double amax = 0.0;
    for (double v : t.omega_) amax = std::max(amax, std::abs(v));
    t.degenerate_ = amax == 0.0;
    t.build_cache();
    return t;
}

KernelOperator KernelOperator::hormander_example(const GridGeometry& g) {
    if (g.d != 1) throw DomainError("hormander example kernel requires d = 1");
    KernelOperator t(KernelKind::HormanderExample, g);
    t.build_cache();
    return t;
}

double KernelOperator::kernel_direct(std::int64_t i, std::int64_t j) const {
    const double h = std::ldexp(1.0, -geom_.L);
    if (geom_.d == 1) {
        const double t = static_cast<double>(i - j) * h;
        if (kind_ == KernelKind::Hilbert) return 1.0 / t;
        // Hormander example
        const double at = std::abs(t);
        return (t > 0.0 ? 1.0 : -1.0) / at * scale_amplitude(at);
    }
    const double dx = static_cast<double>(geom_.cell_x(i) - geom_.cell_x(j)) * h;
    const double dy = static_cast<double>(geom_.cell_y(i) - geom_.cell_y(j)) * h;
    const double rr = dx * dx + dy * dy;
    double ang = std::atan2(dy, dx);
    if (ang < 0.0) ang += kTwoPi;
    const std::size_t m = omega_.size();
    std::size_t bin = static_cast<std::size_t>(ang / kTwoPi * m);
    if (bin >= m) bin = m - 1;
    return omega_[bin] / rr;
}

void KernelOperator::build_cache() {
    const int n = geom_.side();
    if (geom_.d == 1) {
        cache_.assign(2 * n - 1, 0.0);
        for (int diff = -(n - 1); diff <= n - 1; ++diff) {
            if (diff == 0) continue;
            cache_[diff + n - 1] = kernel_direct(diff > 0 ? diff : 0, diff > 0 ? 0 : -diff);
        }
    } else {
        cache_.assign(static_cast<std::size_t>(2 * n - 1) * (2 * n - 1), 0.0);
        for (int dy = -(n - 1); dy <= n - 1; ++dy)
            for (int dx = -(n - 1); dx <= n - 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const std::int64_t i = geom_.cell_index(dx > 0 ? dx : 0, dy > 0 ? dy : 0);
                const std::int64_t j = geom_.cell_index(dx > 0 ? 0 : -dx, dy > 0 ? 0 : -dy);
                cache_[static_cast<std::size_t>(dy + n - 1) * (2 * n - 1) + (dx + n - 1)] =
                    kernel_direct(i, j);
            }
    }
}

double KernelOperator::kernel(std::int64_t i, std::int64_t j) const {
    if (i == j) throw KernelError("kernel evaluated on the diagonal");
    const int n = geom_.side();
    if (geom_.d == 1) return cache_[i - j + n - 1];
    const int dx = geom_.cell_x(i) - geom_.cell_x(j);
    const int dy = geom_.cell_y(i) - geom_.cell_y(j);
    return cache_[static_cast<std::size_t>(dy + n - 1) * (2 * n - 1) + (dx + n - 1)];
}

namespace {

GridFunction apply_impl(const KernelOperator& t, const GridFunction& f, bool adjoint,
                        const GridRegion* src, const GridRegion* out_region) {
    const GridGeometry& g = t.geometry();
    if (!(g == f.geometry())) throw InvalidInputError("apply: geometry mismatch");
    if (!f.all_finite()) throw InvalidInputError("apply: non-finite input");
    const std::int64_t nc = g.cell_count();
    const double cellm = g.cell_measure();
    const int vd = f.vdim();

    std::vector<std::int64_t> sources;
    if (src) {
        sources.reserve(static_cast<std::size_t>(src->cells(g.d)));
        for_each_cell(g, *src, [&](std::int64_t c) { sources.push_back(c); });
    } else {
        sources.resize(nc);
        for (std::int64_t c = 0; c < nc; ++c) sources[c] = c;
    }
    std::vector<std::int64_t> targets;
    if (out_region) {
        targets.reserve(static_cast<std::size_t>(out_region->cells(g.d)));
        for_each_cell(g, *out_region, [&](std::int64_t c) { targets.push_back(c); });
    } else {
        targets.resize(nc);
        for (std::int64_t c = 0; c < nc; ++c) targets[c] = c;
    }

    // precomputed source coordinates and per-component values avoid the
    // int64 div/mod per kernel pair in this O(N^2) loop
    const std::size_t ns = sources.size();
    std::vector<int> sx(ns), sy(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        sx[k] = g.cell_x(sources[k]);
        sy[k] = g.cell_y(sources[k]);
    }
    std::vector<double> sval(ns);
    GridFunction out(g, vd);
    std::vector<double> terms(ns);
    for (int comp = 0; comp < vd; ++comp) {
        for (std::size_t k = 0; k < ns; ++k) sval[k] = f.at(sources[k], comp);
        for (std::int64_t i : targets) {
            const int ix = g.cell_x(i), iy = g.cell_y(i);
            std::size_t m = 0;
            if (g.d == 1) {
                for (std::size_t k = 0; k < ns; ++k) {
                    if (sources[k] == i) continue;
                    const double kv = adjoint ? t.kernel_diff(sx[k] - ix) : t.kernel_diff(ix - sx[k]);
                    terms[m++] = kv * sval[k];
                }
            } else {
                for (std::size_t k = 0; k < ns; ++k) {
                    if (sources[k] == i) continue;
                    const double kv = adjoint ? t.kernel_offset(sx[k] - ix, sy[k] - iy)
                                              : t.kernel_offset(ix - sx[k], iy - sy[k]);
                    terms[m++] = kv * sval[k];
                }
            }
            out.at(i, comp) = pairwise_sum(std::span<const double>(terms.data(), m)) * cellm;
        }
    }
    return out;
}

}  // namespace

GridFunction apply(const KernelOperator& t, const GridFunction& f) {
    return apply_impl(t, f, false, nullptr, nullptr);
}

GridFunction apply_adjoint(const KernelOperator& t, const GridFunction& f) {
    return apply_impl(t, f, true, nullptr, nullptr);
}

GridFunction apply_masked(const KernelOperator& t, const GridFunction& f, const GridRegion& src,
                          const GridRegion* out) {
    return apply_impl(t, f, false, &src, out);
}

HormanderConstant hormander_constant(const KernelOperator& t, double r_prime, int k_max) {
    if (k_max < 1) throw DomainError("hormander_constant: k_max >= 1");
    if (r_prime <= 1.0) throw DomainError("hormander_constant: r' > 1 required");
    const GridGeometry& g = t.geometry();

    HormanderConstant out;
    for (int pass = 0; pass < 2; ++pass) {
        double worst = 0.0;
        std::vector<double> worst_terms;
        for (int level = 1; level < g.L; ++level) {
            const int cubes = 1 << level;
            const int step = std::max(1, cubes / 4);
            for (int qi = 0; qi < cubes; qi += step) {
                for (int qj = 0; qj < (g.d == 2 ? cubes : 1); qj += step) {
                    const DyadicCube q{level, qi, qj};
                    const GridRegion r = cube_region(g, q);
                    const int side_cells = r.x1 - r.x0;
                    // sample points in the concentric half cube
                    const int q4 = std::max(1, side_cells / 4);
                    std::vector<std::int64_t> samples;
                    if (g.d == 1) {
                        samples.push_back(r.x0 + q4);
                        samples.push_back(r.x1 - 1 - q4);
                    } else {
                        samples.push_back(g.cell_index(r.x0 + q4, r.y0 + q4));
                        samples.push_back(g.cell_index(r.x1 - 1 - q4, r.y1 - 1 - q4));
                    }
                    std::sort(samples.begin(), samples.end());
                    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
                    if (samples.size() < 2) continue;

                    for (std::size_t a = 0; a < samples.size(); ++a)
                        for (std::size_t b = a + 1; b < samples.size(); ++b) {
                            const std::int64_t x = samples[a], z = samples[b];
                            std::vector<double> terms;
                            double total = 0.0;
                            for (int k = 1; k <= k_max; ++k) {
                                // annulus 2^k Q \ 2^{k-1} Q, clipped cells
                                const int rad_out = side_cells << (k - 1);
                                const int rad_in = k == 1 ? side_cells / 2 : side_cells << (k - 2);
                                const auto in_box = [&](std::int64_t c, int rad) {
                                    const int cx = g.cell_x(c), cy = g.cell_y(c);
                                    const int qcx = (r.x0 + r.x1) / 2, qcy = (r.y0 + r.y1) / 2;
                                    return std::abs(cx - qcx) <= rad &&
                                           (g.d == 1 || std::abs(cy - qcy) <= rad);
                                };
                                std::vector<double> pw;
                                for (std::int64_t y = 0; y < g.cell_count(); ++y) {
                                    if (y == x || y == z) continue;
                                    if (!in_box(y, rad_out) || in_box(y, rad_in)) continue;
                                    const double dk = pass == 0
                                                          ? t.kernel(x, y) - t.kernel(z, y)
                                                          : t.kernel(y, x) - t.kernel(y, z);
                                    pw.push_back(std::pow(std::abs(dk), r_prime));
                                }
                                if (pw.empty()) {
                                    terms.push_back(0.0);
                                    continue;
                                }
                                // normalized (average) annulus norm over 2^k Q
                                const double box_measure =
                                    std::pow(std::ldexp(2.0 * rad_out + 1.0, -g.L), g.d);
                                const double nrm = std::pow(
                                    pairwise_sum(pw) * g.cell_measure() / box_measure,
                                    1.0 / r_prime);
                                const double term = box_measure * nrm;
                                terms.push_back(term);
                                total += term;
                            }
                            if (total > worst) {
                                worst = total;
                                worst_terms = terms;
                            }
                        }
                }
            }
        }
        if (pass == 0) {
            out.h1 = worst;
            out.worst_annulus_terms = worst_terms;
        } else {
            out.h2 = worst;
        }
    }
    return out;
}

namespace {

// engine shared by the global and localized bilinear maximal operators and
// M_{p,T}: per dyadic cube Q (within an optional root), evaluates
// T(f chi_{mask \ 3Q}) on Q from the precomputed base = T(f chi_mask),
// folds a statistic over Q, then pushes the sup down the tree.
ScalarGridFunction masked_cube_maximal(
    const KernelOperator& t, const ScalarGridFunction& f, const std::optional<DyadicCube>& root,
    const std::function<double(const std::vector<double>&, const std::vector<std::int64_t>&)>&
        statistic) {
    const GridGeometry& g = f.geometry();
    const double cellm = g.cell_measure();

    const GridRegion mask = root ? tripled_region(g, *root)
                                 : GridRegion{0, g.side(), 0, g.d == 2 ? g.side() : 1};
    const GridRegion out_cells = root ? cube_region(g, *root) : mask;
    GridFunction base = apply_masked(t, f, mask, &out_cells);

    // per-cube statistic; plain index loops, this is the hot path of the
    // sparse construction
    const DyadicCube top = root ? *root : DyadicCube{0, 0, 0};
    const int side = g.side();
    ScalarGridFunction out(g, 1);
    std::vector<double> vals;
    std::vector<std::int64_t> cells;
    std::vector<double> corr;
    const std::function<void(const DyadicCube&, double)> walk = [&](const DyadicCube& q,
                                                                    double carry) {
        const GridRegion qr = cube_region(g, q);
        const GridRegion q3 = tripled_region(g, q);
        cells.clear();
        for (int y = qr.y0; y < qr.y1; ++y)
            for (int x = qr.x0; x < qr.x1; ++x)
                cells.push_back(g.d == 1 ? x : static_cast<std::int64_t>(y) * side + x);
        vals.assign(cells.size(), 0.0);
        for (std::size_t zi = 0; zi < cells.size(); ++zi) {
            const std::int64_t z = cells[zi];
            const int zx = g.cell_x(z), zy = g.cell_y(z);
            corr.clear();
            for (int y = q3.y0; y < q3.y1; ++y) {
                const std::int64_t row = g.d == 1 ? 0 : static_cast<std::int64_t>(y) * side;
                for (int x = q3.x0; x < q3.x1; ++x) {
                    const std::int64_t j = row + x;
                    if (j == z) continue;
                    const double k = g.d == 1 ? t.kernel_diff(zx - x) : t.kernel_offset(zx - x, zy - y);
                    corr.push_back(k * f.at(j));
                }
            }
            vals[zi] = base.at(z) - pairwise_sum(corr) * cellm;
        }
        const double stat = statistic(vals, cells);
        const double m = std::max(carry, stat);
        if (q.level == g.L) {
            out.at(cells[0]) = m;
            return;
        }
        for (const DyadicCube& c : cube_children(g, q)) walk(c, m);
    };
    walk(top, 0.0);
    return out;
}

}  // namespace

ScalarGridFunction bilinear_sharp_maximal(const KernelOperator& t, const ScalarGridFunction& f,
                                          const ScalarGridFunction& g) {
    require_scalar(f, "bilinear_sharp_maximal");
    require_scalar(g, "bilinear_sharp_maximal");
    return masked_cube_maximal(
        t, f, std::nullopt,
        [&](const std::vector<double>& vals, const std::vector<std::int64_t>& cells) {
            std::vector<double> terms(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i)
                terms[i] = std::abs(vals[i]) * std::abs(g.at(cells[i]));
            return pairwise_sum(terms) / static_cast<double>(terms.size());
        });
}

ScalarGridFunction bilinear_sharp_maximal_local(const KernelOperator& t,
                                                const ScalarGridFunction& f,
                                                const ScalarGridFunction& g,
                                                const DyadicCube& q0) {
    require_scalar(f, "bilinear_sharp_maximal_local");
    require_scalar(g, "bilinear_sharp_maximal_local");
    return masked_cube_maximal(
        t, f, q0,
        [&](const std::vector<double>& vals, const std::vector<std::int64_t>& cells) {
            std::vector<double> terms(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i)
                terms[i] = std::abs(vals[i]) * std::abs(g.at(cells[i]));
            return pairwise_sum(terms) / static_cast<double>(terms.size());
        });
}

ScalarGridFunction mpt_maximal(const KernelOperator& t, const ScalarGridFunction& f, double p) {
    require_scalar(f, "mpt_maximal");
    if (p < 1.0) throw DomainError("mpt_maximal: p >= 1 required");
    if (std::isinf(p)) {
        return masked_cube_maximal(
            t, f, std::nullopt,
            [](const std::vector<double>& vals, const std::vector<std::int64_t>&) {
                double m = 0.0;
                for (double v : vals) m = std::max(m, std::abs(v));
                return m;
            });
    }
    return masked_cube_maximal(
        t, f, std::nullopt,
        [p](const std::vector<double>& vals, const std::vector<std::int64_t>&) {
            std::vector<double> terms(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) terms[i] = std::pow(std::abs(vals[i]), p);
            return std::pow(pairwise_sum(terms) / static_cast<double>(terms.size()), 1.0 / p);
        });
}

ScalarGridFunction grand_maximal(const GridFunction& h, const MatrixWeight& w,
                                 const std::function<SpdMatrix(const DyadicCube&)>& v, double p,
                                 double r, GrandSign sign) {
    if (r < 1.0) throw DomainError("grand_maximal: r >= 1 required");
    const GridGeometry& g = h.geometry();
    if (!(g == w.geometry()) || h.vdim() != w.vdim())
        throw InvalidInputError("grand_maximal: shape mismatch");
    const double alpha = sign == GrandSign::MinusOneOverP ? -1.0 / p : 1.0 / p;
    const auto& field = w.power_field(alpha);
    const std::int64_t nc = g.cell_count();
    std::vector<VecN> phi(nc);
    for (std::int64_t c = 0; c < nc; ++c) phi[c] = field[c] * h.value(c);

    ScalarGridFunction out(g, 1);
    const std::function<void(const DyadicCube&, double)> walk = [&](const DyadicCube& q,
                                                                    double carry) {
        SpdMatrix vq = v(q);
        if (vq.dim() != h.vdim()) throw DomainError("grand_maximal: V_Q dimension mismatch");
        SpdMatrix vq_inv = frac_power(vq, -1.0);
        const GridRegion qr = cube_region(g, q);
        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(qr.cells(g.d)));
        for_each_cell(g, qr,
                      [&](std::int64_t c) { terms.push_back(std::pow((vq_inv * phi[c]).norm(), r)); });
        const double avg = std::pow(pairwise_sum(terms) / static_cast<double>(terms.size()), 1.0 / r);
        const double m = std::max(carry, avg);
        if (q.level == g.L) {
            for_each_cell(g, qr, [&](std::int64_t c) { out.at(c) = m; });
            return;
        }
        for (const DyadicCube& c : cube_children(g, q)) walk(c, m);
    };
    walk(DyadicCube{0, 0, 0}, 0.0);
    return out;
}

double weak_quasinorm(const ScalarGridFunction& v, double q) {
    const GridGeometry& g = v.geometry();
    std::vector<double> mags(static_cast<std::size_t>(g.cell_count()));
    for (std::int64_t c = 0; c < g.cell_count(); ++c) mags[c] = std::abs(v.at(c));
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double best = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        const double measure = static_cast<double>(k + 1) * g.cell_measure();
        best = std::max(best, mags[k] * std::pow(measure, 1.0 / q));
    }
    return best;
}

double lp_norm(const GridFunction& f, double p) {
    const GridGeometry& g = f.geometry();
    std::vector<double> terms(static_cast<std::size_t>(g.cell_count()));
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        terms[c] = std::pow(f.value(c).norm(), p);
    return std::pow(pairwise_sum(terms) * g.cell_measure(), 1.0 / p);
}

ScalarGridFunction trial_input(const GridGeometry& g, std::uint64_t seed, int k) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k) * 0x517cc1b727220a95ULL);
    ScalarGridFunction f(g, 1);
    const std::int64_t nc = g.cell_count();
    switch (k % 4) {
        case 0: {  // single-cell atom
            f.at(static_cast<std::int64_t>(rng.below(nc))) = 1.0;
            break;
        }
        case 1: {  // indicator of a random dyadic cube
            const int level = 1 + static_cast<int>(rng.below(g.L));
            const int m = 1 << level;
            DyadicCube q{level, static_cast<int>(rng.below(m)),
                         g.d == 2 ? static_cast<int>(rng.below(m)) : 0};
            for_each_cell(g, cube_region(g, q), [&](std::int64_t c) { f.at(c) = 1.0; });
            break;
        }
        case 2: {  // Rademacher signs
            for (std::int64_t c = 0; c < nc; ++c) f.at(c) = rng.rademacher();
            break;
        }
        default: {  // smooth oscillation
            const double a = 1.0 + rng.below(4), b = 1.0 + rng.below(4);
            const double ph = rng.uniform(0.0, kTwoPi);
            for (std::int64_t c = 0; c < nc; ++c) {
                const double x = g.coord(g.cell_x(c));
                const double y = g.d == 2 ? g.coord(g.cell_y(c)) : 0.0;
                f.at(c) = std::sin(kTwoPi * (a * x + b * y) + ph);
            }
            break;
        }
    }
    return f;
}

OperatorProfile weak_norm_estimate(const KernelOperator& t, double q, int trials,
                                   std::uint64_t seed) {
    if (trials < 1) throw DomainError("weak_norm_estimate: trials >= 1");
    OperatorProfile prof;
    prof.q = q;
    prof.trials = trials;
    prof.seed = seed;
    const GridGeometry& g = t.geometry();
    for (int k = 0; k < trials; ++k) {
        ScalarGridFunction f = trial_input(g, seed, k);
        const double fn = lp_norm(f, q);
        if (fn == 0.0) continue;
        ScalarGridFunction tf = apply(t, f);
        prof.weak_qq = std::max(prof.weak_qq, weak_quasinorm(tf, q) / fn);
    }
    return prof;
}

double mt_product_norm_estimate(const KernelOperator& t, double r, double s, int trials,
                                std::uint64_t seed) {
    if (trials < 1) throw DomainError("mt_product_norm_estimate: trials >= 1");
    const double nu = 1.0 / (1.0 / r + 1.0 / s);
    const GridGeometry& g = t.geometry();
    double best = 0.0;
    for (int k = 0; k < trials; ++k) {
        ScalarGridFunction f = trial_input(g, seed ^ 0xabcdef12u, 2 * k);
        ScalarGridFunction h = trial_input(g, seed ^ 0x12fedcbau, 2 * k + 1);
        const double fr = lp_norm(f, r), hs = lp_norm(h, s);
        if (fr == 0.0 || hs == 0.0) continue;
        ScalarGridFunction mt = bilinear_sharp_maximal(t, f, h);
        best = std::max(best, weak_quasinorm(mt, nu) / (fr * hs));
    }
    return best;
}

}  // namespace mwlab
