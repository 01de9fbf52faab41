#include "mwlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mwlab/summation.hpp"

namespace mwlab {

GridRegion cube_region(const GridGeometry& g, const DyadicCube& q) {
    const int h = 1 << (g.L - q.level);
    GridRegion r;
    r.x0 = q.x * h;
    r.x1 = (q.x + 1) * h;
    if (g.d == 2) {
        r.y0 = q.y * h;
        r.y1 = (q.y + 1) * h;
    }
    return r;
}

GridRegion tripled_region(const GridGeometry& g, const DyadicCube& q) {
    const int h = 1 << (g.L - q.level);
    const int n = g.side();
    GridRegion r;
    r.x0 = std::max(0, q.x * h - h);
    r.x1 = std::min(n, (q.x + 1) * h + h);
    if (g.d == 2) {
        r.y0 = std::max(0, q.y * h - h);
        r.y1 = std::min(n, (q.y + 1) * h + h);
    }
    return r;
}

std::vector<DyadicCube> cube_children(const GridGeometry& g, const DyadicCube& q) {
    std::vector<DyadicCube> out;
    if (q.level >= g.L) return out;
    const int l = q.level + 1;
    if (g.d == 1) {
        out.push_back({l, 2 * q.x, 0});
        out.push_back({l, 2 * q.x + 1, 0});
    } else {
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) out.push_back({l, 2 * q.x + dx, 2 * q.y + dy});
    }
    return out;
}

DyadicCube cell_cube(const GridGeometry& g, std::int64_t cell) {
    return {g.L, g.cell_x(cell), g.cell_y(cell)};
}

bool cube_contains_cell(const GridGeometry& g, const DyadicCube& q, std::int64_t cell) {
    const int h = 1 << (g.L - q.level);
    const int cx = g.cell_x(cell), cy = g.cell_y(cell);
    if (cx < q.x * h || cx >= (q.x + 1) * h) return false;
    if (g.d == 2 && (cy < q.y * h || cy >= (q.y + 1) * h)) return false;
    return true;
}

std::vector<DyadicCube> all_dyadic_cubes(const GridGeometry& g) {
    std::vector<DyadicCube> out;
    for (int l = 0; l <= g.L; ++l) {
        const int m = 1 << l;
        if (g.d == 1) {
            for (int x = 0; x < m; ++x) out.push_back({l, x, 0});
        } else {
            for (int y = 0; y < m; ++y)
                for (int x = 0; x < m; ++x) out.push_back({l, x, y});
        }
    }
    return out;
}

double cube_measure(const GridGeometry& g, const DyadicCube& q) {
    return std::ldexp(1.0, -g.d * q.level);
}

void for_each_cell(const GridGeometry& g, const GridRegion& r,
                   const std::function<void(std::int64_t)>& fn) {
    if (g.d == 1) {
        for (int x = r.x0; x < r.x1; ++x) fn(x);
    } else {
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x) fn(g.cell_index(x, y));
    }
}

GridFunction GridFunction::component(int j) const {
    GridFunction out(geom_, 1);
    const std::int64_t nc = geom_.cell_count();
    for (std::int64_t c = 0; c < nc; ++c) out.at(c) = at(c, j);
    return out;
}

GridFunction GridFunction::refined() const {
    GridGeometry fine(geom_.d, geom_.L + 1);
    GridFunction out(fine, n_);
    const std::int64_t nc = fine.cell_count();
    for (std::int64_t c = 0; c < nc; ++c) {
        const int x = fine.cell_x(c) / 2, y = fine.cell_y(c) / 2;
        const std::int64_t coarse = geom_.cell_index(x, y);
        for (int i = 0; i < n_; ++i) out.at(c, i) = at(coarse, i);
    }
    return out;
}

bool GridFunction::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double GridFunction::min_value() const {
    double m = values_.empty() ? 0.0 : values_[0];
    for (double v : values_) m = std::min(m, v);
    return m;
}

void require_scalar(const GridFunction& f, const char* who) {
    if (f.vdim() != 1) throw DomainError(std::string(who) + ": scalar function required");
}

void require_weight(const GridFunction& w, const char* who) {
    require_scalar(w, who);
    if (w.min_value() <= 0.0) throw DomainError(std::string(who) + ": weight must be positive");
}

double p_average(const GridFunction& f, const GridRegion& r, double p) {
    if (p < 1.0) throw DomainError("p_average: p must be >= 1");
    if (r.empty()) throw DomainError("p_average: empty region");
    const GridGeometry& g = f.geometry();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(r.cells(g.d)));
    for_each_cell(g, r, [&](std::int64_t c) {
        double nrm2 = 0.0;
        for (int i = 0; i < f.vdim(); ++i) nrm2 += f.at(c, i) * f.at(c, i);
        terms.push_back(std::pow(std::sqrt(nrm2), p));
    });
    const double mean = pairwise_sum(terms) / static_cast<double>(terms.size());
    return std::pow(mean, 1.0 / p);
}

double p_average(const GridFunction& f, const DyadicCube& q, double p) {
    return p_average(f, cube_region(f.geometry(), q), p);
}

std::vector<std::vector<double>> level_sums(const ScalarGridFunction& w) {
    require_scalar(w, "level_sums");
    const GridGeometry& g = w.geometry();
    std::vector<std::vector<double>> sums(g.L + 1);
    sums[g.L].assign(w.raw().begin(), w.raw().end());
    for (int l = g.L - 1; l >= 0; --l) {
        const int m = 1 << l;
        const int mc = 1 << (l + 1);
        if (g.d == 1) {
            sums[l].resize(m);
            for (int x = 0; x < m; ++x) sums[l][x] = sums[l + 1][2 * x] + sums[l + 1][2 * x + 1];
        } else {
            sums[l].assign(static_cast<std::size_t>(m) * m, 0.0);
            for (int y = 0; y < m; ++y)
                for (int x = 0; x < m; ++x) {
                    const auto& c = sums[l + 1];
                    sums[l][static_cast<std::size_t>(y) * m + x] =
                        (c[static_cast<std::size_t>(2 * y) * mc + 2 * x] +
                         c[static_cast<std::size_t>(2 * y) * mc + 2 * x + 1]) +
                        (c[static_cast<std::size_t>(2 * y + 1) * mc + 2 * x] +
                         c[static_cast<std::size_t>(2 * y + 1) * mc + 2 * x + 1]);
                }
        }
    }
    return sums;
}

namespace {

// out[x] = max over offsets i in [x-s+1, x] ∩ [lo, hi] of a[i - lo],
// for x in [cell_lo, cell_hi); monotone deque sweep.
void window_max(const std::vector<double>& a, int lo, int hi, int s, int cell_lo, int cell_hi,
                std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(cell_hi - cell_lo), 0.0);
    std::deque<int> dq;  // offsets, a-values decreasing
    int next = lo;
    for (int x = cell_lo; x < cell_hi; ++x) {
        for (; next <= std::min(x, hi); ++next) {
            while (!dq.empty() && a[dq.back() - lo] <= a[next - lo]) dq.pop_back();
            dq.push_back(next);
        }
        while (!dq.empty() && dq.front() < x - s + 1) dq.pop_front();
        out[x - cell_lo] = dq.empty() ? 0.0 : a[dq.front() - lo];
    }
}

struct Prefix2D {
    int n = 0;
    std::vector<double> p;  // (n+1)x(n+1)
    Prefix2D() = default;
    explicit Prefix2D(const ScalarGridFunction& w) {
        const GridGeometry& g = w.geometry();
        n = g.side();
        p.assign(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                at(x + 1, y + 1) = w.at(g.cell_index(x, y)) + at(x, y + 1) + at(x + 1, y) -
                                   at(x, y);
    }
    double& at(int x, int y) { return p[static_cast<std::size_t>(y) * (n + 1) + x]; }
    double at(int x, int y) const { return p[static_cast<std::size_t>(y) * (n + 1) + x]; }
    // sum over [x0,x1) x [y0,y1), clamped to the domain
    double rect(int x0, int x1, int y0, int y1) const {
        x0 = std::clamp(x0, 0, n);
        x1 = std::clamp(x1, 0, n);
        y0 = std::clamp(y0, 0, n);
        y1 = std::clamp(y1, 0, n);
        if (x1 <= x0 || y1 <= y0) return 0.0;
        return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
    }
};

ScalarGridFunction maximal_all_cubes_1d(const ScalarGridFunction& w) {
    const GridGeometry& g = w.geometry();
    const int n = g.side();
    std::vector<double> pre(n + 1, 0.0);
    for (int x = 0; x < n; ++x) pre[x + 1] = pre[x] + w.at(x);

    ScalarGridFunction out(g, 1);
    std::vector<double> a, best(n, 0.0), gmax;
    for (int s = 1; s <= n; ++s) {
        const int hi = n - s;
        a.resize(hi + 1);
        for (int i = 0; i <= hi; ++i) a[i] = (pre[i + s] - pre[i]) / s;
        window_max(a, 0, hi, s, 0, n, gmax);
        for (int x = 0; x < n; ++x) best[x] = std::max(best[x], gmax[x]);
    }
    // side-1 cube from the raw value, exact (prefix differences round)
    for (int x = 0; x < n; ++x) out.at(x) = std::max(best[x], w.at(x));
    return out;
}

ScalarGridFunction maximal_all_cubes_2d(const ScalarGridFunction& w) {
    const GridGeometry& g = w.geometry();
    const int n = g.side();
    Prefix2D pre(w);

    ScalarGridFunction out(g, 1);
    std::vector<double> best(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> row, rowmax, col(n), colmax;
    for (int s = 1; s <= n; ++s) {
        const int hi = n - s;
        // rowpass[j][x]: max over x-offsets of square sums at y-offset j
        std::vector<std::vector<double>> rowpass(hi + 1);
        row.resize(hi + 1);
        for (int j = 0; j <= hi; ++j) {
            for (int i = 0; i <= hi; ++i) row[i] = pre.rect(i, i + s, j, j + s);
            window_max(row, 0, hi, s, 0, n, rowpass[j]);
        }
        for (int x = 0; x < n; ++x) {
            col.resize(hi + 1);
            for (int j = 0; j <= hi; ++j) col[j] = rowpass[j][x];
            window_max(col, 0, hi, s, 0, n, colmax);
            const double inv = 1.0 / (static_cast<double>(s) * s);
            for (int y = 0; y < n; ++y) {
                double v = colmax[y] * inv;
                double& b = best[static_cast<std::size_t>(y) * n + x];
                b = std::max(b, v);
            }
        }
    }
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const std::int64_t c = g.cell_index(x, y);
            out.at(c) = std::max(best[static_cast<std::size_t>(y) * n + x], w.at(c));
        }
    return out;
}

ScalarGridFunction maximal_dyadic(const ScalarGridFunction& w) {
    const GridGeometry& g = w.geometry();
    auto sums = level_sums(w);
    ScalarGridFunction out(g, 1);
    // carry max of ancestor averages down the tree
    std::vector<double> carry, next;
    carry.assign(1, sums[0][0] / static_cast<double>(g.cell_count()));
    for (int l = 1; l <= g.L; ++l) {
        const int m = 1 << l;
        const double cells_below = static_cast<double>(std::int64_t{1} << (g.d * (g.L - l)));
        next.assign(sums[l].size(), 0.0);
        for (std::size_t idx = 0; idx < sums[l].size(); ++idx) {
            std::size_t parent;
            if (g.d == 1) {
                parent = idx / 2;
            } else {
                const std::size_t x = idx % m, y = idx / m;
                parent = (y / 2) * (m / 2) + x / 2;
            }
            next[idx] = std::max(carry[parent], sums[l][idx] / cells_below);
        }
        carry.swap(next);
    }
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const int x = g.cell_x(c), y = g.cell_y(c);
        const std::size_t idx = g.d == 1 ? static_cast<std::size_t>(x)
                                         : static_cast<std::size_t>(y) * g.side() + x;
        out.at(c) = carry[idx];
    }
    return out;
}

}  // namespace

ScalarGridFunction maximal_function(const ScalarGridFunction& w, MaximalMode mode) {
    require_scalar(w, "maximal_function");
    if (w.min_value() < 0.0) throw DomainError("maximal_function: w must be nonnegative");
    if (mode == MaximalMode::Dyadic) return maximal_dyadic(w);
    return w.geometry().d == 1 ? maximal_all_cubes_1d(w) : maximal_all_cubes_2d(w);
}

namespace {

// sum over cells of Q of M(chi_Q w) in AllCubes mode; squares with side
// above side(Q) are dominated by I = Q and are skipped.
double fujii_numerator_allcubes_1d(const std::vector<double>& pre, const GridGeometry& g,
                                   int qx0, int qx1) {
    const int n = g.side();
    const int mq = qx1 - qx0;
    std::vector<double> best(mq, 0.0), a, gmax;
    for (int s = 1; s <= mq; ++s) {
        const int lo = std::max(0, qx0 - s + 1);
        const int hi = std::min(n - s, qx1 - 1);
        a.resize(hi - lo + 1);
        for (int i = lo; i <= hi; ++i) {
            const int cx0 = std::max(i, qx0), cx1 = std::min(i + s, qx1);
            a[i - lo] = cx1 > cx0 ? (pre[cx1] - pre[cx0]) / s : 0.0;
        }
        window_max(a, lo, hi, s, qx0, qx1, gmax);
        for (int x = 0; x < mq; ++x) best[x] = std::max(best[x], gmax[x]);
    }
    return pairwise_sum(best);
}

double fujii_numerator_allcubes_2d(const Prefix2D& pre, const GridGeometry& g, const GridRegion& q) {
    const int n = g.side();
    const int mq = q.x1 - q.x0;  // dyadic cube: square
    std::vector<double> best(static_cast<std::size_t>(mq) * mq, 0.0);
    std::vector<double> row, col, colmax;
    for (int s = 1; s <= mq; ++s) {
        const int lox = std::max(0, q.x0 - s + 1), hix = std::min(n - s, q.x1 - 1);
        const int loy = std::max(0, q.y0 - s + 1), hiy = std::min(n - s, q.y1 - 1);
        std::vector<std::vector<double>> rowpass(hiy - loy + 1);
        row.resize(hix - lox + 1);
        for (int j = loy; j <= hiy; ++j) {
            for (int i = lox; i <= hix; ++i)
                row[i - lox] = pre.rect(std::max(i, q.x0), std::min(i + s, q.x1),
                                        std::max(j, q.y0), std::min(j + s, q.y1));
            window_max(row, lox, hix, s, q.x0, q.x1, rowpass[j - loy]);
        }
        const double inv = 1.0 / (static_cast<double>(s) * s);
        for (int x = q.x0; x < q.x1; ++x) {
            col.resize(hiy - loy + 1);
            for (int j = loy; j <= hiy; ++j) col[j - loy] = rowpass[j - loy][x - q.x0];
            window_max(col, loy, hiy, s, q.y0, q.y1, colmax);
            for (int y = q.y0; y < q.y1; ++y) {
                double& b = best[static_cast<std::size_t>(y - q.y0) * mq + (x - q.x0)];
                b = std::max(b, colmax[y - q.y0] * inv);
            }
        }
    }
    return pairwise_sum(best);
}

// sum over cells of Q of M_dyadic(chi_Q w): within Q only, ancestors of Q
// are diluted copies of Q itself.
double fujii_numerator_dyadic(const std::vector<std::vector<double>>& sums, const GridGeometry& g,
                              const DyadicCube& q) {
    double total = 0.0;
    const std::function<void(const DyadicCube&, double)> walk = [&](const DyadicCube& r,
                                                                    double carry) {
        const std::size_t idx = g.d == 1 ? static_cast<std::size_t>(r.x)
                                         : (static_cast<std::size_t>(r.y) << r.level) + r.x;
        const double cells = static_cast<double>(std::int64_t{1} << (g.d * (g.L - r.level)));
        const double m = std::max(carry, sums[r.level][idx] / cells);
        if (r.level == g.L) {
            total += m;
            return;
        }
        for (const DyadicCube& c : cube_children(g, r)) walk(c, m);
    };
    walk(q, 0.0);
    return total;
}

}  // namespace

double fujii_ainfty(const ScalarGridFunction& w, MaximalMode mode) {
    require_weight(w, "fujii_ainfty");
    const GridGeometry& g = w.geometry();
    auto sums = level_sums(w);

    std::vector<double> pre1d;
    Prefix2D pre2d;
    if (g.d == 1 && mode == MaximalMode::AllCubes) {
        pre1d.assign(g.side() + 1, 0.0);
        for (int x = 0; x < g.side(); ++x) pre1d[x + 1] = pre1d[x] + w.at(x);
    } else if (g.d == 2 && mode == MaximalMode::AllCubes) {
        pre2d = Prefix2D(w);
    }

    double best = 0.0;
    for (const DyadicCube& q : all_dyadic_cubes(g)) {
        const std::size_t idx = g.d == 1 ? static_cast<std::size_t>(q.x)
                                         : (static_cast<std::size_t>(q.y) << q.level) + q.x;
        const double mass = sums[q.level][idx];
        double numer;
        if (mode == MaximalMode::Dyadic) {
            numer = fujii_numerator_dyadic(sums, g, q);
        } else if (g.d == 1) {
            const GridRegion r = cube_region(g, q);
            numer = fujii_numerator_allcubes_1d(pre1d, g, r.x0, r.x1);
        } else {
            numer = fujii_numerator_allcubes_2d(pre2d, g, cube_region(g, q));
        }
        best = std::max(best, numer / mass);
    }
    return best;
}

double scalar_ap(const ScalarGridFunction& w, double p) {
    if (p <= 1.0) throw DomainError("scalar_ap: p must be > 1");
    require_weight(w, "scalar_ap");
    const GridGeometry& g = w.geometry();

    ScalarGridFunction dual(g, 1);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        dual.at(c) = std::pow(w.at(c), -1.0 / (p - 1.0));

    auto sw = level_sums(w);
    auto sd = level_sums(dual);
    double best = 0.0;
    for (int l = 0; l <= g.L; ++l) {
        const double cells = static_cast<double>(std::int64_t{1} << (g.d * (g.L - l)));
        for (std::size_t i = 0; i < sw[l].size(); ++i) {
            const double v = (sw[l][i] / cells) * std::pow(sd[l][i] / cells, p - 1.0);
            best = std::max(best, v);
        }
    }
    return best;
}

std::vector<DyadicCube> cz_decompose(const ScalarGridFunction& phi, const DyadicCube& q0,
                                     double height) {
    if (!(height > 0.0 && height < 1.0)) throw DomainError("cz_decompose: height not in (0,1)");
    require_scalar(phi, "cz_decompose");
    if (phi.min_value() < 0.0) throw DomainError("cz_decompose: phi must be nonnegative");
    const GridGeometry& g = phi.geometry();
    auto sums = level_sums(phi);

    const auto avg = [&](const DyadicCube& q) {
        const std::size_t idx = g.d == 1 ? static_cast<std::size_t>(q.x)
                                         : (static_cast<std::size_t>(q.y) << q.level) + q.x;
        const double cells = static_cast<double>(std::int64_t{1} << (g.d * (g.L - q.level)));
        return sums[q.level][idx] / cells;
    };

    std::vector<DyadicCube> out;
    if (avg(q0) > height) {
        out.push_back(q0);
        return out;
    }
    const std::function<void(const DyadicCube&)> walk = [&](const DyadicCube& q) {
        for (const DyadicCube& c : cube_children(g, q)) {
            if (avg(c) > height)
                out.push_back(c);
            else
                walk(c);
        }
    };
    walk(q0);
    return out;
}

std::vector<DyadicCube> cz_decompose_indicator(const GridGeometry& g,
                                               const std::vector<std::uint8_t>& mask,
                                               const DyadicCube& q0) {
    // integer masses per level
    std::vector<std::vector<std::int64_t>> cnt(g.L + 1);
    cnt[g.L].resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) cnt[g.L][i] = mask[i] ? 1 : 0;
    for (int l = g.L - 1; l >= 0; --l) {
        const int m = 1 << l;
        const int mc = 1 << (l + 1);
        if (g.d == 1) {
            cnt[l].resize(m);
            for (int x = 0; x < m; ++x) cnt[l][x] = cnt[l + 1][2 * x] + cnt[l + 1][2 * x + 1];
        } else {
            cnt[l].assign(static_cast<std::size_t>(m) * m, 0);
            for (int y = 0; y < m; ++y)
                for (int x = 0; x < m; ++x)
                    cnt[l][static_cast<std::size_t>(y) * m + x] =
                        cnt[l + 1][static_cast<std::size_t>(2 * y) * mc + 2 * x] +
                        cnt[l + 1][static_cast<std::size_t>(2 * y) * mc + 2 * x + 1] +
                        cnt[l + 1][static_cast<std::size_t>(2 * y + 1) * mc + 2 * x] +
                        cnt[l + 1][static_cast<std::size_t>(2 * y + 1) * mc + 2 * x + 1];
        }
    }

    const auto count_of = [&](const DyadicCube& q) {
        const std::size_t idx = g.d == 1 ? static_cast<std::size_t>(q.x)
                                         : (static_cast<std::size_t>(q.y) << q.level) + q.x;
        return cnt[q.level][idx];
    };
    const auto exceeds = [&](const DyadicCube& q) {
        const std::int64_t cells = std::int64_t{1} << (g.d * (g.L - q.level));
        return count_of(q) * (std::int64_t{1} << (g.d + 1)) > cells;
    };

    std::vector<DyadicCube> out;
    if (exceeds(q0)) {
        out.push_back(q0);
        return out;
    }
    const std::function<void(const DyadicCube&)> walk = [&](const DyadicCube& q) {
        for (const DyadicCube& c : cube_children(g, q)) {
            if (count_of(c) == 0) continue;
            if (exceeds(c))
                out.push_back(c);
            else
                walk(c);
        }
    };
    walk(q0);
    return out;
}

double reverse_holder_ratio(const ScalarGridFunction& w, double r) {
    if (r <= 1.0) throw DomainError("reverse_holder_ratio: r must be > 1");
    require_weight(w, "reverse_holder_ratio");
    const GridGeometry& g = w.geometry();

    ScalarGridFunction wr(g, 1);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) wr.at(c) = std::pow(w.at(c), r);

    auto sw = level_sums(w);
    auto sr = level_sums(wr);
    double best = 0.0;
    for (int l = 0; l <= g.L; ++l) {
        const double cells = static_cast<double>(std::int64_t{1} << (g.d * (g.L - l)));
        for (std::size_t i = 0; i < sw[l].size(); ++i) {
            const double v = std::pow(sr[l][i] / cells, 1.0 / r) / (sw[l][i] / cells);
            best = std::max(best, v);
        }
    }
    return best;
}

}  // namespace mwlab
