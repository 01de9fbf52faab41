#include "mwlab/ellipsoid.hpp"

#include <algorithm>
#include <cmath>

#include "mwlab/errors.hpp"

namespace mwlab {

namespace {

Mat invert_spd(const Mat& a) {
    const int n = a.dim();
    SymEigen e = jacobi_eigensym(a);
    if (e.values[0] <= 0.0 || e.values[0] < 1e-15 * e.values[n - 1])
        throw NumericError("mvee: scatter matrix is numerically singular");
    Mat r(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += e.vectors(i, k) / e.values[k] * e.vectors(j, k);
            r(i, j) = s;
            r(j, i) = s;
        }
    return r;
}

double quad_form(const Mat& h, const VecN& x) {
    double s = 0.0;
    const int n = h.dim();
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += h(i, j) * x[j];
        s += row * x[i];
    }
    return s;
}

// small dense solve with partial pivoting; a is overwritten
bool solve_linear(std::vector<double>& a, std::vector<double>& rhs, int n) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * n + c]) >
                std::abs(a[static_cast<std::size_t>(piv) * n + c]))
                piv = r;
        if (std::abs(a[static_cast<std::size_t>(piv) * n + c]) < 1e-280) return false;
        if (piv != c) {
            for (int k = 0; k < n; ++k)
                std::swap(a[static_cast<std::size_t>(piv) * n + k],
                          a[static_cast<std::size_t>(c) * n + k]);
            std::swap(rhs[piv], rhs[c]);
        }
        const double d = a[static_cast<std::size_t>(c) * n + c];
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[static_cast<std::size_t>(r) * n + c] / d;
            if (f == 0.0) continue;
            for (int k = c; k < n; ++k)
                a[static_cast<std::size_t>(r) * n + k] -= f * a[static_cast<std::size_t>(c) * n + k];
            rhs[r] -= f * rhs[c];
        }
    }
    for (int c = 0; c < n; ++c) rhs[c] /= a[static_cast<std::size_t>(c) * n + c];
    return true;
}

// Active-set Newton refinement of the MVEE KKT system
//   H = (sum_k mu_k x_k x_k^T)^{-1},  x_k^T H x_k = 1 on the active set,
// with d phi_k / d mu_j = -(x_k^T H x_j)^2. Quadratic local convergence;
// returns false (leaving H untouched) when the system degenerates.
bool newton_polish(const std::vector<VecN>& pts, std::vector<int> active,
                   std::vector<double> mu, Mat* h_out) {
    const int n = pts[0].n;
    const int m = static_cast<int>(pts.size());

    for (int round = 0; round < 60; ++round) {
        bool newton_ok = false;
        for (int step = 0; step < 60; ++step) {
            const int a = static_cast<int>(active.size());
            if (a < n) return false;
            Mat scatter(n);
            for (int t = 0; t < a; ++t) {
                const VecN& x = pts[active[t]];
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) scatter(i, j) += mu[t] * x[i] * x[j];
            }
            SymEigen se = jacobi_eigensym(scatter);
            if (se.values[0] <= 0.0 || se.values[0] < 1e-14 * se.values[n - 1]) return false;
            Mat h(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < n; ++k)
                        s += se.vectors(i, k) / se.values[k] * se.vectors(j, k);
                    h(i, j) = s;
                    h(j, i) = s;
                }

            std::vector<double> resid(a);
            double err = 0.0;
            std::vector<VecN> hx(a);
            for (int t = 0; t < a; ++t) {
                hx[t] = h * pts[active[t]];
                resid[t] = pts[active[t]].dot(hx[t]) - 1.0;
                err = std::max(err, std::abs(resid[t]));
            }
            if (err <= 1e-13) {
                *h_out = h;
                newton_ok = true;
                break;
            }
            std::vector<double> jac(static_cast<std::size_t>(a) * a);
            for (int r = 0; r < a; ++r)
                for (int c = 0; c < a; ++c) {
                    const double v = pts[active[r]].dot(hx[c]);
                    jac[static_cast<std::size_t>(r) * a + c] = v * v;
                }
            if (!solve_linear(jac, resid, a)) {
                // rank of {vec(x x^T)} caps the active set at n(n+1)/2;
                // exchange: drop the weakest multiplier and retry
                if (a <= n) return false;
                int weakest = 0;
                for (int t = 1; t < a; ++t)
                    if (mu[t] < mu[weakest]) weakest = t;
                active.erase(active.begin() + weakest);
                mu.erase(mu.begin() + weakest);
                continue;
            }
            bool dropped = false;
            for (int t = 0; t < a; ++t) mu[t] += resid[t];
            for (int t = a - 1; t >= 0; --t) {
                if (mu[t] < 0.0) {
                    active.erase(active.begin() + t);
                    mu.erase(mu.begin() + t);
                    dropped = true;
                }
            }
            if (dropped) continue;
        }
        if (!newton_ok) return false;

        // admit the worst violator outside the active set, if any
        int worst = -1;
        double worst_g = 1.0 + 5e-13;
        for (int k = 0; k < m; ++k) {
            const double gk = quad_form(*h_out, pts[k]);
            if (gk > worst_g) {
                worst_g = gk;
                worst = k;
            }
        }
        if (worst < 0) return true;
        if (std::find(active.begin(), active.end(), worst) != active.end()) return false;
        active.push_back(worst);
        mu.push_back(1e-8);
    }
    return false;
}

// Least-squares fit of x^T H x = 1 through the points; exact whenever the
// points lie on a common ellipsoid, which is the regime where the ascent
// converges slowest. Returns H with dim 0 if the fit is not SPD.
Mat ls_ellipsoid_fit(const std::vector<VecN>& pts, double* residual) {
    const int n = pts[0].n;
    const int vars = n * (n + 1) / 2;
    std::vector<double> normal(static_cast<std::size_t>(vars) * vars, 0.0);
    std::vector<double> rhs(vars, 0.0);
    std::vector<double> row(vars);
    for (const VecN& x : pts) {
        int v = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) row[v++] = (i == j ? 1.0 : 2.0) * x[i] * x[j];
        for (int a = 0; a < vars; ++a) {
            rhs[a] += row[a];
            for (int b = 0; b < vars; ++b) normal[static_cast<std::size_t>(a) * vars + b] += row[a] * row[b];
        }
    }
    // Gaussian elimination with partial pivoting on the normal equations
    std::vector<double> m = normal;
    std::vector<double> sol = rhs;
    for (int c = 0; c < vars; ++c) {
        int piv = c;
        for (int r = c + 1; r < vars; ++r)
            if (std::abs(m[static_cast<std::size_t>(r) * vars + c]) >
                std::abs(m[static_cast<std::size_t>(piv) * vars + c]))
                piv = r;
        if (std::abs(m[static_cast<std::size_t>(piv) * vars + c]) < 1e-300) return Mat();
        if (piv != c) {
            for (int k = 0; k < vars; ++k)
                std::swap(m[static_cast<std::size_t>(piv) * vars + k],
                          m[static_cast<std::size_t>(c) * vars + k]);
            std::swap(sol[piv], sol[c]);
        }
        const double d = m[static_cast<std::size_t>(c) * vars + c];
        for (int r = 0; r < vars; ++r) {
            if (r == c) continue;
            const double f = m[static_cast<std::size_t>(r) * vars + c] / d;
            if (f == 0.0) continue;
            for (int k = c; k < vars; ++k)
                m[static_cast<std::size_t>(r) * vars + k] -= f * m[static_cast<std::size_t>(c) * vars + k];
            sol[r] -= f * sol[c];
        }
    }
    Mat h(n);
    int v = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double val = sol[v] / m[static_cast<std::size_t>(v) * vars + v];
            h(i, j) = val;
            h(j, i) = val;
            ++v;
        }
    SymEigen e = jacobi_eigensym(h);
    if (e.values[0] <= 0.0) return Mat();
    double res = 0.0;
    for (const VecN& x : pts) res = std::max(res, std::abs(quad_form(h, x) - 1.0));
    *residual = res;
    return h;
}

}  // namespace

MveeResult mvee_symmetric(const std::vector<VecN>& points, double tol, int max_iterations,
                          int stall_window) {
    if (points.empty()) throw InvalidInputError("mvee: empty point set");
    const int n = points[0].n;
    const int m = static_cast<int>(points.size());

    if (n == 1) {
        double xmax = 0.0;
        for (const VecN& x : points) xmax = std::max(xmax, std::abs(x[0]));
        if (xmax == 0.0) throw NumericError("mvee: scatter matrix is numerically singular");
        Mat g1(1);
        g1(0, 0) = 1.0 / xmax;
        return MveeResult{SpdMatrix::from(g1), 0, 0.0};
    }

    // shortcut: if the points lie on a common ellipsoid (least-squares
    // residual at machine level), that ellipsoid is its own MVEE for a
    // spread antipodal sample; the ascent converges slowest exactly there
    double ls_residual = 1e300;
    Mat h_ls = ls_ellipsoid_fit(points, &ls_residual);
    if (h_ls.dim() == n && ls_residual < 1e-9) {
        double gmax = 0.0;
        for (const VecN& x : points) gmax = std::max(gmax, quad_form(h_ls, x));
        h_ls = h_ls.scaled(1.0 / gmax);
        return MveeResult{frac_power(SpdMatrix::from(h_ls), 0.5), 0, 0.0};
    }

    // Khachiyan ascent with Wolfe-Atwood away/drop steps
    std::vector<double> lambda(m, 1.0 / m);
    std::vector<double> g(m, 0.0);
    Mat lam_inv(n);
    int it_total = 0;
    double gap = 0.0;

    const auto fw_run = [&](double target, int window, int budget) {
        double best_gap = 1e300;
        int last_improve = it_total;
        for (; it_total < budget; ++it_total) {
            Mat scatter(n);
            for (int k = 0; k < m; ++k) {
                if (lambda[k] == 0.0) continue;
                const VecN& x = points[k];
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) scatter(i, j) += lambda[k] * x[i] * x[j];
            }
            lam_inv = invert_spd(scatter);

            int k_max = 0, k_min = -1;
            double g_max = -1.0, g_min = 0.0;
            for (int k = 0; k < m; ++k) {
                g[k] = quad_form(lam_inv, points[k]);
                if (g[k] > g_max) {
                    g_max = g[k];
                    k_max = k;
                }
                if (lambda[k] > 0.0 && (k_min < 0 || g[k] < g_min)) {
                    g_min = g[k];
                    k_min = k;
                }
            }

            const double up = g_max / n - 1.0;
            const double down = 1.0 - g_min / n;
            gap = std::max(up, down);
            if (gap <= target) return;
            if (gap < best_gap * 0.999) {
                best_gap = gap;
                last_improve = it_total;
            } else if (it_total - last_improve > window) {
                return;
            }

            if (up >= down) {
                const double beta = (g_max - n) / (n * (g_max - 1.0));
                for (int k = 0; k < m; ++k) lambda[k] *= (1.0 - beta);
                lambda[k_max] += beta;
            } else {
                const double beta_drop =
                    lambda[k_min] < 1.0 ? lambda[k_min] / (1.0 - lambda[k_min]) : 1e30;
                double beta = beta_drop;
                if (g_min > 1.0) beta = std::min(beta, (n - g_min) / (n * (g_min - 1.0)));
                for (int k = 0; k < m; ++k) lambda[k] *= (1.0 + beta);
                lambda[k_min] = std::max(0.0, lambda[k_min] - beta);
            }
        }
    };

    // coarse phase, then Newton polish of the KKT system on the support set
    fw_run(std::max(tol, 1e-5), 600, std::min(max_iterations, 4000));
    {
        // keep at most n(n+1)/2 support points (the rank of {vec(x x^T)});
        // the violator loop re-admits anything pruned too eagerly
        std::vector<int> order;
        for (int k = 0; k < m; ++k)
            if (lambda[k] > 1e-10) order.push_back(k);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return lambda[a] > lambda[b]; });
        const int cap = n * (n + 1) / 2;
        if (static_cast<int>(order.size()) > cap) order.resize(cap);
        std::sort(order.begin(), order.end());
        std::vector<int> active;
        std::vector<double> mu;
        double lam_total = 0.0;
        for (int k : order) lam_total += lambda[k];
        for (int k : order) {
            active.push_back(k);
            mu.push_back(n * lambda[k] / lam_total);
        }
        Mat h_newton(n);
        if (newton_polish(points, std::move(active), std::move(mu), &h_newton)) {
            double g_max = 0.0;
            for (int k = 0; k < m; ++k) g_max = std::max(g_max, quad_form(h_newton, points[k]));
            Mat h = h_newton.scaled(1.0 / g_max);
            return MveeResult{frac_power(SpdMatrix::from(h), 0.5), it_total, g_max - 1.0};
        }
    }

    // fallback: run the ascent to full patience
    fw_run(tol, stall_window, max_iterations);
    double g_max = 0.0;
    for (int k = 0; k < m; ++k) g_max = std::max(g_max, g[k]);
    Mat h = lam_inv.scaled(1.0 / g_max);
    return MveeResult{frac_power(SpdMatrix::from(h), 0.5), it_total, gap};
}

namespace {

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    int i = index;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

// Box-Muller over Halton pairs; avoids rational inverse-CDF approximations
void halton_gaussians(int index, int count, double* out) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    for (int i = 0; i < count; i += 2) {
        double u1 = std::max(halton(index + 1, primes[i]), 1e-12);
        double u2 = halton(index + 1, primes[i + 1]);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586 * u2;
        out[i] = r * std::cos(a);
        if (i + 1 < count) out[i + 1] = r * std::sin(a);
    }
}

}  // namespace

std::vector<VecN> probe_directions(int n, int count) {
    std::vector<VecN> dirs;
    if (n == 1) {
        dirs.push_back(VecN::axis(1, 0));
        return dirs;
    }
    for (int i = 0; i < n && static_cast<int>(dirs.size()) < count; ++i)
        dirs.push_back(VecN::axis(n, i));

    // +-1 diagonals; sign of the first coordinate fixed by symmetry
    const int combos = 1 << (n - 1);
    for (int mask = 0; mask < combos && static_cast<int>(dirs.size()) < count; ++mask) {
        VecN d = VecN::zero(n);
        d[0] = 1.0;
        for (int i = 1; i < n; ++i) d[i] = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
        dirs.push_back(d.normalized());
    }

    int idx = 0;
    while (static_cast<int>(dirs.size()) < count) {
        VecN d = VecN::zero(n);
        if (n == 2) {
            const double theta = 3.14159265358979323846 * (idx + 0.5) / (count + 1);
            d[0] = std::cos(theta);
            d[1] = std::sin(theta);
        } else if (n == 3) {
            // Fibonacci sphere point idx
            const double golden = 2.39996322972865332;  // 2*pi*(1 - 1/phi)
            const double z = 1.0 - 2.0 * (idx + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            d[0] = rho * std::cos(golden * idx);
            d[1] = rho * std::sin(golden * idx);
            d[2] = z;
        } else {
            double gs[kMaxDim];
            halton_gaussians(idx, n, gs);
            for (int i = 0; i < n; ++i) d[i] = gs[i];
            if (d.norm() < 1e-9) {
                ++idx;
                continue;
            }
            d = d.normalized();
        }
        dirs.push_back(d);
        ++idx;
    }
    return dirs;
}

}  // namespace mwlab
