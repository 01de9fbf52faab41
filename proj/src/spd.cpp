#include "mwlab/spd.hpp"

#include <algorithm>
#include <cmath>

namespace mwlab {

SymEigen jacobi_eigensym(const Mat& a_in, double tol, int max_sweeps) {
    const int n = a_in.dim();
    Mat a = a_in;
    Mat v = Mat::identity(n);
    const double scale = std::max(a.max_abs(), 1e-300);
    const double thresh = tol * scale;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= thresh) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= thresh * 1e-2) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (i != p && i != q) {
                        const double aip = a(i, p), aiq = a(i, q);
                        a(i, p) = aip - s * (aiq + tau * aip);
                        a(p, i) = a(i, p);
                        a(i, q) = aiq + s * (aip - tau * aiq);
                        a(q, i) = a(i, q);
                    }
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = vip - s * (viq + tau * vip);
                    v(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    // sort ascending, stable on ties
    std::array<int, kMaxDim> order{};
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.begin() + n,
                     [&](int i, int j) { return a(i, i) < a(j, j); });

    SymEigen e;
    e.n = n;
    e.vectors = Mat(n);
    for (int k = 0; k < n; ++k) {
        e.values[k] = a(order[k], order[k]);
        for (int i = 0; i < n; ++i) e.vectors(i, k) = v(i, order[k]);
    }
    return e;
}

SpdMatrix SpdMatrix::from(const Mat& m) {
    const int n = m.dim();
    if (n < 1 || n > kMaxDim) throw InvalidInputError("SpdMatrix: dim must be in [1,8]");
    if (!m.all_finite()) throw InvalidInputError("SpdMatrix: non-finite entries");

    const double scale = std::max(m.max_abs(), 1e-300);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > kSymmetryTol * scale)
                throw InvalidInputError("SpdMatrix: not symmetric");

    // symmetrize roundoff before the spectral check
    Mat s(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));

    SymEigen e = jacobi_eigensym(s);
    if (e.values[0] <= 0.0) throw InvalidInputError("SpdMatrix: not positive definite");
    if (e.values[n - 1] / e.values[0] > kConditionCap)
        throw IllConditionedError("SpdMatrix: condition number above 1e8");
    return SpdMatrix(s, e);
}

SpdMatrix SpdMatrix::inverse() const { return frac_power(*this, -1.0); }

double op_norm(const Mat& a) {
    if (!a.all_finite()) throw InvalidInputError("op_norm: non-finite entries");
    const int n = a.dim();
    Mat ata(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a(k, i) * a(k, j);
            ata(i, j) = s;
        }
    SymEigen e = jacobi_eigensym(ata);
    return std::sqrt(std::max(0.0, e.values[n - 1]));
}

SpdMatrix frac_power(const SpdMatrix& a, double alpha) {
    const int n = a.dim();
    const SymEigen& e = a.eigen();
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += e.values[i];
    if (e.values[0] < 1e-14 * trace)
        throw IllConditionedError("frac_power: eigenvalue below 1e-14 * trace");

    Mat r(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += e.vectors(i, k) * std::pow(e.values[k], alpha) * e.vectors(j, k);
            r(i, j) = s;
            r(j, i) = s;
        }
    return SpdMatrix::from(r);
}

BoundPair bownik_bound(const SpdMatrix& a, const SpdMatrix& b, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("bownik_bound: alpha must be in (0,1)");
    if (a.dim() != b.dim()) throw InvalidInputError("bownik_bound: dimension mismatch");
    const int n = a.dim();
    BoundPair r;
    r.lhs = op_norm(frac_power(a, alpha).mat() * frac_power(b, alpha).mat());
    r.rhs = static_cast<double>(n) * std::pow(op_norm(a.mat() * b.mat()), alpha);
    return r;
}

BoundPair holder_mccarthy_check(const SpdMatrix& a, double alpha, const VecN& e) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("holder_mccarthy_check: alpha must be in (0,1)");
    if (e.n != a.dim()) throw InvalidInputError("holder_mccarthy_check: dimension mismatch");
    if (std::abs(e.norm() - 1.0) > 1e-12) throw DomainError("holder_mccarthy_check: e not unit");
    BoundPair r;
    r.lhs = (frac_power(a, alpha) * e).norm();
    r.rhs = std::pow((a * e).norm(), alpha);
    return r;
}

}  // namespace mwlab
