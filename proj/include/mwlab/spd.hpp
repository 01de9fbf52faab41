#pragma once

#include <array>
#include <cmath>
#include <span>

#include "mwlab/errors.hpp"

namespace mwlab {

inline constexpr int kMaxDim = 8;

// Small vector in R^n, n <= 8.
struct VecN {
    int n = 0;
    std::array<double, kMaxDim> v{};

    static VecN zero(int n) {
        VecN x;
        x.n = n;
        return x;
    }
    static VecN axis(int n, int i) {
        VecN x = zero(n);
        x.v[i] = 1.0;
        return x;
    }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    double dot(const VecN& o) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += v[i] * o.v[i];
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
    VecN scaled(double c) const {
        VecN x = *this;
        for (int i = 0; i < n; ++i) x.v[i] *= c;
        return x;
    }
    VecN normalized() const { return scaled(1.0 / norm()); }
    VecN operator+(const VecN& o) const {
        VecN x = *this;
        for (int i = 0; i < n; ++i) x.v[i] += o.v[i];
        return x;
    }
    VecN operator-(const VecN& o) const {
        VecN x = *this;
        for (int i = 0; i < n; ++i) x.v[i] -= o.v[i];
        return x;
    }
};

// Dense square matrix with fixed capacity, row-major.
class Mat {
  public:
    Mat() = default;
    explicit Mat(int n) : n_(n) { a_.fill(0.0); }

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Mat diag(std::span<const double> d) {
        Mat m(static_cast<int>(d.size()));
        for (int i = 0; i < m.n_; ++i) m(i, i) = d[i];
        return m;
    }

    int dim() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * kMaxDim + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * kMaxDim + j]; }

    Mat transpose() const {
        Mat t(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat operator*(const Mat& o) const {
        Mat r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < n_; ++j) r(i, j) += aik * o(k, j);
            }
        return r;
    }

    VecN operator*(const VecN& x) const {
        VecN y = VecN::zero(n_);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat scaled(double c) const {
        Mat r = *this;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r(i, j) *= c;
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
        return m;
    }

    bool all_finite() const {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (!std::isfinite((*this)(i, j))) return false;
        return true;
    }

  private:
    int n_ = 0;
    std::array<double, kMaxDim * kMaxDim> a_{};
};

// Eigendecomposition A = V diag(values) V^T of a symmetric matrix,
// eigenvalues ascending. Cyclic Jacobi rotations, threshold 1e-14
// relative to the largest initial entry.
struct SymEigen {
    int n = 0;
    std::array<double, kMaxDim> values{};
    Mat vectors;  // columns are eigenvectors
};

SymEigen jacobi_eigensym(const Mat& a_in, double tol = 1e-14, int max_sweeps = 100);

// Symmetric positive definite matrix, n in [1,8]. Construction validates
// symmetry (1e-12 relative), positive definiteness and condition <= 1e8.
class SpdMatrix {
  public:
    static constexpr double kSymmetryTol = 1e-12;
    static constexpr double kConditionCap = 1e8;

    static SpdMatrix from(const Mat& m);
    static SpdMatrix identity(int n) { return from(Mat::identity(n)); }
    static SpdMatrix diag(std::span<const double> d) { return from(Mat::diag(d)); }

    int dim() const { return m_.dim(); }
    double operator()(int i, int j) const { return m_(i, j); }
    const Mat& mat() const { return m_; }
    VecN operator*(const VecN& x) const { return m_ * x; }

    const SymEigen& eigen() const { return eig_; }
    double min_eigenvalue() const { return eig_.values[0]; }
    double max_eigenvalue() const { return eig_.values[dim() - 1]; }
    double condition() const { return eig_.values[dim() - 1] / eig_.values[0]; }

    SpdMatrix inverse() const;

  private:
    SpdMatrix(const Mat& m, const SymEigen& e) : m_(m), eig_(e) {}
    Mat m_;
    SymEigen eig_;
};

// |A|_op for a general square matrix: largest singular value.
double op_norm(const Mat& a);
inline double op_norm(const SpdMatrix& a) { return a.max_eigenvalue(); }

// Spectral calculus A^alpha, alpha any real. Eigenvalues below
// 1e-14 * trace reject the computation as ill-conditioned.
SpdMatrix frac_power(const SpdMatrix& a, double alpha);

// Matrix Holder-McCarthy consequence |A^a B^a|_op <= n |AB|_op^a, 0<a<1.
// Returns (lhs, rhs); lhs <= rhs is the contract.
struct BoundPair {
    double lhs = 0.0;
    double rhs = 0.0;
};
BoundPair bownik_bound(const SpdMatrix& a, const SpdMatrix& b, double alpha);

// |A^a e| <= |Ae|^a for unit e, 0<a<1. Returns (lhs, rhs).
BoundPair holder_mccarthy_check(const SpdMatrix& a, double alpha, const VecN& e);

}  // namespace mwlab
