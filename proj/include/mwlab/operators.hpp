#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mwlab/grid.hpp"
#include "mwlab/spd.hpp"
#include "mwlab/weights.hpp"

namespace mwlab {

enum class KernelKind { Hilbert, Rough, HormanderExample };

// Discrete singular integral: (Tf)(x_i) = sum_{j != i} K(x_i,x_j) f(x_j) |cell|.
// The diagonal cell is the principal-value exclusion. Kernel values are
// cached by index offset (Toeplitz); the cache must reproduce the direct
// formula bit-for-bit, which holds because cell-center differences are
// exact binary fractions.
class KernelOperator {
  public:
    static KernelOperator hilbert(const GridGeometry& g);  // d=1, K = 1/(x-y)
    // d=2, K = Omega((x-y)/|x-y|)/|x-y|^2, Omega piecewise constant in angle
    static KernelOperator rough(const GridGeometry& g, std::vector<double> omega_samples,
                                bool enforce_mean_zero);
    // d=1, sign(t)/|t| modulated per dyadic scale; L^{r'}-Hormander but not
    // a Calderon-Zygmund kernel
    static KernelOperator hormander_example(const GridGeometry& g);

    KernelKind kind() const { return kind_; }
    const GridGeometry& geometry() const { return geom_; }
    bool degenerate() const { return degenerate_; }
    const std::vector<double>& omega() const { return omega_; }

    double kernel(std::int64_t i, std::int64_t j) const;
    // direct cache access when the caller already has coordinates
    double kernel_diff(int diff) const { return cache_[diff + geom_.side() - 1]; }
    double kernel_offset(int dx, int dy) const {
        const int n = geom_.side();
        return cache_[static_cast<std::size_t>(dy + n - 1) * (2 * n - 1) + (dx + n - 1)];
    }

  private:
    KernelOperator(KernelKind k, const GridGeometry& g) : kind_(k), geom_(g) {}
    void build_cache();
    double kernel_direct(std::int64_t i, std::int64_t j) const;

    KernelKind kind_;
    GridGeometry geom_;
    std::vector<double> omega_;
    bool degenerate_ = false;
    std::vector<double> cache_;  // by offset; d=1: diff+N-1, d=2: (dy+N-1)*(2N-1)+(dx+N-1)
};

// componentwise application of the vector-valued extension
GridFunction apply(const KernelOperator& t, const GridFunction& f);
GridFunction apply_adjoint(const KernelOperator& t, const GridFunction& f);
// T(f chi_src); output evaluated on `out` when given (cells elsewhere stay 0)
GridFunction apply_masked(const KernelOperator& t, const GridFunction& f, const GridRegion& src,
                          const GridRegion* out = nullptr);

// truncated L^{r'}-Hormander sums H_{r',1} (x-regularity) and H_{r',2}
// (y-regularity) over a deterministic cube set, with the per-annulus terms
// of the worst pair recorded for tail diagnostics
struct HormanderConstant {
    double h1 = 0.0;
    double h2 = 0.0;
    std::vector<double> worst_annulus_terms;  // k = 1..k_max for the h1-worst pair
};
HormanderConstant hormander_constant(const KernelOperator& t, double r_prime, int k_max);

// M_T(f,g)(x) = sup_{Q ni x} avg_Q |T(f chi_{complement of 3Q})| |g| over
// dyadic cubes; 3Q is the clipped concentric triple.
ScalarGridFunction bilinear_sharp_maximal(const KernelOperator& t, const ScalarGridFunction& f,
                                          const ScalarGridFunction& g);

// localized variant of the sparse proof: cubes Q with x in Q ⊆ q0 and the
// mask taken inside 3q0 (f is expected to be supported in 3q0 already)
ScalarGridFunction bilinear_sharp_maximal_local(const KernelOperator& t,
                                                const ScalarGridFunction& f,
                                                const ScalarGridFunction& g, const DyadicCube& q0);

// M_{p,T} f(x) = sup_Q (avg_Q |T(f chi_{~3Q})|^p)^{1/p}; p = infinity uses
// the exact max over the cells of Q
ScalarGridFunction mpt_maximal(const KernelOperator& t, const ScalarGridFunction& f, double p);

enum class GrandSign { MinusOneOverP, PlusOneOverP };

// z -> sup_{Q ni z} ((1/|Q|) int_Q |V_Q^{-1} W^{-+1/p}(x) h(x)|^r dx)^{1/r}
ScalarGridFunction grand_maximal(const GridFunction& h, const MatrixWeight& w,
                                 const std::function<SpdMatrix(const DyadicCube&)>& v, double p,
                                 double r, GrandSign sign = GrandSign::MinusOneOverP);

struct OperatorProfile {
    double weak_qq = 0.0;  // sup_lambda lambda |{|Tf|>lambda}|^{1/q} / ||f||_q
    double q = 1.0;
    double mt_product = 0.0;  // ||M_T||_{L^r x L^s -> L^{nu,infty}} estimate
    double r = 1.0, s = 1.0, nu = 1.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

// exact weak L^{q,infty} quasi-norm of a grid function (sorted level sets)
double weak_quasinorm(const ScalarGridFunction& v, double q);
double lp_norm(const GridFunction& f, double p);

OperatorProfile weak_norm_estimate(const KernelOperator& t, double q, int trials,
                                   std::uint64_t seed);
double mt_product_norm_estimate(const KernelOperator& t, double r, double s, int trials,
                                std::uint64_t seed);

// deterministic scalar trial input #k: atoms, dyadic indicators, Rademacher
// fields and smooth profiles, reproducible from (seed, k) alone
ScalarGridFunction trial_input(const GridGeometry& g, std::uint64_t seed, int k);

}  // namespace mwlab
