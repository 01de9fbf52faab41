#pragma once

#include <vector>

#include "mwlab/ellipsoid.hpp"
#include "mwlab/grid.hpp"

namespace mwlab {

// Convex body average of f over a region at exponent p, represented by its
// exact support oracle h(e) = ((1/|Q|) int_Q |<f(x),e>|^p)^{1/p} plus an
// enclosing-ellipsoid surrogate certified on probe directions. The body
// itself is the set of averages (1/|Q|) int f phi over the normalized
// L^{p'} unit ball; the support function collapses to a grid norm, which
// is the representational decision everything here rests on.
class ConvexBodyAverage {
  public:
    ConvexBodyAverage() = default;
    ConvexBodyAverage(const GridFunction& f, const GridRegion& region, double p);
    ConvexBodyAverage(const GridFunction& f, const DyadicCube& q, double p);

    int vdim() const { return n_; }
    double exponent() const { return p_; }
    const GridRegion& region() const { return region_; }
    std::int64_t cell_count() const { return static_cast<std::int64_t>(values_.size()); }

    // support function; exact formula, even and positively homogeneous
    double support(const VecN& e) const;

    int degenerate_rank() const { return rank_; }
    bool degenerate() const { return rank_ < n_; }
    // orthonormal basis of span{f(x)} in the first rank() columns
    const Mat& span_basis() const { return span_; }

    // the point (1/|Q|) int f phi for the L^{p'}-normalized dual function
    // phi aligned with direction e; realizes support(e) exactly
    VecN support_point(const VecN& e) const;

    // Gram matrix (1/|Q|) int f f^T (p = 2 closed form backbone)
    Mat gram() const;

    const std::vector<VecN>& cell_values() const { return values_; }

  private:
    GridRegion region_;
    int n_ = 1;
    double p_ = 1.0;
    std::vector<VecN> values_;
    int rank_ = 0;
    Mat span_;  // n x n, first rank_ columns form the span basis
};

// Ellipsoid surrogate M with |Mu|-ball ⊆ body ⊆ sqrt(n)|Mu|-ball certified
// on probes. Degenerate bodies are handled in the span, never regularized.
struct BodySurrogate {
    int rank = 0;                       // = n when non-degenerate
    Mat span;                           // n x n, first rank columns used
    SpdMatrix shape = SpdMatrix::identity(1);  // rank x rank, span coords
    double bracket_lo = 1.0;            // min h(e)/|Me| over probes
    double bracket_up = 1.0;            // max h(e)/|Me| over probes
    int mvee_iterations = 0;

    // embed shape into R^n (zero on the orthogonal complement)
    Mat embedded(int n) const;
};

BodySurrogate ellipsoid_surrogate(const ConvexBodyAverage& body, int probes = 0);

// lower <= sup{<a,b> : a in A, b in B} <= upper. The lower bound comes from
// alternating maximization over the dual functions (each half-step is the
// closed-form L^p dual alignment); the upper bound from the two surrogate
// ellipsoids with their John inflations.
struct ProductBracket {
    double lower = 0.0;
    double upper = 0.0;
    double inflation = 1.0;  // the sqrt(rank_A * rank_B) factor used
};

ProductBracket body_product_bracket(const ConvexBodyAverage& a, const ConvexBodyAverage& b,
                                    int rounds = 20, int starts = 4);

// Normalization step of the sparse proof: invertible M with M f~ = f on the
// region and the John ellipsoid of <<f~>>_{p,region} equal to the unit ball
// (within probe tolerance). Degenerate bodies are normalized on the span.
struct JohnNormalization {
    int rank = 0;
    Mat span;             // n x n, first rank columns
    SpdMatrix map = SpdMatrix::identity(1);  // rank x rank: f = span * map * f_tilde
    GridFunction normalized;  // rank-dimensional components of f~
    bool degenerate = false;
};

JohnNormalization john_normalize(const GridFunction& f, const GridRegion& region, double p);
JohnNormalization john_normalize(const GridFunction& f, const DyadicCube& q, double p);

}  // namespace mwlab
