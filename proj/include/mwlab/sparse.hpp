#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwlab/convex_body.hpp"
#include "mwlab/grid.hpp"
#include "mwlab/operators.hpp"

namespace mwlab {

struct SparseCube {
    DyadicCube base;
    bool tripled = false;
    GridRegion region;  // clipped triple when tripled, else the cube itself
};

// Family of cubes with sparseness/Carleson certificates. The disjoint
// assignment maps each member to cell fractions (a cell is the resolution
// of functions, not of the underlying measure space, so fractional pieces
// are legitimate measurable subsets).
struct SparseFamily {
    GridGeometry geom;
    std::vector<SparseCube> cubes;
    double eta_claimed = 0.5;
    double carleson_constant = 0.0;
    bool has_assignment = false;
    std::vector<std::vector<std::pair<std::int64_t, double>>> assignment;
};

struct IterationRecord {
    DyadicCube q0;
    int depth = 0;
    double a1 = 0.0, a2 = 0.0;
    int doubling_rounds = 0;
    std::int64_t q0_cells = 0;
    std::int64_t e1_cells = 0, e2_cells = 0, omega_cells = 0;
    int cz_count = 0;
    std::int64_t sum_pj_cells = 0;
    bool omega_bound_ok = false;  // |Omega| <= 2^{-(d+2)} |Q0| at acceptance
    bool cz_half_ok = false;      // sum |P_j| <= |Q0| / 2
    bool cz_pointwise_ok = false;  // 2^{-(d+1)}|P| <= |P ∩ Omega| <= |P|/2, Omega ⊆ ∪P
    int rank_f = 0, rank_g = 0;
};

struct ConstructionTrace {
    std::string mode;
    std::vector<IterationRecord> iterations;
    bool resolution_exhausted = false;
};

enum class ThresholdMode { PaperThresholds, Adaptive };

struct ExceptionalSet {
    std::vector<std::uint8_t> mask;  // full-grid cell mask, set only inside q0
    std::int64_t e1_cells = 0;
    std::int64_t e2_cells = 0;
    std::int64_t omega_cells = 0;
};

// Omega = union over components of E_1^i and E_2^i inside q0, with f~ and
// g~ the John-normalized functions on 3q0 (masking to 3q0 is internal).
ExceptionalSet exceptional_set(const KernelOperator& t, const GridFunction& f_til,
                               const GridFunction& g_til, const DyadicCube& q0, double a1,
                               double a2, double q, double r, double s);

// Exponents of the domination principle: T weak (q,q), M_T on L^r x L^s.
struct SparseExponents {
    double q = 1.0;
    double r = 1.0;
    double s = 1.0;
    double nu() const { return 1.0 / (1.0 / r + 1.0 / s); }
};

struct LocalSparseResult {
    std::vector<DyadicCube> family;
    // E_Q = Q minus the CZ cubes of its iteration; pairwise disjoint whole
    // cells with |E_Q| >= |Q|/2
    std::vector<std::vector<std::int64_t>> retained_cells;
    ConstructionTrace trace;
};

LocalSparseResult build_local_sparse(const KernelOperator& t, const GridFunction& f,
                                     const GridFunction& g, const DyadicCube& q0,
                                     ThresholdMode mode, const SparseExponents& exps,
                                     const OperatorProfile* profile = nullptr,
                                     double mt_product_norm = 0.0);

struct GlobalSparseResult {
    SparseFamily family;  // the tripled members 3Q
    ConstructionTrace trace;
    std::vector<DyadicCube> partition;
    std::vector<DyadicCube> untripled;
};

GlobalSparseResult build_global_sparse(const KernelOperator& t, const GridFunction& f,
                                       const GridFunction& g, ThresholdMode mode,
                                       const SparseExponents& exps,
                                       const OperatorProfile* profile = nullptr,
                                       double mt_product_norm = 0.0);

struct CertifyResult {
    double carleson = 0.0;      // exact max packing ratio over members
    bool flow_feasible = false;  // eta-sparseness via max-flow
};

// Exact feasibility: cube demands eta |Q| against unit cell capacities,
// solved as an integer max-flow after clearing eta's denominator. On
// success the flow decomposition is stored as the disjoint assignment.
CertifyResult sparse_certify(SparseFamily& family, double eta);

struct DominationResult {
    double lhs = 0.0;        // int |<Tf, g>|
    double rhs_lower = 0.0;  // sum of body-product brackets times |Q|
    double rhs_upper = 0.0;
    double ratio_lower = 0.0;  // lhs / rhs_upper
    double ratio_upper = 0.0;  // lhs / rhs_lower
};

DominationResult domination_ratio(const KernelOperator& t, const GridFunction& f,
                                  const GridFunction& g, const SparseFamily& family, double r,
                                  double s);

}  // namespace mwlab
