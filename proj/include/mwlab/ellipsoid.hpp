#pragma once

#include <vector>

#include "mwlab/spd.hpp"

namespace mwlab {

// Minimum-volume ellipsoid centered at the origin enclosing {+-x_k}.
// Returns G (SPD) with |G x_k| <= 1 for all k and max_k |G x_k| = 1;
// for the exact optimum the ellipsoid {|Gx| <= 1} is the MVEE.
//
// Khachiyan barycentric ascent with Wolfe-Atwood away/drop steps; plain
// ascent converges like 1/t and cannot reach bracket tolerances within
// the iteration cap.
struct MveeResult {
    SpdMatrix shape;      // G above
    int iterations = 0;
    double gap = 0.0;     // achieved optimality gap max_k g_k / n - 1
};

// stall_window: iterations without relative improvement before giving up
// early; enclosure is restored by the final rescale either way.
MveeResult mvee_symmetric(const std::vector<VecN>& points, double tol = 1e-9,
                          int max_iterations = 100000, int stall_window = 4000);

// Deterministic unit probe directions: coordinate axes, +-1 diagonals,
// then a low-discrepancy spherical fill (uniform angles for n=2,
// Fibonacci sphere for n=3, Halton-Gaussian for n>=4).
std::vector<VecN> probe_directions(int n, int count);

}  // namespace mwlab
