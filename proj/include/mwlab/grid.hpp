#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mwlab/errors.hpp"
#include "mwlab/spd.hpp"

namespace mwlab {

// Finite dyadic grid over [0,1)^d, d in {1,2}, 2^L cells per side.
// Everything outside the domain is zero; no wrap-around.
struct GridGeometry {
    int d = 1;
    int L = 1;

    GridGeometry() = default;
    GridGeometry(int d_, int L_) : d(d_), L(L_) {
        if (d < 1 || d > 2) throw DomainError("GridGeometry: d must be 1 or 2");
        if (L < 1 || d * L > 24) throw DomainError("GridGeometry: need L >= 1 and d*L <= 24");
    }

    int side() const { return 1 << L; }
    std::int64_t cell_count() const { return std::int64_t{1} << (d * L); }
    double cell_measure() const { return std::ldexp(1.0, -d * L); }

    std::int64_t cell_index(int x, int y = 0) const {
        return d == 1 ? x : static_cast<std::int64_t>(y) * side() + x;
    }
    int cell_x(std::int64_t idx) const { return static_cast<int>(d == 1 ? idx : idx % side()); }
    int cell_y(std::int64_t idx) const { return static_cast<int>(d == 1 ? 0 : idx / side()); }

    // cell centers
    double coord(int i) const { return (i + 0.5) * std::ldexp(1.0, -L); }

    bool operator==(const GridGeometry& o) const { return d == o.d && L == o.L; }
};

// Dyadic cube: level in [0,L], integer corner coordinates in units of 2^-level.
struct DyadicCube {
    int level = 0;
    int x = 0;
    int y = 0;

    bool operator==(const DyadicCube& o) const {
        return level == o.level && x == o.x && y == o.y;
    }
};

// Half-open axis-aligned cell rectangle [x0,x1) x [y0,y1); the common
// currency for cubes, tripled cubes and clipped pieces.
struct GridRegion {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 1;

    std::int64_t cells(int d) const {
        std::int64_t w = x1 - x0;
        return d == 1 ? w : w * (y1 - y0);
    }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool contains(const GridRegion& o) const {
        return x0 <= o.x0 && o.x1 <= x1 && y0 <= o.y0 && o.y1 <= y1;
    }
};

GridRegion cube_region(const GridGeometry& g, const DyadicCube& q);
// concentric triple clipped to the domain
GridRegion tripled_region(const GridGeometry& g, const DyadicCube& q);
std::vector<DyadicCube> cube_children(const GridGeometry& g, const DyadicCube& q);
DyadicCube cell_cube(const GridGeometry& g, std::int64_t cell);  // level-L cube of a cell
bool cube_contains_cell(const GridGeometry& g, const DyadicCube& q, std::int64_t cell);
std::vector<DyadicCube> all_dyadic_cubes(const GridGeometry& g);
double cube_measure(const GridGeometry& g, const DyadicCube& q);

void for_each_cell(const GridGeometry& g, const GridRegion& r,
                   const std::function<void(std::int64_t)>& fn);

// R^n-valued function, piecewise constant on grid cells.
class GridFunction {
  public:
    GridFunction() = default;
    GridFunction(const GridGeometry& g, int n)
        : geom_(g), n_(n), values_(static_cast<std::size_t>(g.cell_count()) * n, 0.0) {
        if (n < 1 || n > kMaxDim) throw DomainError("GridFunction: n must be in [1,8]");
    }

    const GridGeometry& geometry() const { return geom_; }
    int vdim() const { return n_; }

    double& at(std::int64_t cell, int comp = 0) {
        return values_[static_cast<std::size_t>(cell) * n_ + comp];
    }
    double at(std::int64_t cell, int comp = 0) const {
        return values_[static_cast<std::size_t>(cell) * n_ + comp];
    }
    VecN value(std::int64_t cell) const {
        VecN v = VecN::zero(n_);
        for (int i = 0; i < n_; ++i) v[i] = at(cell, i);
        return v;
    }
    void set_value(std::int64_t cell, const VecN& v) {
        for (int i = 0; i < n_; ++i) at(cell, i) = v[i];
    }

    const std::vector<double>& raw() const { return values_; }
    std::vector<double>& raw() { return values_; }

    GridFunction component(int j) const;
    // each cell splits into 2^d children with the same value
    GridFunction refined() const;

    bool all_finite() const;
    double min_value() const;  // n = 1 only

  private:
    GridGeometry geom_;
    int n_ = 1;
    std::vector<double> values_;
};

using ScalarGridFunction = GridFunction;

void require_scalar(const GridFunction& f, const char* who);
void require_weight(const GridFunction& w, const char* who);  // scalar, strictly positive

// ((1/|R|) sum_{cells in R} |f|^p cellmeasure)^{1/p}; |f| is the Euclidean
// norm of the cell value.
double p_average(const GridFunction& f, const GridRegion& r, double p);
double p_average(const GridFunction& f, const DyadicCube& q, double p);

enum class MaximalMode { Dyadic, AllCubes };

// Mw(x) = sup over cubes containing x of the average of w. AllCubes ranges
// over every axis-parallel square with grid-aligned corner and side,
// fully inside the domain.
ScalarGridFunction maximal_function(const ScalarGridFunction& w, MaximalMode mode);

// Fujii constant sup_Q (1/w(Q)) int_Q M(chi_Q w). The paper never fixes
// which maximal function enters the constant; both modes are exposed and
// AllCubes is the default.
double fujii_ainfty(const ScalarGridFunction& w, MaximalMode mode = MaximalMode::AllCubes);

// sup_Q <w>_Q <w^{-1/(p-1)}>_Q^{p-1}
double scalar_ap(const ScalarGridFunction& w, double p);

// Maximal dyadic sub-cubes of q0 on which the average of phi exceeds
// height. If avg_{q0} phi > height, returns {q0}.
std::vector<DyadicCube> cz_decompose(const ScalarGridFunction& phi, const DyadicCube& q0,
                                     double height);

// Exact integer variant for indicator masses, used by the stopping time:
// selects maximal sub-cubes with count(mask in P) * 2^{d+1} > cells(P).
std::vector<DyadicCube> cz_decompose_indicator(const GridGeometry& g,
                                               const std::vector<std::uint8_t>& mask,
                                               const DyadicCube& q0);

// sup_Q <w^r>_Q^{1/r} / <w>_Q
double reverse_holder_ratio(const ScalarGridFunction& w, double r);

// Per-level cube sums of a scalar function (level 0..L), cache for the
// constants above. sums[l][cube_index] is the plain sum of cell values.
std::vector<std::vector<double>> level_sums(const ScalarGridFunction& w);

}  // namespace mwlab
