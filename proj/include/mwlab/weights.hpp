#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mwlab/ellipsoid.hpp"
#include "mwlab/grid.hpp"
#include "mwlab/spd.hpp"

namespace mwlab {

// Matrix weight W(x): one SPD matrix per grid cell. Per-cell spectral
// decompositions are computed once at finalize(); fractional power fields
// W^alpha are assembled from them and cached per exponent.
class MatrixWeight {
  public:
    MatrixWeight() = default;
    MatrixWeight(const GridGeometry& g, int n);

    static MatrixWeight scalar_embedded(const ScalarGridFunction& w, int n);

    void set_cell(std::int64_t cell, const Mat& m);
    void finalize();  // validates symmetry, positivity, condition <= 1e8
    bool finalized() const { return finalized_; }

    const GridGeometry& geometry() const { return geom_; }
    int vdim() const { return n_; }

    const Mat& cell(std::int64_t c) const { return cells_[c]; }
    const std::vector<Mat>& power_field(double alpha) const;
    void prepare_powers(const std::vector<double>& alphas) const;

    VecN apply_power(double alpha, std::int64_t cell, const VecN& e) const {
        return power_field(alpha)[cell] * e;
    }

    // |W^{1/p}(x) e|^p as a scalar grid function of x
    ScalarGridFunction direction_weight(double p, const VecN& e) const;

    // metadata recorded by generate_weight and serialized into .mwt
    std::string kind = "raw";
    std::map<std::string, double> params;
    std::uint64_t seed = 0;

  private:
    struct PowerCache {
        std::mutex mutex;
        std::map<std::uint64_t, std::shared_ptr<const std::vector<Mat>>> map;
    };

    GridGeometry geom_;
    int n_ = 1;
    std::vector<Mat> cells_;
    std::vector<SymEigen> eigs_;
    bool finalized_ = false;

    // shared between value copies; replaced wholesale by finalize()
    mutable std::shared_ptr<PowerCache> cache_ = std::make_shared<PowerCache>();
};

enum class ReducingSide { Direct, Dual };

// SPD representative of the norm rho(e) = ((1/|Q|) int_Q |P(x)e|^t)^{1/t},
// built as the minimum-volume enclosing ellipsoid of probe support points
// of the unit ball of rho. The bracket certifies
//   bracket_lo <= rho(e)/|We| <= bracket_up
// over the probe directions; John's theorem puts [1, sqrt(n)] around it.
struct ReducingMatrix {
    DyadicCube base;
    GridRegion region;
    double p = 2.0;
    ReducingSide side = ReducingSide::Direct;
    SpdMatrix matrix = SpdMatrix::identity(1);
    double bracket_lo = 1.0;
    double bracket_up = 1.0;
    int mvee_iterations = 0;
};

// Direct side: rho from W^{1/p} with exponent p.
// Dual side (p>1): rho from W^{-1/p'} with exponent p'.
ReducingMatrix reducing_matrix(const MatrixWeight& w, double p, const DyadicCube& q,
                               ReducingSide side, int probes = 0);

// Generalized engine used by bump conditions: power alpha, exponent t.
ReducingMatrix reducing_matrix_general(const MatrixWeight& w, double alpha, double t,
                                       const GridRegion& r, int probes = 0);

struct MatrixApResult {
    double value = 1.0;        // sup_Q of the mixed double average
    double proxy = 1.0;        // sup_Q |W_{p,Q} W_{p',Q}|_op^p
    double ratio = 1.0;        // proxy / value
    DyadicCube worst_cube;
};

MatrixApResult matrix_ap(const MatrixWeight& w, double p);

// sup_Q ess-sup_{y in Q} (1/|Q|) sum_x |W(x) W^{-1}(y)|_op. The paper's
// display writes ess-inf, which contradicts both the scalar A_1 constant
// and the Frazier-Roudenko definition; ess-sup is implemented.
double matrix_a1(const MatrixWeight& w);

// max over sampled unit directions of the Fujii constant of |W^{1/p}e|^p;
// a certified lower bound of the supremum over all directions.
double ainfty_sc(const MatrixWeight& w, double p, int n_dirs,
                 MaximalMode mode = MaximalMode::AllCubes);

// sup_Q <|W^{1/p}A|_op^r>_Q^{1/r} / <|W^{1/p}A|_op>_Q
double matrix_rh_check(const MatrixWeight& w, double p, const SpdMatrix& a, double r);

enum class WeightKind { ScalarEmbedded, RotatingPower, RandomLogLipschitz, BlockDiagonal };

WeightKind weight_kind_from_string(const std::string& s);
std::string weight_kind_to_string(WeightKind k);

// Deterministic weight from seed. params: d, L, n plus per-kind knobs
// (power exponent "a", log amplitude "amp", rotation frequency "freq").
MatrixWeight generate_weight(WeightKind kind, const std::map<std::string, double>& params,
                             std::uint64_t seed);

}  // namespace mwlab
