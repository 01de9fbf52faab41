#include "mwlab/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mwlab/rng.hpp"
#include "mwlab/summation.hpp"

namespace mwlab {

MatrixWeight::MatrixWeight(const GridGeometry& g, int n) : geom_(g), n_(n) {
    if (n < 1 || n > kMaxDim) throw DomainError("MatrixWeight: n must be in [1,8]");
    cells_.assign(static_cast<std::size_t>(g.cell_count()), Mat(n));
}

MatrixWeight MatrixWeight::scalar_embedded(const ScalarGridFunction& w, int n) {
    require_weight(w, "MatrixWeight::scalar_embedded");
    MatrixWeight out(w.geometry(), n);
    for (std::int64_t c = 0; c < w.geometry().cell_count(); ++c)
        out.set_cell(c, Mat::identity(n).scaled(w.at(c)));
    out.kind = "scalar-embedded";
    out.finalize();
    return out;
}

void MatrixWeight::set_cell(std::int64_t cell, const Mat& m) {
    if (m.dim() != n_) throw InvalidInputError("MatrixWeight::set_cell: dimension mismatch");
    cells_[cell] = m;
    finalized_ = false;
}

void MatrixWeight::finalize() {
    eigs_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        // SpdMatrix::from performs the full invariant check per cell
        SpdMatrix s = SpdMatrix::from(cells_[c]);
        cells_[c] = s.mat();
        eigs_[c] = s.eigen();
    }
    cache_ = std::make_shared<PowerCache>();
    finalized_ = true;
}

const std::vector<Mat>& MatrixWeight::power_field(double alpha) const {
    if (!finalized_) throw InvalidInputError("MatrixWeight: not finalized");
    const std::uint64_t key = std::bit_cast<std::uint64_t>(alpha);
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->map.find(key);
    if (it != cache_->map.end()) return *it->second;

    auto field = std::make_shared<std::vector<Mat>>(cells_.size(), Mat(n_));
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const SymEigen& e = eigs_[c];
        Mat& r = (*field)[c];
        for (int i = 0; i < n_; ++i)
            for (int j = i; j < n_; ++j) {
                double s = 0.0;
                for (int k = 0; k < n_; ++k)
                    s += e.vectors(i, k) * std::pow(e.values[k], alpha) * e.vectors(j, k);
                r(i, j) = s;
                r(j, i) = s;
            }
    }
    auto [pos, inserted] = cache_->map.emplace(key, std::move(field));
    (void)inserted;
    return *pos->second;
}

void MatrixWeight::prepare_powers(const std::vector<double>& alphas) const {
    for (double a : alphas) power_field(a);
}

ScalarGridFunction MatrixWeight::direction_weight(double p, const VecN& e) const {
    ScalarGridFunction w(geom_, 1);
    const auto& field = power_field(1.0 / p);
    for (std::int64_t c = 0; c < geom_.cell_count(); ++c)
        w.at(c) = std::pow((field[c] * e).norm(), p);
    return w;
}

namespace {

// rho(e) = ((1/#cells) sum |P(x)e|^t)^{1/t} over a region
double region_norm(const std::vector<Mat>& field, const GridGeometry& g, const GridRegion& r,
                   double t, const VecN& e) {
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(r.cells(g.d)));
    for_each_cell(g, r, [&](std::int64_t c) { terms.push_back(std::pow((field[c] * e).norm(), t)); });
    return std::pow(pairwise_sum(terms) / static_cast<double>(terms.size()), 1.0 / t);
}

}  // namespace

ReducingMatrix reducing_matrix_general(const MatrixWeight& w, double alpha, double t,
                                       const GridRegion& r, int probes) {
    const int n = w.vdim();
    if (probes <= 0) probes = 64 * n;
    const auto& field = w.power_field(alpha);
    const GridGeometry& g = w.geometry();

    ReducingMatrix out;
    out.region = r;
    if (n == 1) {
        const double rho = region_norm(field, g, r, t, VecN::axis(1, 0));
        Mat m(1);
        m(0, 0) = rho;
        out.matrix = SpdMatrix::from(m);
        out.bracket_lo = out.bracket_up = 1.0;
        return out;
    }

    const std::vector<VecN> dirs = probe_directions(n, probes);
    std::vector<VecN> pts;
    pts.reserve(dirs.size());
    std::vector<double> rhos(dirs.size());
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        rhos[k] = region_norm(field, g, r, t, dirs[k]);
        if (!(rhos[k] > 0.0) || !std::isfinite(rhos[k]))
            throw NumericError("reducing_matrix: degenerate norm along a probe direction");
        pts.push_back(dirs[k].scaled(1.0 / rhos[k]));
    }

    MveeResult mv = mvee_symmetric(pts, 1e-9, 100000, 1500);
    out.matrix = mv.shape;
    out.mvee_iterations = mv.iterations;
    double lo = 1e300, up = 0.0;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        const double ratio = rhos[k] / (out.matrix * dirs[k]).norm();
        lo = std::min(lo, ratio);
        up = std::max(up, ratio);
    }
    out.bracket_lo = lo;
    out.bracket_up = up;
    return out;
}

ReducingMatrix reducing_matrix(const MatrixWeight& w, double p, const DyadicCube& q,
                               ReducingSide side, int probes) {
    if (p < 1.0) throw DomainError("reducing_matrix: p must be >= 1");
    const GridRegion r = cube_region(w.geometry(), q);
    ReducingMatrix out;
    if (side == ReducingSide::Direct) {
        out = reducing_matrix_general(w, 1.0 / p, p, r, probes);
    } else {
        if (p <= 1.0) throw DomainError("reducing_matrix: dual side requires p > 1");
        const double pp = p / (p - 1.0);
        out = reducing_matrix_general(w, -1.0 / pp, pp, r, probes);
    }
    out.base = q;
    out.p = p;
    out.side = side;
    return out;
}

MatrixApResult matrix_ap(const MatrixWeight& w, double p) {
    if (p <= 1.0) throw DomainError("matrix_ap: p must be > 1");
    const GridGeometry& g = w.geometry();
    const double pp = p / (p - 1.0);
    const auto& pos = w.power_field(1.0 / p);
    const auto& neg = w.power_field(-1.0 / p);

    MatrixApResult res;
    res.value = 0.0;
    for (const DyadicCube& q : all_dyadic_cubes(g)) {
        const GridRegion r = cube_region(g, q);
        std::vector<std::int64_t> cells;
        cells.reserve(static_cast<std::size_t>(r.cells(g.d)));
        for_each_cell(g, r, [&](std::int64_t c) { cells.push_back(c); });

        std::vector<double> outer(cells.size());
        std::vector<double> inner(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t j = 0; j < cells.size(); ++j)
                inner[j] = std::pow(op_norm(pos[cells[i]] * neg[cells[j]]), pp);
            outer[i] = std::pow(pairwise_sum(inner) / static_cast<double>(cells.size()), p / pp);
        }
        const double v = pairwise_sum(outer) / static_cast<double>(cells.size());
        if (v > res.value) {
            res.value = v;
            res.worst_cube = q;
        }
    }

    res.proxy = 0.0;
    for (const DyadicCube& q : all_dyadic_cubes(g)) {
        const ReducingMatrix direct = reducing_matrix(w, p, q, ReducingSide::Direct);
        const ReducingMatrix dual = reducing_matrix(w, p, q, ReducingSide::Dual);
        res.proxy = std::max(res.proxy, std::pow(op_norm(direct.matrix.mat() * dual.matrix.mat()), p));
    }
    res.ratio = res.proxy / res.value;
    return res;
}

double matrix_a1(const MatrixWeight& w) {
    const GridGeometry& g = w.geometry();
    const auto& inv = w.power_field(-1.0);
    double best = 0.0;
    for (const DyadicCube& q : all_dyadic_cubes(g)) {
        const GridRegion r = cube_region(g, q);
        std::vector<std::int64_t> cells;
        cells.reserve(static_cast<std::size_t>(r.cells(g.d)));
        for_each_cell(g, r, [&](std::int64_t c) { cells.push_back(c); });

        double worst_y = 0.0;
        std::vector<double> terms(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                terms[i] = op_norm(w.cell(cells[i]) * inv[cells[j]]);
            worst_y = std::max(worst_y, pairwise_sum(terms) / static_cast<double>(cells.size()));
        }
        best = std::max(best, worst_y);
    }
    return best;
}

double ainfty_sc(const MatrixWeight& w, double p, int n_dirs, MaximalMode mode) {
    if (p < 1.0) throw DomainError("ainfty_sc: p must be >= 1");
    if (n_dirs < 2 * w.vdim()) throw DomainError("ainfty_sc: n_dirs must be >= 2n");
    const std::vector<VecN> dirs = probe_directions(w.vdim(), n_dirs);
    double best = 0.0;
    for (const VecN& e : dirs) best = std::max(best, fujii_ainfty(w.direction_weight(p, e), mode));
    return best;
}

double matrix_rh_check(const MatrixWeight& w, double p, const SpdMatrix& a, double r) {
    if (r <= 1.0) throw DomainError("matrix_rh_check: r must be > 1");
    if (a.dim() != w.vdim()) throw InvalidInputError("matrix_rh_check: dimension mismatch");
    const GridGeometry& g = w.geometry();
    const auto& field = w.power_field(1.0 / p);
    ScalarGridFunction s(g, 1);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) s.at(c) = op_norm(field[c] * a.mat());
    return reverse_holder_ratio(s, r);
}

WeightKind weight_kind_from_string(const std::string& s) {
    if (s == "scalar-embedded") return WeightKind::ScalarEmbedded;
    if (s == "rotating-power") return WeightKind::RotatingPower;
    if (s == "random-log-lipschitz") return WeightKind::RandomLogLipschitz;
    if (s == "block-diagonal") return WeightKind::BlockDiagonal;
    throw ConfigError("unknown weight kind: " + s);
}

std::string weight_kind_to_string(WeightKind k) {
    switch (k) {
        case WeightKind::ScalarEmbedded: return "scalar-embedded";
        case WeightKind::RotatingPower: return "rotating-power";
        case WeightKind::RandomLogLipschitz: return "random-log-lipschitz";
        case WeightKind::BlockDiagonal: return "block-diagonal";
    }
    return "?";
}

namespace {

double param_or(const std::map<std::string, double>& p, const std::string& k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
}

// scalar log-random profile built from a few seeded Fourier modes; smooth
// enough to keep per-cell condition moderate
ScalarGridFunction random_log_scalar(Rng& rng, const GridGeometry& g, double amp) {
    const int modes = 4;
    std::vector<double> ax(modes), ay(modes), ph(modes), cc(modes);
    for (int k = 0; k < modes; ++k) {
        ax[k] = 1.0 + rng.below(4);
        ay[k] = g.d == 2 ? 1.0 + rng.below(4) : 0.0;
        ph[k] = rng.uniform(0.0, 6.283185307179586);
        cc[k] = amp / ((k + 1.0) * (k + 1.0)) * rng.uniform(0.5, 1.0);
    }
    ScalarGridFunction w(g, 1);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const double x = g.coord(g.cell_x(c));
        const double y = g.d == 2 ? g.coord(g.cell_y(c)) : 0.0;
        double s = 0.0;
        for (int k = 0; k < modes; ++k)
            s += cc[k] * std::sin(6.283185307179586 * (ax[k] * x + ay[k] * y) + ph[k]);
        w.at(c) = std::exp(s);
    }
    return w;
}

Mat random_symmetric(Rng& rng, int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = rng.gaussian();
            m(i, j) = v;
            m(j, i) = v;
        }
    double nrm = op_norm(m);
    if (nrm < 1e-12) nrm = 1.0;
    return m.scaled(1.0 / nrm);
}

Mat sym_exp(const Mat& s) {
    SymEigen e = jacobi_eigensym(s);
    const int n = s.dim();
    Mat r(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = 0.0;
            for (int k = 0; k < n; ++k)
                v += e.vectors(i, k) * std::exp(e.values[k]) * e.vectors(j, k);
            r(i, j) = v;
            r(j, i) = v;
        }
    return r;
}

}  // namespace

MatrixWeight generate_weight(WeightKind kind, const std::map<std::string, double>& params,
                             std::uint64_t seed) {
    const GridGeometry g(static_cast<int>(param_or(params, "d", 1)),
                         static_cast<int>(param_or(params, "L", 4)));
    const int n = static_cast<int>(param_or(params, "n", 2));
    const double a = param_or(params, "a", 0.0);
    const double amp = param_or(params, "amp", 0.0);
    const double freq = param_or(params, "freq", 1.0);
    const double x0 = param_or(params, "x0", 0.31);
    const double y0 = param_or(params, "y0", 0.47);
    if (a <= -g.d || a > 8.0) throw DomainError("generate_weight: power exponent out of range");

    Rng rng(seed ^ 0x5bd1e995u);
    MatrixWeight w(g, n);

    const auto dist = [&](std::int64_t c) {
        const double dx = g.coord(g.cell_x(c)) - x0;
        const double dy = g.d == 2 ? g.coord(g.cell_y(c)) - y0 : 0.0;
        return std::sqrt(dx * dx + dy * dy);
    };

    switch (kind) {
        case WeightKind::ScalarEmbedded: {
            ScalarGridFunction base = random_log_scalar(rng, g, amp);
            for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                const double v = base.at(c) * std::pow(dist(c), a);
                w.set_cell(c, Mat::identity(n).scaled(v));
            }
            break;
        }
        case WeightKind::RotatingPower: {
            if (n < 2) throw DomainError("generate_weight: rotating-power needs n >= 2");
            for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                const double x = g.coord(g.cell_x(c));
                const double y = g.d == 2 ? g.coord(g.cell_y(c)) : 0.0;
                const double theta = 6.283185307179586 * freq * (g.d == 1 ? x : 0.5 * (x + y));
                std::vector<double> diag(n, 1.0);
                diag[0] = std::pow(dist(c), a);
                Mat m = Mat::diag(diag);
                Mat rot = Mat::identity(n);
                rot(0, 0) = std::cos(theta);
                rot(0, 1) = -std::sin(theta);
                rot(1, 0) = std::sin(theta);
                rot(1, 1) = std::cos(theta);
                w.set_cell(c, rot * m * rot.transpose());
            }
            break;
        }
        case WeightKind::RandomLogLipschitz: {
            const int modes = 4;
            std::vector<Mat> gmat;
            std::vector<double> ax(modes), ay(modes), ph(modes), cc(modes);
            for (int k = 0; k < modes; ++k) {
                gmat.push_back(random_symmetric(rng, n));
                ax[k] = 1.0 + rng.below(3);
                ay[k] = g.d == 2 ? 1.0 + rng.below(3) : 0.0;
                ph[k] = rng.uniform(0.0, 6.283185307179586);
                cc[k] = (amp > 0.0 ? amp : 1.0) / ((k + 1.0) * (k + 1.0));
            }
            for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                const double x = g.coord(g.cell_x(c));
                const double y = g.d == 2 ? g.coord(g.cell_y(c)) : 0.0;
                Mat s(n);
                for (int k = 0; k < modes; ++k) {
                    const double f =
                        cc[k] * std::sin(6.283185307179586 * (ax[k] * x + ay[k] * y) + ph[k]);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) s(i, j) += f * gmat[k](i, j);
                }
                w.set_cell(c, sym_exp(s));
            }
            break;
        }
        case WeightKind::BlockDiagonal: {
            std::vector<ScalarGridFunction> diag;
            for (int i = 0; i < n; ++i)
                diag.push_back(random_log_scalar(rng, g, amp > 0.0 ? amp : 1.0));
            for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                Mat m(n);
                for (int i = 0; i < n; ++i) m(i, i) = diag[i].at(c) * (i == 0 ? std::pow(dist(c), a) : 1.0);
                w.set_cell(c, m);
            }
            break;
        }
    }

    try {
        w.finalize();
    } catch (const IllConditionedError&) {
        throw DomainError("generate_weight: parameters yield condition above 1e8");
    }
    w.kind = weight_kind_to_string(kind);
    w.params = params;
    w.seed = seed;
    return w;
}

}  // namespace mwlab
