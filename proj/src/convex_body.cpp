#include "mwlab/convex_body.hpp"

#include <algorithm>
#include <cmath>

#include "mwlab/rng.hpp"
#include "mwlab/summation.hpp"

namespace mwlab {

ConvexBodyAverage::ConvexBodyAverage(const GridFunction& f, const GridRegion& region, double p)
    : region_(region), n_(f.vdim()), p_(p) {
    if (p < 1.0) throw DomainError("ConvexBodyAverage: p must be >= 1");
    if (region.empty()) throw DomainError("ConvexBodyAverage: empty region");
    if (!f.all_finite()) throw InvalidInputError("ConvexBodyAverage: non-finite values");
    values_.reserve(static_cast<std::size_t>(region.cells(f.geometry().d)));
    for_each_cell(f.geometry(), region, [&](std::int64_t c) { values_.push_back(f.value(c)); });

    // span of the cell values from the Gram spectrum
    Mat g = gram();
    SymEigen e = jacobi_eigensym(g);
    const double lmax = std::max(e.values[n_ - 1], 0.0);
    rank_ = 0;
    span_ = Mat(n_);
    for (int k = n_ - 1; k >= 0; --k) {
        if (e.values[k] > 1e-12 * lmax && e.values[k] > 0.0) {
            for (int i = 0; i < n_; ++i) span_(i, rank_) = e.vectors(i, k);
            ++rank_;
        }
    }
}

ConvexBodyAverage::ConvexBodyAverage(const GridFunction& f, const DyadicCube& q, double p)
    : ConvexBodyAverage(f, cube_region(f.geometry(), q), p) {}

double ConvexBodyAverage::support(const VecN& e) const {
    std::vector<double> terms(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i)
        terms[i] = std::pow(std::abs(values_[i].dot(e)), p_);
    return std::pow(pairwise_sum(terms) / static_cast<double>(values_.size()), 1.0 / p_);
}

VecN ConvexBodyAverage::support_point(const VecN& e) const {
    const double m = static_cast<double>(values_.size());
    // phi = sign(g)|g|^{p-1}, normalized in the averaged L^{p'} norm
    std::vector<double> phi(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double gx = values_[i].dot(e);
        phi[i] = (gx >= 0.0 ? 1.0 : -1.0) * (p_ == 1.0 ? 1.0 : std::pow(std::abs(gx), p_ - 1.0));
    }
    if (p_ > 1.0) {
        const double pp = p_ / (p_ - 1.0);
        std::vector<double> pw(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) pw[i] = std::pow(std::abs(phi[i]), pp);
        const double nrm = std::pow(pairwise_sum(pw) / m, 1.0 / pp);
        if (nrm > 0.0)
            for (double& v : phi) v /= nrm;
    }
    VecN a = VecN::zero(n_);
    for (int j = 0; j < n_; ++j) {
        std::vector<double> terms(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) terms[i] = values_[i][j] * phi[i];
        a[j] = pairwise_sum(terms) / m;
    }
    return a;
}

Mat ConvexBodyAverage::gram() const {
    Mat g(n_);
    const double m = static_cast<double>(values_.size());
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) {
            std::vector<double> terms(values_.size());
            for (std::size_t k = 0; k < values_.size(); ++k) terms[k] = values_[k][i] * values_[k][j];
            const double v = pairwise_sum(terms) / m;
            g(i, j) = v;
            g(j, i) = v;
        }
    return g;
}

Mat BodySurrogate::embedded(int n) const {
    Mat out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < rank; ++a)
                for (int b = 0; b < rank; ++b) s += span(i, a) * shape(a, b) * span(j, b);
            out(i, j) = s;
        }
    return out;
}

BodySurrogate ellipsoid_surrogate(const ConvexBodyAverage& body, int probes) {
    const int n = body.vdim();
    BodySurrogate out;
    out.rank = body.degenerate_rank();
    out.span = body.span_basis();
    if (out.rank == 0) return out;  // zero body: degenerate signal, rank 0

    const int k = out.rank;
    if (probes <= 0) probes = 64 * n;
    const std::vector<VecN> dirs_k = probe_directions(k, probes);

    // probe in span coordinates; h_span(u) = h(U u)
    std::vector<VecN> pts;
    std::vector<double> hs(dirs_k.size());
    pts.reserve(dirs_k.size());
    for (std::size_t i = 0; i < dirs_k.size(); ++i) {
        VecN e = VecN::zero(n);
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int c = 0; c < k; ++c) s += out.span(r, c) * dirs_k[i][c];
            e[r] = s;
        }
        const double h = body.support(e);
        if (!(h > 0.0) || !std::isfinite(h))
            throw NumericError("ellipsoid_surrogate: vanishing support inside the span");
        hs[i] = h;
        pts.push_back(dirs_k[i].scaled(1.0 / h));
    }

    MveeResult mv = mvee_symmetric(pts, 1e-11, 100000, 6000);
    out.shape = mv.shape;
    out.mvee_iterations = mv.iterations;
    double lo = 1e300, up = 0.0;
    for (std::size_t i = 0; i < dirs_k.size(); ++i) {
        const double ratio = hs[i] / (out.shape * dirs_k[i]).norm();
        lo = std::min(lo, ratio);
        up = std::max(up, ratio);
    }
    out.bracket_lo = lo;
    out.bracket_up = up;
    return out;
}

namespace {

// sigma_max of the rank_a x rank_b matrix C(i,j) embedded in a Mat
double rect_op_norm(const Mat& c, int ra, int rb) {
    const int n = std::max(ra, rb);
    Mat padded(n);
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < rb; ++j) padded(i, j) = c(i, j);
    return op_norm(padded);
}

}  // namespace

ProductBracket body_product_bracket(const ConvexBodyAverage& a, const ConvexBodyAverage& b,
                                    int rounds, int starts) {
    if (a.vdim() != b.vdim()) throw InvalidInputError("body_product_bracket: dimension mismatch");
    const int n = a.vdim();
    ProductBracket out;
    if (a.degenerate_rank() == 0 || b.degenerate_rank() == 0) return out;  // {0} factor

    const BodySurrogate sa = ellipsoid_surrogate(a);
    const BodySurrogate sb = ellipsoid_surrogate(b);
    const int ka = sa.rank, kb = sb.rank;

    // C = M_A U_A^T U_B M_B in span coordinates
    Mat cross(std::max(ka, kb));
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            double s = 0.0;
            for (int r = 0; r < n; ++r) s += sa.span(r, i) * sb.span(r, j);
            cross(i, j) = s;
        }
    Mat core(std::max(ka, kb));
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            double s = 0.0;
            for (int x = 0; x < ka; ++x)
                for (int y = 0; y < kb; ++y) s += sa.shape(i, x) * cross(x, y) * sb.shape(y, j);
            core(i, j) = s;
        }
    const double sigma = rect_op_norm(core, ka, kb);
    out.inflation = std::sqrt(static_cast<double>(ka) * kb);
    out.upper = out.inflation * sigma;

    // alternating maximization; deterministic direction starts plus seeded
    // random ones, every iterate is a feasible pair so the max is a true
    // lower bound
    std::vector<VecN> start_dirs;
    for (int i = 0; i < n; ++i) start_dirs.push_back(VecN::axis(n, i));
    {
        // top singular direction of the surrogate product, mapped to R^n
        Mat ctc(kb);
        for (int i = 0; i < kb; ++i)
            for (int j = 0; j < kb; ++j) {
                double s = 0.0;
                for (int r = 0; r < ka; ++r) s += core(r, i) * core(r, j);
                ctc(i, j) = s;
            }
        SymEigen e = jacobi_eigensym(ctc);
        VecN v_span = VecN::zero(kb);
        for (int i = 0; i < kb; ++i) v_span[i] = e.vectors(i, kb - 1);
        // b-direction = U_B M_B v_span
        VecN mb = sb.shape * v_span;
        VecN v = VecN::zero(n);
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int c = 0; c < kb; ++c) s += sb.span(r, c) * mb[c];
            v[r] = s;
        }
        if (v.norm() > 1e-14) start_dirs.push_back(v.normalized());
    }
    Rng rng(0x9d2c5680u + static_cast<std::uint64_t>(a.cell_count()) * 31 + b.cell_count());
    for (int s = 0; s < starts; ++s) {
        VecN d = VecN::zero(n);
        for (int i = 0; i < n; ++i) d[i] = rng.gaussian();
        if (d.norm() > 1e-12) start_dirs.push_back(d.normalized());
    }

    double best = 0.0;
    for (const VecN& d : start_dirs) {
        VecN bp = b.support_point(d);
        if (bp.norm() < 1e-300) continue;
        for (int r = 0; r < rounds; ++r) {
            best = std::max(best, a.support(bp));
            VecN ap = a.support_point(bp);
            if (ap.norm() < 1e-300) break;
            best = std::max(best, b.support(ap));
            VecN nb = b.support_point(ap);
            if ((nb - bp).norm() <= 1e-14 * std::max(1.0, bp.norm())) {
                bp = nb;
                break;
            }
            bp = nb;
        }
    }
    out.lower = best;
    return out;
}

JohnNormalization john_normalize(const GridFunction& f, const GridRegion& region, double p) {
    ConvexBodyAverage body(f, region, p);
    const int n = f.vdim();
    JohnNormalization out;
    out.rank = body.degenerate_rank();
    out.span = body.span_basis();
    out.degenerate = out.rank < n;
    if (out.rank == 0) {
        out.normalized = GridFunction(f.geometry(), 1);  // zero function, rank 0
        return out;
    }

    BodySurrogate s = ellipsoid_surrogate(body);
    out.map = s.shape;  // f = U * M * f~
    SpdMatrix minv = frac_power(s.shape, -1.0);

    const int k = out.rank;
    GridFunction ftil(f.geometry(), k);
    for (std::int64_t c = 0; c < f.geometry().cell_count(); ++c) {
        const VecN v = f.value(c);
        VecN coords = VecN::zero(k);
        for (int a = 0; a < k; ++a) {
            double sum = 0.0;
            for (int r = 0; r < n; ++r) sum += out.span(r, a) * v[r];
            coords[a] = sum;
        }
        ftil.set_value(c, minv * coords);
    }
    out.normalized = std::move(ftil);
    return out;
}

JohnNormalization john_normalize(const GridFunction& f, const DyadicCube& q, double p) {
    return john_normalize(f, cube_region(f.geometry(), q), p);
}

}  // namespace mwlab
