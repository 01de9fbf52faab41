#include "mwlab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "mwlab/summation.hpp"

namespace mwlab {

namespace {

// the T- and M_{T,Q0}-fields of the exceptional sets do not depend on the
// thresholds; computing them once makes adaptive doubling a re-threshold
struct ExceptionalFields {
    std::vector<ScalarGridFunction> tfi;  // |T(f~_i chi_3Q0)| candidates, valid on Q0
    std::vector<ScalarGridFunction> mt;   // M_{T,Q0}(f~_i, g~_i), valid on Q0
    std::vector<double> favg_q, favg_r, gavg_s;
    int kf = 0, kg = 0;
};

ExceptionalFields exceptional_fields(const KernelOperator& t, const GridFunction& f_til,
                                     const GridFunction& g_til, const DyadicCube& q0, double q,
                                     double r, double s) {
    const GridGeometry& g = t.geometry();
    const GridRegion q0r = cube_region(g, q0);
    const GridRegion q3 = tripled_region(g, q0);

    ExceptionalFields out;
    out.kf = f_til.vdim();
    out.kg = g_til.vdim();
    for (int i = 0; i < out.kf; ++i) {
        GridFunction fi = f_til.component(i);
        out.favg_q.push_back(p_average(fi, q3, q));
        out.favg_r.push_back(p_average(fi, q3, r));
        if (out.favg_q.back() > 0.0)
            out.tfi.push_back(apply_masked(t, fi, q3, &q0r));
        else
            out.tfi.push_back(ScalarGridFunction(g, 1));
        if (i < out.kg) {
            GridFunction gi = g_til.component(i);
            out.gavg_s.push_back(p_average(gi, q3, s));
            if (out.favg_r.back() > 0.0 && out.gavg_s.back() > 0.0)
                out.mt.push_back(bilinear_sharp_maximal_local(t, fi, gi, q0));
            else
                out.mt.push_back(ScalarGridFunction(g, 1));
        }
    }
    return out;
}

ExceptionalSet threshold_exceptional(const ExceptionalFields& fields, const GridGeometry& g,
                                     const DyadicCube& q0, double a1, double a2) {
    const GridRegion q0r = cube_region(g, q0);
    ExceptionalSet out;
    out.mask.assign(static_cast<std::size_t>(g.cell_count()), 0);
    std::vector<std::uint8_t> e1(out.mask.size(), 0), e2(out.mask.size(), 0);
    for (int i = 0; i < fields.kf; ++i) {
        if (fields.favg_q[i] > 0.0) {
            const double cut = a1 * fields.favg_q[i];
            for_each_cell(g, q0r, [&](std::int64_t c) {
                if (std::abs(fields.tfi[i].at(c)) > cut) e1[c] = 1;
            });
        }
        if (i < fields.kg && fields.favg_r[i] > 0.0 && fields.gavg_s[i] > 0.0) {
            const double cut = a2 * fields.favg_r[i] * fields.gavg_s[i];
            for_each_cell(g, q0r, [&](std::int64_t c) {
                if (fields.mt[i].at(c) > cut) e2[c] = 1;
            });
        }
    }
    for_each_cell(g, q0r, [&](std::int64_t c) {
        if (e1[c]) ++out.e1_cells;
        if (e2[c]) ++out.e2_cells;
        if (e1[c] || e2[c]) {
            out.mask[c] = 1;
            ++out.omega_cells;
        }
    });
    return out;
}

}  // namespace

ExceptionalSet exceptional_set(const KernelOperator& t, const GridFunction& f_til,
                               const GridFunction& g_til, const DyadicCube& q0, double a1,
                               double a2, double q, double r, double s) {
    ExceptionalFields fields = exceptional_fields(t, f_til, g_til, q0, q, r, s);
    return threshold_exceptional(fields, t.geometry(), q0, a1, a2);
}

namespace {

bool function_vanishes_on(const GridFunction& f, const GridRegion& r) {
    bool zero = true;
    for_each_cell(f.geometry(), r, [&](std::int64_t c) {
        for (int i = 0; i < f.vdim(); ++i)
            if (f.at(c, i) != 0.0) zero = false;
    });
    return zero;
}

struct LocalBuilder {
    const KernelOperator& t;
    const GridFunction& f;
    const GridFunction& g;
    ThresholdMode mode;
    SparseExponents exps;
    double a1_paper = 0.0;
    double a2_paper = 0.0;
    LocalSparseResult result;

    void recurse(const DyadicCube& q0, int depth) {
        const GridGeometry& geom = t.geometry();
        const GridRegion q3 = tripled_region(geom, q0);
        const GridRegion q0r = cube_region(geom, q0);
        if (function_vanishes_on(f, q3)) return;  // nothing to dominate
        if (depth > geom.L + 2) {
            result.trace.resolution_exhausted = true;  // cells are atoms
            return;
        }

        JohnNormalization jf = john_normalize(f, q3, exps.r);
        JohnNormalization jg = john_normalize(g, q3, exps.s);

        IterationRecord rec;
        rec.q0 = q0;
        rec.depth = depth;
        rec.q0_cells = q0r.cells(geom.d);
        rec.rank_f = jf.rank;
        rec.rank_g = jg.rank;

        double a1 = 1.0, a2 = 1.0;
        if (mode == ThresholdMode::PaperThresholds) {
            a1 = a1_paper;
            a2 = a2_paper;
        }

        // rank-0 g~ is the zero scalar function; the E_2 sets vanish
        ExceptionalFields fields =
            exceptional_fields(t, jf.normalized, jg.normalized, q0, exps.q, exps.r, exps.s);
        ExceptionalSet ex;
        const std::int64_t limit = rec.q0_cells;  // compare |Omega| * 2^{d+2} <= |Q0|
        int rounds = 0;
        while (true) {
            ex = threshold_exceptional(fields, geom, q0, a1, a2);
            if (ex.omega_cells * (std::int64_t{1} << (geom.d + 2)) <= limit) break;
            a1 *= 2.0;
            a2 *= 2.0;
            ++rounds;
            if (rounds > 200) throw NumericError("build_local_sparse: thresholds diverged");
        }
        rec.a1 = a1;
        rec.a2 = a2;
        rec.doubling_rounds = rounds;
        rec.e1_cells = ex.e1_cells;
        rec.e2_cells = ex.e2_cells;
        rec.omega_cells = ex.omega_cells;
        rec.omega_bound_ok = ex.omega_cells * (std::int64_t{1} << (geom.d + 2)) <= limit;

        std::vector<DyadicCube> pjs = cz_decompose_indicator(geom, ex.mask, q0);
        rec.cz_count = static_cast<int>(pjs.size());

        // exact stopping-time guarantees, integer arithmetic throughout
        std::int64_t sum_pj = 0;
        std::int64_t omega_covered = 0;
        bool pointwise_ok = true;
        std::vector<std::uint8_t> in_pj(ex.mask.size(), 0);
        for (const DyadicCube& p : pjs) {
            const GridRegion pr = cube_region(geom, p);
            const std::int64_t cells = pr.cells(geom.d);
            sum_pj += cells;
            std::int64_t hit = 0;
            for_each_cell(geom, pr, [&](std::int64_t c) {
                in_pj[c] = 1;
                if (ex.mask[c]) ++hit;
            });
            omega_covered += hit;
            if (hit * (std::int64_t{1} << (geom.d + 1)) < cells || 2 * hit > cells)
                pointwise_ok = false;
        }
        rec.sum_pj_cells = sum_pj;
        rec.cz_half_ok = 2 * sum_pj <= rec.q0_cells;
        rec.cz_pointwise_ok = pointwise_ok && omega_covered == ex.omega_cells;
        result.trace.iterations.push_back(rec);

        // the iterate contributes Q0 with E_Q = Q0 minus the CZ cubes
        std::vector<std::int64_t> retained;
        for_each_cell(geom, q0r, [&](std::int64_t c) {
            if (!in_pj[c]) retained.push_back(c);
        });
        result.family.push_back(q0);
        result.retained_cells.push_back(std::move(retained));

        for (const DyadicCube& p : pjs) recurse(p, depth + 1);
    }
};

}  // namespace

LocalSparseResult build_local_sparse(const KernelOperator& t, const GridFunction& f,
                                     const GridFunction& g, const DyadicCube& q0,
                                     ThresholdMode mode, const SparseExponents& exps,
                                     const OperatorProfile* profile, double mt_product_norm) {
    if (!(f.geometry() == t.geometry()) || !(g.geometry() == t.geometry()))
        throw InvalidInputError("build_local_sparse: geometry mismatch");
    LocalBuilder builder{t, f, g, mode, exps, 0.0, 0.0, {}};
    builder.result.trace.mode =
        mode == ThresholdMode::PaperThresholds ? "paper-thresholds" : "adaptive";
    if (mode == ThresholdMode::PaperThresholds) {
        if (!profile) throw InvalidInputError("paper-thresholds mode needs an OperatorProfile");
        const int d = t.geometry().d;
        const int n = f.vdim();
        const double q = exps.q;
        const double nu = exps.nu();
        builder.a1_paper = profile->weak_qq * std::pow(3.0, d / q) *
                           std::pow(2.0, (d + 3.0) / q) * std::pow(n, 1.0 / q);
        const double mt = mt_product_norm > 0.0 ? mt_product_norm : profile->mt_product;
        builder.a2_paper =
            mt * std::pow(3.0, d / nu) * std::pow(2.0, (d + 3.0) / nu) * std::pow(n, 1.0 / nu);
        if (builder.a2_paper <= 0.0) builder.a2_paper = builder.a1_paper;
    }
    builder.recurse(q0, 0);
    return std::move(builder.result);
}

namespace {

DyadicCube smallest_cube_containing_support(const GridGeometry& g, const GridFunction& f) {
    int x0 = g.side(), x1 = -1, y0 = g.side(), y1 = -1;
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        bool nz = false;
        for (int i = 0; i < f.vdim(); ++i) nz = nz || f.at(c, i) != 0.0;
        if (!nz) continue;
        x0 = std::min(x0, g.cell_x(c));
        x1 = std::max(x1, g.cell_x(c));
        y0 = std::min(y0, g.cell_y(c));
        y1 = std::max(y1, g.cell_y(c));
    }
    DyadicCube q{0, 0, 0};
    if (x1 < 0) return q;  // no support; caller handles
    while (q.level < g.L) {
        bool descended = false;
        for (const DyadicCube& c : cube_children(g, q)) {
            const GridRegion r = cube_region(g, c);
            if (r.x0 <= x0 && x1 < r.x1 && (g.d == 1 || (r.y0 <= y0 && y1 < r.y1))) {
                q = c;
                descended = true;
                break;
            }
        }
        if (!descended) break;
    }
    return q;
}

bool region_contains(const GridRegion& outer, const GridRegion& inner) {
    return outer.contains(inner);
}

void collect_partition(const GridGeometry& g, const DyadicCube& r, const DyadicCube& qc,
                       std::vector<DyadicCube>& out) {
    if (r == qc) {
        out.push_back(r);
        return;
    }
    const GridRegion rr = cube_region(g, r);
    const GridRegion qr = cube_region(g, qc);
    const bool disjoint = rr.x1 <= qr.x0 || qr.x1 <= rr.x0 ||
                          (g.d == 2 && (rr.y1 <= qr.y0 || qr.y1 <= rr.y0));
    if (disjoint && region_contains(tripled_region(g, r), qr)) {
        out.push_back(r);  // maximal: every ancestor meets Q_c
        return;
    }
    if (r.level >= g.L) {
        out.push_back(r);  // cells are atoms; cannot subdivide further
        return;
    }
    for (const DyadicCube& c : cube_children(g, r)) collect_partition(g, c, qc, out);
}

}  // namespace

GlobalSparseResult build_global_sparse(const KernelOperator& t, const GridFunction& f,
                                       const GridFunction& g, ThresholdMode mode,
                                       const SparseExponents& exps,
                                       const OperatorProfile* profile, double mt_product_norm) {
    const GridGeometry& geom = t.geometry();
    GlobalSparseResult out;
    out.family.geom = geom;
    out.family.eta_claimed = 1.0 / (2.0 * std::pow(3.0, geom.d));
    out.trace.mode = mode == ThresholdMode::PaperThresholds ? "paper-thresholds" : "adaptive";

    if (function_vanishes_on(f, GridRegion{0, geom.side(), 0, geom.d == 2 ? geom.side() : 1}))
        return out;  // f == 0: empty family

    const DyadicCube qc = smallest_cube_containing_support(geom, f);
    collect_partition(geom, DyadicCube{0, 0, 0}, qc, out.partition);

    for (const DyadicCube& rj : out.partition) {
        LocalSparseResult local =
            build_local_sparse(t, f, g, rj, mode, exps, profile, mt_product_norm);
        for (std::size_t i = 0; i < local.family.size(); ++i) {
            const DyadicCube& q = local.family[i];
            out.untripled.push_back(q);
            SparseCube sc;
            sc.base = q;
            sc.tripled = true;
            sc.region = tripled_region(geom, q);
            out.family.cubes.push_back(sc);
            out.family.assignment.push_back(std::vector<std::pair<std::int64_t, double>>());
            auto& asn = out.family.assignment.back();
            asn.reserve(local.retained_cells[i].size());
            for (std::int64_t c : local.retained_cells[i]) asn.emplace_back(c, 1.0);
        }
        for (const IterationRecord& rec : local.trace.iterations)
            out.trace.iterations.push_back(rec);
        out.trace.resolution_exhausted =
            out.trace.resolution_exhausted || local.trace.resolution_exhausted;
    }
    out.family.has_assignment = true;
    return out;
}

namespace {

// Dinic max-flow on int64 capacities
struct Dinic {
    struct Edge {
        int to;
        std::int64_t cap;
        int rev;
    };
    std::vector<std::vector<Edge>> adj;
    std::vector<int> level, iter;

    explicit Dinic(int n) : adj(n), level(n), iter(n) {}

    void add_edge(int from, int to, std::int64_t cap) {
        adj[from].push_back({to, cap, static_cast<int>(adj[to].size())});
        adj[to].push_back({from, 0, static_cast<int>(adj[from].size()) - 1});
    }

    bool bfs(int s, int t) {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (const Edge& e : adj[v])
                if (e.cap > 0 && level[e.to] < 0) {
                    level[e.to] = level[v] + 1;
                    q.push(e.to);
                }
        }
        return level[t] >= 0;
    }

    std::int64_t dfs(int v, int t, std::int64_t f) {
        if (v == t) return f;
        for (int& i = iter[v]; i < static_cast<int>(adj[v].size()); ++i) {
            Edge& e = adj[v][i];
            if (e.cap > 0 && level[v] < level[e.to]) {
                const std::int64_t d = dfs(e.to, t, std::min(f, e.cap));
                if (d > 0) {
                    e.cap -= d;
                    adj[e.to][e.rev].cap += d;
                    return d;
                }
            }
        }
        return 0;
    }

    std::int64_t max_flow(int s, int t) {
        std::int64_t flow = 0;
        while (bfs(s, t)) {
            std::fill(iter.begin(), iter.end(), 0);
            std::int64_t f;
            while ((f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) > 0) flow += f;
        }
        return flow;
    }
};

// small rational reconstruction of eta (the callers pass 1/2, 1/6, 1/18...)
void eta_as_fraction(double eta, std::int64_t* num, std::int64_t* den) {
    for (std::int64_t d = 1; d <= 1000000; ++d) {
        const double scaled = eta * static_cast<double>(d);
        const std::int64_t n = std::llround(scaled);
        if (n >= 1 && std::abs(scaled - static_cast<double>(n)) < 1e-9) {
            *num = n;
            *den = d;
            return;
        }
    }
    throw DomainError("sparse_certify: eta is not a small rational");
}

}  // namespace

CertifyResult sparse_certify(SparseFamily& family, double eta) {
    CertifyResult res;
    const GridGeometry& g = family.geom;
    const int m = static_cast<int>(family.cubes.size());
    if (m == 0) {
        res.carleson = 0.0;
        res.flow_feasible = true;
        return res;
    }

    // exact packing ratios
    for (int i = 0; i < m; ++i) {
        std::int64_t packed = 0;
        for (int j = 0; j < m; ++j)
            if (family.cubes[i].region.contains(family.cubes[j].region))
                packed += family.cubes[j].region.cells(g.d);
        res.carleson = std::max(
            res.carleson,
            static_cast<double>(packed) / static_cast<double>(family.cubes[i].region.cells(g.d)));
    }
    family.carleson_constant = res.carleson;

    // eta-sparseness feasibility as integer max-flow
    std::int64_t num = 0, den = 1;
    eta_as_fraction(eta, &num, &den);

    std::vector<std::int64_t> used_cells;
    for (const SparseCube& sc : family.cubes)
        for_each_cell(g, sc.region, [&](std::int64_t c) { used_cells.push_back(c); });
    std::sort(used_cells.begin(), used_cells.end());
    used_cells.erase(std::unique(used_cells.begin(), used_cells.end()), used_cells.end());
    std::vector<int> cell_node(static_cast<std::size_t>(g.cell_count()), -1);
    for (std::size_t i = 0; i < used_cells.size(); ++i)
        cell_node[used_cells[i]] = static_cast<int>(i);

    const int source = 0;
    const int cube_base = 1;
    const int cell_base = cube_base + m;
    const int sink = cell_base + static_cast<int>(used_cells.size());
    Dinic dinic(sink + 1);

    std::int64_t demand_total = 0;
    std::vector<std::vector<int>> cube_edge_idx(m);
    for (int i = 0; i < m; ++i) {
        const std::int64_t demand = num * family.cubes[i].region.cells(g.d);
        demand_total += demand;
        dinic.add_edge(source, cube_base + i, demand);
        for_each_cell(g, family.cubes[i].region, [&](std::int64_t c) {
            cube_edge_idx[i].push_back(static_cast<int>(dinic.adj[cube_base + i].size()));
            dinic.add_edge(cube_base + i, cell_base + cell_node[c], den);
        });
    }
    for (std::size_t i = 0; i < used_cells.size(); ++i)
        dinic.add_edge(cell_base + static_cast<int>(i), sink, den);

    const std::int64_t flow = dinic.max_flow(source, sink);
    res.flow_feasible = flow == demand_total;

    if (res.flow_feasible) {
        family.assignment.assign(m, {});
        for (int i = 0; i < m; ++i) {
            int edge_pos = 0;
            for_each_cell(g, family.cubes[i].region, [&](std::int64_t c) {
                const auto& e = dinic.adj[cube_base + i][cube_edge_idx[i][edge_pos++]];
                const std::int64_t sent = den - e.cap;
                if (sent > 0)
                    family.assignment[i].emplace_back(
                        c, static_cast<double>(sent) / static_cast<double>(den));
            });
        }
        family.has_assignment = true;
        family.eta_claimed = eta;
    }
    return res;
}

DominationResult domination_ratio(const KernelOperator& t, const GridFunction& f,
                                  const GridFunction& g, const SparseFamily& family, double r,
                                  double s) {
    const GridGeometry& geom = t.geometry();
    DominationResult out;

    GridFunction tf = apply(t, f);
    std::vector<double> terms(static_cast<std::size_t>(geom.cell_count()));
    for (std::int64_t c = 0; c < geom.cell_count(); ++c) {
        double ip = 0.0;
        for (int i = 0; i < f.vdim(); ++i) ip += tf.at(c, i) * g.at(c, i);
        terms[c] = std::abs(ip);
    }
    out.lhs = pairwise_sum(terms) * geom.cell_measure();

    if (family.cubes.empty()) return out;

    std::vector<double> lowers, uppers;
    for (const SparseCube& sc : family.cubes) {
        ConvexBodyAverage bf(f, sc.region, r);
        ConvexBodyAverage bg(g, sc.region, s);
        ProductBracket br = body_product_bracket(bf, bg);
        const double measure = static_cast<double>(sc.region.cells(geom.d)) * geom.cell_measure();
        lowers.push_back(br.lower * measure);
        uppers.push_back(br.upper * measure);
    }
    out.rhs_lower = pairwise_sum(lowers);
    out.rhs_upper = pairwise_sum(uppers);
    if (out.rhs_upper > 0.0) out.ratio_lower = out.lhs / out.rhs_upper;
    if (out.rhs_lower > 0.0) out.ratio_upper = out.lhs / out.rhs_lower;
    return out;
}

}  // namespace mwlab
