#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mwlab/io.hpp"
#include "mwlab/rng.hpp"
#include "mwlab/run.hpp"
#include "mwlab/convex_body.hpp"
#include "mwlab/sparse.hpp"
#include "mwlab/verify.hpp"

using namespace mwlab;

namespace {

int cmd_constants(const std::string& weight_path, double p, int dirs) {
    MatrixWeight w = read_mwt(weight_path);
    nlohmann::ordered_json out;
    out["kind"] = w.kind;
    out["d"] = w.geometry().d;
    out["L"] = w.geometry().L;
    out["n"] = w.vdim();
    out["matrix_a1"] = matrix_a1(w);
    if (p > 1.0) {
        MatrixApResult ap = matrix_ap(w, p);
        out["matrix_ap"] = ap.value;
        out["matrix_ap_proxy"] = ap.proxy;
    }
    const int nd = dirs > 0 ? dirs : ainfty_directions(w.vdim());
    out["ainfty_sc_p"] = ainfty_sc(w, std::max(p, 1.0), nd);
    out["ainfty_sc_1"] = ainfty_sc(w, 1.0, nd);
    out["ainfty_directions"] = nd;
    std::cout << out.dump(2) << "\n";
    return kExitPass;
}

int cmd_sparse(const std::string& config_path, const std::string& f_path,
               const std::string& g_path, const std::string& out_dir, bool dominate) {
    ExperimentConfig cfg = parse_config_file(config_path);
    GridFunction f = read_gfn(f_path);
    GridFunction g = read_gfn(g_path);
    const GridGeometry& geom = f.geometry();
    if (!(geom == g.geometry())) throw ConfigError("f and g live on different grids");
    if (geom.d != cfg.d || geom.L != cfg.L) throw ConfigError("config grid does not match inputs");

    KernelOperator t = make_operator(cfg.op, geom);
    SparseExponents exps{1.0, cfg.sparse_r, cfg.sparse_s};
    GlobalSparseResult built = build_global_sparse(t, f, g, ThresholdMode::Adaptive, exps);
    const double eta = 1.0 / (2.0 * std::pow(3.0, geom.d));
    CertifyResult cert = sparse_certify(built.family, eta);

    std::filesystem::create_directories(out_dir);
    std::ofstream trace(out_dir + "/trace.jsonl");
    bool ok = cert.flow_feasible;
    for (const IterationRecord& rec : built.trace.iterations) {
        nlohmann::ordered_json line;
        line["q0"] = {{"level", rec.q0.level}, {"x", rec.q0.x}, {"y", rec.q0.y}};
        line["depth"] = rec.depth;
        line["a1"] = rec.a1;
        line["a2"] = rec.a2;
        line["omega_cells"] = rec.omega_cells;
        line["cz_count"] = rec.cz_count;
        line["omega_bound_ok"] = rec.omega_bound_ok;
        line["cz_half_ok"] = rec.cz_half_ok;
        trace << line.dump() << "\n";
        ok = ok && rec.omega_bound_ok && rec.cz_half_ok && rec.cz_pointwise_ok;
    }

    nlohmann::ordered_json out;
    out["family_size"] = built.family.cubes.size();
    out["eta"] = eta;
    out["carleson"] = cert.carleson;
    out["flow_feasible"] = cert.flow_feasible;
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const SparseCube& sc : built.family.cubes)
        members.push_back({{"level", sc.base.level},
                           {"coords", {sc.base.x, sc.base.y}},
                           {"tripled", sc.tripled}});
    out["cubes"] = members;
    if (dominate) {
        DominationResult dom = domination_ratio(t, f, g, built.family, cfg.sparse_r, cfg.sparse_s);
        out["domination"] = {{"lhs", dom.lhs},
                             {"rhs_lower", dom.rhs_lower},
                             {"rhs_upper", dom.rhs_upper},
                             {"ratio_lower", dom.ratio_lower},
                             {"ratio_upper", dom.ratio_upper}};
        nlohmann::ordered_json bodies = nlohmann::ordered_json::array();
        for (const SparseCube& sc : built.family.cubes) {
            ConvexBodyAverage bf(f, sc.region, cfg.sparse_r);
            ConvexBodyAverage bg(g, sc.region, cfg.sparse_s);
            ProductBracket br = body_product_bracket(bf, bg);
            nlohmann::ordered_json entry;
            entry["level"] = sc.base.level;
            entry["coords"] = {sc.base.x, sc.base.y};
            entry["bracket"] = {br.lower, br.upper};
            const auto surrogate_json = [](const ConvexBodyAverage& body) {
                nlohmann::ordered_json sj;
                auto s = ellipsoid_surrogate(body);
                sj["rank"] = s.rank;
                sj["bracket"] = {s.bracket_lo, s.bracket_up};
                nlohmann::ordered_json mat = nlohmann::ordered_json::array();
                Mat emb = s.embedded(body.vdim());
                for (int i = 0; i < body.vdim(); ++i) {
                    nlohmann::ordered_json row = nlohmann::ordered_json::array();
                    for (int j = 0; j < body.vdim(); ++j) row.push_back(emb(i, j));
                    mat.push_back(row);
                }
                sj["matrix"] = mat;
                return sj;
            };
            entry["f_surrogate"] = surrogate_json(bf);
            entry["g_surrogate"] = surrogate_json(bg);
            bodies.push_back(entry);
        }
        out["bodies"] = bodies;
    }
    std::ofstream rep(out_dir + "/family.json");
    rep << out.dump(2) << "\n";
    std::cout << out.dump(2) << "\n";
    return ok ? kExitPass : kExitFail;
}

int cmd_lemmas() {
    // parameter lemmas, exact rational grid
    ParamLemmaReport lem = param_lemma_checks();
    // Bownik and scalar reverse Holder randomized sweeps
    Rng rng(20240811);
    long long bownik_checks = 0, bownik_bad = 0;
    for (int t = 0; t < 2000; ++t) {
        const int n = 2 + static_cast<int>(rng.below(3));
        std::vector<double> lam(n);
        for (double& v : lam) v = std::pow(10.0, rng.uniform(-3.0, 3.0));
        Mat a = Mat::diag(lam);
        for (double& v : lam) v = std::pow(10.0, rng.uniform(-3.0, 3.0));
        Mat b = Mat::diag(lam);
        // rotate one of them
        const double th = rng.uniform(0.0, 6.283185307179586);
        Mat giv = Mat::identity(n);
        giv(0, 0) = std::cos(th);
        giv(1, 1) = std::cos(th);
        giv(0, 1) = -std::sin(th);
        giv(1, 0) = std::sin(th);
        b = giv * b * giv.transpose();
        Mat bs(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) bs(i, j) = 0.5 * (b(i, j) + b(j, i));
        const double alpha = 0.1 + 0.8 * rng.uniform();
        auto r = bownik_bound(SpdMatrix::from(a), SpdMatrix::from(bs), alpha);
        ++bownik_checks;
        if (r.lhs > r.rhs * (1.0 + 1e-12)) ++bownik_bad;
    }
    long long rh_checks = 0, rh_bad = 0;
    for (int d : {1, 2}) {
        GridGeometry g(d, d == 1 ? 6 : 3);
        for (int t = 0; t < 5; ++t) {
            ScalarGridFunction w(g, 1);
            for (std::int64_t c = 0; c < g.cell_count(); ++c)
                w.at(c) = std::exp(rng.uniform(-2.0, 2.0));
            const double r = 1.0 + 1.0 / (std::pow(2.0, d + 11) * fujii_ainfty(w));
            ++rh_checks;
            if (reverse_holder_ratio(w, r) > 2.0) ++rh_bad;
        }
    }

    nlohmann::ordered_json out;
    out["param_lemmas"] = {{"points", lem.points},
                           {"violations", lem.violations},
                           {"skipped", lem.skipped}};
    out["bownik"] = {{"checks", bownik_checks}, {"violations", bownik_bad}};
    out["reverse_holder"] = {{"checks", rh_checks}, {"violations", rh_bad}};
    std::cout << out.dump(2) << "\n";
    return (lem.violations == 0 && bownik_bad == 0 && rh_bad == 0) ? kExitPass : kExitFail;
}

int cmd_report(const std::string& out_dir) {
    nlohmann::ordered_json merged;
    merged["reports"] = nlohmann::ordered_json::array();
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() < 5 || name.substr(name.size() - 5) != ".json") continue;
        if (name == "merged.json") continue;
        std::ifstream in(entry.path());
        try {
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
            merged["reports"].push_back({{"file", name}, {"content", j}});
        } catch (const std::exception&) {
            // non-report JSON, skip
        }
    }
    std::ofstream out(out_dir + "/merged.json");
    out << merged.dump(2) << "\n";
    std::cout << "merged " << merged["reports"].size() << " reports into " << out_dir
              << "/merged.json\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite dyadic laboratory for matrix-weighted singular integral estimates"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", weight_path, f_path, g_path, theorem_id;
    double p = 2.0;
    int dirs = 0;
    std::uint64_t seed_override = 0;
    bool have_seed = false;

    auto* c_const = app.add_subcommand("constants", "matrix weight constants of a .mwt file");
    c_const->add_option("weight", weight_path, ".mwt path")->required();
    c_const->add_option("--p", p, "exponent for A_p");
    c_const->add_option("--dirs", dirs, "direction samples for A_infty^sc");

    auto* c_sparse = app.add_subcommand("sparse", "build and certify a sparse family");
    c_sparse->add_option("--config", config_path)->required();
    c_sparse->add_option("f", f_path, ".gfn input f")->required();
    c_sparse->add_option("g", g_path, ".gfn input g")->required();
    c_sparse->add_option("--out", out_dir);

    auto* c_dom = app.add_subcommand("dominate", "sparse family plus the domination bracket");
    c_dom->add_option("--config", config_path)->required();
    c_dom->add_option("f", f_path)->required();
    c_dom->add_option("g", g_path)->required();
    c_dom->add_option("--out", out_dir);

    auto* c_thm = app.add_subcommand("theorem", "run one theorem certificate");
    c_thm->add_option("id", theorem_id)->required();
    c_thm->add_option("--config", config_path)->required();
    c_thm->add_option("--out", out_dir);
    c_thm->add_option("--seed", seed_override)->each([&](const std::string&) { have_seed = true; });

    auto* c_lem = app.add_subcommand("lemmas", "parameter/Bownik/reverse-Holder suites");
    (void)c_lem;

    std::string gen_kind = "random-log-lipschitz", gen_out = "weight.mwt";
    int gen_d = 1, gen_L = 5, gen_n = 2;
    double gen_a = 0.0, gen_amp = 1.0, gen_freq = 1.0;
    std::uint64_t gen_seed = 1;
    auto* c_gen = app.add_subcommand("genweight", "generate a .mwt weight file");
    c_gen->add_option("--kind", gen_kind);
    c_gen->add_option("--d", gen_d);
    c_gen->add_option("--L", gen_L);
    c_gen->add_option("--n", gen_n);
    c_gen->add_option("--a", gen_a);
    c_gen->add_option("--amp", gen_amp);
    c_gen->add_option("--freq", gen_freq);
    c_gen->add_option("--seed", gen_seed);
    c_gen->add_option("--out", gen_out);

    auto* c_rep = app.add_subcommand("report", "merge prior outputs in a directory");
    c_rep->add_option("--out", out_dir)->required();

    auto* c_run = app.add_subcommand("run", "full experiment from a JSON config");
    c_run->add_option("--config", config_path)->required();
    c_run->add_option("--out", out_dir);
    c_run->add_option("--seed", seed_override)->each([&](const std::string&) { have_seed = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (app.got_subcommand(c_const)) return cmd_constants(weight_path, p, dirs);
        if (app.got_subcommand(c_sparse)) return cmd_sparse(config_path, f_path, g_path, out_dir, false);
        if (app.got_subcommand(c_dom)) return cmd_sparse(config_path, f_path, g_path, out_dir, true);
        if (app.got_subcommand(c_lem)) return cmd_lemmas();
        if (app.got_subcommand(c_gen)) {
            std::map<std::string, double> params{{"d", double(gen_d)}, {"L", double(gen_L)},
                                                 {"n", double(gen_n)},  {"a", gen_a},
                                                 {"amp", gen_amp},      {"freq", gen_freq}};
            MatrixWeight w = generate_weight(weight_kind_from_string(gen_kind), params, gen_seed);
            write_mwt(gen_out, w);
            std::cout << "wrote " << gen_out << "\n";
            return kExitPass;
        }
        if (app.got_subcommand(c_rep)) return cmd_report(out_dir);
        if (app.got_subcommand(c_thm)) {
            ExperimentConfig cfg = parse_config_file(config_path);
            cfg.theorems = {theorem_id};
            if (have_seed) cfg.seed = seed_override;
            validate_theorem(cfg, theorem_id);
            return run_experiment(cfg, out_dir);
        }
        if (app.got_subcommand(c_run)) {
            ExperimentConfig cfg = parse_config_file(config_path);
            if (have_seed) cfg.seed = seed_override;
            return run_experiment(cfg, out_dir);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
    return kExitConfig;
}
