#include "mwlab/config.hpp"

#include <fstream>

#include "json.hpp"
#include "mwlab/io.hpp"

namespace mwlab {

namespace {

TSpec parse_tspec(const nlohmann::json& j) {
    TSpec ts;
    const std::string kind = j.value("kind", "hilbert");
    if (kind == "hilbert")
        ts.kind = KernelKind::Hilbert;
    else if (kind == "rough")
        ts.kind = KernelKind::Rough;
    else if (kind == "hormander-example")
        ts.kind = KernelKind::HormanderExample;
    else
        throw ConfigError("unknown operator kind: " + kind);
    if (j.contains("omega_samples")) ts.omega_bins = j.at("omega_samples").get<int>();
    ts.omega_seed = j.value("omega_seed", std::uint64_t{1});
    ts.enforce_mean_zero = j.value("enforce_mean_zero", true);
    ts.r = j.value("r_prime_dual", j.value("r", 2.0));
    ts.k_max = j.value("k_max", 6);
    return ts;
}

void check_theorem_preconditions(const ExperimentConfig& cfg, const std::string& id) {
    const bool horm = cfg.op.kind == KernelKind::HormanderExample;
    if (id == "rough-ap") {
        if (cfg.p <= 1.0) throw ConfigError("rough-ap needs p > 1");
        if (horm) throw ConfigError("rough-ap needs a rough-type operator");
    } else if (id == "horm-ap") {
        if (!horm) throw ConfigError("horm-ap needs the hormander-example operator");
        if (!(cfg.op.r > 1.0 && cfg.p > cfg.op.r)) throw ConfigError("horm-ap needs 1 < r < p");
    } else if (id == "a1") {
        if (cfg.p <= 1.0) throw ConfigError("a1 needs p > 1");
        if (horm && !(cfg.p > cfg.op.r)) throw ConfigError("a1 (hormander) needs p > r");
    } else if (id == "aq") {
        if (!(cfg.q_aux > 1.0 && cfg.q_aux < cfg.p))
            throw ConfigError("aq needs 1 < q < p");
        if (horm && !(cfg.p / cfg.q_aux > cfg.op.r))
            throw ConfigError("aq (hormander) needs p/q > r");
    } else if (id == "cf-czo" || id == "cf-rough") {
        if (cfg.p <= 1.0) throw ConfigError(id + " needs p > 1");
    } else if (id == "cf-hormander") {
        if (!horm) throw ConfigError("cf-hormander needs the hormander-example operator");
        if (!(cfg.p > cfg.op.r)) throw ConfigError("cf-hormander needs p > r");
    } else if (id == "endpoint-rough") {
        if (horm) throw ConfigError("endpoint-rough needs a rough-type operator");
    } else if (id == "endpoint-hormander") {
        if (!horm) throw ConfigError("endpoint-hormander needs the hormander-example operator");
    } else {
        throw ConfigError("unknown theorem id: " + id);
    }
}

}  // namespace

void validate_theorem(const ExperimentConfig& cfg, const std::string& id) {
    check_theorem_preconditions(cfg, id);
}

ExperimentConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.d = j.value("d", 1);
        cfg.L = j.value("L", 5);
        cfg.n = j.value("n", 2);
        GridGeometry probe(cfg.d, cfg.L);  // validates d, L, the d*L cap
        (void)probe;
        if (cfg.n < 1 || cfg.n > kMaxDim) throw ConfigError("n must be in [1,8]");

        if (j.contains("weight")) {
            const auto& wj = j.at("weight");
            if (wj.contains("file")) {
                cfg.weight_file = wj.at("file").get<std::string>();
                std::ifstream probe_file(cfg.weight_file);
                if (!probe_file) throw ConfigError("weight file not found: " + cfg.weight_file);
            } else {
                cfg.weight_kind = wj.value("kind", "scalar-embedded");
                weight_kind_from_string(cfg.weight_kind);  // validates
                cfg.weight_seed = wj.value("seed", std::uint64_t{1});
                if (wj.contains("params"))
                    for (auto& [k, v] : wj.at("params").items())
                        cfg.weight_params[k] = v.get<double>();
            }
        }
        if (j.contains("operator")) cfg.op = parse_tspec(j.at("operator"));
        if (cfg.op.kind == KernelKind::Rough && cfg.d != 2)
            throw ConfigError("rough operator needs d = 2");
        if (cfg.op.kind != KernelKind::Rough && cfg.d != 1)
            throw ConfigError("hilbert/hormander operators need d = 1");

        cfg.p = j.value("p", 2.0);
        cfg.q_aux = j.value("q", 0.0);
        if (j.contains("theorems"))
            for (const auto& id : j.at("theorems")) cfg.theorems.push_back(id.get<std::string>());
        cfg.run_sparse = j.value("sparse", false);
        cfg.run_lemmas = j.value("lemmas", false);
        cfg.refinement_study = j.value("refinement", false);
        cfg.trials = j.value("trials", 6);
        if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.pass_multiplier = j.value("pass_multiplier", 10.0);
        cfg.out_dir = j.value("out", "out");
        if (j.contains("sparse_seeds")) {
            cfg.sparse_seeds.clear();
            for (const auto& s : j.at("sparse_seeds"))
                cfg.sparse_seeds.push_back(s.get<std::uint64_t>());
        }
        cfg.sparse_r = j.value("sparse_r", 1.0);
        cfg.sparse_s = j.value("sparse_s", 2.0);
        if (cfg.sparse_r < 1.0 || cfg.sparse_s < 1.0)
            throw ConfigError("sparse body exponents must be >= 1");

        for (const auto& id : cfg.theorems) check_theorem_preconditions(cfg, id);
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

MatrixWeight load_or_generate_weight(const ExperimentConfig& cfg) {
    if (!cfg.weight_file.empty()) return read_mwt(cfg.weight_file);
    std::map<std::string, double> params = cfg.weight_params;
    params["d"] = cfg.d;
    params["L"] = cfg.L;
    params["n"] = cfg.n;
    return generate_weight(weight_kind_from_string(cfg.weight_kind), params, cfg.weight_seed);
}

}  // namespace mwlab
