#include "gridshield/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "gridshield/io.hpp"

namespace gridshield::config {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError("unknown key '" + it.key() + "' in " + where +
                              " (unknown keys are errors)");
    }
}

int line_of_byte(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::string fingerprint_of(const std::string& text, std::uint64_t seed) {
    return io::content_fingerprint(text + "#seed=" + std::to_string(seed));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& path) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ":" + std::to_string(line_of_byte(text, e.byte)) +
                          ": " + e.what());
    }

    ExperimentConfig cfg;
    cfg.source_path = path;
    try {
        check_keys(j, {"case", "profile", "samples", "seed", "out", "net", "scenario",
                       "detector", "eval"},
                   "config");
        cfg.case_path = j.at("case").get<std::string>();
        if (j.contains("profile")) cfg.profile_path = j.at("profile").get<std::string>();
        cfg.samples = j.value("samples", 21600);
        if (cfg.samples <= 0) throw ConfigError("samples must be positive");
        if (!j.contains("seed"))
            throw ConfigError("config must set a seed (wall-clock seeding is not allowed)");
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.out_dir = j.value("out", std::string("out"));

        if (j.contains("net")) {
            const json& n = j.at("net");
            check_keys(n, {"lambda", "mu", "poll_interval", "td_cap_factor"}, "net");
            cfg.queue.lambda = n.value("lambda", cfg.queue.lambda);
            cfg.queue.mu = n.value("mu", cfg.queue.mu);
            cfg.queue.poll_interval = n.value("poll_interval", cfg.queue.poll_interval);
            cfg.queue.td_cap_factor = n.value("td_cap_factor", cfg.queue.td_cap_factor);
            if (cfg.queue.lambda >= cfg.queue.mu)
                throw ConfigError("net.lambda must be below net.mu (stable queue)");
        }

        if (j.contains("scenario")) {
            const json& s = j.at("scenario");
            check_keys(s,
                       {"kind", "attack_fraction", "targets_per_event", "burst_length",
                        "fdi_magnitude", "severity", "seed"},
                       "scenario");
            if (s.contains("kind"))
                cfg.scenario.kind =
                    attack::scenario_kind_from_string(s.at("kind").get<std::string>());
            cfg.scenario.attack_fraction =
                s.value("attack_fraction", cfg.scenario.attack_fraction);
            cfg.scenario.targets_per_event =
                s.value("targets_per_event", cfg.scenario.targets_per_event);
            cfg.scenario.burst_length = s.value("burst_length", cfg.scenario.burst_length);
            cfg.scenario.fdi_magnitude =
                s.value("fdi_magnitude", cfg.scenario.fdi_magnitude);
            if (s.contains("severity")) {
                const json& sv = s.at("severity");
                if (sv.is_array()) {
                    if (sv.size() != 2)
                        throw ConfigError("scenario.severity must be a scalar or [lo, hi]");
                    cfg.scenario.severity_low = sv.at(0).get<double>();
                    cfg.scenario.severity_high = sv.at(1).get<double>();
                } else {
                    cfg.scenario.severity_low = sv.get<double>();
                    cfg.scenario.severity_high = cfg.scenario.severity_low;
                }
            }
            if (s.contains("seed")) cfg.scenario.seed = s.at("seed").get<std::uint64_t>();
        }

        if (j.contains("detector")) {
            const json& d = j.at("detector");
            check_keys(d, {"alpha", "beta", "eta", "k_init", "eps", "recompute_period"},
                       "detector");
            cfg.detector.alpha = d.value("alpha", cfg.detector.alpha);
            cfg.detector.beta = d.value("beta", cfg.detector.beta);
            if (d.contains("eta")) {
                cfg.detector.eta = d.at("eta").get<double>();
                cfg.eta_auto = cfg.detector.eta <= 0.0;
            }
            cfg.detector.k_init = d.value("k_init", cfg.detector.k_init);
            cfg.detector.eps = d.value("eps", cfg.detector.eps);
            cfg.detector.recompute_period =
                d.value("recompute_period", cfg.detector.recompute_period);
        }

        if (j.contains("eval")) {
            const json& e = j.at("eval");
            check_keys(e, {"folds", "k1", "k2", "fold_offset"}, "eval");
            cfg.protocol.folds = e.value("folds", cfg.protocol.folds);
            cfg.protocol.k1 = e.value("k1", cfg.protocol.k1);
            cfg.protocol.k2 = e.value("k2", cfg.protocol.k2);
            cfg.protocol.fold_offset = e.value("fold_offset", cfg.protocol.fold_offset);
        }
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    cfg.detector.k_init = static_cast<int>(cfg.protocol.k1);
    cfg.fingerprint = fingerprint_of(text, cfg.seed);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void apply_seed_override(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    std::ifstream in(cfg.source_path);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg.fingerprint = fingerprint_of(ss.str(), seed);
}

}  // namespace gridshield::config
