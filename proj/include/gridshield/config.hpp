#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "gridshield/attackgen.hpp"
#include "gridshield/detector.hpp"
#include "gridshield/eval.hpp"
#include "gridshield/netsim.hpp"

namespace gridshield::config {

/// Configuration/schema problems map to exit code 2 at the CLI boundary.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One experiment, fully described by a single JSON document plus the global
/// seed. Unknown keys are rejected; the seed is mandatory so runs are never
/// wall-clock seeded.
struct ExperimentConfig {
    std::string case_path;
    std::string profile_path;  // empty: built-in diurnal default
    int samples = 21600;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    net::QueueParams queue;
    attack::AttackScenario scenario;
    detect::EnsembleConfig detector;
    bool eta_auto = true;  // true: eta picked per attack kind at run time
    eval::EvalProtocol protocol;

    std::string source_path;
    std::string fingerprint;  // config bytes + effective seed
};

ExperimentConfig parse_config(const std::string& text, const std::string& path);
ExperimentConfig load_config(const std::string& path);

/// Re-derives the fingerprint after a seed override.
void apply_seed_override(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace gridshield::config
