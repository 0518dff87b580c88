#ifndef IIOTSIM_CONFIG_HPP_
#define IIOTSIM_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "iiotsim/env.hpp"
#include "iiotsim/mappo.hpp"
#include "iiotsim/schemes.hpp"

namespace iiotsim::config {

// Full experiment description: environment, trainer, scheme, seeds, output.
// Defaults reproduce the reference parameter tables; loading rejects unknown
// keys and validates ranges.
struct ExperimentConfig {
  env::EnvConfig env;
  mappo::Hyper train;
  schemes::Scheme scheme = schemes::Scheme::kCombined;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  double p_transmit = 0.6;     // contention-based persistence
  int eval_interval = 100;     // training episodes between evaluation points
  int eval_episodes = 20;      // greedy episodes per evaluation point
  std::string out_dir = "results";
};

ExperimentConfig default_config();

// Strict JSON load: every present key must be known; values are range-checked.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Serialization of the effective config (used to persist run provenance).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace iiotsim::config

#endif  // IIOTSIM_CONFIG_HPP_
