#ifndef IIOTSIM_HARNESS_HPP_
#define IIOTSIM_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iiotsim/config.hpp"
#include "iiotsim/mappo.hpp"
#include "iiotsim/metrics.hpp"
#include "iiotsim/schemes.hpp"

namespace iiotsim::harness {

// One seed's metric rows over the evaluation cadence.
struct SeedSeries {
  std::vector<int64_t> episodes;
  std::vector<metrics::MetricValues> values;
};

// Builds a trainer for a trained scheme at one seed.
mappo::Trainer make_trainer(const config::ExperimentConfig& cfg, uint64_t seed);

// Greedy evaluation of the trainer's current policy: cfg.eval_episodes
// episodes with seeds derived from (seed, episodes_done). When trace_path is
// nonempty the last episode's trace is written there.
metrics::MetricValues evaluate_trained(const config::ExperimentConfig& cfg,
                                       const mappo::Trainer& trainer, uint64_t seed,
                                       int64_t episodes_done, const std::string& trace_path = "");

// Evaluation of a hand-coded baseline scheme (no training).
metrics::MetricValues evaluate_baseline(const config::ExperimentConfig& cfg, uint64_t seed,
                                        const std::string& trace_path = "");

// Full experiment: per seed, train if the scheme is learned, evaluate on the
// cadence, persist per-seed series, checkpoints, one trace per seed, and the
// aggregated CSVs (mean and 95% CI across seeds). Seeds run in parallel; the
// output is a pure function of (config, seeds).
struct ExperimentResult {
  std::vector<int64_t> episodes;                     // evaluation points
  std::vector<SeedSeries> per_seed;                  // indexed like cfg.seeds
  std::vector<std::string> files;                    // everything written
};

ExperimentResult run_experiment(const config::ExperimentConfig& cfg);

// Evaluation-only entry (optionally from a checkpoint for trained schemes).
ExperimentResult run_eval(const config::ExperimentConfig& cfg,
                          const std::string& checkpoint_path = "");

// Re-simulates a trace file against the config; returns true when every slot
// and the final counters match.
bool replay_file(const config::ExperimentConfig& cfg, const std::string& trace_path,
                 std::string* error);

}  // namespace iiotsim::harness

#endif  // IIOTSIM_HARNESS_HPP_
