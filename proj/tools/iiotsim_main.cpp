// Command-line front end: train a scheme, evaluate one, or replay a trace.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iiotsim/config.hpp"
#include "iiotsim/harness.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string scheme;
  std::vector<uint64_t> seeds;
  int episodes = -1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--scheme", opts.scheme,
                  "combined|local|remote-comm|remote-nocomm|contention-free|contention-based");
  cmd->add_option("--seeds", opts.seeds, "Seed list")->delimiter(',');
  cmd->add_option("--episodes", opts.episodes, "Training episodes");
  cmd->add_option("--out", opts.out_dir, "Output directory");
}

iiotsim::config::ExperimentConfig build_config(const CommonOpts& opts) {
  using namespace iiotsim;
  config::ExperimentConfig cfg =
      opts.config_path.empty() ? config::default_config() : config::load_config(opts.config_path);
  if (!opts.scheme.empty()) {
    cfg.scheme = schemes::parse_scheme(opts.scheme);
    schemes::apply_scheme(cfg.env, cfg.scheme);
  }
  if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
  if (opts.episodes >= 0) cfg.train.episodes = opts.episodes;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  cfg.env.arrival.horizon = cfg.env.t_max;
  cfg.env.link.n_channels = cfg.env.n_channels;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IIoT MEC task-offloading simulator and MAPPO trainer"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, replay_opts;
  std::string checkpoint, trace_path;

  CLI::App* train_cmd = app.add_subcommand("train", "Train (or evaluate a baseline) and write metric curves");
  add_common(train_cmd, train_opts);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint or baseline scheme");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file for trained schemes");

  CLI::App* replay_cmd = app.add_subcommand("replay", "Re-simulate a trace and verify it");
  add_common(replay_cmd, replay_opts);
  replay_cmd->add_option("--trace", trace_path, "Trace file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      const auto cfg = build_config(train_opts);
      const auto result = iiotsim::harness::run_experiment(cfg);
      std::printf("wrote %zu files under %s\n", result.files.size(), cfg.out_dir.c_str());
      return 0;
    }
    if (eval_cmd->parsed()) {
      const auto cfg = build_config(eval_opts);
      const auto result = iiotsim::harness::run_eval(cfg, checkpoint);
      std::printf("wrote %zu files under %s\n", result.files.size(), cfg.out_dir.c_str());
      return 0;
    }
    if (replay_cmd->parsed()) {
      const auto cfg = build_config(replay_opts);
      std::string error;
      if (iiotsim::harness::replay_file(cfg, trace_path, &error)) {
        std::printf("replay ok: %s\n", trace_path.c_str());
        return 0;
      }
      std::fprintf(stderr, "replay mismatch: %s\n", error.c_str());
      return 1;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
