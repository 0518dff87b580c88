#include "iiotsim/harness.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "iiotsim/trace.hpp"

namespace iiotsim::harness {

namespace fs = std::filesystem;

mappo::Trainer make_trainer(const config::ExperimentConfig& cfg, uint64_t seed) {
  const env::EnvConfig env_cfg = cfg.env;
  const schemes::Scheme scheme = cfg.scheme;
  auto factory = [env_cfg, scheme]() -> std::unique_ptr<mappo::MarlEnv> {
    return std::make_unique<schemes::IiotMarlEnv>(env_cfg, scheme);
  };
  return mappo::Trainer(factory, cfg.train, seed);
}

namespace {

// Greedy rollout of the trainer policy on one environment instance.
void run_greedy_episode(schemes::IiotMarlEnv& menv, const mappo::Trainer& trainer,
                        uint64_t episode_seed) {
  menv.reset(episode_seed);
  const auto specs = menv.groups();
  int steps = 0;
  while (!menv.done() && steps < menv.max_steps()) {
    std::vector<std::vector<std::vector<int>>> choices(specs.size());
    for (size_t g = 0; g < specs.size(); ++g) {
      choices[g].resize(specs[g].instances);
      for (int i = 0; i < specs[g].instances; ++i) {
        std::vector<double> input(specs[g].input_dim);
        menv.actor_input(static_cast<int>(g), i, input);
        std::vector<std::vector<uint8_t>> masks(specs[g].head_sizes.size());
        for (size_t h = 0; h < specs[g].head_sizes.size(); ++h) {
          masks[h].resize(specs[g].head_sizes[h]);
          menv.head_mask(static_cast<int>(g), i, static_cast<int>(h), masks[h]);
        }
        choices[g][i] = trainer.act_greedy(static_cast<int>(g), input, masks);
      }
    }
    menv.step(choices);
    ++steps;
  }
}

}  // namespace

metrics::MetricValues evaluate_trained(const config::ExperimentConfig& cfg,
                                       const mappo::Trainer& trainer, uint64_t seed,
                                       int64_t episodes_done, const std::string& trace_path) {
  std::vector<metrics::MetricValues> values;
  schemes::IiotMarlEnv menv(cfg.env, cfg.scheme);
  for (int e = 0; e < cfg.eval_episodes; ++e) {
    const bool trace_this = !trace_path.empty() && e == cfg.eval_episodes - 1;
    menv.raw().set_tracing(trace_this);
    const uint64_t ep_seed =
        rng::mix({seed, 0xE7A1u, static_cast<uint64_t>(episodes_done), static_cast<uint64_t>(e)});
    run_greedy_episode(menv, trainer, ep_seed);
    values.push_back(metrics::from_stats(menv.raw().stats(), cfg.env.n_channels));
    if (trace_this) trace::write_trace_file(menv.raw(), cfg.scheme, trace_path);
  }
  return metrics::average(values);
}

metrics::MetricValues evaluate_baseline(const config::ExperimentConfig& cfg, uint64_t seed,
                                        const std::string& trace_path) {
  std::vector<metrics::MetricValues> values;
  env::Environment e(cfg.env);
  rng::Stream policy_rng(rng::mix({seed, 0xBA5Eu}));
  for (int i = 0; i < cfg.eval_episodes; ++i) {
    const bool trace_this = !trace_path.empty() && i == cfg.eval_episodes - 1;
    e.set_tracing(trace_this);
    const uint64_t ep_seed = rng::mix({seed, 0xE7A1u, 0u, static_cast<uint64_t>(i)});
    schemes::run_baseline_episode(e, cfg.scheme, ep_seed, policy_rng, cfg.p_transmit);
    values.push_back(metrics::from_stats(e.stats(), cfg.env.n_channels));
    if (trace_this) trace::write_trace_file(e, cfg.scheme, trace_path);
  }
  return metrics::average(values);
}

namespace {

void write_all_outputs(const config::ExperimentConfig& cfg, const ExperimentResult& result,
                       std::vector<std::string>& files) {
  const std::string scheme = schemes::scheme_name(cfg.scheme);
  const char* metric_names[4] = {"completed", "success_rate", "collision_rate", "goodput"};
  for (int m = 0; m < 4; ++m) {
    metrics::MetricSeries series;
    series.metric = metric_names[m];
    series.episodes = result.episodes;
    series.per_seed.resize(result.episodes.size());
    for (size_t p = 0; p < result.episodes.size(); ++p) {
      for (const SeedSeries& ss : result.per_seed) {
        const metrics::MetricValues& v = ss.values[p];
        const double x = m == 0   ? v.completed
                         : m == 1 ? v.success_rate
                         : m == 2 ? v.collision_rate
                                  : v.goodput;
        series.per_seed[p].push_back(x);
      }
    }
    const std::string path = cfg.out_dir + "/" + scheme + "_" + metric_names[m] + ".csv";
    metrics::write_csv(series, cfg.seeds, path);
    files.push_back(path);
  }
}

}  // namespace

ExperimentResult run_experiment(const config::ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::string scheme = schemes::scheme_name(cfg.scheme);
  ExperimentResult result;
  const int n_seeds = static_cast<int>(cfg.seeds.size());
  result.per_seed.resize(n_seeds);

  {
    const std::string cfg_path = cfg.out_dir + "/" + scheme + "_config.json";
    std::ofstream out(cfg_path);
    if (!out) throw std::runtime_error("cannot write config snapshot: " + cfg_path);
    out << config::config_to_json(cfg) << '\n';
    result.files.push_back(cfg_path);
  }

  std::vector<std::string> checkpoints(n_seeds), traces(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    const std::string tag = scheme + "_seed" + std::to_string(cfg.seeds[s]);
    traces[s] = cfg.out_dir + "/" + tag + "_trace.txt";
    if (schemes::scheme_is_trained(cfg.scheme)) {
      checkpoints[s] = cfg.out_dir + "/" + tag + ".ckpt";
    }
  }

  if (schemes::scheme_is_trained(cfg.scheme)) {
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < n_seeds; ++s) {
      const uint64_t seed = cfg.seeds[s];
      mappo::Trainer trainer = make_trainer(cfg, seed);
      SeedSeries series;
      trainer.train(cfg.eval_interval, [&](int64_t episodes_done) {
        const bool final_point = episodes_done >= cfg.train.episodes;
        series.episodes.push_back(episodes_done);
        series.values.push_back(evaluate_trained(cfg, trainer, seed, episodes_done,
                                                 final_point ? traces[s] : std::string()));
      });
      trainer.save_checkpoint(checkpoints[s]);
      result.per_seed[s] = std::move(series);
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < n_seeds; ++s) {
      SeedSeries series;
      series.episodes.push_back(0);
      series.values.push_back(evaluate_baseline(cfg, cfg.seeds[s], traces[s]));
      result.per_seed[s] = std::move(series);
    }
  }

  result.episodes = result.per_seed.front().episodes;
  for (const auto& ss : result.per_seed) {
    if (ss.episodes != result.episodes) {
      throw std::logic_error("seeds produced mismatched evaluation cadences");
    }
  }
  write_all_outputs(cfg, result, result.files);
  for (int s = 0; s < n_seeds; ++s) {
    result.files.push_back(traces[s]);
    if (!checkpoints[s].empty()) result.files.push_back(checkpoints[s]);
  }
  return result;
}

ExperimentResult run_eval(const config::ExperimentConfig& cfg, const std::string& checkpoint_path) {
  fs::create_directories(cfg.out_dir);
  const std::string scheme = schemes::scheme_name(cfg.scheme);
  ExperimentResult result;
  const int n_seeds = static_cast<int>(cfg.seeds.size());
  result.per_seed.resize(n_seeds);

  if (schemes::scheme_is_trained(cfg.scheme)) {
    if (checkpoint_path.empty()) {
      throw std::invalid_argument("eval of a trained scheme needs --checkpoint");
    }
    mappo::Trainer trainer = make_trainer(cfg, cfg.seeds.front());
    trainer.load_checkpoint(checkpoint_path);
    for (int s = 0; s < n_seeds; ++s) {
      const std::string tag = scheme + "_seed" + std::to_string(cfg.seeds[s]);
      SeedSeries series;
      series.episodes.push_back(trainer.episodes_done());
      series.values.push_back(evaluate_trained(cfg, trainer, cfg.seeds[s],
                                               trainer.episodes_done(),
                                               cfg.out_dir + "/" + tag + "_trace.txt"));
      result.per_seed[s] = std::move(series);
    }
  } else {
    for (int s = 0; s < n_seeds; ++s) {
      const std::string tag = scheme + "_seed" + std::to_string(cfg.seeds[s]);
      SeedSeries series;
      series.episodes.push_back(0);
      series.values.push_back(
          evaluate_baseline(cfg, cfg.seeds[s], cfg.out_dir + "/" + tag + "_trace.txt"));
      result.per_seed[s] = std::move(series);
    }
  }
  result.episodes = result.per_seed.front().episodes;
  write_all_outputs(cfg, result, result.files);
  return result;
}

bool replay_file(const config::ExperimentConfig& cfg, const std::string& trace_path,
                 std::string* error) {
  const trace::TraceFile t = trace::read_trace_file(trace_path);
  return trace::replay_trace(t, cfg.env, error);
}

}  // namespace iiotsim::harness
