// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "iiotsim/config.hpp"
#include "iiotsim/harness.hpp"
#include "iiotsim/mappo.hpp"
#include "iiotsim/metrics.hpp"
#include "iiotsim/mlp.hpp"
#include "iiotsim/schemes.hpp"
#include "iiotsim/trace.hpp"

using namespace iiotsim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("CRITERION %2d: %s - %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Contention-free collision rate is exactly zero, every episode and seed.
void criterion_1() {
  env::EnvConfig cfg;
  schemes::apply_scheme(cfg, schemes::Scheme::kContentionFree);
  bool pass = true;
  int64_t episodes = 0;
  for (uint64_t seed = 1; seed <= 5 && pass; ++seed) {
    env::Environment e(cfg);
    rng::Stream policy_rng(seed);
    for (int ep = 0; ep < 100; ++ep) {
      schemes::run_baseline_episode(e, schemes::Scheme::kContentionFree,
                                    rng::mix({seed, static_cast<uint64_t>(ep)}), policy_rng, 0.6);
      ++episodes;
      if (e.stats().collision_channel_slots != 0) {
        pass = false;
        break;
      }
    }
  }
  report(1, pass, "contention-free collisions = 0 over " + std::to_string(episodes) + " episodes");
}

// ---------------------------------------------------------------------------
// 2. Local scheme: R_s = 0 and goodput = 0 exactly.
void criterion_2() {
  env::EnvConfig cfg;
  schemes::apply_scheme(cfg, schemes::Scheme::kLocal);
  bool pass = true;
  for (uint64_t seed = 1; seed <= 5 && pass; ++seed) {
    env::Environment e(cfg);
    rng::Stream policy_rng(seed);
    for (int ep = 0; ep < 50; ++ep) {
      schemes::run_baseline_episode(e, schemes::Scheme::kLocal,
                                    rng::mix({seed, 0xAAu, static_cast<uint64_t>(ep)}), policy_rng,
                                    0.6);
      const auto v = metrics::from_stats(e.stats(), cfg.n_channels);
      if (v.success_rate != 0.0 || v.goodput != 0.0) {
        pass = false;
        break;
      }
    }
  }
  report(2, pass, "local scheme R_s = 0 and goodput = 0 on every episode");
}

// ---------------------------------------------------------------------------
// 3 + 4. Metric orderings at desk scale. Trained schemes run the reference
// hyperparameters; per-seed summaries average the final three evaluation
// points.
struct SchemeSummary {
  std::vector<double> completed;  // per seed
  std::vector<double> success;    // per seed
};

SchemeSummary summarize(const harness::ExperimentResult& r, int tail_points) {
  SchemeSummary s;
  for (const auto& ss : r.per_seed) {
    const int n = static_cast<int>(ss.values.size());
    const int from = std::max(0, n - tail_points);
    double completed = 0.0, success = 0.0;
    for (int i = from; i < n; ++i) {
      completed += ss.values[i].completed;
      success += ss.values[i].success_rate;
    }
    s.completed.push_back(completed / (n - from));
    s.success.push_back(success / (n - from));
  }
  return s;
}

// Ordering tolerance: seed-averaged means must order; an inverted pair whose
// 95% CIs overlap is statistically unresolved and is flagged, not failed.
bool ordered(const std::vector<double>& hi, const std::vector<double>& lo, const char* label,
             std::string& notes) {
  const metrics::Aggregate a = metrics::aggregate(hi);
  const metrics::Aggregate b = metrics::aggregate(lo);
  const bool means_ordered = a.mean >= b.mean;
  const bool overlap = a.ci_lo <= b.ci_hi && b.ci_lo <= a.ci_hi;
  notes += std::string("\n    ") + label + ": " + fmt(a.mean) + " vs " + fmt(b.mean);
  if (means_ordered) {
    if (overlap) notes += "  [flag: 95% CIs overlap]";
    return true;
  }
  if (overlap) {
    notes += "  [flag: inverted but 95% CIs overlap - unresolved, not failed]";
    return true;
  }
  notes += "  << ORDER VIOLATED (CIs separated)";
  return false;
}

void criteria_3_4(const std::string& out_root, int training_episodes, int seeds) {
  const schemes::Scheme all[] = {schemes::Scheme::kCombined,       schemes::Scheme::kLocal,
                                 schemes::Scheme::kRemoteComm,     schemes::Scheme::kRemoteNoComm,
                                 schemes::Scheme::kContentionFree, schemes::Scheme::kContentionBased};
  std::map<schemes::Scheme, SchemeSummary> summary;
  for (schemes::Scheme s : all) {
    config::ExperimentConfig cfg = config::default_config();
    cfg.scheme = s;
    schemes::apply_scheme(cfg.env, cfg.scheme);
    cfg.seeds.clear();
    for (int i = 1; i <= seeds; ++i) cfg.seeds.push_back(static_cast<uint64_t>(i));
    cfg.train.episodes = training_episodes;
    cfg.eval_interval = 1000;
    cfg.eval_episodes = 20;
    cfg.out_dir = out_root + "/" + schemes::scheme_name(s);
    if (schemes::scheme_is_trained(s)) {
      std::printf("  [ordering run] %s: %d seeds, %d training episodes each\n",
                  schemes::scheme_name(s).c_str(), seeds, training_episodes);
    } else {
      std::printf("  [ordering run] %s: %d seeds\n", schemes::scheme_name(s).c_str(), seeds);
    }
    std::fflush(stdout);
    const harness::ExperimentResult r = harness::run_experiment(cfg);
    summary[s] = summarize(r, 3);
  }

  std::string notes;
  bool pass3 = true;
  const SchemeSummary& comb = summary[schemes::Scheme::kCombined];
  pass3 &= ordered(comb.completed, summary[schemes::Scheme::kRemoteNoComm].completed,
                   "completed: combined >= remote-nocomm", notes);
  pass3 &= ordered(comb.completed, summary[schemes::Scheme::kContentionFree].completed,
                   "completed: combined >= contention-free", notes);
  pass3 &= ordered(comb.completed, summary[schemes::Scheme::kContentionBased].completed,
                   "completed: combined >= contention-based", notes);
  pass3 &= ordered(comb.completed, summary[schemes::Scheme::kLocal].completed,
                   "completed: combined >= local", notes);
  pass3 &= ordered(summary[schemes::Scheme::kRemoteComm].success,
                   summary[schemes::Scheme::kContentionFree].success,
                   "R_s: remote-comm >= contention-free", notes);
  pass3 &= ordered(summary[schemes::Scheme::kContentionFree].success,
                   summary[schemes::Scheme::kContentionBased].success,
                   "R_s: contention-free >= contention-based", notes);
  report(3, pass3, "metric orderings at desk scale" + notes);

  // 4: the remote family tops the channel-access success rate, under the
  // same seed-mean ordering tolerance as #3.
  auto mean_of = [](const std::vector<double>& v) { return metrics::aggregate(v).mean; };
  const bool comm_leads = mean_of(summary[schemes::Scheme::kRemoteComm].success) >=
                          mean_of(summary[schemes::Scheme::kRemoteNoComm].success);
  const std::vector<double>& remote_best =
      comm_leads ? summary[schemes::Scheme::kRemoteComm].success
                 : summary[schemes::Scheme::kRemoteNoComm].success;
  std::string notes4;
  bool pass4 = true;
  for (schemes::Scheme s :
       {schemes::Scheme::kCombined, schemes::Scheme::kContentionFree,
        schemes::Scheme::kContentionBased, schemes::Scheme::kLocal}) {
    pass4 &= ordered(remote_best, summary[s].success,
                     ("R_s: best remote >= " + schemes::scheme_name(s)).c_str(), notes4);
  }
  report(4, pass4, "remote schemes achieve the highest R_s" + notes4);
}

// ---------------------------------------------------------------------------
// 5. Formula unit suite at 1e-6 relative.
void criterion_5() {
  bool pass = true;
  auto close = [&](double got, double want) {
    if (std::fabs(got - want) > 1e-6 * std::max(1.0, std::fabs(want))) pass = false;
  };

  task::ComputeConfig compute;
  task::Task t;
  t.size_bits = 500;
  t.cycles_per_bit = 20000;
  close(task::local_time_ms(t, compute), 10.0);
  task::Task t2;
  t2.size_bits = 100;
  t2.cycles_per_bit = 100;
  close(task::local_time_ms(t2, compute), 0.01);

  const task::RemoteTime r1 = task::remote_time_ms(t, 10e6, 100e9);
  close(r1.upload_ms, 0.05);
  close(r1.exec_ms, 0.1);
  close(r1.total_ms, 0.15);
  const task::RemoteTime r2 = task::remote_time_ms(t, 10e6, 50e9);
  close(r2.exec_ms, 0.2);
  close(r2.total_ms, 0.25);

  link::LinkConfig link;
  close(link::pathloss_db(1.0, link), 128.1);
  close(link::pathloss_db(0.01, link), 52.9);
  close(link::pathloss_db(0.1, link), 90.5);

  const double p_watt = std::pow(10.0, (link.tx_power_dbm - 30.0) / 10.0);
  const double sigma2 = std::pow(10.0, (link.noise_psd_dbm_hz - 30.0) / 10.0) * link.bandwidth_hz;
  close(link::uplink_rate_bps(sigma2 / p_watt, link), 10e6);
  close(link::uplink_rate_bps(3.0 * sigma2 / p_watt, link), 20e6);
  {
    const double pl_db = 128.1 + 37.6 * std::log10(0.005);
    const double snr = std::pow(10.0, (23.0 - pl_db - (-174.0 + 10.0 * std::log10(10e6))) / 10.0);
    close(link::uplink_rate_bps(link::channel_gain(0.005, link), link),
          10e6 * std::log2(1.0 + snr));
  }

  close(metrics::channel_success_rate(10, 2, 25), 0.2);
  close(metrics::channel_success_rate(0, 2, 25), 0.0);
  close(metrics::channel_success_rate(50, 2, 25), 1.0);
  close(metrics::goodput(5, 25), 0.2);

  report(5, pass, "timing, path-loss, rate, and R_s formulas match hand values at 1e-6");
}

// ---------------------------------------------------------------------------
// 6. GAE recursive vs brute-force double sum, 1000 random trajectories.
void criterion_6() {
  rng::Stream rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t t_len = 1 + static_cast<size_t>(rng.uniform_int(0, 24));
    std::vector<double> rewards(t_len), values(t_len + 1), adv(t_len), ret(t_len);
    std::vector<uint8_t> dones(t_len, 0);
    for (auto& r : rewards) r = rng.uniform_real(-5, 5);
    for (auto& v : values) v = rng.uniform_real(-5, 5);
    for (size_t i = 0; i + 1 < t_len; ++i) dones[i] = rng.bernoulli(0.1) ? 1 : 0;
    dones[t_len - 1] = 1;
    const double gamma = rng.uniform_real(0.9, 1.0), lambda = rng.uniform_real(0.0, 1.0);
    mappo::gae_advantages(rewards, values, dones, gamma, lambda, adv, ret);
    for (size_t t = 0; t < t_len; ++t) {
      double acc = 0.0, factor = 1.0;
      for (size_t i = t; i < t_len; ++i) {
        const double nd = dones[i] ? 0.0 : 1.0;
        acc += factor * (rewards[i] + gamma * values[i + 1] * nd - values[i]);
        if (dones[i]) break;
        factor *= gamma * lambda;
      }
      worst = std::max(worst, std::fabs(adv[t] - acc));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", worst);
  report(6, worst <= 1e-12,
         std::string("GAE recursive vs O(T^2) brute force, max |diff| = ") + buf);
}

// ---------------------------------------------------------------------------
// 7. Analytic gradients vs central finite differences, 20 random nets.
void criterion_7() {
  rng::Stream rng(707);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    mlp::Net net = mlp::make_net({6, 10, 8, 4});
    mlp::init_xavier(net, rng);
    std::vector<double> x(6), target(4), y(4);
    for (auto& v : x) v = rng.uniform_real(-1.5, 1.5);
    for (auto& v : target) v = rng.uniform_real(-1, 1);

    auto loss = [&](const mlp::Net& n) {
      std::vector<double> out(4);
      mlp::Workspace ws = mlp::make_workspace(n);
      mlp::forward(n, x, out, ws);
      double l = 0.0;
      for (int i = 0; i < 4; ++i) l += (out[i] - target[i]) * (out[i] - target[i]);
      return l;
    };

    mlp::Workspace ws = mlp::make_workspace(net);
    mlp::forward(net, x, y, ws);
    std::vector<double> dy(4);
    for (int i = 0; i < 4; ++i) dy[i] = 2.0 * (y[i] - target[i]);
    mlp::ParamBuf grads = mlp::make_param_buf(net);
    mlp::backward(net, ws, dy, grads);

    std::vector<double> flat = mlp::flatten(net);
    std::vector<double> flat_grads;
    for (int l = 0; l < net.n_layers(); ++l) {
      flat_grads.insert(flat_grads.end(), grads.weights[l].begin(), grads.weights[l].end());
      flat_grads.insert(flat_grads.end(), grads.biases[l].begin(), grads.biases[l].end());
    }
    for (size_t k = 0; k < flat.size(); k += 11) {
      const double saved = flat[k];
      flat[k] = saved + h;
      mlp::unflatten(net, flat);
      const double lp = loss(net);
      flat[k] = saved - h;
      mlp::unflatten(net, flat);
      const double lm = loss(net);
      flat[k] = saved;
      mlp::unflatten(net, flat);
      const double fd = (lp - lm) / (2.0 * h);
      const double rel = std::fabs(fd - flat_grads[k]) /
                         std::max({1.0, std::fabs(fd), std::fabs(flat_grads[k])});
      worst = std::max(worst, rel);
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", worst);
  report(7, worst <= 1e-4,
         std::string("analytic vs finite-difference gradients, worst relative error = ") + buf);
}

// ---------------------------------------------------------------------------
// 8. Determinism: identical config + seed produce byte-identical outputs.
void criterion_8(const std::string& out_root) {
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool pass = true;
  std::string detail;
  for (int variant = 0; variant < 2; ++variant) {
    config::ExperimentConfig cfg = config::default_config();
    if (variant == 0) {
      cfg.scheme = schemes::Scheme::kContentionBased;
      cfg.eval_episodes = 10;
    } else {
      cfg.scheme = schemes::Scheme::kCombined;
      cfg.train.episodes = 50;
      cfg.eval_interval = 50;
      cfg.eval_episodes = 5;
    }
    schemes::apply_scheme(cfg.env, cfg.scheme);
    cfg.seeds = {11, 12};
    const std::string dir_a = out_root + "/det_a" + std::to_string(variant);
    const std::string dir_b = out_root + "/det_b" + std::to_string(variant);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    cfg.out_dir = dir_a;
    const harness::ExperimentResult ra = harness::run_experiment(cfg);
    cfg.out_dir = dir_b;
    const harness::ExperimentResult rb = harness::run_experiment(cfg);
    for (size_t i = 0; i < ra.files.size(); ++i) {
      if (ra.files[i].ends_with("_config.json")) continue;  // embeds out_dir
      if (slurp(ra.files[i]) != slurp(rb.files[i])) {
        pass = false;
        detail = "mismatch: " + ra.files[i];
      }
    }
  }
  report(8, pass, pass ? "baseline and training runs byte-identical across repeats" : detail);
}

// ---------------------------------------------------------------------------
// 9. Trainer sanity on the degenerate single-agent bandit.
class BanditEnv : public mappo::MarlEnv {
 public:
  std::vector<mappo::GroupSpec> groups() const override {
    mappo::GroupSpec g;
    g.instances = 1;
    g.input_dim = 1;
    g.head_sizes = {2};
    return {g};
  }
  int critic_input_dim() const override { return 1; }
  int max_steps() const override { return 1; }
  void reset(uint64_t) override { done_ = false; }
  bool done() const override { return done_; }
  void actor_input(int, int, std::span<double> out) const override { out[0] = 1.0; }
  void head_mask(int, int, int, std::span<uint8_t> out) const override { out[0] = out[1] = 1; }
  void critic_input(std::span<double> out) const override { out[0] = 1.0; }
  double step(const std::vector<std::vector<std::vector<int>>>& choices) override {
    done_ = true;
    return choices[0][0][0] == 0 ? 1.0 : 0.0;
  }

 private:
  bool done_ = true;
};

void criterion_9() {
  bool pass = true;
  std::string detail = "greedy prob of the paying arm after 200 updates:";
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    mappo::Hyper hyper;
    hyper.episodes = 200 * 20;
    hyper.episodes_per_update = 20;  // 200 updates total
    hyper.lr = 0.01;
    hyper.entropy_coef = 0.05;
    hyper.minibatch = 32;
    mappo::Trainer t([] { return std::make_unique<BanditEnv>(); }, hyper, seed);
    t.train();
    std::vector<double> input{1.0};
    std::vector<uint8_t> mask{1, 1};
    const double p = t.head_probs(0, input, 0, mask)[0];
    detail += " " + fmt(p);
    pass &= p > 0.95;
  }
  report(9, pass, detail + " (5 seeds)");
}

// ---------------------------------------------------------------------------
// 10. Conservation over a 1000-episode fuzz run.
void criterion_10() {
  rng::Stream actor(1010);
  bool pass = true;
  int64_t episodes = 0;
  const schemes::Scheme scheme_pool[] = {schemes::Scheme::kCombined, schemes::Scheme::kRemoteComm,
                                         schemes::Scheme::kLocal};
  for (int ep = 0; ep < 1000 && pass; ++ep) {
    env::EnvConfig cfg;
    const schemes::Scheme s = scheme_pool[ep % 3];
    schemes::apply_scheme(cfg, s);
    cfg.queue_capacity = 2 + static_cast<int>(actor.uniform_int(0, 23));
    cfg.prefill = static_cast<int>(actor.uniform_int(0, std::min(2, cfg.queue_capacity)));
    env::Environment e(cfg);
    e.reset(rng::mix({0xC0117u, static_cast<uint64_t>(ep)}));
    while (!e.done()) {
      std::vector<env::DeviceAction> acts;
      for (int n = 0; n < cfg.n_devices; ++n) {
        const auto mask = e.device_env_mask(n);
        int c;
        do {
          c = static_cast<int>(actor.uniform_int(0, cfg.n_channels));
        } while (!mask[c]);
        const int u = cfg.uplink_messages ? static_cast<int>(actor.uniform_int(0, 1)) : 0;
        acts.push_back({c, u});
      }
      env::BsAction bs;
      for (int n = 0; n < cfg.n_devices; ++n) {
        bs.downlink.push_back(
            cfg.downlink_messages ? static_cast<int>(actor.uniform_int(0, cfg.n_channels + 1)) : 0);
      }
      e.step(acts, bs);
    }
    const auto& st = e.stats();
    if (st.arrivals != st.completions_ok + st.completions_late + st.dropped_timeout +
                           st.dropped_full + st.residual_tasks) {
      pass = false;
    }
    ++episodes;
  }
  report(10, pass,
         "arrivals = completions + drops + residual over " + std::to_string(episodes) +
             " fuzz episodes");
}

}  // namespace

int main(int argc, char** argv) {
  // --ordering-episodes N scales the big comparison run; the default matches
  // the reference training length.
  int ordering_episodes = 10000;
  int seeds = 5;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--ordering-episodes") == 0 && i + 1 < argc) {
      ordering_episodes = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--seeds") == 0 && i + 1 < argc) {
      seeds = std::atoi(argv[++i]);
    }
  }
  const std::string out_root = "acceptance_results";
  fs::create_directories(out_root);

  criterion_1();
  criterion_2();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_9();
  criterion_10();
  criterion_8(out_root);
  criteria_3_4(out_root, ordering_episodes, seeds);

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "RESULT", failures);
  return failures == 0 ? 0 : 1;
}
