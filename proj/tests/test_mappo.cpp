#include <cmath>
#include <memory>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "iiotsim/mappo.hpp"
#include "iiotsim/schemes.hpp"

using namespace iiotsim;

namespace {

// Brute-force O(T^2) double sum: A_t = sum_i (gl)^i delta_{t+i}, cut at dones.
void gae_brute_force(std::span<const double> rewards, std::span<const double> values,
                     std::span<const uint8_t> dones, double gamma, double lambda,
                     std::span<double> adv) {
  const size_t t_len = rewards.size();
  for (size_t t = 0; t < t_len; ++t) {
    double acc = 0.0, factor = 1.0;
    for (size_t i = t; i < t_len; ++i) {
      const double not_done = dones[i] ? 0.0 : 1.0;
      const double delta = rewards[i] + gamma * values[i + 1] * not_done - values[i];
      acc += factor * delta;
      if (dones[i]) break;
      factor *= gamma * lambda;
    }
    adv[t] = acc;
  }
}

// Test-only degenerate environment: one agent, two arms, one-slot episodes,
// arm 0 pays +1 and arm 1 pays 0.
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
  void head_mask(int, int, int, std::span<uint8_t> out) const override {
    out[0] = 1;
    out[1] = 1;
  }
  void critic_input(std::span<double> out) const override { out[0] = 1.0; }
  double step(const std::vector<std::vector<std::vector<int>>>& choices) override {
    done_ = true;
    return choices[0][0][0] == 0 ? 1.0 : 0.0;
  }

 private:
  bool done_ = true;
};

}  // namespace

TEST_CASE("masked softmax: invalid actions get probability exactly zero") {
  rng::Stream rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(0, 6));
    std::vector<double> logits(k), probs(k);
    std::vector<uint8_t> mask(k, 0);
    for (auto& l : logits) l = rng.uniform_real(-30, 30);
    int n_valid = 0;
    for (auto& m : mask) {
      m = rng.bernoulli(0.6) ? 1 : 0;
      n_valid += m;
    }
    if (n_valid == 0) mask[0] = 1;
    mappo::masked_softmax(logits, mask, probs);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      if (!mask[i]) CHECK(probs[i] == 0.0);
      sum += probs[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Sampling never lands on a masked arm.
    for (int draw = 0; draw < 50; ++draw) {
      CHECK(mask[mappo::sample_categorical(probs, rng)] == 1);
    }
  }
}

TEST_CASE("zero logits give the uniform distribution over valid actions") {
  std::vector<double> logits(6, 0.0), probs(6);
  std::vector<uint8_t> mask{1, 0, 1, 1, 0, 1};
  mappo::masked_softmax(logits, mask, probs);
  for (int i = 0; i < 6; ++i) {
    CHECK(probs[i] == doctest::Approx(mask[i] ? 0.25 : 0.0).epsilon(1e-15));
  }
}

TEST_CASE("gae: hand values, one-step limit, and oracle equivalence") {
  // gamma = lambda = 1, rewards (1,1), values 0 -> A = (2,1).
  {
    std::vector<double> rewards{1.0, 1.0}, values{0.0, 0.0, 0.0}, adv(2), ret(2);
    std::vector<uint8_t> dones{0, 1};
    mappo::gae_advantages(rewards, values, dones, 1.0, 1.0, adv, ret);
    CHECK(adv[0] == doctest::Approx(2.0));
    CHECK(adv[1] == doctest::Approx(1.0));
    CHECK(ret[0] == doctest::Approx(2.0));  // returns = A + V
  }
  // lambda = 0 collapses to the one-step TD residual.
  {
    rng::Stream rng(7);
    const size_t t_len = 9;
    std::vector<double> rewards(t_len), values(t_len + 1), adv(t_len), ret(t_len);
    std::vector<uint8_t> dones(t_len, 0);
    for (auto& r : rewards) r = rng.uniform_real(-1, 1);
    for (auto& v : values) v = rng.uniform_real(-1, 1);
    mappo::gae_advantages(rewards, values, dones, 0.97, 0.0, adv, ret);
    for (size_t t = 0; t < t_len; ++t) {
      const double delta = rewards[t] + 0.97 * values[t + 1] - values[t];
      CHECK(adv[t] == doctest::Approx(delta).epsilon(1e-12));
    }
  }
  // Recursive backward pass equals the brute-force double sum.
  {
    rng::Stream rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
      const size_t t_len = 1 + static_cast<size_t>(rng.uniform_int(0, 24));
      std::vector<double> rewards(t_len), values(t_len + 1), adv(t_len), ret(t_len),
          expect(t_len);
      std::vector<uint8_t> dones(t_len, 0);
      for (auto& r : rewards) r = rng.uniform_real(-5, 5);
      for (auto& v : values) v = rng.uniform_real(-5, 5);
      for (size_t t = 0; t + 1 < t_len; ++t) dones[t] = rng.bernoulli(0.15) ? 1 : 0;
      dones[t_len - 1] = rng.bernoulli(0.8) ? 1 : 0;
      const double gamma = rng.uniform_real(0.9, 1.0);
      const double lambda = rng.uniform_real(0.0, 1.0);
      mappo::gae_advantages(rewards, values, dones, gamma, lambda, adv, ret);
      gae_brute_force(rewards, values, dones, gamma, lambda, expect);
      for (size_t t = 0; t < t_len; ++t) {
        CHECK(std::fabs(adv[t] - expect[t]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("clipped surrogate arithmetic") {
  // ratio 1.5, A = 1, eps 0.2 -> min(1.5, 1.2) = 1.2.
  CHECK(mappo::clip_objective(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  // ratio 0.5, A = -1 -> min(-0.5, -0.8) = -0.8 (clip binds on negative A).
  CHECK(mappo::clip_objective(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  // ratio 1 is the on-policy fixed point: gradient equals the vanilla term.
  CHECK(mappo::clip_objective_dlogp(1.0, 2.5, 0.2) == doctest::Approx(-2.5));
  // Clipped branches are flat.
  CHECK(mappo::clip_objective_dlogp(1.5, 1.0, 0.2) == 0.0);
  CHECK(mappo::clip_objective_dlogp(0.5, -1.0, 0.2) == 0.0);
  // Unclipped branches carry -A * ratio.
  CHECK(mappo::clip_objective_dlogp(0.9, 1.0, 0.2) == doctest::Approx(-0.9));
  CHECK(mappo::clip_objective_dlogp(1.1, -1.0, 0.2) == doctest::Approx(1.1));
}

TEST_CASE("clip derivative matches finite differences away from kinks") {
  rng::Stream rng(55);
  const double h = 1e-7;
  for (int trial = 0; trial < 500; ++trial) {
    const double logp_old = rng.uniform_real(-3, -0.1);
    const double logp_new = logp_old + rng.uniform_real(-0.5, 0.5);
    const double adv = rng.uniform_real(-2, 2);
    const double eps = 0.2;
    const double r0 = std::exp(logp_new - logp_old);
    if (std::fabs(r0 - (1 - eps)) < 1e-3 || std::fabs(r0 - (1 + eps)) < 1e-3) continue;
    auto neg_obj = [&](double lp) { return -mappo::clip_objective(std::exp(lp - logp_old), adv, eps); };
    const double fd = (neg_obj(logp_new + h) - neg_obj(logp_new - h)) / (2 * h);
    const double analytic = mappo::clip_objective_dlogp(r0, adv, eps);
    CHECK(std::fabs(fd - analytic) < 1e-5 * std::max(1.0, std::fabs(analytic)));
  }
}

TEST_CASE("entropy gradient identity dH/dz = -p (log p + H)") {
  rng::Stream rng(21);
  const double h = 1e-6;
  std::vector<double> logits(5), probs(5);
  std::vector<uint8_t> mask(5, 1);
  for (auto& l : logits) l = rng.uniform_real(-2, 2);
  mask[2] = 0;
  mappo::masked_softmax(logits, mask, probs);
  const double H = mappo::categorical_entropy(probs);
  for (int a = 0; a < 5; ++a) {
    if (!mask[a]) continue;
    std::vector<double> lp = logits, pp(5), pm(5);
    lp[a] = logits[a] + h;
    mappo::masked_softmax(lp, mask, pp);
    lp[a] = logits[a] - h;
    mappo::masked_softmax(lp, mask, pm);
    const double fd = (mappo::categorical_entropy(pp) - mappo::categorical_entropy(pm)) / (2 * h);
    const double analytic = -probs[a] * (std::log(probs[a]) + H);
    CHECK(fd == doctest::Approx(analytic).epsilon(1e-4));
  }
}

TEST_CASE("trainer is deterministic: same seed, same parameters and samples") {
  auto factory = [] { return std::make_unique<BanditEnv>(); };
  mappo::Hyper hyper;
  hyper.episodes = 40;
  hyper.episodes_per_update = 10;
  hyper.minibatch = 8;
  mappo::Trainer a(factory, hyper, 31337), b(factory, hyper, 31337);
  a.train();
  b.train();
  CHECK(mlp::flatten(a.actor(0)) == mlp::flatten(b.actor(0)));
  CHECK(mlp::flatten(a.critic()) == mlp::flatten(b.critic()));

  mappo::Trainer c(factory, hyper, 99);
  c.train();
  CHECK(mlp::flatten(a.actor(0)) != mlp::flatten(c.actor(0)));
}

#ifdef _OPENMP
TEST_CASE("training is bit-identical across OpenMP thread counts") {
  env::EnvConfig cfg;
  schemes::apply_scheme(cfg, schemes::Scheme::kCombined);
  auto factory = [&cfg] {
    return std::make_unique<schemes::IiotMarlEnv>(cfg, schemes::Scheme::kCombined);
  };
  mappo::Hyper hyper;
  hyper.episodes = 20;
  hyper.episodes_per_update = 10;

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  mappo::Trainer serial(factory, hyper, 4242);
  serial.train();
  omp_set_num_threads(2);
  mappo::Trainer parallel(factory, hyper, 4242);
  parallel.train();
  omp_set_num_threads(saved);

  CHECK(mlp::flatten(serial.actor(0)) == mlp::flatten(parallel.actor(0)));
  CHECK(mlp::flatten(serial.actor(1)) == mlp::flatten(parallel.actor(1)));
  CHECK(mlp::flatten(serial.critic()) == mlp::flatten(parallel.critic()));
}
#endif

TEST_CASE("zero training episodes leave parameters unchanged") {
  auto factory = [] { return std::make_unique<BanditEnv>(); };
  mappo::Hyper hyper;
  hyper.episodes = 0;
  mappo::Trainer t(factory, hyper, 5);
  const auto before = mlp::flatten(t.actor(0));
  t.train();
  CHECK(mlp::flatten(t.actor(0)) == before);
}

TEST_CASE("bandit: greedy policy locks onto the paying arm") {
  auto factory = [] { return std::make_unique<BanditEnv>(); };
  mappo::Hyper hyper;
  hyper.episodes = 200 * 20;
  hyper.episodes_per_update = 20;
  hyper.lr = 0.01;
  hyper.entropy_coef = 0.05;
  hyper.minibatch = 32;
  mappo::Trainer t(factory, hyper, 7);
  t.train();
  std::vector<double> input{1.0};
  std::vector<uint8_t> mask{1, 1};
  const auto probs = t.head_probs(0, input, 0, mask);
  CHECK(probs[0] > 0.95);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  auto factory = [] { return std::make_unique<BanditEnv>(); };
  mappo::Hyper hyper;
  hyper.episodes = 30;
  hyper.episodes_per_update = 10;
  hyper.minibatch = 8;
  mappo::Trainer t(factory, hyper, 123);
  t.train();
  const std::string path = "/tmp/iiotsim_test_ckpt.bin";
  t.save_checkpoint(path);

  mappo::Trainer loaded(factory, hyper, 999);
  loaded.load_checkpoint(path);
  CHECK(mlp::flatten(loaded.actor(0)) == mlp::flatten(t.actor(0)));
  CHECK(mlp::flatten(loaded.critic()) == mlp::flatten(t.critic()));
  CHECK(loaded.episodes_done() == t.episodes_done());

  // Both continue identically after the round trip.
  t.train_step();
  loaded.train_step();
  CHECK(mlp::flatten(loaded.actor(0)) == mlp::flatten(t.actor(0)));
}

TEST_CASE("advantage normalization invariant: mean 0, std 1 per minibatch") {
  rng::Stream rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + static_cast<size_t>(rng.uniform_int(0, 126));
    std::vector<double> adv(n);
    for (auto& a : adv) a = rng.uniform_real(-20, 20);
    mappo::normalize_in_place(adv);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(sd - 1.0) < 1e-6);
  }
  // Size-1 batches are left alone.
  std::vector<double> one{3.5};
  mappo::normalize_in_place(one);
  CHECK(one[0] == 3.5);
}

TEST_CASE("divergence guard skips wildly off-policy minibatches") {
  auto factory = [] { return std::make_unique<BanditEnv>(); };
  mappo::Hyper hyper;
  hyper.episodes = 1000;
  hyper.episodes_per_update = 20;
  hyper.minibatch = 32;
  mappo::Trainer t(factory, hyper, 77);
  auto trajs = t.collect(20);
  // Pretend the samples came from a far-away policy: ratio = e^5 >> 11.
  for (auto& traj : trajs) {
    for (auto& s : traj.steps) {
      for (auto& group : s.agents) {
        for (auto& a : group) a.logp -= 5.0;
      }
    }
  }
  const auto before = mlp::flatten(t.actor(0));
  t.apply_update(trajs);
  CHECK(t.diag().skipped_updates > 0);
  CHECK(t.diag().updates == 0);
  CHECK(mlp::flatten(t.actor(0)) == before);  // every minibatch was skipped
}

TEST_CASE("scheme masks: remote excludes local service, no-comm pins messages") {
  env::EnvConfig base;
  base.prefill = 1;
  base.arrival.p_task = 0.0;

  // Combined with messages: all six joint actions valid when serviceable.
  {
    env::EnvConfig cfg = base;
    schemes::apply_scheme(cfg, schemes::Scheme::kCombined);
    schemes::IiotMarlEnv menv(cfg, schemes::Scheme::kCombined);
    menv.reset(1);
    std::vector<uint8_t> mask(6);
    menv.head_mask(0, 0, 0, mask);
    CHECK(mask == std::vector<uint8_t>{1, 1, 1, 1, 1, 1});
  }
  // Remote no-comm: env actions open, U=1 halves masked off, BS pinned null.
  {
    env::EnvConfig cfg = base;
    schemes::apply_scheme(cfg, schemes::Scheme::kRemoteNoComm);
    schemes::IiotMarlEnv menv(cfg, schemes::Scheme::kRemoteNoComm);
    menv.reset(1);
    std::vector<uint8_t> mask(6);
    menv.head_mask(0, 0, 0, mask);
    CHECK(mask == std::vector<uint8_t>{1, 0, 1, 0, 1, 0});
    std::vector<uint8_t> bs_mask(4);
    menv.head_mask(1, 0, 0, bs_mask);
    CHECK(bs_mask == std::vector<uint8_t>{1, 0, 0, 0});
    // Index 0 resolves to a hold, never a local start.
    std::vector<std::vector<std::vector<int>>> choices{{{0}, {0}, {0}}, {{0, 0, 0}}};
    menv.step(choices);
    CHECK(menv.raw().device_obs(0).queue_len == 1);  // still queued, not computing
  }
  // Remote with comm: same env actions, both message channels open.
  {
    env::EnvConfig cfg = base;
    schemes::apply_scheme(cfg, schemes::Scheme::kRemoteComm);
    schemes::IiotMarlEnv menv(cfg, schemes::Scheme::kRemoteComm);
    menv.reset(1);
    std::vector<uint8_t> mask(6);
    menv.head_mask(0, 0, 0, mask);
    CHECK(mask == std::vector<uint8_t>{1, 1, 1, 1, 1, 1});
    std::vector<uint8_t> bs_mask(4);
    menv.head_mask(1, 0, 0, bs_mask);
    CHECK(bs_mask == std::vector<uint8_t>{1, 1, 1, 1});
  }
}

TEST_CASE("shared device actor: permuting id tags permutes the distributions") {
  env::EnvConfig cfg;
  schemes::apply_scheme(cfg, schemes::Scheme::kCombined);
  schemes::IiotMarlEnv menv(cfg, schemes::Scheme::kCombined);
  menv.reset(42);
  auto factory = [&cfg] {
    return std::make_unique<schemes::IiotMarlEnv>(cfg, schemes::Scheme::kCombined);
  };
  mappo::Hyper hyper;
  mappo::Trainer t(factory, hyper, 11);

  const auto specs = menv.groups();
  const int dim = specs[0].input_dim;
  const int state_dim = dim - cfg.n_devices;
  std::vector<double> base(dim, 0.0);
  rng::Stream rng(3);
  for (int i = 0; i < state_dim; ++i) base[i] = rng.uniform_real(0, 1);
  std::vector<uint8_t> mask(specs[0].head_sizes[0], 1);

  // Same history, different one-hot tag: distribution depends only on the
  // tag, so swapping tags swaps distributions.
  std::vector<double> tagged_a = base, tagged_b = base;
  tagged_a[state_dim + 0] = 1.0;
  tagged_b[state_dim + 1] = 1.0;
  const auto pa = t.head_probs(0, tagged_a, 0, mask);
  const auto pb = t.head_probs(0, tagged_b, 0, mask);
  const auto pa2 = t.head_probs(0, tagged_a, 0, mask);
  CHECK(pa == pa2);
  CHECK(pa != pb);  // tags are distinguishable (id-conditioned policy)
}
