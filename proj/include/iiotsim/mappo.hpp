#ifndef IIOTSIM_MAPPO_HPP_
#define IIOTSIM_MAPPO_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iiotsim/mlp.hpp"
#include "iiotsim/rng.hpp"

namespace iiotsim::mappo {

// --- masked categorical ----------------------------------------------------

// Softmax over the valid entries; invalid actions get probability exactly 0.
// At least one entry must be valid.
void masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask,
                    std::span<double> probs);

int sample_categorical(std::span<const double> probs, rng::Stream& rng);

// Deterministic argmax over valid entries (lowest index wins ties).
int argmax_masked(std::span<const double> logits, std::span<const uint8_t> mask);

double categorical_entropy(std::span<const double> probs);

// --- generalized advantage estimation ---------------------------------------

// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
// A_t     = sum_i (gamma*lambda)^i delta_{t+i}, truncated at episode ends
// R_t     = A_t + V_t
// `values` carries one bootstrap entry beyond `rewards`.
void gae_advantages(std::span<const double> rewards, std::span<const double> values,
                    std::span<const uint8_t> dones, double gamma, double lambda,
                    std::span<double> advantages, std::span<double> returns);

// --- clipped surrogate pieces -----------------------------------------------

// min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv)
double clip_objective(double ratio, double advantage, double eps);

// d/d(logp_new) of -clip_objective (the per-sample policy loss term).
double clip_objective_dlogp(double ratio, double advantage, double eps);

// In-place shift/scale to mean 0, std 1 (plus 1e-8); no-op for size < 2.
void normalize_in_place(std::span<double> values);

// --- multi-agent environment interface --------------------------------------

// One shared actor per group; `instances` agents execute it. Each agent emits
// one choice per head; invalid choices are masked out per slot.
struct GroupSpec {
  int instances = 1;
  int input_dim = 0;
  std::vector<int> head_sizes;
};

class MarlEnv {
 public:
  virtual ~MarlEnv() = default;
  virtual std::vector<GroupSpec> groups() const = 0;
  virtual int critic_input_dim() const = 0;
  virtual int max_steps() const = 0;
  virtual void reset(uint64_t episode_seed) = 0;
  virtual bool done() const = 0;
  virtual void actor_input(int group, int instance, std::span<double> out) const = 0;
  virtual void head_mask(int group, int instance, int head, std::span<uint8_t> out) const = 0;
  virtual void critic_input(std::span<double> out) const = 0;
  // Applies every agent's choices ([group][instance][head]); returns the team
  // reward for the slot.
  virtual double step(const std::vector<std::vector<std::vector<int>>>& choices) = 0;
};

// --- trainer -----------------------------------------------------------------

struct Hyper {
  int episodes = 10000;
  double lr = 1e-3;
  int minibatch = 128;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double value_coef = 0.2;    // c1
  double entropy_coef = 0.2;  // c2
  double adam_eps = 1e-5;
  int epochs = 4;
  int episodes_per_update = 10;
  std::vector<int> hidden = {64, 64};
  // Off by default: the entropy coefficient above is calibrated against raw
  // advantage magnitudes; normalizing them lets the entropy term pin the
  // policy near uniform.
  bool normalize_advantages = false;
  double grad_clip = 0.5;  // per-network L2; <= 0 disables
  // Stop an update's remaining epochs once the mean approximate KL to the
  // collection policy exceeds this; <= 0 disables.
  double kl_stop = 0.05;
};

// Per-agent record of one slot.
struct AgentSample {
  std::vector<double> input;
  std::vector<std::vector<uint8_t>> masks;  // per head
  std::vector<int> choice;                  // per head
  double logp = 0.0;                        // summed over heads
};

// Per-slot rollout record; `agents` indexed [group][instance].
struct StepRecord {
  std::vector<double> critic_input;
  std::vector<std::vector<AgentSample>> agents;
  double reward = 0.0;
  double value = 0.0;
  uint8_t done = 0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  double bootstrap_value = 0.0;  // critic value past the last step (0 if terminal)
};

struct TrainDiag {
  int64_t updates = 0;
  int64_t skipped_updates = 0;  // divergence guard hits
  int64_t episodes = 0;
};

// Centralized-training / decentralized-execution PPO over an arbitrary
// MarlEnv: one shared actor per group, one centralized critic over the
// global state, clipped-surrogate updates with value and entropy terms, Adam.
class Trainer {
 public:
  Trainer(std::function<std::unique_ptr<MarlEnv>()> env_factory, const Hyper& hyper,
          uint64_t seed);

  // Runs hyper.episodes of training. eval_cb (optional) fires at episode 0,
  // whenever the finished-episode count crosses a multiple of eval_interval,
  // and after the final episode.
  void train(int eval_interval = 0, const std::function<void(int64_t)>& eval_cb = {});

  // One collection batch + PPO update; returns episodes just collected.
  int train_step();

  // The PPO update alone, on caller-supplied trajectories. train_step() is
  // collect() followed by this.
  void apply_update(const std::vector<Trajectory>& trajs);

  // --- policy access ---------------------------------------------------------
  std::vector<int> act_sample(int group, std::span<const double> input,
                              const std::vector<std::vector<uint8_t>>& masks, rng::Stream& rng,
                              double* logp = nullptr) const;
  std::vector<int> act_greedy(int group, std::span<const double> input,
                              const std::vector<std::vector<uint8_t>>& masks) const;
  // Distribution of one head given an input (diagnostics and tests).
  std::vector<double> head_probs(int group, std::span<const double> input, int head,
                                 std::span<const uint8_t> mask) const;
  double value(std::span<const double> critic_input) const;

  const mlp::Net& actor(int group) const { return actors_[group]; }
  const mlp::Net& critic() const { return critic_; }
  const TrainDiag& diag() const { return diag_; }
  const Hyper& hyper() const { return hyper_; }
  int64_t episodes_done() const { return episodes_done_; }

  // Versioned binary checkpoint: hyper, every parameter tensor, Adam moments,
  // and RNG states. Round-trips exactly.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  // Rollout collection, exposed for tests.
  std::vector<Trajectory> collect(int n_episodes);

 private:
  struct FlatBatch;  // defined in mappo.cpp

  Trajectory run_episode(uint64_t env_seed, uint64_t policy_seed);
  void check_finite() const;

  std::function<std::unique_ptr<MarlEnv>()> env_factory_;
  Hyper hyper_;
  uint64_t master_seed_;
  std::vector<GroupSpec> specs_;
  std::vector<mlp::Net> actors_;
  mlp::Net critic_;
  std::vector<mlp::Adam> actor_opt_;
  std::unique_ptr<mlp::Adam> critic_opt_;
  rng::Stream shuffle_rng_;
  int64_t episodes_done_ = 0;
  TrainDiag diag_;
};

}  // namespace iiotsim::mappo

#endif  // IIOTSIM_MAPPO_HPP_
