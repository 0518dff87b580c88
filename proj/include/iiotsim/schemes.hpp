#ifndef IIOTSIM_SCHEMES_HPP_
#define IIOTSIM_SCHEMES_HPP_

#include <memory>
#include <string>

#include "iiotsim/baselines.hpp"
#include "iiotsim/env.hpp"
#include "iiotsim/mappo.hpp"

namespace iiotsim::schemes {

enum class Scheme {
  kCombined,         // learned offload-or-local with both message channels
  kLocal,            // all tasks computed locally (fixed policy)
  kRemoteComm,       // learned offload-only with messages
  kRemoteNoComm,     // learned offload-only, messages forced null
  kContentionFree,   // request/grant/ACK scheduler at the BS
  kContentionBased,  // p-persistent random access
};

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);  // throws on unknown name
bool scheme_is_trained(Scheme s);

// Applies the scheme's action-space semantics to an environment config.
void apply_scheme(env::EnvConfig& cfg, Scheme s);

// Wraps the environment as a trainable MarlEnv with two actor groups:
// group 0 = the shared device actor (one-hot device id appended to its
// state), group 1 = the BS actor with one downlink head per device. Device
// joint action index = env_choice * 2 + uplink_msg.
class IiotMarlEnv : public mappo::MarlEnv {
 public:
  IiotMarlEnv(const env::EnvConfig& cfg, Scheme scheme);

  std::vector<mappo::GroupSpec> groups() const override;
  int critic_input_dim() const override;
  int max_steps() const override { return env_.config().t_max; }
  void reset(uint64_t episode_seed) override { env_.reset(episode_seed); }
  bool done() const override { return env_.done(); }
  void actor_input(int group, int instance, std::span<double> out) const override;
  void head_mask(int group, int instance, int head, std::span<uint8_t> out) const override;
  void critic_input(std::span<double> out) const override;
  double step(const std::vector<std::vector<std::vector<int>>>& choices) override;

  env::Environment& raw() { return env_; }
  const env::Environment& raw() const { return env_; }

 private:
  env::Environment env_;
  Scheme scheme_;
};

// Runs one episode under a hand-coded baseline scheme. The policy stream
// drives the stochastic schemes. Tracing obeys the environment's flag.
void run_baseline_episode(env::Environment& e, Scheme scheme, uint64_t episode_seed,
                          rng::Stream& policy_rng, double p_transmit);

}  // namespace iiotsim::schemes

#endif  // IIOTSIM_SCHEMES_HPP_
