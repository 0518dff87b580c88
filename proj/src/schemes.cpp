#include "iiotsim/schemes.hpp"

#include <algorithm>
#include <stdexcept>

namespace iiotsim::schemes {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kCombined: return "combined";
    case Scheme::kLocal: return "local";
    case Scheme::kRemoteComm: return "remote-comm";
    case Scheme::kRemoteNoComm: return "remote-nocomm";
    case Scheme::kContentionFree: return "contention-free";
    case Scheme::kContentionBased: return "contention-based";
  }
  throw std::logic_error("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "combined") return Scheme::kCombined;
  if (name == "local") return Scheme::kLocal;
  if (name == "remote-comm") return Scheme::kRemoteComm;
  if (name == "remote-nocomm") return Scheme::kRemoteNoComm;
  if (name == "contention-free") return Scheme::kContentionFree;
  if (name == "contention-based") return Scheme::kContentionBased;
  throw std::invalid_argument("unknown scheme: " + name);
}

bool scheme_is_trained(Scheme s) {
  return s == Scheme::kCombined || s == Scheme::kRemoteComm || s == Scheme::kRemoteNoComm;
}

void apply_scheme(env::EnvConfig& cfg, Scheme s) {
  cfg.ack_gated_removal = false;
  switch (s) {
    case Scheme::kCombined:
      cfg.mode = env::ServiceMode::kCombined;
      cfg.uplink_messages = true;
      cfg.downlink_messages = true;
      break;
    case Scheme::kLocal:
      cfg.mode = env::ServiceMode::kLocalOnly;
      cfg.uplink_messages = false;
      cfg.downlink_messages = false;
      break;
    case Scheme::kRemoteComm:
      cfg.mode = env::ServiceMode::kOffloadOnly;
      cfg.uplink_messages = true;
      cfg.downlink_messages = true;
      break;
    case Scheme::kRemoteNoComm:
      cfg.mode = env::ServiceMode::kOffloadOnly;
      cfg.uplink_messages = false;
      cfg.downlink_messages = false;
      break;
    case Scheme::kContentionFree:
      cfg.mode = env::ServiceMode::kOffloadOnly;
      cfg.uplink_messages = true;
      cfg.downlink_messages = true;
      cfg.ack_gated_removal = true;
      break;
    case Scheme::kContentionBased:
      cfg.mode = env::ServiceMode::kOffloadOnly;
      cfg.uplink_messages = false;
      cfg.downlink_messages = false;
      break;
  }
}

IiotMarlEnv::IiotMarlEnv(const env::EnvConfig& cfg, Scheme scheme) : env_(cfg), scheme_(scheme) {
  if (!scheme_is_trained(scheme)) {
    throw std::invalid_argument("IiotMarlEnv is for trained schemes only");
  }
}

std::vector<mappo::GroupSpec> IiotMarlEnv::groups() const {
  const auto& cfg = env_.config();
  mappo::GroupSpec devices;
  devices.instances = cfg.n_devices;
  devices.input_dim = env_.device_state_dim() + cfg.n_devices;  // one-hot id
  devices.head_sizes = {env_.device_joint_actions()};
  mappo::GroupSpec bs;
  bs.instances = 1;
  bs.input_dim = env_.bs_state_dim();
  bs.head_sizes.assign(cfg.n_devices, env_.downlink_alphabet());
  return {devices, bs};
}

int IiotMarlEnv::critic_input_dim() const {
  return env_.config().n_devices * env_.device_state_dim() + env_.bs_state_dim();
}

void IiotMarlEnv::actor_input(int group, int instance, std::span<double> out) const {
  if (group == 0) {
    const auto& state = env_.device_state(instance);
    std::copy(state.begin(), state.end(), out.begin());
    std::fill(out.begin() + state.size(), out.end(), 0.0);
    out[state.size() + instance] = 1.0;
  } else {
    const auto& state = env_.bs_state();
    std::copy(state.begin(), state.end(), out.begin());
  }
}

void IiotMarlEnv::head_mask(int group, int instance, int head, std::span<uint8_t> out) const {
  if (group == 0) {
    // Joint index = env_choice * 2 + uplink_msg.
    const std::vector<uint8_t> env_mask = env_.device_env_mask(instance);
    const bool comm = env_.config().uplink_messages;
    for (size_t c = 0; c < env_mask.size(); ++c) {
      out[2 * c] = env_mask[c];
      out[2 * c + 1] = env_mask[c] && comm ? 1 : 0;
    }
  } else {
    (void)instance;
    (void)head;
    if (env_.config().downlink_messages) {
      std::fill(out.begin(), out.end(), 1);
    } else {
      std::fill(out.begin(), out.end(), 0);
      out[0] = 1;  // null symbol only
    }
  }
}

void IiotMarlEnv::critic_input(std::span<double> out) const {
  const std::vector<double> g = env_.global_state();
  std::copy(g.begin(), g.end(), out.begin());
}

double IiotMarlEnv::step(const std::vector<std::vector<std::vector<int>>>& choices) {
  const int n = env_.config().n_devices;
  std::vector<env::DeviceAction> device_actions(n);
  for (int dev = 0; dev < n; ++dev) {
    const int joint = choices[0][dev][0];
    device_actions[dev].env_choice = joint / 2;
    device_actions[dev].uplink_msg = joint % 2;
  }
  env::BsAction bs;
  bs.downlink.resize(n);
  for (int dev = 0; dev < n; ++dev) bs.downlink[dev] = choices[1][0][dev];
  return env_.step(device_actions, bs).team_reward;
}

void run_baseline_episode(env::Environment& e, Scheme scheme, uint64_t episode_seed,
                          rng::Stream& policy_rng, double p_transmit) {
  e.reset(episode_seed);
  const int n = e.config().n_devices;
  std::vector<int> prev_downlink(n, 0);  // BS-side handshake memory
  while (!e.done()) {
    std::vector<env::DeviceAction> acts(n);
    env::BsAction bs;
    bs.downlink.assign(n, 0);
    switch (scheme) {
      case Scheme::kLocal:
        for (int dev = 0; dev < n; ++dev) acts[dev] = baselines::local_policy(e.device_obs(dev));
        break;
      case Scheme::kContentionFree:
        for (int dev = 0; dev < n; ++dev) {
          acts[dev] = baselines::contention_free_device(e, dev, e.last_downlink(dev));
        }
        bs = baselines::contention_free_bs(e.last_uplink(), e.bs_obs().success_set,
                                           e.bs_obs().chan_states, prev_downlink,
                                           e.config().n_channels);
        prev_downlink = bs.downlink;
        break;
      case Scheme::kContentionBased:
        for (int dev = 0; dev < n; ++dev) {
          acts[dev] = baselines::contention_based_device(e, dev, policy_rng, p_transmit);
        }
        break;
      default:
        throw std::invalid_argument("run_baseline_episode: scheme is trained");
    }
    e.step(acts, bs);
  }
}

}  // namespace iiotsim::schemes
