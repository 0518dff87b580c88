#include "iiotsim/baselines.hpp"

namespace iiotsim::baselines {

env::DeviceAction local_policy(const env::DeviceObservation& obs) {
  (void)obs;
  return env::DeviceAction{0, 0};
}

env::DeviceAction contention_free_device(const env::Environment& e, int dev, int last_downlink) {
  env::DeviceAction a{0, 0};
  const int m = e.config().n_channels;
  if (last_downlink >= 1 && last_downlink <= m && e.device_can_serve(dev)) {
    a.env_choice = last_downlink;
  }
  a.uplink_msg = e.device_obs(dev).queue_len > 0 ? 1 : 0;
  return a;
}

env::BsAction contention_free_bs(const std::vector<int>& requests,
                                 const std::vector<uint8_t>& completions,
                                 const std::vector<int>& chan_states,
                                 const std::vector<int>& prev_downlink, int n_channels) {
  const int n = static_cast<int>(requests.size());
  env::BsAction act;
  act.downlink.assign(n, 0);
  std::vector<uint8_t> mid_handshake(n, 0);
  for (int dev = 0; dev < n; ++dev) {
    if (prev_downlink[dev] >= 1 && prev_downlink[dev] <= n_channels) mid_handshake[dev] = 1;
  }
  for (int h : chan_states) {
    if (h >= 1 && h <= n) mid_handshake[h - 1] = 1;  // winner, task completing
  }
  int next_channel = 1;
  for (int dev = 0; dev < n; ++dev) {
    if (completions[dev]) {
      act.downlink[dev] = n_channels + 1;  // ACK; any request is ignored
      continue;
    }
    if (requests[dev] == 1 && !mid_handshake[dev] && next_channel <= n_channels) {
      act.downlink[dev] = next_channel++;
    }
  }
  return act;
}

env::DeviceAction contention_based_device(const env::Environment& e, int dev, rng::Stream& rng,
                                          double p_transmit) {
  env::DeviceAction a{0, 0};
  if (!e.device_can_serve(dev)) return a;
  if (rng.bernoulli(p_transmit)) {
    a.env_choice = static_cast<int>(rng.uniform_int(1, e.config().n_channels));
  }
  return a;
}

}  // namespace iiotsim::baselines
