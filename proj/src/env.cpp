#include "iiotsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iiotsim::env {

// History-window layout (all one-hots zero-padded before the first slot).
//
// Device block, per slot, newest block first:
//   [0]              queue_len / capacity
//   [1..3]           one-hot selected-channel state S in {0,1,2}
//   [4..4+M]         one-hot env action taken (M+1 entries)
//   [5+M]            uplink message U sent
//   [6+M..7+2M]      one-hot downlink message received (M+2 entries)
// Block size: 2M + 8.
//
// BS block, per slot, newest block first:
//   [0..M*(N+2)-1]   per-channel one-hot h_m in {0..N+1}
//   [+N]             success-set flags
//   [+N]             uplink messages received
//   [+N*(M+2)]       per-device one-hot downlink sent
// Block size: M*(N+2) + 2N + N*(M+2).

namespace {
constexpr double kMinDistanceKm = 1e-4;  // 0.1 m placement clamp
}

Environment::Environment(const EnvConfig& cfg) : cfg_(cfg) {
  if (cfg.n_devices < 1 || cfg.n_channels < 1) {
    throw std::invalid_argument("need at least one device and one channel");
  }
  if (cfg.history_len < 1) throw std::invalid_argument("history_len must be >= 1");
  if (cfg.t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (cfg.compute.f_local_hz > cfg.compute.f_bs_total_hz) {
    throw std::invalid_argument("f_local exceeds BS capacity");
  }
  devices_.reserve(cfg.n_devices);
  for (int n = 0; n < cfg.n_devices; ++n) devices_.emplace_back(cfg.queue_capacity);
  rates_bps_.assign(cfg.n_devices, 0.0);
  device_obs_.assign(cfg.n_devices, {});
  device_chan_state_.assign(cfg.n_devices, link::kNotNeeded);
  last_uplink_.assign(cfg.n_devices, 0);
  last_downlink_.assign(cfg.n_devices, 0);
  device_states_.assign(cfg.n_devices, std::vector<double>(device_state_dim(), 0.0));
  bs_state_.assign(bs_state_dim(), 0.0);
  bs_obs_.chan_states.assign(cfg.n_channels, 0);
  bs_obs_.success_set.assign(cfg.n_devices, 0);
}

int Environment::device_state_dim() const {
  return cfg_.history_len * (2 * cfg_.n_channels + 8);
}

int Environment::bs_state_dim() const {
  const int m = cfg_.n_channels, n = cfg_.n_devices;
  return cfg_.history_len * (m * (n + 2) + 2 * n + n * (m + 2));
}

int Environment::queue_len(int dev) const {
  return devices_[dev].queue.size() + (devices_[dev].in_service ? 1 : 0);
}

void Environment::reset(uint64_t episode_seed) {
  episode_seed_ = episode_seed;
  env_rng_ = rng::Stream(episode_seed);
  slot_ = 0;
  done_ = false;
  stats_ = {};
  trace_.clear();

  // Placement: devices uniform in the area, BS at the center. Gains are flat
  // across subcarriers, so each device has one episode-constant rate.
  const double half = cfg_.area_m / 2.0;
  for (int n = 0; n < cfg_.n_devices; ++n) {
    const double x = env_rng_.uniform_real(0.0, cfg_.area_m) - half;
    const double y = env_rng_.uniform_real(0.0, cfg_.area_m) - half;
    const double d_km = std::max(std::hypot(x, y) / 1000.0, kMinDistanceKm);
    devices_[n].distance_km = d_km;
    rates_bps_[n] = link::uplink_rate_bps(link::channel_gain(d_km, cfg_.link), cfg_.link);
  }

  for (int n = 0; n < cfg_.n_devices; ++n) {
    auto& dev = devices_[n];
    while (!dev.queue.empty()) dev.queue.pop();
    dev.in_service.reset();
    for (int k = 0; k < cfg_.prefill && !dev.queue.full(); ++k) {
      task::Task t = task::sample_task(env_rng_, cfg_.task_ranges);
      t.birth_slot = 0;
      t.drop_at_slot = 2;
      dev.queue.push(t);
      ++stats_.arrivals;
    }
  }

  device_chan_state_.assign(cfg_.n_devices, link::kNotNeeded);
  last_uplink_.assign(cfg_.n_devices, 0);
  last_downlink_.assign(cfg_.n_devices, 0);
  bs_obs_.chan_states.assign(cfg_.n_channels, 0);
  bs_obs_.success_set.assign(cfg_.n_devices, 0);

  for (int n = 0; n < cfg_.n_devices; ++n) {
    std::fill(device_states_[n].begin(), device_states_[n].end(), 0.0);
    device_obs_[n] = DeviceObservation{queue_len(n), link::kNotNeeded};
    push_device_record(n, device_obs_[n], DeviceAction{}, 0);
  }
  std::fill(bs_state_.begin(), bs_state_.end(), 0.0);
  push_bs_record(bs_obs_, std::vector<int>(cfg_.n_devices, 0),
                 std::vector<int>(cfg_.n_devices, 0));
}

bool Environment::device_can_serve(int dev) const {
  return !devices_[dev].queue.empty() && !devices_[dev].in_service;
}

std::vector<uint8_t> Environment::device_env_mask(int dev) const {
  std::vector<uint8_t> mask(cfg_.n_channels + 1, 0);
  mask[0] = 1;
  if (device_can_serve(dev) && cfg_.mode != ServiceMode::kLocalOnly) {
    for (int m = 1; m <= cfg_.n_channels; ++m) mask[m] = 1;
  }
  return mask;
}

StepOutcome Environment::step(const std::vector<DeviceAction>& device_actions,
                              const BsAction& bs_action) {
  if (done_) throw std::logic_error("step() after episode end");
  const int n_dev = cfg_.n_devices;
  const int n_ch = cfg_.n_channels;
  if (static_cast<int>(device_actions.size()) != n_dev ||
      static_cast<int>(bs_action.downlink.size()) != n_dev) {
    throw std::invalid_argument("malformed action vector");
  }

  std::vector<uint8_t> can_serve(n_dev, 0);
  for (int n = 0; n < n_dev; ++n) {
    const auto& a = device_actions[n];
    if (a.env_choice < 0 || a.env_choice > n_ch) throw std::invalid_argument("channel choice out of range");
    if (a.uplink_msg != 0 && a.uplink_msg != 1) throw std::invalid_argument("uplink message out of alphabet");
    if (!cfg_.uplink_messages && a.uplink_msg != 0) throw std::invalid_argument("uplink messages disabled");
    const int d = bs_action.downlink[n];
    if (d < 0 || d > n_ch + 1) throw std::invalid_argument("downlink message out of alphabet");
    if (!cfg_.downlink_messages && d != 0) throw std::invalid_argument("downlink messages disabled");
    can_serve[n] = device_can_serve(n) ? 1 : 0;
    if (a.env_choice > 0) {
      if (!can_serve[n]) throw std::logic_error("offload action from a device that cannot serve");
      if (cfg_.mode == ServiceMode::kLocalOnly) throw std::logic_error("offload action in local-only mode");
    }
  }

  StepOutcome out;
  out.device_rewards.assign(n_dev, 0.0);
  out.effects.assign(n_dev, ActionEffect::kNoop);

  // (0) ACK-gated deletions (contention-free mode only): a held task leaves
  // the queue the slot its ACK arrives, or two slots past completion when no
  // ACK comes (a late completion draws none). Masks were computed before
  // this, so the freed device cannot start service until next slot.
  if (cfg_.ack_gated_removal) {
    for (int n = 0; n < n_dev; ++n) {
      auto& dev = devices_[n];
      if (dev.in_service && dev.in_service->awaiting_ack &&
          (last_downlink_[n] == n_ch + 1 || slot_ >= dev.in_service->completion_slot + 2)) {
        dev.in_service.reset();
      }
    }
  }

  // (1) Arrivals. The capacity check counts the in-service task, which keeps
  // its queue slot until completion. Draw parity is preserved on the full
  // path so replays are occupancy-independent.
  for (int n = 0; n < n_dev; ++n) {
    if (!env_rng_.bernoulli(cfg_.arrival.p_task)) continue;
    task::Task t = task::sample_task(env_rng_, cfg_.task_ranges);
    if (queue_len(n) >= cfg_.queue_capacity) {
      ++out.dropped_full;
    } else {
      t.birth_slot = slot_;
      t.drop_at_slot = slot_ + 2;  // queue lifetime: two slots past birth
      devices_[n].queue.push(t);
    }
    ++out.arrivals;
  }

  // (2) Channel resolution over the transmitting devices.
  std::vector<int> choices(n_dev, 0);
  for (int n = 0; n < n_dev; ++n) choices[n] = device_actions[n].env_choice;
  link::ChannelReport report = link::resolve_channels(choices, n_ch);
  device_chan_state_ = report.device_state;
  out.collision_channels = report.collisions;
  out.success_channels = report.successes;

  // (3) Service starts. Winners compute remotely with the BS budget split
  // equally across this slot's successful offloads; env action 0 starts a
  // local computation in combined/local modes.
  const int winners = report.successes;
  const double f_m = winners > 0 ? cfg_.compute.f_bs_total_hz / winners : 0.0;
  for (int n = 0; n < n_dev; ++n) {
    auto& dev = devices_[n];
    const int choice = device_actions[n].env_choice;
    if (choice > 0 && report.device_state[n] == link::kFree) {
      task::Task t = dev.queue.pop();
      const task::RemoteTime rt = task::remote_time_ms(t, rates_bps_[n], f_m);
      const int occupancy = std::max<int>(1, static_cast<int>(std::ceil(rt.total_ms / cfg_.slot_ms)));
      dev.in_service = InService{t, slot_ + occupancy - 1, t.elapsed_ms + rt.total_ms, true};
      out.effects[n] = ActionEffect::kOffloadStart;
    } else if (choice > 0) {
      out.effects[n] = ActionEffect::kOffloadClash;
    } else if (can_serve[n] && cfg_.mode != ServiceMode::kOffloadOnly) {
      task::Task t = dev.queue.pop();
      const double d = task::local_time_ms(t, cfg_.compute);
      const int occupancy = std::max<int>(1, static_cast<int>(std::ceil(d / cfg_.slot_ms)));
      dev.in_service = InService{t, slot_ + occupancy - 1, t.elapsed_ms + d, false};
      out.effects[n] = ActionEffect::kLocalStart;
    } else if (can_serve[n]) {
      out.effects[n] = ActionEffect::kWait;
    }
  }

  // (4) Completions, scored against the deadline. Under ACK gating an
  // on-time remote task keeps its queue slot until the ACK handshake; a late
  // one draws no ACK and leaves at once.
  std::vector<uint8_t> success_set(n_dev, 0);
  for (int n = 0; n < n_dev; ++n) {
    auto& dev = devices_[n];
    if (!dev.in_service || dev.in_service->awaiting_ack ||
        dev.in_service->completion_slot != slot_) {
      continue;
    }
    const bool on_time = dev.in_service->final_elapsed_ms <= dev.in_service->task.deadline_ms;
    if (on_time) {
      out.device_rewards[n] += cfg_.rho;
      ++out.completions_ok;
      success_set[n] = 1;
    } else {
      out.device_rewards[n] -= cfg_.rho;
      ++out.completions_late;
    }
    if (cfg_.ack_gated_removal && dev.in_service->remote) {
      dev.in_service->awaiting_ack = true;
    } else {
      dev.in_service.reset();
    }
  }

  // (5) Timeout drops: a task that has not started service by the end of the
  // second slot past its birth is discarded with reward 0. Expiry follows
  // birth order, so scanning from the head suffices.
  for (int n = 0; n < n_dev; ++n) {
    auto& q = devices_[n].queue;
    while (!q.empty() && q.front().drop_at_slot >= 0 && slot_ >= q.front().drop_at_slot) {
      q.pop();
      ++out.dropped_timeout;
    }
    for (auto& t : q) t.elapsed_ms += cfg_.slot_ms;  // waiting tasks age one slot
  }

  // (6) Messages and next observations; history windows shift by one slot.
  bs_obs_.chan_states = report.channel_state;
  bs_obs_.success_set = success_set;
  std::vector<int> uplink(n_dev, 0);
  for (int n = 0; n < n_dev; ++n) uplink[n] = device_actions[n].uplink_msg;
  last_uplink_ = uplink;
  last_downlink_ = bs_action.downlink;
  for (int n = 0; n < n_dev; ++n) {
    device_obs_[n] = DeviceObservation{queue_len(n), device_chan_state_[n]};
    push_device_record(n, device_obs_[n], device_actions[n], bs_action.downlink[n]);
  }
  push_bs_record(bs_obs_, uplink, bs_action.downlink);

  // (7) Termination.
  for (int n = 0; n < n_dev; ++n) {
    out.team_reward += out.device_rewards[n];
  }
  bool all_idle = true;
  for (int n = 0; n < n_dev; ++n) {
    if (!devices_[n].queue.empty() || devices_[n].in_service) all_idle = false;
  }
  ++slot_;
  done_ = all_idle || slot_ >= cfg_.t_max;

  stats_.arrivals += out.arrivals;
  stats_.dropped_full += out.dropped_full;
  stats_.dropped_timeout += out.dropped_timeout;
  stats_.completions_ok += out.completions_ok;
  stats_.completions_late += out.completions_late;
  stats_.collision_channel_slots += out.collision_channels;
  stats_.success_channel_slots += out.success_channels;
  stats_.total_reward += out.team_reward;
  stats_.slots = slot_;
  if (done_) {
    // Conservation residual: tasks not yet scored. A held ACK-pending task is
    // already counted as a completion.
    stats_.residual_tasks = 0;
    for (int n = 0; n < n_dev; ++n) {
      stats_.residual_tasks += devices_[n].queue.size();
      if (devices_[n].in_service && !devices_[n].in_service->awaiting_ack) {
        ++stats_.residual_tasks;
      }
    }
  }

  if (tracing_) {
    TraceRecord rec;
    rec.slot = slot_ - 1;
    rec.device_actions = device_actions;
    rec.downlink = bs_action.downlink;
    rec.channel_state = report.channel_state;
    rec.effects = out.effects;
    rec.team_reward = out.team_reward;
    rec.completions_ok = out.completions_ok;
    rec.completions_late = out.completions_late;
    rec.dropped_timeout = out.dropped_timeout;
    rec.dropped_full = out.dropped_full;
    rec.arrivals = out.arrivals;
    trace_.push_back(std::move(rec));
  }

  out.done = done_;
  return out;
}

DeviceObservation Environment::device_obs(int dev) const { return device_obs_[dev]; }

std::vector<double> Environment::global_state() const {
  std::vector<double> g;
  g.reserve(cfg_.n_devices * device_state_dim() + bs_state_dim());
  for (int n = 0; n < cfg_.n_devices; ++n) {
    g.insert(g.end(), device_states_[n].begin(), device_states_[n].end());
  }
  g.insert(g.end(), bs_state_.begin(), bs_state_.end());
  return g;
}

void Environment::push_device_record(int dev, const DeviceObservation& obs,
                                     const DeviceAction& act, int downlink_received) {
  auto& state = device_states_[dev];
  const int block = 2 * cfg_.n_channels + 8;
  // Shift the window one slot back; the oldest block falls off.
  std::copy_backward(state.begin(), state.end() - block, state.end());
  std::fill(state.begin(), state.begin() + block, 0.0);
  int i = 0;
  state[i++] = static_cast<double>(obs.queue_len) / cfg_.queue_capacity;
  state[i + obs.chan_state] = 1.0;
  i += 3;
  state[i + act.env_choice] = 1.0;
  i += cfg_.n_channels + 1;
  state[i++] = static_cast<double>(act.uplink_msg);
  state[i + downlink_received] = 1.0;
}

void Environment::push_bs_record(const BsObservation& obs, const std::vector<int>& uplink,
                                 const std::vector<int>& downlink) {
  auto& state = bs_state_;
  const int m = cfg_.n_channels, n = cfg_.n_devices;
  const int block = m * (n + 2) + 2 * n + n * (m + 2);
  std::copy_backward(state.begin(), state.end() - block, state.end());
  std::fill(state.begin(), state.begin() + block, 0.0);
  int i = 0;
  for (int c = 0; c < m; ++c) {
    state[i + obs.chan_states[c]] = 1.0;
    i += n + 2;
  }
  for (int d = 0; d < n; ++d) state[i++] = obs.success_set[d] ? 1.0 : 0.0;
  for (int d = 0; d < n; ++d) state[i++] = static_cast<double>(uplink[d]);
  for (int d = 0; d < n; ++d) {
    state[i + downlink[d]] = 1.0;
    i += m + 2;
  }
}

}  // namespace iiotsim::env
