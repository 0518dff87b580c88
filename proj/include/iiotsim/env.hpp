#ifndef IIOTSIM_ENV_HPP_
#define IIOTSIM_ENV_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iiotsim/link_model.hpp"
#include "iiotsim/rng.hpp"
#include "iiotsim/task_model.hpp"

namespace iiotsim::env {

// What the first environment action (index 0) means for a device that could
// start service this slot. Combined and local modes start a local
// computation; offload-only modes treat it as "hold the task and wait".
enum class ServiceMode { kCombined, kOffloadOnly, kLocalOnly };

struct EnvConfig {
  int n_devices = 3;
  int n_channels = 2;
  int queue_capacity = 25;
  int t_max = 25;
  double slot_ms = 1.0;
  double rho = 1.0;        // reward magnitude
  int history_len = 2;     // l, observation/action window
  double area_m = 10.0;    // square side; BS at the center
  int prefill = 0;         // tasks per queue at reset
  ServiceMode mode = ServiceMode::kCombined;
  bool uplink_messages = true;   // U alphabet {0,1} enabled
  bool downlink_messages = true; // D alphabet {0..M+1} enabled
  // Contention-free protocol semantics: an offloaded task that completed
  // within its deadline keeps its queue slot until the device receives the
  // ACK symbol. Off everywhere else; messages then never touch the
  // environment state.
  bool ack_gated_removal = false;
  task::TaskRanges task_ranges;
  task::ArrivalConfig arrival;
  task::ComputeConfig compute;
  link::LinkConfig link;
};

// Joint per-device action for one slot. env_choice: 0 = local/wait,
// 1..M = transmit the head task on that channel. uplink_msg: U in {0,1}.
struct DeviceAction {
  int env_choice = 0;
  int uplink_msg = 0;
};

// Downlink control messages, one symbol per device: 0 null, 1..M grant,
// M+1 acknowledgment.
struct BsAction {
  std::vector<int> downlink;
};

struct DeviceObservation {
  int queue_len = 0;  // waiting + in-service tasks of this device
  int chan_state = 0; // link::ChanState of its last transmission
};

struct BsObservation {
  std::vector<int> chan_states;        // h_m, length M
  std::vector<uint8_t> success_set;    // N flags: completed within deadline this slot
};

// How a device's action resolved, for traces and tests.
enum class ActionEffect : int {
  kNoop = 0,          // nothing to do (queue empty or head in service)
  kWait = 1,          // deliberate hold in offload-only mode
  kLocalStart = 2,    // began local computation
  kOffloadStart = 3,  // sole transmitter; task now computing at the BS
  kOffloadClash = 4,  // collided; task stays queued
};

struct StepOutcome {
  double team_reward = 0.0;
  std::vector<double> device_rewards;   // r_n, sums to team_reward
  bool done = false;
  // Per-slot counters.
  int arrivals = 0;
  int dropped_full = 0;
  int dropped_timeout = 0;
  int completions_ok = 0;
  int completions_late = 0;
  int collision_channels = 0;
  int success_channels = 0;   // also the tasks received at the BS this slot
  std::vector<ActionEffect> effects;
};

// Cumulative per-episode counters, for the metric definitions.
struct EpisodeStats {
  int64_t arrivals = 0;
  int64_t dropped_full = 0;
  int64_t dropped_timeout = 0;
  int64_t completions_ok = 0;
  int64_t completions_late = 0;
  int64_t collision_channel_slots = 0;
  int64_t success_channel_slots = 0;  // N_s for R_s; also unique tasks received at BS
  int64_t slots = 0;
  double total_reward = 0.0;
  int64_t residual_tasks = 0;  // waiting + in service, maintained at episode end
};

// One line of the exported episode trace.
struct TraceRecord {
  int slot = 0;
  std::vector<DeviceAction> device_actions;
  std::vector<int> downlink;
  std::vector<int> channel_state;
  std::vector<ActionEffect> effects;
  double team_reward = 0.0;
  int completions_ok = 0;
  int completions_late = 0;
  int dropped_timeout = 0;
  int dropped_full = 0;
  int arrivals = 0;
};

// The Dec-POMDP environment: slot-stepped task queues, shared uplink
// channels, local/remote execution, team reward, and per-agent history
// states. One instance is strictly sequential; run independent instances for
// parallelism.
class Environment {
 public:
  explicit Environment(const EnvConfig& cfg);

  // Starts a fresh episode: redraws device positions (and hence rates),
  // clears queues, optionally prefills them, and zeroes history windows.
  void reset(uint64_t episode_seed);

  // Advances one slot. Actions must respect the current masks; malformed
  // vectors or out-of-alphabet symbols throw.
  StepOutcome step(const std::vector<DeviceAction>& device_actions, const BsAction& bs_action);

  bool done() const { return done_; }
  int slot() const { return slot_; }

  // --- observations and agent states -------------------------------------
  DeviceObservation device_obs(int dev) const;
  const BsObservation& bs_obs() const { return bs_obs_; }

  // Flattened l-slot history windows (layout documented in env.cpp).
  const std::vector<double>& device_state(int dev) const { return device_states_[dev]; }
  const std::vector<double>& bs_state() const { return bs_state_; }
  std::vector<double> global_state() const;  // device states then BS state

  int device_state_dim() const;
  int bs_state_dim() const;

  // Messages received this slot (uttered last slot): the raw channel the
  // hand-coded baseline policies read.
  const std::vector<int>& last_uplink() const { return last_uplink_; }
  int last_downlink(int dev) const { return last_downlink_[dev]; }

  // --- action space -------------------------------------------------------
  // True when the head task could start service this slot: queue nonempty
  // and no task of this device currently in service.
  bool device_can_serve(int dev) const;
  // Valid env_choice flags, length M+1. Index 0 is always valid.
  std::vector<uint8_t> device_env_mask(int dev) const;
  int device_env_actions() const { return cfg_.n_channels + 1; }
  int device_joint_actions() const { return 2 * (cfg_.n_channels + 1); }
  int downlink_alphabet() const { return cfg_.n_channels + 2; }

  const EnvConfig& config() const { return cfg_; }
  const EpisodeStats& stats() const { return stats_; }
  double device_rate_bps(int dev) const { return rates_bps_[dev]; }

  // Trace capture. When enabled, every step appends a record.
  void set_tracing(bool on) { tracing_ = on; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  uint64_t episode_seed() const { return episode_seed_; }

 private:
  struct InService {
    task::Task task;
    int completion_slot = 0;
    double final_elapsed_ms = 0.0;
    bool remote = false;
    bool awaiting_ack = false;  // scored; queue slot held for the ACK handshake
  };

  struct Device {
    task::TaskQueue queue;
    std::optional<InService> in_service;
    double distance_km = 0.0;
    explicit Device(int cap) : queue(cap) {}
  };

  void push_device_record(int dev, const DeviceObservation& obs, const DeviceAction& act,
                          int downlink_received);
  void push_bs_record(const BsObservation& obs, const std::vector<int>& uplink,
                      const std::vector<int>& downlink);
  int queue_len(int dev) const;

  EnvConfig cfg_;
  rng::Stream env_rng_;
  uint64_t episode_seed_ = 0;

  std::vector<Device> devices_;
  std::vector<double> rates_bps_;

  int slot_ = 0;
  bool done_ = true;  // reset() must be called first

  // Latest observations and message copies (uttered last slot).
  std::vector<DeviceObservation> device_obs_;
  std::vector<int> device_chan_state_;
  BsObservation bs_obs_;
  std::vector<int> last_uplink_;
  std::vector<int> last_downlink_;

  // Flattened history windows.
  std::vector<std::vector<double>> device_states_;
  std::vector<double> bs_state_;

  EpisodeStats stats_;
  bool tracing_ = false;
  std::vector<TraceRecord> trace_;
};

}  // namespace iiotsim::env

#endif  // IIOTSIM_ENV_HPP_
