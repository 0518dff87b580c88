#ifndef IIOTSIM_LINK_MODEL_HPP_
#define IIOTSIM_LINK_MODEL_HPP_

#include <cstdint>
#include <vector>

namespace iiotsim::link {

// Per-device selected-channel state, as seen in the device observation.
enum ChanState : int {
  kNotNeeded = 0,  // did not transmit this slot
  kFree = 1,       // sole transmitter, access succeeded
  kCollision = 2,  // two or more transmitters on the chosen channel
};

struct LinkConfig {
  double bandwidth_hz = 10e6;       // W, per channel
  double noise_psd_dbm_hz = -174.0; // noise power spectral density
  double tx_power_dbm = 23.0;       // p_n, fixed uplink power
  int n_channels = 2;               // M
  double pathloss_ref_db = 128.1;   // PL(d) = ref + slope*log10(d_km)
  double pathloss_slope_db = 37.6;
};

// Per-slot resolution of the M shared uplink channels.
//  channel_state[m]: 0 = idle, n in 1..N = sole transmitter n, N+1 = collision
//  device_state[n]:  ChanState for device n's own transmission
struct ChannelReport {
  std::vector<int> channel_state;  // length M
  std::vector<int> device_state;   // length N
  int collisions = 0;              // channels with >= 2 transmitters
  int successes = 0;               // channels with exactly 1 transmitter
};

// 128.1 + 37.6 log10(d) with d in kilometers.
double pathloss_db(double d_km, const LinkConfig& cfg);

// Linear channel gain from the distance-only path loss (no fading).
double channel_gain(double d_km, const LinkConfig& cfg);

// Shannon rate W log2(1 + g p / sigma^2) in bit/s, sigma^2 = N0 * W.
double uplink_rate_bps(double gain_linear, const LinkConfig& cfg);

// Resolves one slot of channel contention. choices[n] in 0..M, 0 = no
// transmission. Pure function of its arguments.
ChannelReport resolve_channels(const std::vector<int>& choices, int n_channels);

}  // namespace iiotsim::link

#endif  // IIOTSIM_LINK_MODEL_HPP_
