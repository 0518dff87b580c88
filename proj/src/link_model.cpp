#include "iiotsim/link_model.hpp"

#include <cmath>
#include <stdexcept>

namespace iiotsim::link {

double pathloss_db(double d_km, const LinkConfig& cfg) {
  if (d_km <= 0.0) throw std::domain_error("pathloss requires d > 0");
  return cfg.pathloss_ref_db + cfg.pathloss_slope_db * std::log10(d_km);
}

double channel_gain(double d_km, const LinkConfig& cfg) {
  return std::pow(10.0, -pathloss_db(d_km, cfg) / 10.0);
}

double uplink_rate_bps(double gain_linear, const LinkConfig& cfg) {
  if (gain_linear < 0.0) throw std::domain_error("channel gain must be nonnegative");
  const double p_watt = std::pow(10.0, (cfg.tx_power_dbm - 30.0) / 10.0);
  const double noise_watt_hz = std::pow(10.0, (cfg.noise_psd_dbm_hz - 30.0) / 10.0);
  const double sigma2 = noise_watt_hz * cfg.bandwidth_hz;
  const double snr = gain_linear * p_watt / sigma2;
  return cfg.bandwidth_hz * std::log2(1.0 + snr);
}

ChannelReport resolve_channels(const std::vector<int>& choices, int n_channels) {
  const int n = static_cast<int>(choices.size());
  ChannelReport report;
  report.channel_state.assign(n_channels, 0);
  report.device_state.assign(n, kNotNeeded);

  std::vector<int> count(n_channels, 0);
  for (int dev = 0; dev < n; ++dev) {
    const int c = choices[dev];
    if (c < 0 || c > n_channels) throw std::invalid_argument("channel choice out of range");
    if (c > 0) ++count[c - 1];
  }
  for (int m = 0; m < n_channels; ++m) {
    if (count[m] >= 2) {
      report.channel_state[m] = n + 1;
      ++report.collisions;
    } else if (count[m] == 1) {
      ++report.successes;
    }
  }
  for (int dev = 0; dev < n; ++dev) {
    const int c = choices[dev];
    if (c == 0) continue;
    if (count[c - 1] == 1) {
      report.device_state[dev] = kFree;
      report.channel_state[c - 1] = dev + 1;  // 1-based winner id
    } else {
      report.device_state[dev] = kCollision;
    }
  }
  return report;
}

}  // namespace iiotsim::link
