#include "iiotsim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace iiotsim::metrics {

double channel_success_rate(int64_t n_success, int n_channels, int64_t t_slots) {
  if (n_channels <= 0 || t_slots <= 0) throw std::invalid_argument("M and T must be positive");
  if (n_success < 0 || n_success > static_cast<int64_t>(n_channels) * t_slots) {
    throw std::logic_error("N_s outside [0, M*T]");
  }
  return static_cast<double>(n_success) / (static_cast<double>(n_channels) * t_slots);
}

double collision_rate(int64_t n_collisions, int n_channels, int64_t t_slots) {
  if (n_channels <= 0 || t_slots <= 0) throw std::invalid_argument("M and T must be positive");
  if (n_collisions < 0 || n_collisions > static_cast<int64_t>(n_channels) * t_slots) {
    throw std::logic_error("collision count outside [0, M*T]");
  }
  return static_cast<double>(n_collisions) / (static_cast<double>(n_channels) * t_slots);
}

double goodput(int64_t unique_received, int64_t t_slots) {
  if (t_slots <= 0) throw std::invalid_argument("episode duration must be positive");
  if (unique_received < 0) throw std::logic_error("negative reception count");
  return static_cast<double>(unique_received) / static_cast<double>(t_slots);
}

MetricValues from_stats(const env::EpisodeStats& stats, int n_channels) {
  MetricValues v;
  v.completed = static_cast<double>(stats.completions_ok);
  v.success_rate = channel_success_rate(stats.success_channel_slots, n_channels, stats.slots);
  v.collision_rate = collision_rate(stats.collision_channel_slots, n_channels, stats.slots);
  v.goodput = goodput(stats.success_channel_slots, stats.slots);
  return v;
}

MetricValues average(const std::vector<MetricValues>& values) {
  MetricValues m;
  if (values.empty()) return m;
  for (const auto& v : values) {
    m.completed += v.completed;
    m.success_rate += v.success_rate;
    m.collision_rate += v.collision_rate;
    m.goodput += v.goodput;
  }
  const double n = static_cast<double>(values.size());
  m.completed /= n;
  m.success_rate /= n;
  m.collision_rate /= n;
  m.goodput /= n;
  return m;
}

Aggregate aggregate(const std::vector<double>& seed_values) {
  Aggregate a;
  const size_t n = seed_values.size();
  if (n == 0) return a;
  for (double v : seed_values) a.mean += v;
  a.mean /= static_cast<double>(n);
  if (n == 1) {
    a.ci_lo = a.ci_hi = a.mean;
    return a;
  }
  double var = 0.0;
  for (double v : seed_values) var += (v - a.mean) * (v - a.mean);
  var /= static_cast<double>(n - 1);
  const double half = 1.959963984540054 * std::sqrt(var / static_cast<double>(n));
  a.ci_lo = a.mean - half;
  a.ci_hi = a.mean + half;
  return a;
}

void write_csv(const MetricSeries& series, const std::vector<uint64_t>& seeds,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metric file: " + path);
  out << "episode";
  for (uint64_t s : seeds) out << ",seed_" << s;
  out << ",mean,ci_lo,ci_hi\n";
  char buf[64];
  for (size_t p = 0; p < series.episodes.size(); ++p) {
    out << series.episodes[p];
    for (double v : series.per_seed[p]) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << ',' << buf;
    }
    const Aggregate a = aggregate(series.per_seed[p]);
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g", a.mean, a.ci_lo, a.ci_hi);
    out << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("metric file write failed: " + path);
}

}  // namespace iiotsim::metrics
