#ifndef IIOTSIM_METRICS_HPP_
#define IIOTSIM_METRICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "iiotsim/env.hpp"

namespace iiotsim::metrics {

// R_s = N_s / (M * T): successfully accessed channel-slots over the total.
double channel_success_rate(int64_t n_success, int n_channels, int64_t t_slots);

// Collided channel-slots over the total, same denominator as R_s.
double collision_rate(int64_t n_collisions, int n_channels, int64_t t_slots);

// Unique tasks received at the BS per episode slot.
double goodput(int64_t unique_received, int64_t t_slots);

// The four tracked quantities of one evaluation point.
struct MetricValues {
  double completed = 0.0;       // tasks completed within deadline per episode
  double success_rate = 0.0;    // R_s
  double collision_rate = 0.0;
  double goodput = 0.0;
};

// Episode-level metrics from the environment counters.
MetricValues from_stats(const env::EpisodeStats& stats, int n_channels);

// Mean over several evaluation episodes.
MetricValues average(const std::vector<MetricValues>& values);

// One metric curve over training: rows are evaluation points, columns seeds.
struct MetricSeries {
  std::string metric;            // completed | success_rate | collision_rate | goodput
  std::vector<int64_t> episodes; // evaluation point (training episodes done)
  std::vector<std::vector<double>> per_seed;  // [point][seed]
};

struct Aggregate {
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Mean with a normal-approximation 95% CI across seeds.
Aggregate aggregate(const std::vector<double>& seed_values);

// CSV with columns: episode, seed_<s>..., mean, ci_lo, ci_hi.
void write_csv(const MetricSeries& series, const std::vector<uint64_t>& seeds,
               const std::string& path);

}  // namespace iiotsim::metrics

#endif  // IIOTSIM_METRICS_HPP_
