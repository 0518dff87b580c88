#ifndef IIOTSIM_TRACE_HPP_
#define IIOTSIM_TRACE_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "iiotsim/env.hpp"
#include "iiotsim/metrics.hpp"
#include "iiotsim/schemes.hpp"

namespace iiotsim::trace {

// Line-delimited plain-text episode trace, one slot per record line:
//
//   iiotsim-trace v1
//   scheme <name> seed <u64> n_devices <N> n_channels <M>
//   slot <t> acts <c>:<u> ... dl <d> ... chan <h> ... eff <e> ... r <reward>
//        ok <n> late <n> dropt <n> dropf <n> arr <n>
//   end reward <r> slots <T> arrivals <n> ok <n> late <n> dropt <n> dropf <n>
//        coll <n> succ <n> residual <n>
//
// Rewards use %.17g so the round trip is exact.
struct TraceFile {
  std::string scheme;
  uint64_t seed = 0;
  int n_devices = 0;
  int n_channels = 0;
  std::vector<env::TraceRecord> records;
  env::EpisodeStats final_stats;
};

void write_trace(const env::Environment& e, schemes::Scheme scheme, std::ostream& out);
void write_trace_file(const env::Environment& e, schemes::Scheme scheme, const std::string& path);

TraceFile read_trace(std::istream& in);
TraceFile read_trace_file(const std::string& path);

// Re-simulates the recorded actions on a fresh environment and checks every
// per-slot outcome and the final counters. Returns false with a description
// on the first divergence.
bool replay_trace(const TraceFile& t, const env::EnvConfig& cfg, std::string* error);

// Metrics recomputed from the trace alone (no environment counters).
metrics::MetricValues metrics_from_trace(const TraceFile& t);

}  // namespace iiotsim::trace

#endif  // IIOTSIM_TRACE_HPP_
