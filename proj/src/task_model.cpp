#include "iiotsim/task_model.hpp"

namespace iiotsim::task {

Task sample_task(rng::Stream& rng, const TaskRanges& ranges) {
  if (ranges.size_min > ranges.size_max || ranges.cycles_min > ranges.cycles_max ||
      ranges.deadline_min_ms > ranges.deadline_max_ms) {
    throw std::invalid_argument("task range has min > max");
  }
  if (ranges.size_min <= 0 || ranges.cycles_min < 0 || ranges.deadline_min_ms <= 0.0) {
    throw std::invalid_argument("task ranges must be positive");
  }
  Task t;
  t.size_bits = rng.uniform_int(ranges.size_min, ranges.size_max);
  t.cycles_per_bit = rng.uniform_int(ranges.cycles_min, ranges.cycles_max);
  t.deadline_ms = rng.uniform_real(ranges.deadline_min_ms, ranges.deadline_max_ms);
  t.elapsed_ms = 0.0;
  return t;
}

ArrivalOutcome maybe_arrive(TaskQueue& queue, const ArrivalConfig& cfg, const TaskRanges& ranges,
                            rng::Stream& rng, int slot) {
  if (slot >= cfg.horizon) throw std::logic_error("arrival slot beyond horizon");
  if (!rng.bernoulli(cfg.p_task)) return ArrivalOutcome::kSkipped;
  if (queue.full()) {
    // Keep the draw count identical whether or not the queue had room, so
    // replays do not depend on queue occupancy.
    Task discarded = sample_task(rng, ranges);
    (void)discarded;
    return ArrivalOutcome::kDroppedFull;
  }
  Task t = sample_task(rng, ranges);
  t.birth_slot = slot;
  queue.push(t);
  return ArrivalOutcome::kArrived;
}

double local_time_ms(const Task& t, const ComputeConfig& cfg) {
  if (cfg.f_local_hz <= 0.0) throw std::invalid_argument("f_local must be positive");
  const double cycles = static_cast<double>(t.size_bits) * static_cast<double>(t.cycles_per_bit);
  return cycles / cfg.f_local_hz * 1e3;
}

RemoteTime remote_time_ms(const Task& t, double rate_bps, double f_m_hz) {
  if (rate_bps <= 0.0) throw std::domain_error("remote_time with no usable channel (rate <= 0)");
  if (f_m_hz <= 0.0) throw std::invalid_argument("f_m must be positive");
  RemoteTime r;
  r.upload_ms = static_cast<double>(t.size_bits) / rate_bps * 1e3;
  const double cycles = static_cast<double>(t.size_bits) * static_cast<double>(t.cycles_per_bit);
  r.exec_ms = cycles / f_m_hz * 1e3;
  r.total_ms = r.upload_ms + r.exec_ms;
  return r;
}

double task_delay_ms(const Task& t, int offload_decision, double rate_bps, double f_m_hz,
                     const ComputeConfig& cfg) {
  if (offload_decision == 0) return local_time_ms(t, cfg);
  if (offload_decision == 1) return remote_time_ms(t, rate_bps, f_m_hz).total_ms;
  throw std::invalid_argument("offload decision must be 0 or 1");
}

}  // namespace iiotsim::task
