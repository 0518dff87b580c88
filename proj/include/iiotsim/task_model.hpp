#ifndef IIOTSIM_TASK_MODEL_HPP_
#define IIOTSIM_TASK_MODEL_HPP_

#include <cstdint>
#include <deque>
#include <stdexcept>

#include "iiotsim/rng.hpp"

namespace iiotsim::task {

// One non-divisible computation task: A bits, L cycles per bit, deadline in
// milliseconds. `elapsed_ms` accumulates waiting plus service time since the
// task was born; the deadline test at completion is elapsed_ms <= deadline_ms.
struct Task {
  int64_t size_bits = 0;       // A
  int64_t cycles_per_bit = 0;  // L
  double deadline_ms = 0.0;    // tau
  int birth_slot = 0;
  double elapsed_ms = 0.0;

  // Slot index at whose end the task is discarded if it has not started
  // service: a task is kept in the queue for two slots past its birth and
  // then dropped. -1 means no expiry (synthetic tasks in tests).
  int drop_at_slot = -1;
};

// Inclusive uniform ranges for freshly generated tasks.
struct TaskRanges {
  int64_t size_min = 100, size_max = 500;             // bits
  int64_t cycles_min = 100, cycles_max = 20000;       // cycles/bit
  double deadline_min_ms = 1.0, deadline_max_ms = 5.0;
};

struct ArrivalConfig {
  double p_task = 0.90;  // per-slot Bernoulli arrival probability
  int horizon = 25;      // slots per episode (T)

  // Mean arrivals per device per episode implied by the per-slot Bernoulli.
  double lambda() const { return p_task * horizon; }
};

struct ComputeConfig {
  double f_local_hz = 1e9;      // device CPU (f_n)
  double f_bs_total_hz = 1e11;  // base-station CPU budget (F_max)
};

enum class ArrivalOutcome { kArrived, kSkipped, kDroppedFull };

// Bounded FIFO of waiting tasks. Arrivals beyond capacity are discarded and
// counted by the caller.
class TaskQueue {
 public:
  explicit TaskQueue(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw std::invalid_argument("queue capacity must be positive");
  }

  bool full() const { return static_cast<int>(items_.size()) >= capacity_; }
  bool empty() const { return items_.empty(); }
  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }

  void push(const Task& t) {
    if (full()) throw std::logic_error("push on full TaskQueue");
    items_.push_back(t);
  }

  Task pop() {
    if (empty()) throw std::logic_error("pop on empty TaskQueue");
    Task t = items_.front();
    items_.pop_front();
    return t;
  }

  Task& front() { return items_.front(); }
  const Task& front() const { return items_.front(); }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  int capacity_;
  std::deque<Task> items_;
};

// Draws a task with fields uniform over the configured inclusive ranges.
// birth_slot is set by the caller. Draw order: size, cycles, deadline.
Task sample_task(rng::Stream& rng, const TaskRanges& ranges);

// Per-slot Bernoulli arrival. On success the fresh task is appended to the
// queue (or counted as dropped when full).
ArrivalOutcome maybe_arrive(TaskQueue& queue, const ArrivalConfig& cfg, const TaskRanges& ranges,
                            rng::Stream& rng, int slot);

// A*L / f_n, in milliseconds.
double local_time_ms(const Task& t, const ComputeConfig& cfg);

struct RemoteTime {
  double upload_ms = 0.0;
  double exec_ms = 0.0;
  double total_ms = 0.0;
};

// Upload plus base-station execution; result download is not modeled.
// rate_bps <= 0 signals that no usable channel was granted.
RemoteTime remote_time_ms(const Task& t, double rate_bps, double f_m_hz);

// Case split on the offload decision x in {0,1}. The caller adds the result
// to the task's elapsed time.
double task_delay_ms(const Task& t, int offload_decision, double rate_bps, double f_m_hz,
                     const ComputeConfig& cfg);

}  // namespace iiotsim::task

#endif  // IIOTSIM_TASK_MODEL_HPP_
