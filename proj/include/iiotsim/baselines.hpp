#ifndef IIOTSIM_BASELINES_HPP_
#define IIOTSIM_BASELINES_HPP_

#include <vector>

#include "iiotsim/env.hpp"
#include "iiotsim/rng.hpp"

namespace iiotsim::baselines {

// Hand-coded comparison schemes. Each emits actions that are valid under the
// environment's masks; stochastic schemes draw from their own stream.

// All tasks computed locally; never touches a channel or a message.
env::DeviceAction local_policy(const env::DeviceObservation& obs);

// Contention-free device side: request while the queue is nonempty, transmit
// on a granted channel, otherwise hold.
//   last_downlink: the grant/ACK symbol received this slot (uttered last slot)
env::DeviceAction contention_free_device(const env::Environment& e, int dev, int last_downlink);

// Contention-free BS side: ACK devices that just completed within deadline
// (ignoring their request), then grant free channels to the remaining
// requesters in ascending device id. Devices mid-handshake are not booked
// again until the hold clears: those granted last slot, and those seen as
// channel winners in the latest observation (their task is completing).
//   requests: U vector received this slot; completions: success set observed;
//   chan_states: h vector observed; prev_downlink: uttered last slot
env::BsAction contention_free_bs(const std::vector<int>& requests,
                                 const std::vector<uint8_t>& completions,
                                 const std::vector<int>& chan_states,
                                 const std::vector<int>& prev_downlink, int n_channels);

// p-persistent random access: with probability p_transmit pick a channel
// uniformly when the head task is serviceable. No signaling.
env::DeviceAction contention_based_device(const env::Environment& e, int dev, rng::Stream& rng,
                                          double p_transmit);

}  // namespace iiotsim::baselines

#endif  // IIOTSIM_BASELINES_HPP_
