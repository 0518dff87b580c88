#ifndef IIOTSIM_MLP_HPP_
#define IIOTSIM_MLP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "iiotsim/rng.hpp"

namespace iiotsim::mlp {

enum class Activation { kTanh, kRelu };

// Dense fully connected network, double precision throughout. Weights are
// row-major (out x in). The hidden activation applies to every layer except
// the last, which stays linear (logits or value head).
struct Net {
  std::vector<int> dims;  // input, hidden..., output
  Activation act = Activation::kTanh;
  std::vector<std::vector<double>> weights;  // per layer, out*in
  std::vector<std::vector<double>> biases;   // per layer, out

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int n_layers() const { return static_cast<int>(weights.size()); }
  int64_t n_params() const;
};

Net make_net(const std::vector<int>& dims, Activation act = Activation::kTanh);

// Xavier-uniform initialization; biases zero.
void init_xavier(Net& net, rng::Stream& rng);

// Parameter-shaped accumulator for gradients (and Adam moments).
struct ParamBuf {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void zero();
  void add(const ParamBuf& other);
  double squared_norm() const;
};

ParamBuf make_param_buf(const Net& net);

// Scratch space for one forward/backward pass.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // activations per layer (post[0] = input)
};

Workspace make_workspace(const Net& net);

// Serial reference forward: one sample. `out` must have output_dim entries.
// The workspace keeps the activations backward() needs.
void forward(const Net& net, std::span<const double> x, std::span<double> out, Workspace& ws);

// Reverse-mode gradient of a scalar loss through one sample, given dL/dy.
// Accumulates into `grads`; must follow a forward() on the same workspace.
void backward(const Net& net, const Workspace& ws, std::span<const double> dloss_dout,
              ParamBuf& grads);

// --- batch kernels --------------------------------------------------------
// OpenMP-parallel counterparts of the serial pair above. Determinism: the
// gradient reduction is chunked by a fixed chunk count derived from the
// batch size, not the thread count, so results are bit-identical for any
// number of threads (and to a serial run of the same chunk schedule).

// X is batch-major (n_rows x input_dim flat); Y likewise.
void batch_forward(const Net& net, std::span<const double> X, int n_rows, std::span<double> Y);

// dY is n_rows x output_dim; gradients accumulate into `grads`.
void batch_backward(const Net& net, std::span<const double> X, std::span<const double> dY,
                    int n_rows, ParamBuf& grads);

// Serial reference for the batch pair, same chunk schedule (used by the
// kernel tests and the benchmark).
void batch_forward_serial(const Net& net, std::span<const double> X, int n_rows,
                          std::span<double> Y);
void batch_backward_serial(const Net& net, std::span<const double> X, std::span<const double> dY,
                           int n_rows, ParamBuf& grads);

// --- flat views (checkpoints, finite-difference tests) ---------------------
std::vector<double> flatten(const Net& net);
void unflatten(Net& net, std::span<const double> flat);

// Adam with bias correction. One instance per parameter set.
class Adam {
 public:
  Adam(const Net& net, double lr, double eps, double beta1 = 0.9, double beta2 = 0.999);

  // Applies one update from the accumulated gradients.
  void step(Net& net, const ParamBuf& grads);

  double lr() const { return lr_; }
  int64_t steps_taken() const { return t_; }

  // Checkpoint access to the raw moment buffers.
  ParamBuf& m() { return m_; }
  ParamBuf& v() { return v_; }
  const ParamBuf& m() const { return m_; }
  const ParamBuf& v() const { return v_; }
  void set_steps(int64_t t) { t_ = t; }

 private:
  double lr_, eps_, beta1_, beta2_;
  int64_t t_ = 0;
  ParamBuf m_, v_;
};

}  // namespace iiotsim::mlp

#endif  // IIOTSIM_MLP_HPP_
