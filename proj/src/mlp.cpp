#include "iiotsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iiotsim::mlp {

int64_t Net::n_params() const {
  int64_t n = 0;
  for (int l = 0; l < n_layers(); ++l) {
    n += static_cast<int64_t>(weights[l].size()) + static_cast<int64_t>(biases[l].size());
  }
  return n;
}

Net make_net(const std::vector<int>& dims, Activation act) {
  if (dims.size() < 2) throw std::invalid_argument("net needs input and output dims");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("layer dims must be positive");
  }
  Net net;
  net.dims = dims;
  net.act = act;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    net.weights.emplace_back(static_cast<size_t>(dims[l + 1]) * dims[l], 0.0);
    net.biases.emplace_back(dims[l + 1], 0.0);
  }
  return net;
}

void init_xavier(Net& net, rng::Stream& rng) {
  for (int l = 0; l < net.n_layers(); ++l) {
    const int fan_in = net.dims[l], fan_out = net.dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : net.weights[l]) w = rng.uniform_real(-bound, bound);
    std::fill(net.biases[l].begin(), net.biases[l].end(), 0.0);
  }
}

void ParamBuf::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void ParamBuf::add(const ParamBuf& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

double ParamBuf::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) {
    for (double v : w) s += v * v;
  }
  for (const auto& b : biases) {
    for (double v : b) s += v * v;
  }
  return s;
}

ParamBuf make_param_buf(const Net& net) {
  ParamBuf buf;
  for (int l = 0; l < net.n_layers(); ++l) {
    buf.weights.emplace_back(net.weights[l].size(), 0.0);
    buf.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return buf;
}

Workspace make_workspace(const Net& net) {
  Workspace ws;
  ws.post.resize(net.n_layers() + 1);
  ws.pre.resize(net.n_layers());
  ws.post[0].resize(net.input_dim());
  for (int l = 0; l < net.n_layers(); ++l) {
    ws.pre[l].resize(net.dims[l + 1]);
    ws.post[l + 1].resize(net.dims[l + 1]);
  }
  return ws;
}

namespace {

inline double activate(double z, Activation a) {
  return a == Activation::kTanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

inline double activate_grad(double z, double post, Activation a) {
  return a == Activation::kTanh ? 1.0 - post * post : (z > 0.0 ? 1.0 : 0.0);
}

}  // namespace

void forward(const Net& net, std::span<const double> x, std::span<double> out, Workspace& ws) {
  if (static_cast<int>(x.size()) != net.input_dim()) throw std::invalid_argument("input dim mismatch");
  if (static_cast<int>(out.size()) != net.output_dim()) throw std::invalid_argument("output dim mismatch");
  std::copy(x.begin(), x.end(), ws.post[0].begin());
  const int L = net.n_layers();
  for (int l = 0; l < L; ++l) {
    const int in = net.dims[l], n_out = net.dims[l + 1];
    const double* W = net.weights[l].data();
    const double* a = ws.post[l].data();
    for (int o = 0; o < n_out; ++o) {
      double z = net.biases[l][o];
      const double* row = W + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += row[i] * a[i];
      ws.pre[l][o] = z;
      ws.post[l + 1][o] = (l + 1 == L) ? z : activate(z, net.act);
    }
  }
  std::copy(ws.post[L].begin(), ws.post[L].end(), out.begin());
}

void backward(const Net& net, const Workspace& ws, std::span<const double> dloss_dout,
              ParamBuf& grads) {
  const int L = net.n_layers();
  if (static_cast<int>(dloss_dout.size()) != net.output_dim()) {
    throw std::invalid_argument("output gradient dim mismatch");
  }
  std::vector<double> delta(dloss_dout.begin(), dloss_dout.end());
  for (int l = L - 1; l >= 0; --l) {
    const int in = net.dims[l], n_out = net.dims[l + 1];
    const double* a = ws.post[l].data();
    double* gw = grads.weights[l].data();
    for (int o = 0; o < n_out; ++o) {
      const double d = delta[o];
      grads.biases[l][o] += d;
      double* row = gw + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * a[i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    const double* W = net.weights[l].data();
    for (int o = 0; o < n_out; ++o) {
      const double d = delta[o];
      const double* row = W + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    for (int i = 0; i < in; ++i) {
      prev[i] *= activate_grad(ws.pre[l - 1][i], ws.post[l][i], net.act);
    }
    delta = std::move(prev);
  }
}

namespace {

// Fixed chunking: a function of the row count only, so the reduction order
// (and therefore the floating-point result) does not depend on the thread
// count.
constexpr int kGradChunks = 16;

inline int chunk_count(int n_rows) { return std::min(n_rows, kGradChunks); }

void run_batch_forward(const Net& net, std::span<const double> X, int n_rows, std::span<double> Y,
                       bool parallel) {
  const int in = net.input_dim(), out = net.output_dim();
  if (static_cast<int>(X.size()) != n_rows * in) throw std::invalid_argument("X size mismatch");
  if (static_cast<int>(Y.size()) != n_rows * out) throw std::invalid_argument("Y size mismatch");
#pragma omp parallel if (parallel)
  {
    Workspace ws = make_workspace(net);
#pragma omp for schedule(static)
    for (int r = 0; r < n_rows; ++r) {
      forward(net, X.subspan(static_cast<size_t>(r) * in, in),
              Y.subspan(static_cast<size_t>(r) * out, out), ws);
    }
  }
}

void run_batch_backward(const Net& net, std::span<const double> X, std::span<const double> dY,
                        int n_rows, ParamBuf& grads, bool parallel) {
  const int in = net.input_dim(), out = net.output_dim();
  if (static_cast<int>(X.size()) != n_rows * in) throw std::invalid_argument("X size mismatch");
  if (static_cast<int>(dY.size()) != n_rows * out) throw std::invalid_argument("dY size mismatch");
  const int chunks = chunk_count(n_rows);
  if (chunks == 0) return;
  std::vector<ParamBuf> partial(chunks, make_param_buf(net));
#pragma omp parallel if (parallel)
  {
    Workspace ws = make_workspace(net);
    std::vector<double> y(out);
#pragma omp for schedule(static)
    for (int c = 0; c < chunks; ++c) {
      const int lo = static_cast<int>(static_cast<int64_t>(n_rows) * c / chunks);
      const int hi = static_cast<int>(static_cast<int64_t>(n_rows) * (c + 1) / chunks);
      for (int r = lo; r < hi; ++r) {
        forward(net, X.subspan(static_cast<size_t>(r) * in, in), y, ws);
        backward(net, ws, dY.subspan(static_cast<size_t>(r) * out, out), partial[c]);
      }
    }
  }
  for (int c = 0; c < chunks; ++c) grads.add(partial[c]);
}

}  // namespace

void batch_forward(const Net& net, std::span<const double> X, int n_rows, std::span<double> Y) {
  run_batch_forward(net, X, n_rows, Y, true);
}

void batch_backward(const Net& net, std::span<const double> X, std::span<const double> dY,
                    int n_rows, ParamBuf& grads) {
  run_batch_backward(net, X, dY, n_rows, grads, true);
}

void batch_forward_serial(const Net& net, std::span<const double> X, int n_rows,
                          std::span<double> Y) {
  run_batch_forward(net, X, n_rows, Y, false);
}

void batch_backward_serial(const Net& net, std::span<const double> X, std::span<const double> dY,
                           int n_rows, ParamBuf& grads) {
  run_batch_backward(net, X, dY, n_rows, grads, false);
}

std::vector<double> flatten(const Net& net) {
  std::vector<double> flat;
  flat.reserve(net.n_params());
  for (int l = 0; l < net.n_layers(); ++l) {
    flat.insert(flat.end(), net.weights[l].begin(), net.weights[l].end());
    flat.insert(flat.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return flat;
}

void unflatten(Net& net, std::span<const double> flat) {
  if (static_cast<int64_t>(flat.size()) != net.n_params()) {
    throw std::invalid_argument("flat parameter size mismatch");
  }
  size_t k = 0;
  for (int l = 0; l < net.n_layers(); ++l) {
    for (double& w : net.weights[l]) w = flat[k++];
    for (double& b : net.biases[l]) b = flat[k++];
  }
}

Adam::Adam(const Net& net, double lr, double eps, double beta1, double beta2)
    : lr_(lr), eps_(eps), beta1_(beta1), beta2_(beta2), m_(make_param_buf(net)),
      v_(make_param_buf(net)) {}

void Adam::step(Net& net, const ParamBuf& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (int l = 0; l < net.n_layers(); ++l) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
      for (size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    };
    update(net.weights[l], grads.weights[l], m_.weights[l], v_.weights[l]);
    update(net.biases[l], grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

}  // namespace iiotsim::mlp
