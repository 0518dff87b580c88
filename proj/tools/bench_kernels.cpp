// Compares the serial reference kernels against the OpenMP-parallel ones:
// batched MLP forward/backward and trajectory collection throughput.

#include <chrono>
#include <cstdio>
#include <memory>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iiotsim/config.hpp"
#include "iiotsim/harness.hpp"
#include "iiotsim/mlp.hpp"
#include "iiotsim/schemes.hpp"

using namespace iiotsim;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void bench_mlp(int batch, int in_dim, int hidden, int out_dim, int reps) {
  rng::Stream rng(7);
  mlp::Net net = mlp::make_net({in_dim, hidden, hidden, out_dim});
  mlp::init_xavier(net, rng);
  std::vector<double> X(static_cast<size_t>(batch) * in_dim);
  std::vector<double> Y(static_cast<size_t>(batch) * out_dim);
  std::vector<double> dY(static_cast<size_t>(batch) * out_dim);
  for (auto& x : X) x = rng.uniform_real(-1, 1);
  for (auto& d : dY) d = rng.uniform_real(-1, 1);
  mlp::ParamBuf grads = mlp::make_param_buf(net);

  const double fwd_serial = time_best_of(reps, [&] { mlp::batch_forward_serial(net, X, batch, Y); });
  const double fwd_omp = time_best_of(reps, [&] { mlp::batch_forward(net, X, batch, Y); });
  const double bwd_serial = time_best_of(reps, [&] {
    grads.zero();
    mlp::batch_backward_serial(net, X, dY, batch, grads);
  });
  const double bwd_omp = time_best_of(reps, [&] {
    grads.zero();
    mlp::batch_backward(net, X, dY, batch, grads);
  });
  std::printf("mlp %4dx(%d-%d-%d-%d)  fwd %8.3f ms -> %8.3f ms (x%.2f)   bwd %8.3f ms -> %8.3f ms (x%.2f)\n",
              batch, in_dim, hidden, hidden, out_dim, fwd_serial * 1e3, fwd_omp * 1e3,
              fwd_serial / fwd_omp, bwd_serial * 1e3, bwd_omp * 1e3, bwd_serial / bwd_omp);
}

void bench_collection(int episodes) {
  config::ExperimentConfig cfg = config::default_config();
  mappo::Trainer trainer = harness::make_trainer(cfg, 42);
  trainer.collect(episodes / 4);  // warm caches and allocator
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double t_ser = time_best_of(3, [&] { trainer.collect(episodes); });
  omp_set_num_threads(saved);
  const double t_par = time_best_of(3, [&] { trainer.collect(episodes); });
#else
  const double t_par = time_best_of(3, [&] { trainer.collect(episodes); });
  const double t_ser = t_par;
#endif
  std::printf("collect %d episodes       %8.3f ms -> %8.3f ms (x%.2f)\n", episodes, t_ser * 1e3,
              t_par * 1e3, t_ser / t_par);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serial\n");
#endif
  std::printf("%-24s %s\n", "kernel", "serial -> parallel (speedup)");
  bench_mlp(128, 27, 64, 6, 20);
  bench_mlp(512, 56, 64, 12, 20);
  bench_mlp(2048, 128, 64, 1, 10);
  bench_collection(64);
  return 0;
}
