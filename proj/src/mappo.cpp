#include "iiotsim/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace iiotsim::mappo {

// --- masked categorical ------------------------------------------------------

void masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask,
                    std::span<double> probs) {
  const size_t k = logits.size();
  if (mask.size() != k || probs.size() != k) throw std::invalid_argument("softmax size mismatch");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < k; ++i) {
    if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
  }
  if (max_logit == -std::numeric_limits<double>::infinity()) {
    throw std::logic_error("masked_softmax with no valid action");
  }
  double z = 0.0;
  for (size_t i = 0; i < k; ++i) {
    probs[i] = mask[i] ? std::exp(logits[i] - max_logit) : 0.0;
    z += probs[i];
  }
  for (size_t i = 0; i < k; ++i) probs[i] /= z;
}

int sample_categorical(std::span<const double> probs, rng::Stream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  int last_valid = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_valid = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last_valid;  // guards against rounding in the final bin
}

int argmax_masked(std::span<const double> logits, std::span<const uint8_t> mask) {
  int best = -1;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || logits[i] > logits[best]) best = static_cast<int>(i);
  }
  if (best < 0) throw std::logic_error("argmax with no valid action");
  return best;
}

double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// --- GAE -----------------------------------------------------------------------

void gae_advantages(std::span<const double> rewards, std::span<const double> values,
                    std::span<const uint8_t> dones, double gamma, double lambda,
                    std::span<double> advantages, std::span<double> returns) {
  const size_t t_len = rewards.size();
  if (values.size() != t_len + 1) throw std::invalid_argument("values needs a bootstrap entry");
  if (dones.size() != t_len || advantages.size() != t_len || returns.size() != t_len) {
    throw std::invalid_argument("gae length mismatch");
  }
  double carry = 0.0;
  for (size_t i = t_len; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * values[i + 1] * not_done - values[i];
    carry = delta + gamma * lambda * not_done * carry;
    advantages[i] = carry;
    returns[i] = carry + values[i];
  }
}

// --- clipped surrogate ----------------------------------------------------------

double clip_objective(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double clip_objective_dlogp(double ratio, double advantage, double eps) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
  // d(ratio)/d(logp_new) = ratio; the clipped branch is locally constant.
  if (unclipped <= clipped) return -advantage * ratio;
  return 0.0;
}

void normalize_in_place(std::span<double> values) {
  const size_t n = values.size();
  if (n < 2) return;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& v : values) v = (v - mean) / (sd + 1e-8);
}

// --- trainer ----------------------------------------------------------------------

namespace {

bool log_enabled() {
  const char* v = std::getenv("IIOTSIM_LOG");
  return v != nullptr && std::strcmp(v, "quiet") != 0 && std::strcmp(v, "0") != 0;
}

int total_head_dim(const GroupSpec& spec) {
  int s = 0;
  for (int h : spec.head_sizes) s += h;
  return s;
}

std::vector<int> net_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims;
  dims.push_back(in);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

Trainer::Trainer(std::function<std::unique_ptr<MarlEnv>()> env_factory, const Hyper& hyper,
                 uint64_t seed)
    : env_factory_(std::move(env_factory)), hyper_(hyper), master_seed_(seed) {
  auto probe = env_factory_();
  specs_ = probe->groups();
  if (specs_.empty()) throw std::invalid_argument("environment exposes no agent groups");

  rng::Stream init_rng(rng::mix({master_seed_, 0x11}));
  for (const auto& spec : specs_) {
    mlp::Net net = mlp::make_net(net_dims(spec.input_dim, hyper_.hidden, total_head_dim(spec)));
    mlp::init_xavier(net, init_rng);
    actor_opt_.emplace_back(net, hyper_.lr, hyper_.adam_eps);
    actors_.push_back(std::move(net));
  }
  critic_ = mlp::make_net(net_dims(probe->critic_input_dim(), hyper_.hidden, 1));
  mlp::init_xavier(critic_, init_rng);
  critic_opt_ = std::make_unique<mlp::Adam>(critic_, hyper_.lr, hyper_.adam_eps);
  shuffle_rng_ = rng::Stream(rng::mix({master_seed_, 0x55}));
}

std::vector<int> Trainer::act_sample(int group, std::span<const double> input,
                                     const std::vector<std::vector<uint8_t>>& masks,
                                     rng::Stream& rng, double* logp) const {
  const GroupSpec& spec = specs_[group];
  std::vector<double> logits(total_head_dim(spec));
  mlp::Workspace ws = mlp::make_workspace(actors_[group]);
  mlp::forward(actors_[group], input, logits, ws);
  std::vector<int> choice(spec.head_sizes.size());
  double lp = 0.0;
  int offset = 0;
  for (size_t h = 0; h < spec.head_sizes.size(); ++h) {
    const int k = spec.head_sizes[h];
    std::vector<double> probs(k);
    masked_softmax(std::span<const double>(logits).subspan(offset, k), masks[h], probs);
    const int a = sample_categorical(probs, rng);
    choice[h] = a;
    lp += std::log(probs[a]);
    offset += k;
  }
  if (logp != nullptr) *logp = lp;
  return choice;
}

std::vector<int> Trainer::act_greedy(int group, std::span<const double> input,
                                     const std::vector<std::vector<uint8_t>>& masks) const {
  const GroupSpec& spec = specs_[group];
  std::vector<double> logits(total_head_dim(spec));
  mlp::Workspace ws = mlp::make_workspace(actors_[group]);
  mlp::forward(actors_[group], input, logits, ws);
  std::vector<int> choice(spec.head_sizes.size());
  int offset = 0;
  for (size_t h = 0; h < spec.head_sizes.size(); ++h) {
    const int k = spec.head_sizes[h];
    choice[h] = argmax_masked(std::span<const double>(logits).subspan(offset, k), masks[h]);
    offset += k;
  }
  return choice;
}

std::vector<double> Trainer::head_probs(int group, std::span<const double> input, int head,
                                        std::span<const uint8_t> mask) const {
  const GroupSpec& spec = specs_[group];
  std::vector<double> logits(total_head_dim(spec));
  mlp::Workspace ws = mlp::make_workspace(actors_[group]);
  mlp::forward(actors_[group], input, logits, ws);
  int offset = 0;
  for (int h = 0; h < head; ++h) offset += spec.head_sizes[h];
  std::vector<double> probs(spec.head_sizes[head]);
  masked_softmax(std::span<const double>(logits).subspan(offset, spec.head_sizes[head]), mask,
                 probs);
  return probs;
}

double Trainer::value(std::span<const double> critic_input) const {
  double v = 0.0;
  mlp::Workspace ws = mlp::make_workspace(critic_);
  mlp::forward(critic_, critic_input, std::span<double>(&v, 1), ws);
  return v;
}

Trajectory Trainer::run_episode(uint64_t env_seed, uint64_t policy_seed) {
  auto env = env_factory_();
  env->reset(env_seed);
  rng::Stream policy_rng(policy_seed);
  const int n_groups = static_cast<int>(specs_.size());
  Trajectory traj;
  int steps = 0;
  while (!env->done() && steps < env->max_steps()) {
    StepRecord rec;
    rec.critic_input.resize(critic_.input_dim());
    env->critic_input(rec.critic_input);
    rec.value = value(rec.critic_input);
    rec.agents.resize(n_groups);
    std::vector<std::vector<std::vector<int>>> choices(n_groups);
    for (int g = 0; g < n_groups; ++g) {
      const GroupSpec& spec = specs_[g];
      rec.agents[g].resize(spec.instances);
      choices[g].resize(spec.instances);
      for (int i = 0; i < spec.instances; ++i) {
        AgentSample& s = rec.agents[g][i];
        s.input.resize(spec.input_dim);
        env->actor_input(g, i, s.input);
        s.masks.resize(spec.head_sizes.size());
        for (size_t h = 0; h < spec.head_sizes.size(); ++h) {
          s.masks[h].resize(spec.head_sizes[h]);
          env->head_mask(g, i, static_cast<int>(h), s.masks[h]);
        }
        s.choice = act_sample(g, s.input, s.masks, policy_rng, &s.logp);
        choices[g][i] = s.choice;
      }
    }
    rec.reward = env->step(choices);
    rec.done = env->done() ? 1 : 0;
    traj.steps.push_back(std::move(rec));
    ++steps;
  }
  if (!env->done()) {
    std::vector<double> ci(critic_.input_dim());
    env->critic_input(ci);
    traj.bootstrap_value = value(ci);
  }
  return traj;
}

std::vector<Trajectory> Trainer::collect(int n_episodes) {
  std::vector<Trajectory> trajs(n_episodes);
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < n_episodes; ++e) {
    const uint64_t idx = static_cast<uint64_t>(episodes_done_ + e);
    trajs[e] = run_episode(rng::mix({master_seed_, 0xE0, idx}), rng::mix({master_seed_, 0xA0, idx}));
  }
  return trajs;
}

// Flattened view of a collection batch, indexed by global timestep.
struct Trainer::FlatBatch {
  std::vector<const StepRecord*> steps;
  std::vector<double> advantages;
  std::vector<double> returns;
};

int Trainer::train_step() {
  const int n_ep = hyper_.episodes_per_update;
  std::vector<Trajectory> trajs = collect(n_ep);
  apply_update(trajs);
  episodes_done_ += n_ep;
  diag_.episodes = episodes_done_;
  return n_ep;
}

void Trainer::train(int eval_interval, const std::function<void(int64_t)>& eval_cb) {
  if (eval_cb && eval_interval > 0) eval_cb(0);
  int64_t last_eval = 0;
  while (episodes_done_ < hyper_.episodes) {
    train_step();
    if (eval_cb && eval_interval > 0 &&
        (episodes_done_ / eval_interval > last_eval / eval_interval ||
         episodes_done_ >= hyper_.episodes)) {
      eval_cb(episodes_done_);
      last_eval = episodes_done_;
    }
  }
}

void Trainer::apply_update(const std::vector<Trajectory>& trajs) {
  // Per-episode GAE, then flatten to timestep granularity.
  FlatBatch batch;
  for (const Trajectory& traj : trajs) {
    const size_t t_len = traj.steps.size();
    if (t_len == 0) continue;
    std::vector<double> rewards(t_len), values(t_len + 1), adv(t_len), ret(t_len);
    std::vector<uint8_t> dones(t_len);
    for (size_t t = 0; t < t_len; ++t) {
      rewards[t] = traj.steps[t].reward;
      values[t] = traj.steps[t].value;
      dones[t] = traj.steps[t].done;
    }
    values[t_len] = traj.bootstrap_value;
    gae_advantages(rewards, values, dones, hyper_.gamma, hyper_.gae_lambda, adv, ret);
    for (size_t t = 0; t < t_len; ++t) {
      batch.steps.push_back(&traj.steps[t]);
      batch.advantages.push_back(adv[t]);
      batch.returns.push_back(ret[t]);
    }
  }
  const int total = static_cast<int>(batch.steps.size());
  if (total == 0) return;
  for (double a : batch.advantages) {
    if (!std::isfinite(a)) throw std::runtime_error("NaN/Inf advantage entering PPO update");
  }

  const int n_groups = static_cast<int>(specs_.size());
  std::vector<int> order(total);
  for (int i = 0; i < total; ++i) order[i] = i;

  bool kl_stopped = false;
  for (int epoch = 0; epoch < hyper_.epochs && !kl_stopped; ++epoch) {
    // Fisher-Yates with the project stream; std::shuffle is not portable.
    for (int i = total - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng_.uniform_int(0, i));
      std::swap(order[i], order[j]);
    }
    for (int start = 0; start < total; start += hyper_.minibatch) {
      const int mb = std::min(hyper_.minibatch, total - start);
      std::span<const int> idx(order.data() + start, mb);

      // Per-minibatch advantage normalization.
      std::vector<double> adv(mb);
      for (int i = 0; i < mb; ++i) adv[i] = batch.advantages[idx[i]];
      if (hyper_.normalize_advantages) normalize_in_place(adv);

      // Critic pass.
      const int cdim = critic_.input_dim();
      std::vector<double> cx(static_cast<size_t>(mb) * cdim), cv(mb);
      for (int i = 0; i < mb; ++i) {
        const auto& ci = batch.steps[idx[i]]->critic_input;
        std::copy(ci.begin(), ci.end(), cx.begin() + static_cast<size_t>(i) * cdim);
      }
      mlp::batch_forward(critic_, cx, mb, cv);
      std::vector<double> cdy(mb);
      for (int i = 0; i < mb; ++i) {
        const double err = cv[i] - batch.returns[idx[i]];
        if (!std::isfinite(err)) throw std::runtime_error("NaN/Inf in value update");
        cdy[i] = 2.0 * hyper_.value_coef * err / mb;
      }

      // Actor passes: forward all samples of a group, then build dLogits.
      std::vector<std::vector<double>> ax(n_groups), ady(n_groups);
      std::vector<int> group_rows(n_groups, 0);
      double ratio_dev_sum = 0.0;
      double approx_kl_sum = 0.0;
      int ratio_count = 0;
      for (int g = 0; g < n_groups; ++g) {
        const GroupSpec& spec = specs_[g];
        const int in = spec.input_dim;
        const int out = total_head_dim(spec);
        const int rows = mb * spec.instances;
        group_rows[g] = rows;
        ax[g].resize(static_cast<size_t>(rows) * in);
        ady[g].assign(static_cast<size_t>(rows) * out, 0.0);
        std::vector<double> logits(static_cast<size_t>(rows) * out);
        for (int i = 0; i < mb; ++i) {
          for (int inst = 0; inst < spec.instances; ++inst) {
            const AgentSample& s = batch.steps[idx[i]]->agents[g][inst];
            std::copy(s.input.begin(), s.input.end(),
                      ax[g].begin() + (static_cast<size_t>(i) * spec.instances + inst) * in);
          }
        }
        mlp::batch_forward(actors_[g], ax[g], rows, logits);

        const double w = 1.0 / (static_cast<double>(mb) * spec.instances);
        // Entropy regularizes the per-head mean so that a multi-head actor
        // does not feel n_heads times the pressure of a single-head one.
        const double w_ent = w / static_cast<double>(spec.head_sizes.size());
        for (int i = 0; i < mb; ++i) {
          for (int inst = 0; inst < spec.instances; ++inst) {
            const AgentSample& s = batch.steps[idx[i]]->agents[g][inst];
            const size_t row = static_cast<size_t>(i) * spec.instances + inst;
            const double* z = logits.data() + row * out;
            double* dz = ady[g].data() + row * out;

            double logp_new = 0.0;
            std::vector<std::vector<double>> probs(spec.head_sizes.size());
            int offset = 0;
            for (size_t h = 0; h < spec.head_sizes.size(); ++h) {
              const int k = spec.head_sizes[h];
              probs[h].resize(k);
              masked_softmax(std::span<const double>(z + offset, k), s.masks[h], probs[h]);
              logp_new += std::log(probs[h][s.choice[h]]);
              offset += k;
            }
            if (!std::isfinite(logp_new)) throw std::runtime_error("NaN/Inf log-probability");
            const double ratio = std::exp(logp_new - s.logp);
            ratio_dev_sum += std::abs(ratio - 1.0);
            approx_kl_sum += (ratio - 1.0) - (logp_new - s.logp);
            ++ratio_count;
            const double dlogp = w * clip_objective_dlogp(ratio, adv[i], hyper_.clip_eps);

            offset = 0;
            for (size_t h = 0; h < spec.head_sizes.size(); ++h) {
              const int k = spec.head_sizes[h];
              const double entropy = categorical_entropy(probs[h]);
              for (int a = 0; a < k; ++a) {
                if (!s.masks[h][a]) continue;
                const double p = probs[h][a];
                const double indicator = (a == s.choice[h]) ? 1.0 : 0.0;
                double grad = dlogp * (indicator - p);
                if (p > 0.0) {
                  // d(-c2 * H)/dz_a = c2 * p * (log p + H)
                  grad += hyper_.entropy_coef * w_ent * p * (std::log(p) + entropy);
                }
                dz[offset + a] += grad;
              }
              offset += k;
            }
          }
        }
      }

      // Divergence guard: a wildly off-policy minibatch is skipped outright.
      if (ratio_count > 0 && ratio_dev_sum / ratio_count > 10.0) {
        ++diag_.skipped_updates;
        if (log_enabled()) {
          std::fprintf(stderr, "[iiotsim] skipping update: mean |ratio-1| = %.3f\n",
                       ratio_dev_sum / ratio_count);
        }
        continue;
      }

      // Gradients, joint norm clip, Adam.
      mlp::ParamBuf cgrad = mlp::make_param_buf(critic_);
      mlp::batch_backward(critic_, cx, cdy, mb, cgrad);
      std::vector<mlp::ParamBuf> agrads;
      for (int g = 0; g < n_groups; ++g) {
        agrads.push_back(mlp::make_param_buf(actors_[g]));
        mlp::batch_backward(actors_[g], ax[g], ady[g], group_rows[g], agrads[g]);
      }
      if (hyper_.grad_clip > 0.0) {
        // Per-network clipping; the critic's large early errors must not
        // scale down the actor updates.
        auto clip_buf = [this](mlp::ParamBuf& buf) {
          const double norm = std::sqrt(buf.squared_norm());
          if (norm <= hyper_.grad_clip) return;
          const double scale = hyper_.grad_clip / norm;
          for (auto& wv : buf.weights) {
            for (double& x : wv) x *= scale;
          }
          for (auto& bv : buf.biases) {
            for (double& x : bv) x *= scale;
          }
        };
        clip_buf(cgrad);
        for (auto& gbuf : agrads) clip_buf(gbuf);
      }
      critic_opt_->step(critic_, cgrad);
      for (int g = 0; g < n_groups; ++g) actor_opt_[g].step(actors_[g], agrads[g]);
      ++diag_.updates;

      if (hyper_.kl_stop > 0.0 && ratio_count > 0 &&
          approx_kl_sum / ratio_count > hyper_.kl_stop) {
        kl_stopped = true;
        break;
      }
    }
  }
  check_finite();
}

void Trainer::check_finite() const {
  auto check_net = [](const mlp::Net& net) {
    for (const auto& w : net.weights) {
      for (double v : w) {
        if (!std::isfinite(v)) throw std::runtime_error("non-finite parameter after update");
      }
    }
    for (const auto& b : net.biases) {
      for (double v : b) {
        if (!std::isfinite(v)) throw std::runtime_error("non-finite parameter after update");
      }
    }
  };
  for (const auto& a : actors_) check_net(a);
  check_net(critic_);
}

// --- checkpoint ------------------------------------------------------------------
// Layout (little-endian, version 1):
//   magic "IIOTCKP1" | u32 version
//   hyper: i64 episodes, f64 lr, i64 minibatch, f64 gamma, f64 gae_lambda,
//          f64 clip_eps, f64 value_coef, f64 entropy_coef, f64 adam_eps,
//          i64 epochs, i64 episodes_per_update, u32 n_hidden, i32...,
//          u8 normalize_advantages, f64 grad_clip, f64 kl_stop
//   u32 n_groups, per group: i32 instances, i32 input_dim, u32 n_heads, i32...
//   per net (actors in group order, then critic):
//     u32 n_dims, i32..., u8 activation, raw f64 weights+biases per layer,
//     i64 adam_t, raw f64 adam m and v in the same order
//   u64 master_seed, u64 shuffle_rng_state, i64 episodes_done,
//   i64 updates, i64 skipped_updates

namespace {

struct BinWriter {
  std::ofstream out;
  explicit BinWriter(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }
  template <typename T>
  void put(const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
};

struct BinReader {
  std::ifstream in;
  std::string path;
  explicit BinReader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("cannot open checkpoint: " + p);
  }
  template <typename T>
  T get() {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return v;
  }
  void get_doubles(std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }
};

constexpr char kMagic[8] = {'I', 'I', 'O', 'T', 'C', 'K', 'P', '1'};

void write_net(BinWriter& w, const mlp::Net& net, const mlp::Adam& opt) {
  w.put<uint32_t>(static_cast<uint32_t>(net.dims.size()));
  for (int d : net.dims) w.put<int32_t>(d);
  w.put<uint8_t>(net.act == mlp::Activation::kTanh ? 0 : 1);
  for (int l = 0; l < net.n_layers(); ++l) {
    w.put_doubles(net.weights[l]);
    w.put_doubles(net.biases[l]);
  }
  w.put<int64_t>(opt.steps_taken());
  for (int l = 0; l < net.n_layers(); ++l) {
    w.put_doubles(opt.m().weights[l]);
    w.put_doubles(opt.m().biases[l]);
  }
  for (int l = 0; l < net.n_layers(); ++l) {
    w.put_doubles(opt.v().weights[l]);
    w.put_doubles(opt.v().biases[l]);
  }
}

void read_net(BinReader& r, mlp::Net& net, mlp::Adam& opt) {
  const uint32_t n_dims = r.get<uint32_t>();
  std::vector<int> dims(n_dims);
  for (auto& d : dims) d = r.get<int32_t>();
  const uint8_t act = r.get<uint8_t>();
  if (dims != net.dims) throw std::runtime_error("checkpoint net shape mismatch");
  net.act = act == 0 ? mlp::Activation::kTanh : mlp::Activation::kRelu;
  for (int l = 0; l < net.n_layers(); ++l) {
    r.get_doubles(net.weights[l]);
    r.get_doubles(net.biases[l]);
  }
  opt.set_steps(r.get<int64_t>());
  for (int l = 0; l < net.n_layers(); ++l) {
    r.get_doubles(opt.m().weights[l]);
    r.get_doubles(opt.m().biases[l]);
  }
  for (int l = 0; l < net.n_layers(); ++l) {
    r.get_doubles(opt.v().weights[l]);
    r.get_doubles(opt.v().biases[l]);
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  BinWriter w(path);
  w.out.write(kMagic, sizeof(kMagic));
  w.put<uint32_t>(1);
  w.put<int64_t>(hyper_.episodes);
  w.put<double>(hyper_.lr);
  w.put<int64_t>(hyper_.minibatch);
  w.put<double>(hyper_.gamma);
  w.put<double>(hyper_.gae_lambda);
  w.put<double>(hyper_.clip_eps);
  w.put<double>(hyper_.value_coef);
  w.put<double>(hyper_.entropy_coef);
  w.put<double>(hyper_.adam_eps);
  w.put<int64_t>(hyper_.epochs);
  w.put<int64_t>(hyper_.episodes_per_update);
  w.put<uint32_t>(static_cast<uint32_t>(hyper_.hidden.size()));
  for (int h : hyper_.hidden) w.put<int32_t>(h);
  w.put<uint8_t>(hyper_.normalize_advantages ? 1 : 0);
  w.put<double>(hyper_.grad_clip);
  w.put<double>(hyper_.kl_stop);
  w.put<uint32_t>(static_cast<uint32_t>(specs_.size()));
  for (const auto& spec : specs_) {
    w.put<int32_t>(spec.instances);
    w.put<int32_t>(spec.input_dim);
    w.put<uint32_t>(static_cast<uint32_t>(spec.head_sizes.size()));
    for (int h : spec.head_sizes) w.put<int32_t>(h);
  }
  for (size_t g = 0; g < actors_.size(); ++g) write_net(w, actors_[g], actor_opt_[g]);
  write_net(w, critic_, *critic_opt_);
  w.put<uint64_t>(master_seed_);
  w.put<uint64_t>(shuffle_rng_.state());
  w.put<int64_t>(episodes_done_);
  w.put<int64_t>(diag_.updates);
  w.put<int64_t>(diag_.skipped_updates);
  if (!w.out) throw std::runtime_error("checkpoint write failed: " + path);
}

void Trainer::load_checkpoint(const std::string& path) {
  BinReader r(path);
  char magic[8];
  r.in.read(magic, sizeof(magic));
  if (!r.in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not an iiotsim checkpoint: " + path);
  }
  const uint32_t version = r.get<uint32_t>();
  if (version != 1) throw std::runtime_error("unsupported checkpoint version");
  hyper_.episodes = static_cast<int>(r.get<int64_t>());
  hyper_.lr = r.get<double>();
  hyper_.minibatch = static_cast<int>(r.get<int64_t>());
  hyper_.gamma = r.get<double>();
  hyper_.gae_lambda = r.get<double>();
  hyper_.clip_eps = r.get<double>();
  hyper_.value_coef = r.get<double>();
  hyper_.entropy_coef = r.get<double>();
  hyper_.adam_eps = r.get<double>();
  hyper_.epochs = static_cast<int>(r.get<int64_t>());
  hyper_.episodes_per_update = static_cast<int>(r.get<int64_t>());
  const uint32_t n_hidden = r.get<uint32_t>();
  hyper_.hidden.assign(n_hidden, 0);
  for (auto& h : hyper_.hidden) h = r.get<int32_t>();
  hyper_.normalize_advantages = r.get<uint8_t>() != 0;
  hyper_.grad_clip = r.get<double>();
  hyper_.kl_stop = r.get<double>();
  const uint32_t n_groups = r.get<uint32_t>();
  if (n_groups != specs_.size()) throw std::runtime_error("checkpoint group count mismatch");
  for (const auto& spec : specs_) {
    if (r.get<int32_t>() != spec.instances || r.get<int32_t>() != spec.input_dim) {
      throw std::runtime_error("checkpoint group spec mismatch");
    }
    const uint32_t n_heads = r.get<uint32_t>();
    if (n_heads != spec.head_sizes.size()) throw std::runtime_error("checkpoint head mismatch");
    for (int h : spec.head_sizes) {
      if (r.get<int32_t>() != h) throw std::runtime_error("checkpoint head size mismatch");
    }
  }
  for (size_t g = 0; g < actors_.size(); ++g) read_net(r, actors_[g], actor_opt_[g]);
  read_net(r, critic_, *critic_opt_);
  master_seed_ = r.get<uint64_t>();
  shuffle_rng_.set_state(r.get<uint64_t>());
  episodes_done_ = r.get<int64_t>();
  diag_.updates = r.get<int64_t>();
  diag_.skipped_updates = r.get<int64_t>();
  diag_.episodes = episodes_done_;
}

}  // namespace iiotsim::mappo
