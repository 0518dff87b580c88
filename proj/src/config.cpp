#include "iiotsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace iiotsim::config {

using nlohmann::json;

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::invalid_argument("unknown config key '" + where + it.key() + "'");
    }
  }
}

template <typename T>
void read_to(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_env(const json& j, env::EnvConfig& e) {
  reject_unknown(j, {"n_devices", "n_channels", "queue_capacity", "t_max", "slot_ms", "rho",
                     "history_len", "area_m", "prefill", "p_task", "task_size_bits",
                     "task_cycles_per_bit", "task_deadline_ms", "f_local_hz", "f_bs_total_hz",
                     "bandwidth_hz", "noise_psd_dbm_hz", "tx_power_dbm", "pathloss_ref_db",
                     "pathloss_slope_db"},
                 "env.");
  read_to(j, "n_devices", e.n_devices);
  read_to(j, "n_channels", e.n_channels);
  read_to(j, "queue_capacity", e.queue_capacity);
  read_to(j, "t_max", e.t_max);
  read_to(j, "slot_ms", e.slot_ms);
  read_to(j, "rho", e.rho);
  read_to(j, "history_len", e.history_len);
  read_to(j, "area_m", e.area_m);
  read_to(j, "prefill", e.prefill);
  read_to(j, "p_task", e.arrival.p_task);
  if (j.contains("task_size_bits")) {
    auto v = j.at("task_size_bits").get<std::vector<int64_t>>();
    if (v.size() != 2) throw std::invalid_argument("task_size_bits wants [min, max]");
    e.task_ranges.size_min = v[0];
    e.task_ranges.size_max = v[1];
  }
  if (j.contains("task_cycles_per_bit")) {
    auto v = j.at("task_cycles_per_bit").get<std::vector<int64_t>>();
    if (v.size() != 2) throw std::invalid_argument("task_cycles_per_bit wants [min, max]");
    e.task_ranges.cycles_min = v[0];
    e.task_ranges.cycles_max = v[1];
  }
  if (j.contains("task_deadline_ms")) {
    auto v = j.at("task_deadline_ms").get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument("task_deadline_ms wants [min, max]");
    e.task_ranges.deadline_min_ms = v[0];
    e.task_ranges.deadline_max_ms = v[1];
  }
  read_to(j, "f_local_hz", e.compute.f_local_hz);
  read_to(j, "f_bs_total_hz", e.compute.f_bs_total_hz);
  read_to(j, "bandwidth_hz", e.link.bandwidth_hz);
  read_to(j, "noise_psd_dbm_hz", e.link.noise_psd_dbm_hz);
  read_to(j, "tx_power_dbm", e.link.tx_power_dbm);
  read_to(j, "pathloss_ref_db", e.link.pathloss_ref_db);
  read_to(j, "pathloss_slope_db", e.link.pathloss_slope_db);
}

void parse_train(const json& j, mappo::Hyper& h) {
  reject_unknown(j, {"episodes", "lr", "minibatch", "gamma", "gae_lambda", "clip_eps",
                     "value_coef", "entropy_coef", "adam_eps", "epochs", "episodes_per_update",
                     "hidden", "normalize_advantages", "grad_clip", "kl_stop"},
                 "train.");
  read_to(j, "episodes", h.episodes);
  read_to(j, "lr", h.lr);
  read_to(j, "minibatch", h.minibatch);
  read_to(j, "gamma", h.gamma);
  read_to(j, "gae_lambda", h.gae_lambda);
  read_to(j, "clip_eps", h.clip_eps);
  read_to(j, "value_coef", h.value_coef);
  read_to(j, "entropy_coef", h.entropy_coef);
  read_to(j, "adam_eps", h.adam_eps);
  read_to(j, "epochs", h.epochs);
  read_to(j, "episodes_per_update", h.episodes_per_update);
  read_to(j, "hidden", h.hidden);
  read_to(j, "normalize_advantages", h.normalize_advantages);
  read_to(j, "grad_clip", h.grad_clip);
  read_to(j, "kl_stop", h.kl_stop);
}

void validate(const ExperimentConfig& cfg) {
  const auto& e = cfg.env;
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (e.n_devices < 1) fail("n_devices must be >= 1");
  if (e.n_channels < 1) fail("n_channels must be >= 1");
  if (e.queue_capacity < 1) fail("queue_capacity must be >= 1");
  if (e.t_max < 1) fail("t_max must be >= 1");
  if (e.slot_ms <= 0) fail("slot_ms must be positive");
  if (e.history_len < 1) fail("history_len must be >= 1");
  if (e.arrival.p_task < 0 || e.arrival.p_task > 1) fail("p_task must be in [0,1]");
  if (e.task_ranges.size_min > e.task_ranges.size_max ||
      e.task_ranges.cycles_min > e.task_ranges.cycles_max ||
      e.task_ranges.deadline_min_ms > e.task_ranges.deadline_max_ms) {
    fail("task range has min > max");
  }
  if (e.task_ranges.size_min <= 0 || e.task_ranges.deadline_min_ms <= 0) {
    fail("task ranges must be positive");
  }
  if (e.compute.f_local_hz <= 0 || e.compute.f_bs_total_hz <= 0) fail("CPU speeds must be positive");
  if (e.compute.f_local_hz > e.compute.f_bs_total_hz) fail("f_local exceeds BS capacity");
  if (e.link.bandwidth_hz <= 0) fail("bandwidth must be positive");
  if (e.prefill < 0 || e.prefill > e.queue_capacity) fail("prefill outside [0, capacity]");
  const auto& t = cfg.train;
  if (t.episodes < 0) fail("episodes must be >= 0");
  if (t.lr <= 0) fail("lr must be positive");
  if (t.minibatch < 1) fail("minibatch must be >= 1");
  if (t.gamma <= 0 || t.gamma > 1) fail("gamma must be in (0,1]");
  if (t.gae_lambda < 0 || t.gae_lambda > 1) fail("gae_lambda must be in [0,1]");
  if (t.clip_eps <= 0 || t.clip_eps >= 1) fail("clip_eps must be in (0,1)");
  if (t.adam_eps <= 0) fail("adam_eps must be positive");
  if (t.epochs < 1) fail("epochs must be >= 1");
  if (t.episodes_per_update < 1) fail("episodes_per_update must be >= 1");
  for (int hdim : t.hidden) {
    if (hdim < 1) fail("hidden sizes must be positive");
  }
  if (cfg.p_transmit < 0 || cfg.p_transmit > 1) fail("p_transmit must be in [0,1]");
  if (cfg.eval_interval < 1) fail("eval_interval must be >= 1");
  if (cfg.eval_episodes < 1) fail("eval_episodes must be >= 1");
  if (cfg.seeds.empty()) fail("at least one seed");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j = json::parse(json_text);
  reject_unknown(j, {"env", "train", "scheme", "seeds", "p_transmit", "eval_interval",
                     "eval_episodes", "out_dir"},
                 "");
  ExperimentConfig cfg;
  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  if (j.contains("scheme")) cfg.scheme = schemes::parse_scheme(j.at("scheme").get<std::string>());
  read_to(j, "seeds", cfg.seeds);
  read_to(j, "p_transmit", cfg.p_transmit);
  read_to(j, "eval_interval", cfg.eval_interval);
  read_to(j, "eval_episodes", cfg.eval_episodes);
  read_to(j, "out_dir", cfg.out_dir);
  cfg.env.arrival.horizon = cfg.env.t_max;
  cfg.env.link.n_channels = cfg.env.n_channels;
  schemes::apply_scheme(cfg.env, cfg.scheme);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  const auto& e = cfg.env;
  j["env"] = {
      {"n_devices", e.n_devices},
      {"n_channels", e.n_channels},
      {"queue_capacity", e.queue_capacity},
      {"t_max", e.t_max},
      {"slot_ms", e.slot_ms},
      {"rho", e.rho},
      {"history_len", e.history_len},
      {"area_m", e.area_m},
      {"prefill", e.prefill},
      {"p_task", e.arrival.p_task},
      {"task_size_bits", {e.task_ranges.size_min, e.task_ranges.size_max}},
      {"task_cycles_per_bit", {e.task_ranges.cycles_min, e.task_ranges.cycles_max}},
      {"task_deadline_ms", {e.task_ranges.deadline_min_ms, e.task_ranges.deadline_max_ms}},
      {"f_local_hz", e.compute.f_local_hz},
      {"f_bs_total_hz", e.compute.f_bs_total_hz},
      {"bandwidth_hz", e.link.bandwidth_hz},
      {"noise_psd_dbm_hz", e.link.noise_psd_dbm_hz},
      {"tx_power_dbm", e.link.tx_power_dbm},
      {"pathloss_ref_db", e.link.pathloss_ref_db},
      {"pathloss_slope_db", e.link.pathloss_slope_db},
  };
  const auto& t = cfg.train;
  j["train"] = {
      {"episodes", t.episodes},
      {"lr", t.lr},
      {"minibatch", t.minibatch},
      {"gamma", t.gamma},
      {"gae_lambda", t.gae_lambda},
      {"clip_eps", t.clip_eps},
      {"value_coef", t.value_coef},
      {"entropy_coef", t.entropy_coef},
      {"adam_eps", t.adam_eps},
      {"epochs", t.epochs},
      {"episodes_per_update", t.episodes_per_update},
      {"hidden", t.hidden},
      {"normalize_advantages", t.normalize_advantages},
      {"grad_clip", t.grad_clip},
      {"kl_stop", t.kl_stop},
  };
  j["scheme"] = schemes::scheme_name(cfg.scheme);
  j["seeds"] = cfg.seeds;
  j["p_transmit"] = cfg.p_transmit;
  j["eval_interval"] = cfg.eval_interval;
  j["eval_episodes"] = cfg.eval_episodes;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

}  // namespace iiotsim::config
