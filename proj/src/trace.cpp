#include "iiotsim/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace iiotsim::trace {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void expect_token(std::istream& in, const std::string& want) {
  std::string tok;
  if (!(in >> tok) || tok != want) {
    throw std::runtime_error("trace parse error: expected '" + want + "', got '" + tok + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw std::runtime_error(std::string("trace parse error reading ") + what);
  return v;
}

}  // namespace

void write_trace(const env::Environment& e, schemes::Scheme scheme, std::ostream& out) {
  const auto& cfg = e.config();
  out << "iiotsim-trace v1\n";
  out << "scheme " << schemes::scheme_name(scheme) << " seed " << e.episode_seed()
      << " n_devices " << cfg.n_devices << " n_channels " << cfg.n_channels << '\n';
  for (const auto& rec : e.trace()) {
    out << "slot " << rec.slot << " acts";
    for (const auto& a : rec.device_actions) out << ' ' << a.env_choice << ':' << a.uplink_msg;
    out << " dl";
    for (int d : rec.downlink) out << ' ' << d;
    out << " chan";
    for (int h : rec.channel_state) out << ' ' << h;
    out << " eff";
    for (auto ef : rec.effects) out << ' ' << static_cast<int>(ef);
    out << " r " << fmt_double(rec.team_reward) << " ok " << rec.completions_ok << " late "
        << rec.completions_late << " dropt " << rec.dropped_timeout << " dropf "
        << rec.dropped_full << " arr " << rec.arrivals << '\n';
  }
  const auto& s = e.stats();
  out << "end reward " << fmt_double(s.total_reward) << " slots " << s.slots << " arrivals "
      << s.arrivals << " ok " << s.completions_ok << " late " << s.completions_late << " dropt "
      << s.dropped_timeout << " dropf " << s.dropped_full << " coll "
      << s.collision_channel_slots << " succ " << s.success_channel_slots << " residual "
      << s.residual_tasks << '\n';
}

void write_trace_file(const env::Environment& e, schemes::Scheme scheme, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  write_trace(e, scheme, out);
  if (!out) throw std::runtime_error("trace file write failed: " + path);
}

TraceFile read_trace(std::istream& in) {
  TraceFile t;
  std::string line;
  if (!std::getline(in, line) || line != "iiotsim-trace v1") {
    throw std::runtime_error("not an iiotsim trace (bad header)");
  }
  {
    std::getline(in, line);
    std::istringstream ls(line);
    expect_token(ls, "scheme");
    t.scheme = read_value<std::string>(ls, "scheme");
    expect_token(ls, "seed");
    t.seed = read_value<uint64_t>(ls, "seed");
    expect_token(ls, "n_devices");
    t.n_devices = read_value<int>(ls, "n_devices");
    expect_token(ls, "n_channels");
    t.n_channels = read_value<int>(ls, "n_channels");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag = read_value<std::string>(ls, "record tag");
    if (tag == "end") {
      auto& s = t.final_stats;
      expect_token(ls, "reward");
      s.total_reward = read_value<double>(ls, "reward");
      expect_token(ls, "slots");
      s.slots = read_value<int64_t>(ls, "slots");
      expect_token(ls, "arrivals");
      s.arrivals = read_value<int64_t>(ls, "arrivals");
      expect_token(ls, "ok");
      s.completions_ok = read_value<int64_t>(ls, "ok");
      expect_token(ls, "late");
      s.completions_late = read_value<int64_t>(ls, "late");
      expect_token(ls, "dropt");
      s.dropped_timeout = read_value<int64_t>(ls, "dropt");
      expect_token(ls, "dropf");
      s.dropped_full = read_value<int64_t>(ls, "dropf");
      expect_token(ls, "coll");
      s.collision_channel_slots = read_value<int64_t>(ls, "coll");
      expect_token(ls, "succ");
      s.success_channel_slots = read_value<int64_t>(ls, "succ");
      expect_token(ls, "residual");
      s.residual_tasks = read_value<int64_t>(ls, "residual");
      return t;
    }
    if (tag != "slot") throw std::runtime_error("trace parse error: unexpected line tag " + tag);
    env::TraceRecord rec;
    rec.slot = read_value<int>(ls, "slot index");
    expect_token(ls, "acts");
    rec.device_actions.resize(t.n_devices);
    for (auto& a : rec.device_actions) {
      std::string pair = read_value<std::string>(ls, "action pair");
      const auto colon = pair.find(':');
      if (colon == std::string::npos) throw std::runtime_error("trace parse error: bad action pair");
      a.env_choice = std::stoi(pair.substr(0, colon));
      a.uplink_msg = std::stoi(pair.substr(colon + 1));
    }
    expect_token(ls, "dl");
    rec.downlink.resize(t.n_devices);
    for (auto& d : rec.downlink) d = read_value<int>(ls, "downlink");
    expect_token(ls, "chan");
    rec.channel_state.resize(t.n_channels);
    for (auto& h : rec.channel_state) h = read_value<int>(ls, "channel state");
    expect_token(ls, "eff");
    rec.effects.resize(t.n_devices);
    for (auto& ef : rec.effects) ef = static_cast<env::ActionEffect>(read_value<int>(ls, "effect"));
    expect_token(ls, "r");
    rec.team_reward = read_value<double>(ls, "reward");
    expect_token(ls, "ok");
    rec.completions_ok = read_value<int>(ls, "ok");
    expect_token(ls, "late");
    rec.completions_late = read_value<int>(ls, "late");
    expect_token(ls, "dropt");
    rec.dropped_timeout = read_value<int>(ls, "dropt");
    expect_token(ls, "dropf");
    rec.dropped_full = read_value<int>(ls, "dropf");
    expect_token(ls, "arr");
    rec.arrivals = read_value<int>(ls, "arr");
    t.records.push_back(std::move(rec));
  }
  throw std::runtime_error("trace parse error: missing end line");
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace(in);
}

bool replay_trace(const TraceFile& t, const env::EnvConfig& cfg, std::string* error) {
  auto mismatch = [&](const std::string& msg) {
    if (error != nullptr) *error = msg;
    return false;
  };
  if (cfg.n_devices != t.n_devices || cfg.n_channels != t.n_channels) {
    return mismatch("config dimensions differ from trace header");
  }
  env::EnvConfig replay_cfg = cfg;
  schemes::apply_scheme(replay_cfg, schemes::parse_scheme(t.scheme));
  env::Environment e(replay_cfg);
  e.reset(t.seed);
  for (const auto& rec : t.records) {
    if (e.done()) return mismatch("environment finished before the trace did");
    env::BsAction bs{rec.downlink};
    const env::StepOutcome out = e.step(rec.device_actions, bs);
    if (out.team_reward != rec.team_reward) {
      return mismatch("reward mismatch at slot " + std::to_string(rec.slot));
    }
    if (out.completions_ok != rec.completions_ok || out.completions_late != rec.completions_late ||
        out.dropped_timeout != rec.dropped_timeout || out.dropped_full != rec.dropped_full ||
        out.arrivals != rec.arrivals) {
      return mismatch("counter mismatch at slot " + std::to_string(rec.slot));
    }
    const auto& report = e.bs_obs().chan_states;
    if (report != rec.channel_state) {
      return mismatch("channel report mismatch at slot " + std::to_string(rec.slot));
    }
    for (int n = 0; n < t.n_devices; ++n) {
      if (out.effects[n] != rec.effects[n]) {
        return mismatch("effect mismatch at slot " + std::to_string(rec.slot));
      }
    }
  }
  if (!e.done()) return mismatch("trace ended before the environment did");
  const auto& s = e.stats();
  const auto& f = t.final_stats;
  if (s.total_reward != f.total_reward || s.slots != f.slots || s.arrivals != f.arrivals ||
      s.completions_ok != f.completions_ok || s.completions_late != f.completions_late ||
      s.dropped_timeout != f.dropped_timeout || s.dropped_full != f.dropped_full ||
      s.collision_channel_slots != f.collision_channel_slots ||
      s.success_channel_slots != f.success_channel_slots || s.residual_tasks != f.residual_tasks) {
    return mismatch("final stats mismatch");
  }
  return true;
}

metrics::MetricValues metrics_from_trace(const TraceFile& t) {
  env::EpisodeStats s;
  s.slots = static_cast<int64_t>(t.records.size());
  for (const auto& rec : t.records) {
    s.completions_ok += rec.completions_ok;
    for (int h : rec.channel_state) {
      if (h >= 1 && h <= t.n_devices) ++s.success_channel_slots;
      if (h == t.n_devices + 1) ++s.collision_channel_slots;
    }
  }
  return metrics::from_stats(s, t.n_channels);
}

}  // namespace iiotsim::trace
