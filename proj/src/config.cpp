#include "sagin/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <type_traits>

namespace sagin::exp {
namespace {

using json = nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

channel::RainMode parse_rain_mode(const std::string& s, const std::string& path) {
  if (s == "fixed") return channel::RainMode::kFixed;
  if (s == "weibull") return channel::RainMode::kWeibull;
  throw ConfigError(path + ": expected \"fixed\" or \"weibull\", got \"" + s + "\"");
}

const char* rain_mode_name(channel::RainMode m) { return m == channel::RainMode::kFixed ? "fixed" : "weibull"; }

template <class T>
void read(const json& j, const std::string& path, T& out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    if (j.is_number_unsigned()) {
      const auto v = j.get<std::uint64_t>();
      if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) throw ConfigError(path + ": out of range");
      out = static_cast<T>(v);
    } else {
      const auto v = j.get<std::int64_t>();
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) throw ConfigError(path + ": must be >= 0");
      } else {
        if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
            v > static_cast<std::int64_t>(std::numeric_limits<T>::max())) {
          throw ConfigError(path + ": out of range");
        }
      }
      out = static_cast<T>(v);
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    out = j.get<std::string>();
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    T v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) read(j[i], path + "[" + std::to_string(i) + "]", v[i]);
    out = std::move(v);
  } else {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    const auto s = j.get<std::string>();
    try {
      if constexpr (std::is_same_v<T, Scenario>) {
        out = parse_scenario(s);
      } else if constexpr (std::is_same_v<T, agent::Algorithm>) {
        out = agent::parse_algorithm(s);
      } else {
        static_assert(std::is_same_v<T, channel::RainMode>);
        out = parse_rain_mode(s, path);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
}

template <class T>
json write(const T& v) {
  if constexpr (std::is_same_v<T, Scenario> || std::is_same_v<T, agent::Algorithm>) {
    return to_string(v);
  } else if constexpr (std::is_same_v<T, channel::RainMode>) {
    return rain_mode_name(v);
  } else {
    return v;
  }
}

class Loader {
 public:
  Loader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
  }

  template <class T>
  void field(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) read(*it, join(path_, key), out);
  }

  template <class F>
  void section(const char* key, F&& fn) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Loader sub(*it, join(path_, key));
    fn(sub);
    sub.finish();
  }

  void ignore(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(join(path_, item.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Dumper {
 public:
  explicit Dumper(json& j) : j_(j) { j_ = json::object(); }

  template <class T>
  void field(const char* key, const T& v) {
    j_[key] = write(v);
  }

  template <class F>
  void section(const char* key, F&& fn) {
    Dumper sub(j_[key]);
    fn(sub);
  }

  void ignore(const char*) {}
  void finish() const {}

 private:
  json& j_;
};

template <class V>
void visit_radio(V& v, sim::Radio& r) {
  v.field("bandwidth", r.bandwidth);
  v.field("tx_power", r.tx_power);
  v.field("noise_power", r.noise_power);
  v.field("tx_gain", r.tx_gain);
  v.field("rx_gain", r.rx_gain);
  v.field("wavelength", r.wavelength);
}

template <class V>
void visit(V& v, ExperimentConfig& c) {
  v.ignore("meta");
  v.section("experiment", [&](V& s) {
    auto& e = c.experiment;
    s.field("scenario", e.scenario);
    s.field("algorithm", e.algorithm);
    s.field("seeds", e.seeds);
    s.field("source_sweep", e.source_sweep);
    s.field("speed_sweep", e.speed_sweep);
    s.field("train_episodes", e.train_episodes);
    s.field("ticks_per_episode", e.ticks_per_episode);
    s.field("eval_ticks", e.eval_ticks);
    s.field("train_interval", e.train_interval);
    s.field("pole_lengths", e.pole_lengths);
    s.field("cartpole_episodes", e.cartpole_episodes);
    s.field("cartpole_train_interval", e.cartpole_train_interval);
    s.field("final_window", e.final_window);
    s.field("out_dir", e.out_dir);
  });
  v.section("channel", [&](V& s) {
    s.section("air_ground", [&](V& a) {
      auto& p = c.sim.air_ground;
      a.field("phi", p.phi);
      a.field("omega0", p.omega0);
      a.field("eta", p.eta);
      a.field("gamma", p.gamma);
      a.field("k0", p.k0);
    });
    s.section("rain", [&](V& a) {
      auto& r = c.sim.rain;
      a.field("mode", r.mode);
      a.field("fixed_db", r.fixed_db);
      a.field("shape", r.shape);
      a.field("scale", r.scale);
    });
    s.section("radio", [&](V& a) {
      auto& t = c.sim.radio;
      a.section("bs_uav", [&](V& r) { visit_radio(r, t.bs_uav); });
      a.section("bs_leo", [&](V& r) { visit_radio(r, t.bs_leo); });
      a.section("bs_geo", [&](V& r) { visit_radio(r, t.bs_geo); });
      a.section("uav_leo", [&](V& r) { visit_radio(r, t.uav_leo); });
      a.section("uav_geo", [&](V& r) { visit_radio(r, t.uav_geo); });
      a.section("leo_geo", [&](V& r) { visit_radio(r, t.leo_geo); });
    });
  });
  v.section("sim", [&](V& s) {
    auto& m = c.sim;
    s.field("area_side_m", m.area_side_m);
    s.field("num_bs", m.num_bs);
    s.field("num_uav", m.num_uav);
    s.field("num_leo", m.num_leo);
    s.field("num_geo", m.num_geo);
    s.field("num_sources", m.num_sources);
    s.field("num_dests", m.num_dests);
    s.field("tick_s", m.tick_s);
    s.field("packet_bits", m.packet_bits);
    s.field("relay_queue_capacity", m.relay_queue_capacity);
    s.field("ue_queue_capacity", m.ue_queue_capacity);
    s.field("source_rate_mean_bps", m.source_rate_mean_bps);
    s.field("source_rate_sd_bps", m.source_rate_sd_bps);
    s.field("ue_speed_mps", m.ue_speed_mps);
    s.field("bs_height_m", m.bs_height_m);
    s.field("uav_speed_mps", m.uav_speed_mps);
    s.field("uav_altitude_m", m.uav_altitude_m);
    s.field("uav_direction_period_s", m.uav_direction_period_s);
    s.field("uav_radius_m", m.uav_radius_m);
    s.field("leo_altitude_m", m.leo_altitude_m);
    s.field("leo_period_s", m.leo_period_s);
    s.field("leo_duty", m.leo_duty);
    s.field("leo_track_margin_m", m.leo_track_margin_m);
    s.field("geo_altitude_m", m.geo_altitude_m);
    s.field("access_rate_bps", m.access_rate_bps);
    s.field("backhaul_rate_bps", m.backhaul_rate_bps);
    s.field("propagation_delay", m.propagation_delay);
  });
  v.section("env", [&](V& s) {
    s.field("max_one_hop", c.layout.max_one_hop);
    s.field("max_two_hop", c.layout.max_two_hop);
    s.field("rate_divisor", c.layout.rate_divisor);
    s.field("full_action_enumeration", c.full_action_enumeration);
  });
  v.section("nn", [&](V& s) { s.field("hidden", c.hidden); });
  v.section("agent", [&](V& s) {
    auto& a = c.sac;
    s.field("gamma", a.gamma);
    s.field("lr", a.lr);
    s.field("alpha_lr", a.alpha_lr);
    s.field("target_entropy", a.target_entropy);
    s.field("cartpole_target_entropy", c.cartpole_target_entropy);
    s.field("initial_alpha", a.initial_alpha);
    s.field("batch_size", a.batch_size);
    s.field("replay_capacity", a.replay_capacity);
    s.field("warmup", a.warmup);
    s.field("target_tau", a.target_tau);
    s.field("target_interval", a.target_interval);
  });
  v.section("federation", [&](V& s) {
    s.field("epsilon", c.fed_epsilon);
    s.field("k", c.fed_k);
  });
  v.section("ddqn", [&](V& s) {
    auto& d = c.ddqn;
    s.field("gamma", d.gamma);
    s.field("lr", d.lr);
    s.field("batch_size", d.batch_size);
    s.field("replay_capacity", d.replay_capacity);
    s.field("warmup", d.warmup);
    s.field("epsilon_start", d.epsilon_start);
    s.field("epsilon_end", d.epsilon_end);
    s.field("epsilon_decay_steps", d.epsilon_decay_steps);
    s.field("target_sync", d.target_sync);
  });
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

template <class F>
void wrap(const std::string& path, F&& check) {
  try {
    check();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kSaginSweep: return "sagin_sweep";
    case Scenario::kSaginSpeedSweep: return "sagin_speed_sweep";
    case Scenario::kCartpoleDifferentiated: return "cartpole_differentiated";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::kSaginSweep, Scenario::kSaginSpeedSweep, Scenario::kCartpoleDifferentiated}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected sagin_sweep, sagin_speed_sweep or cartpole_differentiated)");
}

void ExperimentConfig::validate() const {
  const auto& e = experiment;
  require(!e.seeds.empty(), "experiment.seeds", "must be nonempty");
  require(std::set<std::uint64_t>(e.seeds.begin(), e.seeds.end()).size() == e.seeds.size(), "experiment.seeds",
          "seeds must be distinct");
  require(!e.source_sweep.empty(), "experiment.source_sweep", "must be nonempty");
  for (std::size_t i = 0; i < e.source_sweep.size(); ++i) {
    require(e.source_sweep[i] >= 1, "experiment.source_sweep[" + std::to_string(i) + "]", "must be >= 1");
  }
  require(!e.speed_sweep.empty(), "experiment.speed_sweep", "must be nonempty");
  for (std::size_t i = 0; i < e.speed_sweep.size(); ++i) {
    require(e.speed_sweep[i] >= 0, "experiment.speed_sweep[" + std::to_string(i) + "]", "must be >= 0");
  }
  require(e.train_episodes >= 0, "experiment.train_episodes", "must be >= 0");
  require(e.ticks_per_episode >= 1, "experiment.ticks_per_episode", "must be >= 1");
  require(e.eval_ticks >= 1, "experiment.eval_ticks", "must be >= 1");
  require(e.train_interval >= 1, "experiment.train_interval", "must be >= 1");
  require(!e.pole_lengths.empty(), "experiment.pole_lengths", "must be nonempty");
  for (std::size_t i = 0; i < e.pole_lengths.size(); ++i) {
    require(e.pole_lengths[i] > 0, "experiment.pole_lengths[" + std::to_string(i) + "]", "must be > 0");
  }
  require(e.cartpole_episodes >= 1, "experiment.cartpole_episodes", "must be >= 1");
  require(e.cartpole_train_interval >= 1, "experiment.cartpole_train_interval", "must be >= 1");
  require(e.final_window >= 1, "experiment.final_window", "must be >= 1");
  require(!e.out_dir.empty(), "experiment.out_dir", "must be nonempty");

  wrap("channel.air_ground", [&] { sim.air_ground.validate(); });
  wrap("channel.rain", [&] { sim.rain.validate(); });
  const std::pair<const char*, const sim::Radio*> radios[] = {
      {"bs_uav", &sim.radio.bs_uav},   {"bs_leo", &sim.radio.bs_leo},   {"bs_geo", &sim.radio.bs_geo},
      {"uav_leo", &sim.radio.uav_leo}, {"uav_geo", &sim.radio.uav_geo}, {"leo_geo", &sim.radio.leo_geo}};
  for (const auto& [name, r] : radios) wrap(std::string("channel.radio.") + name, [&] { r->validate(); });
  wrap("sim", [&] { sim.validate(); });

  require(layout.max_one_hop >= 0, "env.max_one_hop", "must be >= 0");
  require(layout.max_two_hop >= 0, "env.max_two_hop", "must be >= 0");
  require(layout.rate_divisor > 0, "env.rate_divisor", "must be > 0");
  require(!hidden.empty(), "nn.hidden", "must have at least one layer");
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    require(hidden[i] >= 1, "nn.hidden[" + std::to_string(i) + "]", "must be >= 1");
  }
  wrap("agent", [&] { team_config(false).sac.validate(); });
  wrap("ddqn", [&] { team_config(false).ddqn.validate(); });
  require(fed_epsilon > 0 && fed_epsilon <= 1, "federation.epsilon", "must be in (0, 1]");
  require(fed_k >= 1, "federation.k", "must be >= 1");
}

agent::TeamConfig ExperimentConfig::team_config(bool cartpole) const {
  agent::TeamConfig t;
  t.sac = sac;
  t.sac.hidden = hidden;
  if (cartpole) t.sac.target_entropy = cartpole_target_entropy;
  t.ddqn = ddqn;
  t.ddqn.hidden = hidden;
  t.epsilon = fed_epsilon;
  t.k = fed_k;
  return t;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  Loader root(j, "");
  visit(root, c);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  ExperimentConfig copy = c;
  nlohmann::json j;
  Dumper d(j);
  visit(d, copy);
  return j;
}

}  // namespace sagin::exp
