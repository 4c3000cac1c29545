#include "specshare/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace specshare {

using nlohmann::json;

namespace {

std::string_view to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::Standard: return "standard";
    case LayoutKind::Grid: return "grid";
    case LayoutKind::Hex: return "hex";
  }
  return "standard";
}

LayoutKind layout_kind_from_string(const std::string& s) {
  if (s == "standard") return LayoutKind::Standard;
  if (s == "grid") return LayoutKind::Grid;
  if (s == "hex") return LayoutKind::Hex;
  throw ConfigError("unknown layout kind: " + s);
}

// Reads known keys from one JSON object and rejects anything else.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      check_type<T>(*it, key);
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

 private:
  template <class T>
  void check_type(const json& v, const char* key) const {
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T>) ok = v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
    else if constexpr (std::is_same_v<T, std::string>) ok = v.is_string();
    if (!ok) throw ConfigError(where_ + "." + key + ": wrong type");
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

Layout ExperimentConfig::build_layout() const {
  switch (layout.kind) {
    case LayoutKind::Standard:
      return generate_layout(scenario, layout.inter_site_distance);
    case LayoutKind::Grid:
      if (scenario != Scenario::InhOffice) throw ConfigError("grid layouts are InH only");
      return inh_grid_layout(layout.rows, layout.cols,
                             layout.inter_site_distance > 0 ? layout.inter_site_distance : kInhDefaultIsd);
    case LayoutKind::Hex:
      if (scenario != Scenario::UmiStreetCanyon) throw ConfigError("hex layouts are UMi only");
      return umi_hex_layout(layout.rings, layout.inter_site_distance > 0 ? layout.inter_site_distance : kUmiDefaultIsd);
  }
  throw ConfigError("bad layout kind");
}

EnvConfig ExperimentConfig::resolved_env() const {
  EnvConfig e = env;
  e.k_trunc = k_trunc >= 0 ? k_trunc : (scenario == Scenario::InhOffice ? 3 : 5);
  return e;
}

TrainingSetup ExperimentConfig::training_setup() const {
  TrainingSetup s;
  s.layout = build_layout();
  s.env = resolved_env();
  s.learner = learner;
  s.n_batch = n_batch;
  s.episode_length = episode_length;
  s.seed = seed;
  s.configuration_pool = configuration_pool;
  return s;
}

void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.n_batch >= 1, "n_batch must be at least 1");
  need(c.episode_length >= 1, "episode_length must be at least 1");
  need(c.iterations >= 0, "iterations must be non-negative");
  need(c.configuration_pool >= 1, "configuration_pool must be at least 1");
  need(c.env.tau > 1.0, "tau must exceed 1");
  need(c.env.bandwidth_hz > 0.0, "bandwidth_hz must be positive");
  need(c.env.xbar_floor > 0.0, "xbar_floor must be positive");
  need(c.env.fading_alpha >= 0.0 && c.env.fading_alpha <= 1.0, "fading_alpha must lie in [0, 1]");
  need(c.learner.gamma > 0.0 && c.learner.gamma <= 1.0, "gamma must lie in (0, 1]");
  need(c.learner.lambda >= 0.0 && c.learner.lambda <= 1.0, "lambda must lie in [0, 1]");
  need(c.learner.learning_rate > 0.0, "learning_rate must be positive");
  need(c.learner.minibatches >= 1, "minibatches must be at least 1");
  need(c.learner.ppo.clip > 0.0, "clip must be positive");
  need(!c.learner.hidden_dims.empty(), "hidden_dims must not be empty");
  for (auto h : c.learner.hidden_dims) need(h >= 1, "hidden_dims entries must be positive");
  need(c.validation.every >= 1, "validation.every must be at least 1");
  need(c.validation.configurations >= 1 && c.validation.realizations >= 1, "validation counts must be positive");
  for (const auto& b : c.validation.baselines) {
    need(b == "ed" || b == "adaptive-ed" || b == "pf", "unknown baseline: " + b);
  }
  if (c.layout.kind == LayoutKind::Grid) need(c.layout.rows >= 1 && c.layout.cols >= 1, "grid needs rows, cols >= 1");
  if (c.layout.kind == LayoutKind::Hex) need(c.layout.rings >= 0, "hex needs rings >= 0");
  (void)c.build_layout();
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader r(j, "config");
  std::string schema = kConfigSchema;
  r.get("schema", schema);
  if (schema != kConfigSchema) throw ConfigError("unsupported config schema: " + schema);

  std::string scenario(to_string(c.scenario));
  r.get("scenario", scenario);
  try {
    c.scenario = scenario_from_string(scenario);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (const json* l = r.child("layout")) {
    Reader lr(*l, "layout");
    std::string kind(to_string(c.layout.kind));
    lr.get("kind", kind);
    c.layout.kind = layout_kind_from_string(kind);
    lr.get("rows", c.layout.rows);
    lr.get("cols", c.layout.cols);
    lr.get("rings", c.layout.rings);
    lr.get("inter_site_distance", c.layout.inter_site_distance);
    lr.done();
  }
  r.get("n_batch", c.n_batch);
  r.get("episode_length", c.episode_length);
  r.get("iterations", c.iterations);
  r.get("seed", c.seed);
  r.get("configuration_pool", c.configuration_pool);
  r.get("k_trunc", c.k_trunc);

  if (const json* e = r.child("env")) {
    Reader er(*e, "env");
    er.get("bandwidth_hz", c.env.bandwidth_hz);
    er.get("tx_power_dbm", c.env.tx_power_dbm);
    er.get("noise_psd_dbm_hz", c.env.noise_psd_dbm_hz);
    er.get("noise_figure_db", c.env.noise_figure_db);
    er.get("tau", c.env.tau);
    er.get("xbar_floor", c.env.xbar_floor);
    er.get("carrier_ghz", c.env.carrier_ghz);
    er.get("fading_alpha", c.env.fading_alpha);
    er.done();
  }

  std::string algorithm(to_string(c.learner.algorithm));
  r.get("algorithm", algorithm);
  c.learner.algorithm = algorithm_from_string(algorithm);
  bool dacc = c.learner.critic_mode == CriticMode::Centralized;
  r.get("dacc", dacc);
  c.learner.critic_mode = dacc ? CriticMode::Centralized : CriticMode::Local;

  if (const json* l = r.child("learner")) {
    LearnerConfig& x = c.learner;
    Reader lr(*l, "learner");
    lr.get("gamma", x.gamma);
    lr.get("lambda", x.lambda);
    lr.get("learning_rate", x.learning_rate);
    lr.get("minibatches", x.minibatches);
    lr.get("bptt_window", x.bptt_window);
    if (const json* h = lr.child("hidden_dims")) {
      if (!h->is_array()) throw ConfigError("learner.hidden_dims: expected an array");
      x.hidden_dims.clear();
      for (const auto& v : *h) {
        if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("learner.hidden_dims: positive integers");
        x.hidden_dims.push_back(v.get<std::size_t>());
      }
    }
    lr.get("recurrent_width", x.recurrent_width);
    lr.get("clip", x.ppo.clip);
    lr.get("value_coef", x.ppo.value_coef);
    lr.get("entropy_coef", x.ppo.entropy_coef);
    lr.get("epsilon_start", x.epsilon_start);
    lr.get("epsilon_end", x.epsilon_end);
    lr.get("epsilon_decay_iterations", x.epsilon_decay_iterations);
    lr.get("normalize_advantages", x.normalize_advantages);
    lr.get("share_weights", x.share_weights);
    lr.done();
  }

  if (const json* v = r.child("validation")) {
    ValidationSpec& x = c.validation;
    Reader vr(*v, "validation");
    vr.get("every", x.every);
    vr.get("configurations", x.configurations);
    vr.get("realizations", x.realizations);
    vr.get("episode_length", x.episode_length);
    vr.get("use_training_pool", x.use_training_pool);
    if (const json* b = vr.child("baselines")) {
      if (!b->is_array()) throw ConfigError("validation.baselines: expected an array");
      x.baselines.clear();
      for (const auto& s : *b) {
        if (!s.is_string()) throw ConfigError("validation.baselines: expected strings");
        x.baselines.push_back(s.get<std::string>());
      }
    }
    vr.get("ed_threshold_dbm", x.ed_threshold_dbm);
    vr.get("pf_force", x.pf_force);
    vr.done();
  }
  r.done();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  const LearnerConfig& l = c.learner;
  const ValidationSpec& v = c.validation;
  return json{
      {"schema", kConfigSchema},
      {"scenario", std::string(to_string(c.scenario))},
      {"layout",
       {{"kind", std::string(to_string(c.layout.kind))},
        {"rows", c.layout.rows},
        {"cols", c.layout.cols},
        {"rings", c.layout.rings},
        {"inter_site_distance", c.layout.inter_site_distance}}},
      {"n_batch", c.n_batch},
      {"episode_length", c.episode_length},
      {"iterations", c.iterations},
      {"seed", c.seed},
      {"configuration_pool", c.configuration_pool},
      {"k_trunc", c.k_trunc},
      {"algorithm", std::string(to_string(l.algorithm))},
      {"dacc", l.critic_mode == CriticMode::Centralized},
      {"env",
       {{"bandwidth_hz", c.env.bandwidth_hz},
        {"tx_power_dbm", c.env.tx_power_dbm},
        {"noise_psd_dbm_hz", c.env.noise_psd_dbm_hz},
        {"noise_figure_db", c.env.noise_figure_db},
        {"tau", c.env.tau},
        {"xbar_floor", c.env.xbar_floor},
        {"carrier_ghz", c.env.carrier_ghz},
        {"fading_alpha", c.env.fading_alpha}}},
      {"learner",
       {{"gamma", l.gamma},
        {"lambda", l.lambda},
        {"learning_rate", l.learning_rate},
        {"minibatches", l.minibatches},
        {"bptt_window", l.bptt_window},
        {"hidden_dims", l.hidden_dims},
        {"recurrent_width", l.recurrent_width},
        {"clip", l.ppo.clip},
        {"value_coef", l.ppo.value_coef},
        {"entropy_coef", l.ppo.entropy_coef},
        {"epsilon_start", l.epsilon_start},
        {"epsilon_end", l.epsilon_end},
        {"epsilon_decay_iterations", l.epsilon_decay_iterations},
        {"normalize_advantages", l.normalize_advantages},
        {"share_weights", l.share_weights}}},
      {"validation",
       {{"every", v.every},
        {"configurations", v.configurations},
        {"realizations", v.realizations},
        {"episode_length", v.episode_length},
        {"use_training_pool", v.use_training_pool},
        {"baselines", v.baselines},
        {"ed_threshold_dbm", v.ed_threshold_dbm},
        {"pf_force", v.pf_force}}},
  };
}

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

}  // namespace specshare
