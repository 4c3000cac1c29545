#include "specshare/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "specshare/baselines.hpp"
#include "specshare/neural_io.hpp"
#include "specshare/parallel.hpp"

namespace specshare {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* const kNetNames[] = {"pi_con", "v_con", "v_eos", "q_con", "q_eos"};

template <class Agent>
auto& net_slot(Agent& a, int which) {
  switch (which) {
    case 0: return a.pi_con;
    case 1: return a.v_con;
    case 2: return a.v_eos;
    case 3: return a.q_con;
    default: return a.q_eos;
  }
}

AgentShape shape_for(const ExperimentConfig& c) {
  const Layout layout = c.build_layout();
  return {layout.n_bs(), c.resolved_env().energy_slots(layout.n_bs())};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

std::string schema_comment(const char* schema, const std::string& hash) {
  return std::string("# schema=") + schema + " config_hash=" + hash;
}

struct EpisodeSummary {
  double cum_reward = 0.0;
  double sum_rate = 0.0;
  double max_rate = 0.0;
  double max_ue_rate = 0.0;
  double min_ue_rate = 0.0;
};

EpisodeSummary summarize(const EvalEpisode& e) {
  EpisodeSummary s{e.cum_reward, e.sum_rate, e.max_rate, 0.0, 0.0};
  bool first = true;
  for (const auto& slot : e.trace.slots) {
    for (double r : slot.rate) {
      if (first) s.max_ue_rate = s.min_ue_rate = r, first = false;
      s.max_ue_rate = std::max(s.max_ue_rate, r);
      s.min_ue_rate = std::min(s.min_ue_rate, r);
    }
  }
  return s;
}

PolicySummary aggregate(const std::vector<EpisodeSummary>& eps, int configurations, int realizations) {
  PolicySummary p;
  p.per_configuration.assign(static_cast<std::size_t>(configurations), 0.0);
  p.per_configuration_sum_rate.assign(static_cast<std::size_t>(configurations), 0.0);
  p.per_configuration_max_rate.assign(static_cast<std::size_t>(configurations), 0.0);
  const double n = static_cast<double>(eps.size());
  const double nr = static_cast<double>(realizations);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto c = i / static_cast<std::size_t>(realizations);
    p.mean_cum_reward += eps[i].cum_reward / n;
    p.sum_rate += eps[i].sum_rate / n;
    p.max_rate += eps[i].max_rate / n;
    p.per_configuration[c] += eps[i].cum_reward / nr;
    p.per_configuration_sum_rate[c] += eps[i].sum_rate / nr;
    p.per_configuration_max_rate[c] += eps[i].max_rate / nr;
    p.max_ue_rate = i == 0 ? eps[i].max_ue_rate : std::max(p.max_ue_rate, eps[i].max_ue_rate);
    p.min_ue_rate = i == 0 ? eps[i].min_ue_rate : std::min(p.min_ue_rate, eps[i].min_ue_rate);
  }
  return p;
}

// Turns library exceptions into exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace

json checkpoint_to_json(const AgentSet& agents, int iteration, const ExperimentConfig& config) {
  json nets = json::array();
  for (const BsAgent& a : agents.agents) {
    json entry = json::object();
    for (int w = 0; w < 5; ++w) {
      const auto& slot = net_slot(a, w);
      if (slot) entry[kNetNames[w]] = {{"network", to_json(slot->net)}, {"adam", to_json(slot->adam)}};
    }
    nets.push_back(std::move(entry));
  }
  return json{{"schema", kCheckpointSchema},
              {"config_hash", config_hash(config)},
              {"iteration", iteration},
              {"algorithm", std::string(to_string(agents.config.algorithm))},
              {"critic_mode", std::string(to_string(agents.config.critic_mode))},
              {"share_weights", agents.config.share_weights},
              {"shape", {{"n_bs", agents.shape.n_bs}, {"k", agents.shape.k}}},
              // Every stream is derived from (seed, purpose, iteration), so
              // the seed and the next iteration restore all of them.
              {"rng", {{"scheme", "derived-streams"}, {"seed", config.seed}, {"next_iteration", iteration}}},
              {"agents", std::move(nets)}};
}

Checkpoint checkpoint_from_json(const json& j, const ExperimentConfig& config) {
  if (j.value("schema", "") != kCheckpointSchema) throw ConfigError("not a ckpt-v1 checkpoint");
  Checkpoint c;
  c.iteration = j.at("iteration").get<int>();
  c.config_hash = j.at("config_hash").get<std::string>();
  c.agents.config = config.learner;
  if (algorithm_from_string(j.at("algorithm").get<std::string>()) != config.learner.algorithm ||
      critic_mode_from_string(j.at("critic_mode").get<std::string>()) != config.learner.critic_mode ||
      j.at("share_weights").get<bool>() != config.learner.share_weights) {
    throw ConfigError("checkpoint and config disagree on the learner");
  }
  c.agents.shape = {j.at("shape").at("n_bs").get<std::size_t>(), j.at("shape").at("k").get<std::size_t>()};
  const AgentShape expected = shape_for(config);
  if (c.agents.shape.n_bs != expected.n_bs || c.agents.shape.k != expected.k) {
    throw ConfigError("checkpoint and config disagree on the network shapes");
  }
  for (const auto& entry : j.at("agents")) {
    BsAgent a;
    for (int w = 0; w < 5; ++w) {
      if (!entry.contains(kNetNames[w])) continue;
      const json& n = entry.at(kNetNames[w]);
      net_slot(a, w) = TrainableNet{network_from_json(n.at("network")), adam_state_from_json(n.at("adam"))};
    }
    c.agents.agents.push_back(std::move(a));
  }
  const std::size_t want = config.learner.share_weights ? 1 : expected.n_bs;
  if (c.agents.agents.size() != want) throw ConfigError("checkpoint holds the wrong number of agents");
  return c;
}

void save_checkpoint(const fs::path& path, const AgentSet& agents, int iteration, const ExperimentConfig& config) {
  write_json(path, checkpoint_to_json(agents, iteration, config));
}

Checkpoint load_checkpoint(const fs::path& path, const ExperimentConfig& config) {
  return checkpoint_from_json(read_json(path), config);
}

std::string metrics_comment(const std::string& hash) { return schema_comment(kMetricsSchema, hash); }

std::string metrics_header() {
  return "iteration,samples,mean_cum_reward,sum_rate,max_rate,loss_policy,loss_value_con,loss_value_eos,entropy,"
         "loss_q_con,loss_q_eos,epsilon";
}

std::string metrics_row(const IterationMetrics& m) {
  std::ostringstream os;
  os << m.iteration << ',' << m.samples << ',' << fmt(m.mean_cum_reward) << ',' << fmt(m.sum_rate) << ','
     << fmt(m.max_rate) << ',' << fmt(m.loss_policy) << ',' << fmt(m.loss_value_con) << ',' << fmt(m.loss_value_eos)
     << ',' << fmt(m.entropy) << ',' << fmt(m.loss_q_con) << ',' << fmt(m.loss_q_eos) << ',' << fmt(m.epsilon);
  return os.str();
}

std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(std::string("# schema=") + kMetricsSchema, 0) != 0) {
    throw ConfigError("metrics CSV: missing schema line");
  }
  if (!std::getline(in, line) || line != metrics_header()) throw ConfigError("metrics CSV: unexpected header");
  std::vector<MetricsRow> rows;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 12) throw ConfigError("metrics CSV line " + std::to_string(lineno) + ": expected 12 columns");
    try {
      std::size_t used = 0;
      MetricsRow r;
      r.iteration = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("iteration");
      auto num = [&](const std::string& s) {
        std::size_t k = 0;
        const double v = std::stod(s, &k);
        if (k != s.size()) throw std::invalid_argument(s);
        return v;
      };
      r.mean_cum_reward = num(cells[2]);
      r.sum_rate = num(cells[3]);
      r.max_rate = num(cells[4]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("metrics CSV line " + std::to_string(lineno) + ": not a number");
    }
  }
  return rows;
}

json to_json(const PolicySummary& s) {
  json j{{"mean_cum_reward", s.mean_cum_reward},
         {"sum_rate", s.sum_rate},
         {"max_rate", s.max_rate},
         {"per_configuration", s.per_configuration},
         {"per_configuration_sum_rate", s.per_configuration_sum_rate},
         {"per_configuration_max_rate", s.per_configuration_max_rate},
         {"max_ue_rate", s.max_ue_rate},
         {"min_ue_rate", s.min_ue_rate}};
  if (!s.thresholds_dbm.empty()) j["thresholds_dbm"] = s.thresholds_dbm;
  return j;
}

json to_json(const ValidationReport& r) {
  json baselines = json::object();
  for (const auto& [k, v] : r.baselines) baselines[k] = to_json(v);
  return json{{"schema", kValidationSchema},
              {"config_hash", r.config_hash},
              {"checkpoint_iteration", r.checkpoint_iteration},
              {"algorithm", r.algorithm},
              {"configurations", r.configurations},
              {"realizations_per_configuration", r.realizations_per_configuration},
              {"realizations", r.configurations * r.realizations_per_configuration},
              {"gamma", r.gamma},
              {"policy", to_json(r.policy)},
              {"baselines", std::move(baselines)}};
}

UeConfiguration validation_configuration(const ExperimentConfig& config, const Layout& layout, int c) {
  if (config.validation.use_training_pool) {
    TrainingSetup s;
    s.layout = layout;
    s.seed = config.seed;
    s.configuration_pool = config.configuration_pool;
    return training_configuration(s, static_cast<std::uint64_t>(c));
  }
  Rng rng = make_stream(config.seed, "validation-configuration", static_cast<std::uint64_t>(c));
  return sample_configuration(layout, rng);
}

std::uint64_t validation_channel_seed(const ExperimentConfig& config, int c, int r) {
  const auto index = static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(config.validation.realizations) +
                     static_cast<std::uint64_t>(r);
  return make_stream(config.seed, "validation-channel", index)();
}

PolicySummary evaluate_on_validation_set(const ExperimentConfig& config, const PolicyFactory& factory) {
  const Layout layout = config.build_layout();
  const EnvConfig env = config.resolved_env();
  const int C = config.validation.configurations;
  const int R = config.validation.realizations;
  std::vector<UeConfiguration> ues;
  for (int c = 0; c < C; ++c) ues.push_back(validation_configuration(config, layout, c));
  std::vector<EpisodeSummary> eps(static_cast<std::size_t>(C * R));
  parallel_for(eps.size(), [&](std::size_t i) {
    const int c = static_cast<int>(i) / R;
    const int r = static_cast<int>(i) % R;
    std::unique_ptr<ContentionPolicy> policy = factory(c, r);
    eps[i] = summarize(evaluate_policy(*policy, layout, env, ues[static_cast<std::size_t>(c)],
                                       validation_channel_seed(config, c, r), config.validation_episode_length(),
                                       config.learner.gamma));
  });
  return aggregate(eps, C, R);
}

std::string baseline_series_name(const std::string& kind, double ed_threshold_dbm) {
  if (kind == "ed") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ed%+g", ed_threshold_dbm);
    return buf;
  }
  return kind;
}

PolicySummary run_baseline(const ExperimentConfig& config, const std::string& kind, double ed_threshold_dbm,
                           bool pf_force) {
  if (kind == "ed") {
    return evaluate_on_validation_set(config, [&](int, int) { return std::make_unique<EdPolicy>(ed_threshold_dbm); });
  }
  if (kind == "pf") {
    const Layout layout = config.build_layout();
    if (layout.n_bs() > kHarnessPfMaxBs && !pf_force) {
      throw CapabilityError("centralized PF enumerates 2^" + std::to_string(layout.n_bs()) +
                            " decisions per slot for every slot of every validation episode; pass --force to run it "
                            "anyway");
    }
    const EnvConfig env = config.resolved_env();
    return evaluate_on_validation_set(config,
                                      [&](int, int) { return std::make_unique<PfSchedulerPolicy>(env, pf_force); });
  }
  if (kind == "adaptive-ed") {
    // Genie: per configuration, the threshold with the best mean discounted
    // reward over that configuration's validation channels.
    const Layout layout = config.build_layout();
    const int C = config.validation.configurations;
    const int R = config.validation.realizations;
    std::vector<double> best(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      const UeConfiguration ues = validation_configuration(config, layout, c);
      AdaptiveEdRequest req;
      req.layout = &layout;
      req.configuration = &ues;
      req.env = config.resolved_env();
      req.thresholds_dbm = default_ed_sweep();
      req.episodes_per_threshold = R;
      req.episode_length = config.validation_episode_length();
      req.gamma = config.learner.gamma;
      req.seeds.clear();
      for (int r = 0; r < R; ++r) req.seeds.push_back(validation_channel_seed(config, c, r));
      best[static_cast<std::size_t>(c)] = adaptive_ed(req).best_threshold_dbm;
    }
    PolicySummary s = evaluate_on_validation_set(
        config, [&](int c, int) { return std::make_unique<EdPolicy>(best[static_cast<std::size_t>(c)]); });
    s.thresholds_dbm = best;
    return s;
  }
  throw ConfigError("unknown baseline: " + kind);
}

ValidationReport run_validation(const ExperimentConfig& config, const AgentSet& agents, int iteration) {
  ValidationReport r;
  r.config_hash = config_hash(config);
  r.checkpoint_iteration = iteration;
  r.algorithm = std::string(to_string(agents.config.algorithm));
  r.configurations = config.validation.configurations;
  r.realizations_per_configuration = config.validation.realizations;
  r.gamma = config.learner.gamma;
  r.policy = evaluate_on_validation_set(config, [&](int c, int rr) {
    return std::make_unique<NetworkPolicy>(agents, ActMode::Greedy, validation_channel_seed(config, c, rr));
  });
  for (const auto& kind : config.validation.baselines) {
    r.baselines[baseline_series_name(kind, config.validation.ed_threshold_dbm)] =
        run_baseline(config, kind, config.validation.ed_threshold_dbm, config.validation.pf_force);
  }
  return r;
}

int cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    fs::create_directories(out_dir);
    const std::string hash = config_hash(config);
    write_json(out_dir / "config.json", to_json(config));

    Trainer trainer(config.training_setup());
    auto checkpoint = [&](const std::string& name) {
      save_checkpoint(out_dir / name, trainer.agents(), trainer.iterations_done(), config);
    };
    char name[64];
    std::snprintf(name, sizeof name, "ckpt-%04d.json", 0);
    checkpoint(name);

    std::ofstream metrics(out_dir / "metrics.csv");
    if (!metrics) throw ConfigError("cannot write metrics.csv");
    metrics << metrics_comment(hash) << '\n' << metrics_header() << '\n' << std::flush;

    for (int it = 1; it <= config.iterations; ++it) {
      IterationMetrics m;
      try {
        m = trainer.run_iteration();
      } catch (const NumericalError&) {
        checkpoint("ckpt-emergency.json");
        throw;
      }
      metrics << metrics_row(m) << '\n' << std::flush;
      log << "iteration " << it << '/' << config.iterations << "  reward " << m.mean_cum_reward << "  sum_rate "
          << m.sum_rate << '\n';
      if (it % config.validation.every == 0 || it == config.iterations) {
        std::snprintf(name, sizeof name, "ckpt-%04d.json", it);
        checkpoint(name);
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const fs::path& checkpoint, const ExperimentConfig& config, const fs::path& out_dir,
                 std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const json j = read_json(checkpoint);
    const std::string hash = config_hash(config);
    if (j.value("config_hash", "") != hash) {
      throw ConfigError("checkpoint was produced by config " + j.value("config_hash", std::string("?")) +
                        ", not " + hash);
    }
    const Checkpoint c = checkpoint_from_json(j, config);
    const ValidationReport r = run_validation(config, c.agents, c.iteration);
    fs::create_directories(out_dir);
    char name[64];
    std::snprintf(name, sizeof name, "validation-%04d.json", c.iteration);
    write_json(out_dir / name, to_json(r));
    log << "policy reward " << r.policy.mean_cum_reward;
    for (const auto& [k, v] : r.baselines) log << "  " << k << ' ' << v.mean_cum_reward;
    log << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_baseline(const std::string& kind, double ed_threshold_dbm, bool force, const ExperimentConfig& config,
                 const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const PolicySummary s = run_baseline(config, kind, ed_threshold_dbm, force);
    fs::create_directories(out_dir);
    const std::string hash = config_hash(config);
    json summary{{"schema", kBaselineSchema},
                 {"config_hash", hash},
                 {"kind", kind},
                 {"series", baseline_series_name(kind, ed_threshold_dbm)},
                 {"gamma", config.learner.gamma},
                 {"configurations", config.validation.configurations},
                 {"realizations_per_configuration", config.validation.realizations},
                 {"cumulative_reward", s.mean_cum_reward},
                 {"summary", to_json(s)}};
    if (kind == "ed") summary["threshold_dbm"] = ed_threshold_dbm;
    if (kind == "adaptive-ed") {
      // Most frequent per-configuration winner; ties go to the lower threshold.
      std::map<double, int> votes;
      for (double t : s.thresholds_dbm) ++votes[t];
      const auto win = std::max_element(votes.begin(), votes.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
      summary["winning_threshold_dbm"] = win->first;
    }
    const std::string stem = "baseline-" + baseline_series_name(kind, ed_threshold_dbm);
    write_json(out_dir / (stem + ".json"), summary);

    // Trace of the first validation episode.
    const Layout layout = config.build_layout();
    const UeConfiguration ues = validation_configuration(config, layout, 0);
    std::unique_ptr<ContentionPolicy> policy;
    if (kind == "pf") policy = std::make_unique<PfSchedulerPolicy>(config.resolved_env(), force);
    else policy = std::make_unique<EdPolicy>(kind == "ed" ? ed_threshold_dbm : s.thresholds_dbm.front());
    const EvalEpisode e = evaluate_policy(*policy, layout, config.resolved_env(), ues,
                                          validation_channel_seed(config, 0, 0), config.validation_episode_length(),
                                          config.learner.gamma);
    std::ofstream trace(out_dir / (stem + "-trace.jsonl"));
    write_trace_jsonl(trace, e.trace, hash);
    log << kind << " cumulative reward " << s.mean_cum_reward << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_export_plots(const PlotInputs& inputs, const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    struct Point {
      int iteration;
      std::string series;
      double value;
    };
    std::vector<Point> reward, sum_rate, max_rate;
    std::set<std::string> hashes;
    int lo = 0, hi = 0;
    bool any = false;
    auto span = [&](int it) {
      lo = any ? std::min(lo, it) : it;
      hi = any ? std::max(hi, it) : it;
      any = true;
    };

    for (const auto& [label, path] : inputs.metrics) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open " + path.string());
      std::string first;
      std::getline(in, first);
      const auto pos = first.find("config_hash=");
      if (pos != std::string::npos) hashes.insert(first.substr(pos + 12));
      in.seekg(0);
      for (const auto& r : parse_metrics_csv(in)) {
        reward.push_back({r.iteration, label, r.mean_cum_reward});
        sum_rate.push_back({r.iteration, label, r.sum_rate});
        max_rate.push_back({r.iteration, label, r.max_rate});
        span(r.iteration);
      }
    }

    std::map<std::string, PolicySummary> baselines;
    for (const auto& [label, path] : inputs.reports) {
      const json j = read_json(path);
      if (j.value("schema", "") != kValidationSchema) throw ConfigError(path.string() + ": not a validation report");
      hashes.insert(j.at("config_hash").get<std::string>());
      const int it = j.at("checkpoint_iteration").get<int>();
      const json& p = j.at("policy");
      reward.push_back({it, label + "-validation", p.at("mean_cum_reward").get<double>()});
      sum_rate.push_back({it, label + "-validation", p.at("sum_rate").get<double>()});
      max_rate.push_back({it, label + "-validation", p.at("max_rate").get<double>()});
      span(it);
      for (const auto& [name, b] : j.at("baselines").items()) {
        if (baselines.count(name)) continue;
        PolicySummary s;
        s.mean_cum_reward = b.at("mean_cum_reward").get<double>();
        s.sum_rate = b.at("sum_rate").get<double>();
        s.max_rate = b.at("max_rate").get<double>();
        baselines[name] = s;
      }
    }
    // Baselines do not train: one flat line across the plotted iterations.
    for (const auto& [name, s] : baselines) {
      for (int it = lo; it <= hi; ++it) {
        reward.push_back({it, name, s.mean_cum_reward});
        sum_rate.push_back({it, name, s.sum_rate});
        max_rate.push_back({it, name, s.max_rate});
      }
    }

    std::set<std::string> available;
    for (const auto& p : reward) available.insert(p.series);
    const std::set<std::string> wanted(inputs.series.begin(), inputs.series.end());
    for (const auto& s : wanted) {
      if (!available.count(s)) throw ConfigError("requested series not found: " + s);
    }

    std::string hash_field;
    for (const auto& h : hashes) hash_field += (hash_field.empty() ? "" : ";") + h;
    fs::create_directories(out_dir);
    auto emit = [&](const char* file, const std::vector<Point>& pts) {
      std::ofstream out(out_dir / file);
      if (!out) throw ConfigError(std::string("cannot write ") + file);
      out << schema_comment(kPlotSchema, hash_field) << '\n' << "iteration,series,value\n";
      for (const auto& p : pts) {
        if (!wanted.empty() && !wanted.count(p.series)) continue;
        out << p.iteration << ',' << p.series << ',' << fmt(p.value) << '\n';
      }
    };
    emit("reward_curves.csv", reward);
    emit("sum_rate_curves.csv", sum_rate);
    emit("max_rate_curves.csv", max_rate);
    log << "wrote " << reward.size() << " reward points\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace specshare
