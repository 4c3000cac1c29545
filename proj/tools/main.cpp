#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "specshare/harness.hpp"

using namespace specshare;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Experiment config (JSON); defaults when omitted");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  return cfg;
}

// Wraps commands that do not go through the harness guard.
template <class F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

std::pair<std::string, fs::path> labelled(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw ConfigError("cannot write " + (dir / name).string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized spectrum-sharing simulator and learners"};
  app.require_subcommand(1);

  Common train_opts;
  auto* train = app.add_subcommand("train", "Train PPO or DQN agents");
  add_common(train, train_opts);

  Common val_opts;
  std::string checkpoint;
  auto* val = app.add_subcommand("validate", "Evaluate a checkpoint against the baselines");
  add_common(val, val_opts);
  val->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  Common base_opts;
  std::string kind;
  double threshold = -72.0;
  bool force = false;
  auto* base = app.add_subcommand("baseline", "Run a baseline policy");
  add_common(base, base_opts);
  base->add_option("--kind", kind, "ed, adaptive-ed or pf")->required()->check(CLI::IsMember({"ed", "adaptive-ed", "pf"}));
  base->add_option("--threshold", threshold, "ED threshold in dBm")->capture_default_str();
  base->add_flag("--force", force, "Allow exhaustive PF above 16 BSs");

  Common plot_opts;
  std::vector<std::string> metrics, reports, series;
  auto* plots = app.add_subcommand("export-plots", "Write tidy (iteration, series, value) curves");
  add_common(plots, plot_opts);
  plots->add_option("--metrics", metrics, "label=metrics.csv (repeatable)");
  plots->add_option("--report", reports, "label=validation.json (repeatable)");
  plots->add_option("--series", series, "Keep only these series")->delimiter(',');

  Common layout_opts;
  std::optional<std::string> scenario;
  auto* gen = app.add_subcommand("gen-layout", "Write a BS layout and one sampled UE configuration");
  add_common(gen, layout_opts);
  gen->add_option("--scenario", scenario, "inh-office or umi-street-canyon (overrides the config)");

  auto* modem = app.add_subcommand("modem", "Modulation utilities");
  modem->require_subcommand(1);
  Common ser_opts;
  int order = 16;
  std::vector<double> range_db = {-5.0, 30.0, 1.0};
  std::uint64_t symbols = 100000;
  auto* ser = modem->add_subcommand("ser-curve", "Analytic and Monte-Carlo SER versus SINR");
  add_common(ser, ser_opts);
  ser->add_option("--scheme", order, "Modulation order M")->capture_default_str();
  ser->add_option("--sinr-db-range", range_db, "first last step (dB)")->expected(3)->capture_default_str();
  ser->add_option("--symbols", symbols, "Monte-Carlo symbols per point")->capture_default_str();
  Common con_opts;
  int con_order = 16;
  auto* con = modem->add_subcommand("constellation", "Dump constellation points");
  add_common(con, con_opts);
  con->add_option("--scheme", con_order, "Modulation order M")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  if (*train) {
    return run_guarded([&] { return cmd_train(resolve(train_opts), train_opts.out_dir, std::cout, std::cerr); });
  }
  if (*val) {
    return run_guarded(
        [&] { return cmd_validate(checkpoint, resolve(val_opts), val_opts.out_dir, std::cout, std::cerr); });
  }
  if (*base) {
    return run_guarded([&] {
      return cmd_baseline(kind, threshold, force, resolve(base_opts), base_opts.out_dir, std::cout, std::cerr);
    });
  }
  if (*plots) {
    PlotInputs in;
    for (const auto& m : metrics) in.metrics.push_back(labelled(m));
    for (const auto& r : reports) in.reports.push_back(labelled(r));
    in.series = series;
    return cmd_export_plots(in, plot_opts.out_dir, std::cout, std::cerr);
  }
  if (*gen) {
    return run_guarded([&] {
      ExperimentConfig cfg = resolve(layout_opts);
      if (scenario) {
        cfg.scenario = scenario_from_string(*scenario);
        cfg.layout = LayoutSpec{};
      }
      const Layout layout = cfg.build_layout();
      const UeConfiguration ues = sample_configuration(layout, cfg.seed);
      auto j = nlohmann::json::parse(layout_to_json(layout, &ues));
      j["config_hash"] = config_hash(cfg);
      open_out(layout_opts.out_dir, "layout.json") << j.dump(2) << '\n';
      std::cout << layout.n_bs() << " BSs written\n";
      return static_cast<int>(kExitOk);
    });
  }
  if (*ser) {
    return run_guarded([&] {
      const ExperimentConfig cfg = resolve(ser_opts);
      const ModScheme scheme = ModScheme::from_order(order);
      const double from_db = range_db[0], to_db = range_db[1], step_db = range_db[2];
      if (!(step_db > 0.0)) throw ConfigError("--sinr-db-range step must be positive");
      auto out = open_out(ser_opts.out_dir, "ser_curve_M" + std::to_string(order) + ".csv");
      out << "# schema=ser-curve-v1 config_hash=" << config_hash(cfg) << '\n' << "sinr_db,ser_analytic,ser_mc\n";
      out.precision(17);
      int k = 0;
      for (double db = from_db; db <= to_db + 1e-9; db = from_db + (++k) * step_db) {
        const double g = db_to_linear(db);
        const SerEstimate mc = ser_monte_carlo(scheme, g, symbols, make_stream(cfg.seed, "ser-curve", k)());
        out << db << ',' << ser_analytic(scheme, g) << ',' << mc.rate() << '\n';
      }
      return static_cast<int>(kExitOk);
    });
  }
  if (*con) {
    return run_guarded([&] {
      const ExperimentConfig cfg = resolve(con_opts);
      const ModScheme scheme = ModScheme::from_order(con_order);
      auto out = open_out(con_opts.out_dir, "constellation_M" + std::to_string(con_order) + ".csv");
      out << "# schema=constellation-v1 config_hash=" << config_hash(cfg) << '\n'
          << constellation_csv(constellation(scheme));
      return static_cast<int>(kExitOk);
    });
  }
  return kExitInput;
}
