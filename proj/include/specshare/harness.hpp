#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "specshare/config.hpp"

namespace specshare {

inline constexpr const char* kCheckpointSchema = "ckpt-v1";
inline constexpr const char* kMetricsSchema = "metrics-v1";
inline constexpr const char* kValidationSchema = "validation-v1";
inline constexpr const char* kBaselineSchema = "baseline-v1";
inline constexpr const char* kPlotSchema = "plot-v1";

// Whole validation sets re-solve the 2^N search every slot, so the harness
// refuses PF earlier than the per-slot solver does.
inline constexpr std::size_t kHarnessPfMaxBs = 16;

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

struct Checkpoint {
  AgentSet agents;
  int iteration = 0;
  std::string config_hash;
};

nlohmann::json checkpoint_to_json(const AgentSet& agents, int iteration, const ExperimentConfig& config);
// Network shapes come from the checkpoint; the learner settings from `config`.
Checkpoint checkpoint_from_json(const nlohmann::json& j, const ExperimentConfig& config);
void save_checkpoint(const std::filesystem::path& path, const AgentSet& agents, int iteration,
                     const ExperimentConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config);

std::string metrics_comment(const std::string& config_hash);
std::string metrics_header();
std::string metrics_row(const IterationMetrics& m);

struct MetricsRow {
  int iteration = 0;
  double mean_cum_reward = 0.0;
  double sum_rate = 0.0;
  double max_rate = 0.0;
};
// Throws ConfigError on anything malformed.
std::vector<MetricsRow> parse_metrics_csv(std::istream& in);

struct PolicySummary {
  double mean_cum_reward = 0.0;
  double sum_rate = 0.0;  // mean over episodes of sum_j X̄_j[L-1], bits/s
  double max_rate = 0.0;
  std::vector<double> per_configuration;  // mean cumulative reward per configuration
  std::vector<double> per_configuration_sum_rate;
  std::vector<double> per_configuration_max_rate;
  double max_ue_rate = 0.0;  // largest per-UE rate over every slot
  double min_ue_rate = 0.0;
  std::vector<double> thresholds_dbm;  // adaptive ED: winner per configuration
};

struct ValidationReport {
  std::string config_hash;
  int checkpoint_iteration = 0;
  std::string algorithm;
  int configurations = 0;
  int realizations_per_configuration = 0;
  double gamma = 0.0;
  PolicySummary policy;
  std::map<std::string, PolicySummary> baselines;
};

nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const PolicySummary& s);

// Validation configurations and channel seeds: configuration c, realization r.
UeConfiguration validation_configuration(const ExperimentConfig& config, const Layout& layout, int c);
std::uint64_t validation_channel_seed(const ExperimentConfig& config, int c, int r);

// Runs a policy factory over every (configuration, realization) pair in parallel.
using PolicyFactory = std::function<std::unique_ptr<ContentionPolicy>(int configuration, int realization)>;
PolicySummary evaluate_on_validation_set(const ExperimentConfig& config, const PolicyFactory& factory);

// Baseline keys: "ed" (fixed threshold), "adaptive-ed", "pf".
PolicySummary run_baseline(const ExperimentConfig& config, const std::string& kind, double ed_threshold_dbm,
                           bool pf_force);
std::string baseline_series_name(const std::string& kind, double ed_threshold_dbm);

// Greedy learned policy plus the configured baselines on identical
// configurations and channels.
ValidationReport run_validation(const ExperimentConfig& config, const AgentSet& agents, int iteration);

// Commands. Each returns a process exit code and reports problems on `err`.
int cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log,
              std::ostream& err);
int cmd_validate(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                 const std::filesystem::path& out_dir, std::ostream& log, std::ostream& err);
int cmd_baseline(const std::string& kind, double ed_threshold_dbm, bool force, const ExperimentConfig& config,
                 const std::filesystem::path& out_dir, std::ostream& log, std::ostream& err);

struct PlotInputs {
  std::vector<std::pair<std::string, std::filesystem::path>> metrics;  // (series label, metrics CSV)
  std::vector<std::pair<std::string, std::filesystem::path>> reports;  // (series label, validation report)
  std::vector<std::string> series;  // empty: keep every series
};
int cmd_export_plots(const PlotInputs& inputs, const std::filesystem::path& out_dir, std::ostream& log,
                     std::ostream& err);

}  // namespace specshare
