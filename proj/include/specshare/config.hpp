#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "specshare/trainer.hpp"

namespace specshare {

inline constexpr const char* kConfigSchema = "config-v1";

enum class LayoutKind { Standard, Grid, Hex };

struct LayoutSpec {
  LayoutKind kind = LayoutKind::Standard;
  int rows = 2;  // grid
  int cols = 2;
  int rings = 1;  // hex
  double inter_site_distance = 0.0;  // <= 0: scenario default
};

struct ValidationSpec {
  int every = 10;  // checkpoint cadence, iterations
  int configurations = 10;
  int realizations = 10;
  int episode_length = 0;  // 0: same as training
  // Draw validation configurations from the training pool instead of fresh ones.
  bool use_training_pool = false;
  std::vector<std::string> baselines = {"ed", "adaptive-ed", "pf"};
  double ed_threshold_dbm = -72.0;
  bool pf_force = false;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::InhOffice;
  LayoutSpec layout;
  int n_batch = 8;
  int episode_length = 2000;
  int iterations = 100;
  std::uint64_t seed = 0;
  std::uint64_t configuration_pool = 20000;
  // Energy entries per CON observation; < 0 picks the scenario default
  // (3 for InH, 5 for UMi), 0 keeps all N-1.
  int k_trunc = -1;
  EnvConfig env;
  LearnerConfig learner;
  ValidationSpec validation;

  Layout build_layout() const;
  EnvConfig resolved_env() const;
  TrainingSetup training_setup() const;
  int validation_episode_length() const { return validation.episode_length > 0 ? validation.episode_length : episode_length; }
};

// Strict: unknown keys and wrong types raise ConfigError. Missing keys take
// their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
// Every field, defaults included.
nlohmann::json to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);

// 16 hex digits of FNV-1a over the canonical serialization.
std::string config_hash(const ExperimentConfig& c);

}  // namespace specshare
