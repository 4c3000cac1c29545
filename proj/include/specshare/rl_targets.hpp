#pragma once

#include <span>
#include <vector>

#include "specshare/common.hpp"

namespace specshare {

// Value targets and advantages over the alternating EOS/CON chain of one BS:
//
//   EOS_0 -> CON_0 -> EOS_1 -> ... -> CON_{L-1} -> (terminal, value 0)
//
// with per-half-step discount sqrt(gamma) and residuals
//   d_eos[n] = sqrt(g) V_con[n] - V_eos[n]
//   d_con[n] = r[n] + sqrt(g) V_eos[n+1] - V_con[n]
// The chain residuals are summed with weight (sqrt(g) lambda)^k.
struct GaeTargets {
  std::vector<double> target_eos;
  std::vector<double> target_con;
  std::vector<double> advantage_con;
};

GaeTargets alternating_gae(std::span<const double> rewards, std::span<const double> v_eos,
                           std::span<const double> v_con, double gamma, double lambda);

// Sampled Bellman labels:
//   eos[n] = sqrt(g) max_a Q_con[n][a]
//   con[n] = r[n] + sqrt(g) Q_eos[n+1]   (0 bootstrap after the last slot)
struct DqnLabels {
  std::vector<double> eos;
  std::vector<double> con;
};

DqnLabels dqn_labels(std::span<const double> rewards, const Matrix<double>& q_con, std::span<const double> q_eos,
                     double gamma);

struct PpoCoefficients {
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

// Mean per-sample terms. total = policy + value_coef (value_con + value_eos)
// - entropy_coef entropy, where policy is the negated clipped surrogate.
struct PpoLossTerms {
  double policy = 0.0;
  double value_con = 0.0;
  double value_eos = 0.0;
  double entropy = 0.0;
  double total(const PpoCoefficients& c) const {
    return policy + c.value_coef * (value_con + value_eos) - c.entropy_coef * entropy;
  }
};

struct PpoBatch {
  const Matrix<double>* logits = nullptr;  // current policy, one row per sample
  std::span<const int> actions;
  std::span<const double> old_probs;  // behaviour probability of the taken action
  std::span<const double> advantages;
  std::span<const double> v_con;
  std::span<const double> target_con;
  std::span<const double> v_eos;
  std::span<const double> target_eos;
};

struct PpoGradients {
  Matrix<double> d_logits;
  std::vector<double> d_v_con;
  std::vector<double> d_v_eos;
};

// Sums over the batch and divides by `normalizer` (the sample count of the
// whole update batch). Gradients are optional.
PpoLossTerms ppo_loss(const PpoBatch& batch, const PpoCoefficients& coef, double normalizer,
                      PpoGradients* grads = nullptr);

}  // namespace specshare
