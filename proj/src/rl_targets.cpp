#include "specshare/rl_targets.hpp"

#include <algorithm>

#include "specshare/neural.hpp"

namespace specshare {

GaeTargets alternating_gae(std::span<const double> rewards, std::span<const double> v_eos,
                           std::span<const double> v_con, double gamma, double lambda) {
  const std::size_t len = rewards.size();
  require(v_eos.size() == len && v_con.size() == len, "alternating_gae: length mismatch");
  require(gamma > 0.0 && gamma <= 1.0, "alternating_gae: gamma must lie in (0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "alternating_gae: lambda must lie in [0, 1]");
  const double half = std::sqrt(gamma);
  const double decay = half * lambda;
  GaeTargets out;
  out.target_eos.resize(len);
  out.target_con.resize(len);
  out.advantage_con.resize(len);
  double acc = 0.0;  // discounted residual sum from the following chain position
  for (std::size_t n = len; n-- > 0;) {
    const double next_eos = n + 1 < len ? v_eos[n + 1] : 0.0;
    const double d_con = rewards[n] + half * next_eos - v_con[n];
    acc = d_con + decay * acc;
    out.advantage_con[n] = acc;
    out.target_con[n] = v_con[n] + acc;
    const double d_eos = half * v_con[n] - v_eos[n];
    acc = d_eos + decay * acc;
    out.target_eos[n] = v_eos[n] + acc;
  }
  return out;
}

DqnLabels dqn_labels(std::span<const double> rewards, const Matrix<double>& q_con, std::span<const double> q_eos,
                     double gamma) {
  const std::size_t len = rewards.size();
  require(q_con.rows() == len && q_eos.size() == len, "dqn_labels: length mismatch");
  const double half = std::sqrt(gamma);
  DqnLabels out;
  out.eos.resize(len);
  out.con.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const auto row = q_con.row(n);
    out.eos[n] = half * *std::max_element(row.begin(), row.end());
    out.con[n] = rewards[n] + (n + 1 < len ? half * q_eos[n + 1] : 0.0);
  }
  return out;
}

PpoLossTerms ppo_loss(const PpoBatch& b, const PpoCoefficients& coef, double normalizer, PpoGradients* grads) {
  const Matrix<double>& logits = *b.logits;
  const std::size_t count = logits.rows();
  const std::size_t actions = logits.cols();
  require(b.actions.size() == count && b.old_probs.size() == count && b.advantages.size() == count,
          "ppo_loss: policy batch size mismatch");
  require(b.v_con.size() == b.target_con.size() && b.v_eos.size() == b.target_eos.size(),
          "ppo_loss: value batch size mismatch");
  require(normalizer > 0.0, "ppo_loss: normalizer must be positive");
  if (grads != nullptr) {
    grads->d_logits = Matrix<double>(count, actions);
    grads->d_v_con.assign(b.v_con.size(), 0.0);
    grads->d_v_eos.assign(b.v_eos.size(), 0.0);
  }
  PpoLossTerms t;
  std::vector<double> prob(actions);
  for (std::size_t s = 0; s < count; ++s) {
    const int a = b.actions[s];
    require(a >= 0 && static_cast<std::size_t>(a) < actions, "ppo_loss: action out of range");
    if (!(b.old_probs[s] > 0.0)) throw ContractViolation("ppo_loss: behaviour probability of a taken action is zero");
    const auto row = logits.row(s);
    std::copy(row.begin(), row.end(), prob.begin());
    softmax_inplace(prob);
    const double ratio = prob[a] / b.old_probs[s];
    const double adv = b.advantages[s];
    const double clipped = std::clamp(ratio, 1.0 - coef.clip, 1.0 + coef.clip);
    const double surr = std::min(ratio * adv, clipped * adv);
    double entropy = 0.0;
    for (double p : prob) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    t.policy -= surr;
    t.entropy += entropy;
    if (grads != nullptr) {
      // Unclipped branch active unless the ratio is outside the band in the
      // direction the advantage pushes it.
      const bool clipped_active = (adv > 0.0 && ratio > 1.0 + coef.clip) || (adv < 0.0 && ratio < 1.0 - coef.clip);
      for (std::size_t k = 0; k < actions; ++k) {
        double g = 0.0;
        if (!clipped_active) {
          const double dratio = ratio * ((static_cast<int>(k) == a ? 1.0 : 0.0) - prob[k]);
          g -= adv * dratio;
        }
        // d(-c_e H)/dz_k = c_e p_k (log p_k + H)
        const double logp = prob[k] > 0.0 ? std::log(prob[k]) : 0.0;
        g += coef.entropy_coef * prob[k] * (logp + entropy);
        grads->d_logits(s, k) = g / normalizer;
      }
    }
  }
  for (std::size_t s = 0; s < b.v_con.size(); ++s) {
    const double e = b.v_con[s] - b.target_con[s];
    t.value_con += e * e;
    if (grads != nullptr) grads->d_v_con[s] = coef.value_coef * 2.0 * e / normalizer;
  }
  for (std::size_t s = 0; s < b.v_eos.size(); ++s) {
    const double e = b.v_eos[s] - b.target_eos[s];
    t.value_eos += e * e;
    if (grads != nullptr) grads->d_v_eos[s] = coef.value_coef * 2.0 * e / normalizer;
  }
  t.policy /= normalizer;
  t.entropy /= normalizer;
  t.value_con /= normalizer;
  t.value_eos /= normalizer;
  return t;
}

}  // namespace specshare
