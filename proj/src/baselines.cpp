#include "specshare/baselines.hpp"

#include <numeric>

namespace specshare {

bool ed_decision(std::span<const double> energies_w, double threshold_w) {
  double total = 0.0;
  for (double e : energies_w) {
    require(e >= 0.0, "ed_decision: energies must be non-negative");
    total += e;
  }
  return total < threshold_w;
}

ModScheme genie_modulation(double sinr) {
  require(sinr >= 0.0, "genie_modulation: sinr must be non-negative");
  ModScheme best = ModScheme::from_order(4);
  double best_score = -1.0;
  for (const ModScheme& m : ModScheme::all()) {
    const double score = (1.0 - ser_analytic(m, sinr)) * m.bits();
    if (score > best_score) {
      best_score = score;
      best = m;
    }
  }
  return best;
}

const RateAdapter& genie_rate_adapter() {
  static const RateAdapter adapter = [](double sinr) { return genie_modulation(sinr); };
  return adapter;
}

std::vector<double> default_ed_sweep() {
  std::vector<double> out;
  for (double t = kEdSweepHighDbm; t >= kEdSweepLowDbm - 1e-9; t -= 5.0) out.push_back(t);
  return out;
}

EdPolicy::EdPolicy(double threshold_dbm) : threshold_dbm_(threshold_dbm), threshold_w_(dbm_to_watts(threshold_dbm)) {}

Action EdPolicy::decide(std::size_t, const ConObservation& obs) {
  const double total[] = {obs.total_energy_w};
  // The placeholder scheme is replaced by the genie adapter in the data phase.
  return ed_decision(total, threshold_w_) ? Action::tx(ModScheme::from_order(4)) : Action::no_tx();
}

namespace {

kernels::PfProblem make_problem(std::span<const double> xbar, const ChannelRealization& channel, double w, double p,
                                double noise) {
  require(channel.n() == xbar.size(), "centralized_pf: dimension mismatch");
  return {xbar, &channel.access.gain, w, p, noise};
}

std::uint64_t to_mask(const std::vector<bool>& decision) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < decision.size(); ++i) {
    if (decision[i]) mask |= std::uint64_t{1} << i;
  }
  return mask;
}

}  // namespace

std::vector<bool> centralized_pf(std::span<const double> xbar, const ChannelRealization& channel, double bandwidth_hz,
                                 double tx_power_w, double noise_w, bool force) {
  const std::size_t n = xbar.size();
  if (n > kPfMaxBs && !force) {
    throw CapabilityError("centralized PF enumerates 2^N schedules; N = " + std::to_string(n) + " exceeds " +
                          std::to_string(kPfMaxBs) + " (use --force)");
  }
  if (n > 62) throw CapabilityError("centralized PF: N too large for a 64-bit schedule mask");
  const auto sol = kernels::pf_search_omp(make_problem(xbar, channel, bandwidth_hz, tx_power_w, noise_w));
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ((sol.mask >> i) & 1u) != 0;
  return out;
}

double pf_slot_metric(const std::vector<bool>& decision, std::span<const double> xbar,
                      const ChannelRealization& channel, double bandwidth_hz, double tx_power_w, double noise_w) {
  return kernels::pf_metric(to_mask(decision), make_problem(xbar, channel, bandwidth_hz, tx_power_w, noise_w));
}

void PfSchedulerPolicy::begin_slot(const EnvState& state) {
  schedule_ = centralized_pf(state.xbar, state.channel, config_.bandwidth_hz, config_.tx_power_w(),
                             config_.noise_power_w(), force_);
}

Action PfSchedulerPolicy::decide(std::size_t bs, const ConObservation&) {
  return schedule_.at(bs) ? Action::tx(ModScheme::from_order(4)) : Action::no_tx();
}

namespace {

double sweep_point(const AdaptiveEdRequest& req, double threshold_dbm) {
  MacEnvironment env(*req.layout, req.env);
  double total = 0.0;
  for (int e = 0; e < req.episodes_per_threshold; ++e) {
    env.reset(*req.configuration, req.seeds[static_cast<std::size_t>(e) % req.seeds.size()]);
    EdPolicy policy(threshold_dbm);
    total += discounted_return(generate_episode(env, policy, req.episode_length), req.gamma);
  }
  return total / req.episodes_per_threshold;
}

void validate(const AdaptiveEdRequest& req) {
  require(req.layout != nullptr && req.configuration != nullptr, "adaptive_ed: layout and configuration required");
  require(!req.thresholds_dbm.empty(), "adaptive_ed: threshold list is empty");
  require(req.episodes_per_threshold >= 1, "adaptive_ed: need at least one episode per threshold");
  require(!req.seeds.empty(), "adaptive_ed: need at least one seed");
}

AdaptiveEdResult pick_best(const AdaptiveEdRequest& req, std::vector<double> returns) {
  AdaptiveEdResult res;
  for (std::size_t k = 0; k < returns.size(); ++k) {
    res.sweep.push_back({req.thresholds_dbm[k], returns[k]});
    if (k == 0 || returns[k] > res.best_return) {
      res.best_return = returns[k];
      res.best_threshold_dbm = req.thresholds_dbm[k];
    }
  }
  return res;
}

}  // namespace

AdaptiveEdResult adaptive_ed(const AdaptiveEdRequest& req) {
  validate(req);
  const auto count = static_cast<std::int64_t>(req.thresholds_dbm.size());
  std::vector<double> returns(req.thresholds_dbm.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < count; ++k) returns[k] = sweep_point(req, req.thresholds_dbm[k]);
  return pick_best(req, std::move(returns));
}

AdaptiveEdResult kernels::adaptive_ed_serial(const AdaptiveEdRequest& req) {
  validate(req);
  std::vector<double> returns;
  for (double t : req.thresholds_dbm) returns.push_back(sweep_point(req, t));
  return pick_best(req, std::move(returns));
}

}  // namespace specshare
