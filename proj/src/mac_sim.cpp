#include "specshare/mac_sim.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "json.hpp"

namespace specshare {

double EnvConfig::noise_power_w() const {
  return dbm_to_watts(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

std::size_t EnvConfig::energy_slots(std::size_t n_bs) const {
  const std::size_t full = n_bs > 0 ? n_bs - 1 : 0;
  if (k_trunc <= 0) return full;
  return std::min(full, static_cast<std::size_t>(k_trunc));
}

Action Action::from_code(int code) {
  if (code < 0 || code >= kCount) throw ContractViolation("action code out of range: " + std::to_string(code));
  return Action(code);
}

ModScheme Action::scheme() const {
  require(transmits(), "Action::scheme on a silent action");
  return ModScheme::from_index(code_ - 1);
}

double per_ue_reward(double rate, double xbar_prev, double tau) {
  require(tau > 1.0, "per_ue_reward: tau must exceed 1");
  require(xbar_prev > 0.0, "per_ue_reward: average rate must be positive");
  return std::log((1.0 - 1.0 / tau) * (1.0 + rate / ((tau - 1.0) * xbar_prev)));
}

double initial_reward(std::span<const double> xbar0) {
  double sum = 0.0;
  for (double x : xbar0) {
    require(x > 0.0, "initial_reward: average rate must be positive");
    sum += std::log(x);
  }
  return sum;
}

double discounted_return(const EpisodeTrace& trace, double gamma) {
  double total = 0.0;
  double w = 1.0;
  for (const auto& s : trace.slots) {
    total += w * s.reward;
    w *= gamma;
  }
  return total;
}

MacEnvironment::MacEnvironment(Layout layout, EnvConfig config) : layout_(std::move(layout)), config_(config) {
  if (!(config_.tau > 1.0)) throw ConfigError("tau must exceed 1");
  if (!(config_.xbar_floor > 0.0)) throw ConfigError("xbar_floor must be positive");
  if (!(config_.bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  if (config_.fading_alpha < 0.0 || config_.fading_alpha > 1.0) throw ConfigError("fading alpha must lie in [0, 1]");
  if (layout_.n_bs() == 0) throw ConfigError("layout has no base stations");
}

void MacEnvironment::draw_counters() {
  state_.counters.resize(n_bs());
  std::iota(state_.counters.begin(), state_.counters.end(), 0);
  std::shuffle(state_.counters.begin(), state_.counters.end(), counter_rng_);
}

const EnvState& MacEnvironment::reset(const UeConfiguration& ues, std::uint64_t seed) {
  const std::size_t n = n_bs();
  require(ues.ue_positions.size() == n, "reset: configuration does not match layout");
  ues_ = ues;
  Rng channel_rng = make_stream(seed, "channel");
  fading_rng_ = make_stream(seed, "fading");
  counter_rng_ = make_stream(seed, "counters");

  state_ = EnvState{};
  state_.channel = realize_channel(layout_, ues_, ChannelParams{config_.carrier_ghz}, channel_rng);
  state_.xbar.assign(n, config_.xbar_floor);

  // Warm-up: everybody transmits QPSK once.
  const std::vector<Action> warm(n, Action::tx(ModScheme::from_order(4)));
  const SlotOutcome out = realize(warm, nullptr);
  for (std::size_t j = 0; j < n; ++j) state_.xbar[j] = std::max(out.rate[j], config_.xbar_floor);
  state_.signal = out.signal;
  state_.interference = out.interference;
  warmup_xbar_ = state_.xbar;

  state_.channel = evolve_channel(state_.channel, FadingProcess{config_.fading_alpha}, fading_rng_);
  state_.slot = 0;
  state_.phase = Phase::Eos;
  state_.committed.assign(n, Action::no_tx());
  draw_counters();
  last_obs_.clear();
  return state_;
}

EosObservation MacEnvironment::observe_eos(std::size_t bs) const {
  return {state_.xbar[bs], state_.signal[bs], state_.interference[bs]};
}

GlobalEosState MacEnvironment::global_eos() const { return {state_.xbar, state_.signal, state_.interference}; }

ConObservation MacEnvironment::observe_con(std::size_t bs, std::span<const std::optional<Action>> decided) const {
  ConObservation obs;
  obs.eos = observe_eos(bs);
  obs.counter = state_.counters[bs];
  obs.n_bs = n_bs();
  const double p = config_.tx_power_w();
  for (std::size_t j = 0; j < n_bs(); ++j) {
    if (j == bs || !decided[j] || !decided[j]->transmits()) continue;
    if (state_.counters[j] >= state_.counters[bs]) continue;
    const double e = p * state_.channel.sensing_gain(bs, j);
    obs.total_energy_w += e;
    obs.energies.push_back({j, e});
  }
  std::stable_sort(obs.energies.begin(), obs.energies.end(),
                   [](const SensedEnergy& a, const SensedEnergy& b) { return a.energy_w > b.energy_w; });
  const std::size_t keep = config_.energy_slots(n_bs());
  if (obs.energies.size() > keep) obs.energies.resize(keep);
  return obs;
}

std::vector<Action> MacEnvironment::run_contention_phase(ContentionPolicy& policy) {
  const std::size_t n = n_bs();
  state_.phase = Phase::Con;
  policy.begin_slot(state_);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return state_.counters[a] < state_.counters[b]; });
  std::vector<std::optional<Action>> decided(n);
  last_obs_.assign(n, ConObservation{});
  for (std::size_t bs : order) {
    last_obs_[bs] = observe_con(bs, decided);
    decided[bs] = policy.decide(bs, last_obs_[bs]);
  }
  std::vector<Action> committed(n);
  for (std::size_t i = 0; i < n; ++i) committed[i] = *decided[i];
  state_.committed = committed;
  return committed;
}

SlotOutcome MacEnvironment::realize(std::span<const Action> actions, const RateAdapter* adapter) const {
  const std::size_t n = n_bs();
  const double p = config_.tx_power_w();
  const double noise = config_.noise_power_w();
  const auto& ch = state_.channel;
  SlotOutcome out;
  out.actions.assign(actions.begin(), actions.end());
  out.sinr.assign(n, 0.0);
  out.ser.assign(n, 1.0);
  out.rate.assign(n, 0.0);
  out.signal.assign(n, 0.0);
  out.interference.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double interference = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j && actions[i].transmits()) interference += p * ch.gain(i, j);
    }
    out.interference[j] = interference + noise;
    const double signal = p * ch.gain(j, j);
    out.sinr[j] = signal / out.interference[j];
    if (!actions[j].transmits()) continue;
    out.signal[j] = signal;
    if (adapter != nullptr && *adapter) out.actions[j] = Action::tx((*adapter)(out.sinr[j]));
    const ModScheme m = out.actions[j].scheme();
    out.ser[j] = ser_analytic(m, out.sinr[j]);
    out.rate[j] = throughput(true, m, out.ser[j], config_.bandwidth_hz);
  }
  return out;
}

SlotOutcome MacEnvironment::run_data_phase(std::span<const Action> actions, const RateAdapter* adapter) {
  const std::size_t n = n_bs();
  require(actions.size() == n, "run_data_phase: one action per BS required");
  SlotOutcome out = realize(actions, adapter);
  const double tau = config_.tau;
  std::vector<double> next(n);
  double reward = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    next[j] = (1.0 - 1.0 / tau) * state_.xbar[j] + out.rate[j] / tau;
    if (state_.slot > 0) reward += per_ue_reward(out.rate[j], state_.xbar[j], tau);
  }
  if (state_.slot == 0) reward = initial_reward(next);
  out.reward = reward;

  state_.xbar = std::move(next);
  state_.signal = out.signal;
  state_.interference = out.interference;
  state_.committed = out.actions;
  state_.channel = evolve_channel(state_.channel, FadingProcess{config_.fading_alpha}, fading_rng_);
  ++state_.slot;
  state_.phase = Phase::Eos;
  draw_counters();
  return out;
}

EpisodeTrace generate_episode(MacEnvironment& env, ContentionPolicy& policy, int episode_length) {
  require(episode_length >= 1, "generate_episode: L must be at least 1");
  EpisodeTrace trace;
  trace.warmup_xbar = env.warmup_xbar();
  trace.slots.reserve(static_cast<std::size_t>(episode_length));
  policy.begin_episode(env.n_bs());
  for (int n = 0; n < episode_length; ++n) {
    SlotRecord rec;
    rec.slot = env.state().slot;
    rec.counters = env.state().counters;
    rec.global_eos = env.global_eos();
    const std::vector<Action> committed = env.run_contention_phase(policy);
    rec.con = env.last_observations();
    SlotOutcome out = env.run_data_phase(committed, policy.rate_adapter());
    rec.actions = std::move(out.actions);
    rec.rate = std::move(out.rate);
    rec.sinr = std::move(out.sinr);
    rec.reward = out.reward;
    trace.slots.push_back(std::move(rec));
  }
  trace.final_xbar = env.state().xbar;
  return trace;
}

Action UniformRandomPolicy::decide(std::size_t, const ConObservation&) {
  std::uniform_int_distribution<int> pick(0, Action::kCount - 1);
  return Action::from_code(pick(rng_));
}

void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace, const std::string& config_hash, int episode) {
  for (const auto& s : trace.slots) {
    nlohmann::json j;
    j["schema"] = "trace-v1";
    j["config_hash"] = config_hash;
    j["episode"] = episode;
    j["slot"] = s.slot;
    auto codes = nlohmann::json::array();
    for (const auto& a : s.actions) codes.push_back(a.code());
    j["actions"] = codes;
    j["rates"] = s.rate;
    j["reward"] = s.reward;
    os << j.dump() << '\n';
  }
}

}  // namespace specshare
