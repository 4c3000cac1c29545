#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specshare/modem.hpp"
#include "specshare/net_env.hpp"
#include "specshare/rng.hpp"

namespace specshare {

// Radio and MDP constants. None of these are given by the underlying model;
// all are overridable from the experiment config.
struct EnvConfig {
  double bandwidth_hz = 20e6;
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double tau = 50.0;           // rate smoothing coefficient, > 1
  double xbar_floor = 1e3;     // bits/s, floor for the initial average rate
  int k_trunc = 0;             // energy entries kept per CON observation; <= 0 keeps N-1
  double carrier_ghz = 6.0;
  double fading_alpha = 0.1;

  double tx_power_w() const { return dbm_to_watts(tx_power_dbm); }
  double noise_power_w() const;
  std::size_t energy_slots(std::size_t n_bs) const;
};

// a_i * m_i: code 0 is "stay silent", codes 1..7 transmit with the k-th scheme.
class Action {
 public:
  static constexpr int kCount = 8;

  constexpr Action() = default;
  static Action no_tx() { return Action(0); }
  static Action tx(ModScheme scheme) { return Action(scheme.index() + 1); }
  static Action from_code(int code);

  int code() const { return code_; }
  bool transmits() const { return code_ != 0; }
  ModScheme scheme() const;  // requires transmits()

  bool operator==(const Action&) const = default;

 private:
  constexpr explicit Action(int code) : code_(code) {}
  int code_ = 0;
};

enum class Phase { Eos, Con };

struct EosObservation {
  double xbar_prev = 0.0;          // X̄_i[n-1], bits/s
  double signal_prev = 0.0;        // S_i[n-1], W; 0 if BS i was silent
  double interference_prev = 0.0;  // I_i[n-1], W; interference plus noise
};

struct SensedEnergy {
  std::size_t bs = 0;
  double energy_w = 0.0;
};

struct ConObservation {
  EosObservation eos;
  // Earlier-mini-slot transmitters, largest energy first, at most k_trunc.
  std::vector<SensedEnergy> energies;
  // Sum over every sensed transmitter, before truncation.
  double total_energy_w = 0.0;
  int counter = 0;
  std::size_t n_bs = 0;
};

struct GlobalEosState {
  std::vector<double> xbar;
  std::vector<double> signal;
  std::vector<double> interference;
};

struct EnvState {
  std::vector<double> xbar;          // X̄[n-1]
  std::vector<double> signal;        // S[n-1]
  std::vector<double> interference;  // I[n-1]
  std::vector<int> counters;         // permutation of 0..N-1
  int slot = 0;
  Phase phase = Phase::Eos;
  ChannelRealization channel;
  std::vector<Action> committed;
};

using RateAdapter = std::function<ModScheme(double sinr)>;

// Decides one BS's action when its counter expires. Learned actors only ever
// see the ConObservation; the genie hooks exist for baselines.
class ContentionPolicy {
 public:
  virtual ~ContentionPolicy() = default;
  virtual void begin_episode(std::size_t /*n_bs*/) {}
  virtual void begin_slot(const EnvState& /*state*/) {}
  virtual Action decide(std::size_t bs, const ConObservation& obs) = 0;
  // When set, transmitting BSs get their scheme chosen from the realized SINR.
  virtual const RateAdapter* rate_adapter() const { return nullptr; }
};

struct SlotOutcome {
  std::vector<Action> actions;  // as transmitted, after any rate adaptation
  std::vector<double> sinr;
  std::vector<double> ser;
  std::vector<double> rate;  // R_j[n], bits/s
  std::vector<double> signal;
  std::vector<double> interference;
  double reward = 0.0;  // common reward r[n]
};

struct SlotRecord {
  int slot = 0;
  std::vector<int> counters;
  std::vector<ConObservation> con;  // per BS
  GlobalEosState global_eos;        // s^EOS entering this slot
  std::vector<Action> actions;
  std::vector<double> rate;
  std::vector<double> sinr;
  double reward = 0.0;
};

struct EpisodeTrace {
  std::vector<SlotRecord> slots;
  std::vector<double> warmup_xbar;  // X̄[-1] produced by the warm-up slot
  std::vector<double> final_xbar;   // X̄[L-1]
};

// r_j[n] = log((1 - 1/tau)(1 + R / ((tau - 1) X̄_prev))).
double per_ue_reward(double rate, double xbar_prev, double tau);
// r[0] = sum_j log X̄_j[0].
double initial_reward(std::span<const double> xbar0);
double discounted_return(const EpisodeTrace& trace, double gamma);

// The two-phase contention MDP for one (layout, configuration) pair.
//
// reset() runs a warm-up slot with every BS transmitting the lowest-order
// scheme; X̄[-1] = max(R_warm, floor). Decision slots then run n = 0..L-1 and
// the reward of slot 0 is sum_j log X̄_j[0], so the undiscounted episode
// reward telescopes to sum_j log X̄_j[L-1].
class MacEnvironment {
 public:
  MacEnvironment(Layout layout, EnvConfig config);

  const EnvState& reset(const UeConfiguration& ues, std::uint64_t seed);

  // Queries BSs in increasing counter order and commits every decision.
  std::vector<Action> run_contention_phase(ContentionPolicy& policy);
  // Realizes SINR, rates, X̄ and the common reward, then evolves the channel
  // and draws next slot's counters.
  SlotOutcome run_data_phase(std::span<const Action> actions, const RateAdapter* adapter = nullptr);

  // `decided[j]` is set once BS j has acted in the current slot.
  ConObservation observe_con(std::size_t bs, std::span<const std::optional<Action>> decided) const;
  EosObservation observe_eos(std::size_t bs) const;
  GlobalEosState global_eos() const;

  const EnvState& state() const { return state_; }
  const Layout& layout() const { return layout_; }
  const EnvConfig& config() const { return config_; }
  std::size_t n_bs() const { return layout_.n_bs(); }
  const std::vector<ConObservation>& last_observations() const { return last_obs_; }
  const std::vector<double>& warmup_xbar() const { return warmup_xbar_; }

 private:
  SlotOutcome realize(std::span<const Action> actions, const RateAdapter* adapter) const;
  void draw_counters();

  Layout layout_;
  EnvConfig config_;
  EnvState state_;
  UeConfiguration ues_;
  Rng fading_rng_;
  Rng counter_rng_;
  std::vector<ConObservation> last_obs_;
  std::vector<double> warmup_xbar_;
};

EpisodeTrace generate_episode(MacEnvironment& env, ContentionPolicy& policy, int episode_length);

// Policy that picks uniformly among the 8 actions. Used for tests and as the
// "random" reference point.
class UniformRandomPolicy : public ContentionPolicy {
 public:
  explicit UniformRandomPolicy(std::uint64_t seed) : rng_(make_stream(seed, "uniform-policy")) {}
  Action decide(std::size_t bs, const ConObservation& obs) override;

 private:
  Rng rng_;
};

// trace-v1 JSON lines, one per slot.
void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace, const std::string& config_hash, int episode = 0);

}  // namespace specshare
