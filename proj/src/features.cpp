#include "specshare/features.hpp"

#include <algorithm>

namespace specshare {

double FeatureScaling::rate(double bits_per_s) const {
  return (std::log10(std::max(bits_per_s, 1.0)) - rate_log10_offset) / rate_log10_scale;
}

double FeatureScaling::power(double watts) const {
  const double dbm = watts > 0.0 ? std::max(watts_to_dbm(watts), power_floor_dbm) : power_floor_dbm;
  return (dbm - power_dbm_offset) / power_dbm_scale;
}

std::size_t eos_local_dim() { return 3; }
std::size_t eos_global_dim(std::size_t n_bs) { return 3 * n_bs; }
std::size_t con_actor_dim(std::size_t k) { return eos_local_dim() + 2 + 1 + 3 * k; }

std::size_t con_critic_dim(CriticMode mode, std::size_t n_bs, std::size_t k) {
  return (mode == CriticMode::Centralized ? eos_global_dim(n_bs) : eos_local_dim()) + 1 + 3 * k;
}

std::size_t eos_critic_dim(CriticMode mode, std::size_t n_bs) {
  return mode == CriticMode::Centralized ? eos_global_dim(n_bs) : eos_local_dim();
}

void encode_eos(const EosObservation& obs, const FeatureScaling& s, std::span<double> out) {
  require(out.size() >= 3, "encode_eos: output too small");
  out[0] = s.rate(obs.xbar_prev);
  out[1] = s.power(obs.signal_prev);
  out[2] = s.power(obs.interference_prev);
}

void encode_global_eos(const GlobalEosState& g, const FeatureScaling& s, std::span<double> out) {
  const std::size_t n = g.xbar.size();
  require(out.size() >= 3 * n, "encode_global_eos: output too small");
  for (std::size_t j = 0; j < n; ++j) {
    out[3 * j] = s.rate(g.xbar[j]);
    out[3 * j + 1] = s.power(g.signal[j]);
    out[3 * j + 2] = s.power(g.interference[j]);
  }
}

namespace {

void encode_contention_tail(const ConObservation& obs, std::size_t k, const FeatureScaling& s, std::span<double> out) {
  require(out.size() == 1 + 3 * k, "encode_con: output size mismatch");
  const double n = static_cast<double>(std::max<std::size_t>(obs.n_bs, 1));
  out[0] = obs.counter / n;
  for (std::size_t e = 0; e < k; ++e) {
    double* slot = out.data() + 1 + 3 * e;
    if (e < obs.energies.size()) {
      slot[0] = 1.0;
      slot[1] = (obs.energies[e].bs + 1) / n;
      slot[2] = s.power(obs.energies[e].energy_w);
    } else {
      slot[0] = slot[1] = slot[2] = 0.0;
    }
  }
}

}  // namespace

void encode_con_actor(const ConObservation& obs, std::size_t k, const FeatureScaling& s, std::span<double> out) {
  require(out.size() == con_actor_dim(k), "encode_con_actor: output size mismatch");
  encode_eos(obs.eos, s, out.first(3));
  // Last-slot SINR, implied by S and I but hard for a small net to difference
  // out of two log-power inputs.
  const bool sent = obs.eos.signal_prev > 0.0 && obs.eos.interference_prev > 0.0;
  out[3] = sent ? 1.0 : 0.0;
  out[4] = sent ? watts_to_dbm(obs.eos.signal_prev) - watts_to_dbm(obs.eos.interference_prev) : 0.0;
  out[4] /= s.power_dbm_scale;
  encode_contention_tail(obs, k, s, out.subspan(5));
}

void encode_con_critic(CriticMode mode, const ConObservation& obs, const GlobalEosState& g, std::size_t k,
                       const FeatureScaling& s, std::span<double> out) {
  const std::size_t head = eos_critic_dim(mode, g.xbar.size());
  require(out.size() == head + 1 + 3 * k, "encode_con_critic: output size mismatch");
  encode_eos_critic(mode, obs, g, s, out.first(head));
  encode_contention_tail(obs, k, s, out.subspan(head));
}

void encode_eos_critic(CriticMode mode, const ConObservation& obs, const GlobalEosState& g, const FeatureScaling& s,
                       std::span<double> out) {
  if (mode == CriticMode::Centralized) {
    encode_global_eos(g, s, out);
  } else {
    encode_eos(obs.eos, s, out);
  }
}

}  // namespace specshare
