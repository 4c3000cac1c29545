#pragma once

#include <span>
#include <vector>

#include "specshare/mac_sim.hpp"

namespace specshare {

// Fixed affine maps from physical units to network inputs. Powers span ten
// orders of magnitude, so everything enters in log units.
struct FeatureScaling {
  double rate_log10_offset = 6.0;  // log10(bits/s)
  double rate_log10_scale = 2.0;
  double power_dbm_offset = -90.0;
  double power_dbm_scale = 30.0;
  double power_floor_dbm = -150.0;

  double rate(double bits_per_s) const;
  double power(double watts) const;
};

enum class CriticMode { Local, Centralized };

// Input widths for N BSs and k energy entries.
std::size_t eos_local_dim();
std::size_t eos_global_dim(std::size_t n_bs);
std::size_t con_actor_dim(std::size_t k);
std::size_t con_critic_dim(CriticMode mode, std::size_t n_bs, std::size_t k);
std::size_t eos_critic_dim(CriticMode mode, std::size_t n_bs);

// <X̄, S, I>
void encode_eos(const EosObservation& obs, const FeatureScaling& s, std::span<double> out);
// <X̄, S, I> for all N UEs
void encode_global_eos(const GlobalEosState& g, const FeatureScaling& s, std::span<double> out);
// EOS part, [sent last slot, last SINR], theta/N, then k entries of
// [present, (j+1)/N, energy].
void encode_con_actor(const ConObservation& obs, std::size_t k, const FeatureScaling& s, std::span<double> out);
// Same layout with the local EOS part swapped for the global state under
// centralized critics.
void encode_con_critic(CriticMode mode, const ConObservation& obs, const GlobalEosState& g, std::size_t k,
                       const FeatureScaling& s, std::span<double> out);
void encode_eos_critic(CriticMode mode, const ConObservation& obs, const GlobalEosState& g, const FeatureScaling& s,
                       std::span<double> out);

}  // namespace specshare
