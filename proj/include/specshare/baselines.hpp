#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "specshare/kernels.hpp"
#include "specshare/mac_sim.hpp"

namespace specshare {

inline constexpr double kEdSweepHighDbm = -22.0;
inline constexpr double kEdSweepLowDbm = -92.0;
inline constexpr double kFixedEdThresholdDbm = -72.0;
inline constexpr std::size_t kPfMaxBs = 20;

// Transmit iff the summed sensed energy is strictly below the threshold.
bool ed_decision(std::span<const double> energies_w, double threshold_w);

// Argmax over the seven schemes of (1 - Ps(M, sinr)) log2 M; ties go to the
// lower order. The squared norm in the original criterion is dropped since
// squaring is monotone on non-negative scores.
ModScheme genie_modulation(double sinr);
const RateAdapter& genie_rate_adapter();

// -22, -27, ..., -92 dBm.
std::vector<double> default_ed_sweep();

class EdPolicy : public ContentionPolicy {
 public:
  explicit EdPolicy(double threshold_dbm);
  Action decide(std::size_t bs, const ConObservation& obs) override;
  const RateAdapter* rate_adapter() const override { return &genie_rate_adapter(); }
  double threshold_dbm() const { return threshold_dbm_; }

 private:
  double threshold_dbm_;
  double threshold_w_;
};

// Exhaustive 2^N proportional-fair on/off search with the Shannon-rate
// surrogate, using the current X̄ and channel. Throws CapabilityError above
// kPfMaxBs unless `force` is set.
std::vector<bool> centralized_pf(std::span<const double> xbar, const ChannelRealization& channel, double bandwidth_hz,
                                 double tx_power_w, double noise_w, bool force = false);
double pf_slot_metric(const std::vector<bool>& decision, std::span<const double> xbar,
                      const ChannelRealization& channel, double bandwidth_hz, double tx_power_w, double noise_w);

// Centralized scheduler plugged into the contention loop: the schedule is
// computed from the full state at slot start and contention is ignored.
class PfSchedulerPolicy : public ContentionPolicy {
 public:
  PfSchedulerPolicy(const EnvConfig& config, bool force = false) : config_(config), force_(force) {}
  void begin_slot(const EnvState& state) override;
  Action decide(std::size_t bs, const ConObservation& obs) override;
  const RateAdapter* rate_adapter() const override { return &genie_rate_adapter(); }

 private:
  EnvConfig config_;
  bool force_;
  std::vector<bool> schedule_;
};

struct EdSweepPoint {
  double threshold_dbm = 0.0;
  double mean_return = 0.0;
};

struct AdaptiveEdResult {
  double best_threshold_dbm = 0.0;
  double best_return = 0.0;
  std::vector<EdSweepPoint> sweep;  // in input order
};

struct AdaptiveEdRequest {
  const Layout* layout = nullptr;
  const UeConfiguration* configuration = nullptr;
  EnvConfig env;
  std::vector<double> thresholds_dbm;
  int episodes_per_threshold = 1;
  int episode_length = 100;
  double gamma = 0.99;
  // Episode e uses channel seed seeds[e % seeds.size()]; every threshold
  // sees the same channels.
  std::vector<std::uint64_t> seeds = {0};
};

// Genie sweep: best threshold by mean discounted return; ties keep the
// earlier threshold. Thresholds run in parallel.
AdaptiveEdResult adaptive_ed(const AdaptiveEdRequest& request);

namespace kernels {
AdaptiveEdResult adaptive_ed_serial(const AdaptiveEdRequest& request);
}

}  // namespace specshare
