#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specshare/common.hpp"

namespace specshare {

enum class Family { Psk, SquareQam, CrossQam };

// One of the seven modulation orders {4, 8, 16, 32, 64, 128, 256}.
class ModScheme {
 public:
  // Throws ConfigError for any other order.
  static ModScheme from_order(int order);
  // Index k in 0..6 into the ordered scheme list.
  static ModScheme from_index(int k);
  static const std::array<ModScheme, 7>& all();

  int order() const { return order_; }
  int index() const;
  Family family() const;
  int bits() const;

  bool operator==(const ModScheme&) const = default;
  auto operator<=>(const ModScheme&) const = default;

 private:
  explicit ModScheme(int order) : order_(order) {}
  int order_ = 4;
};

inline constexpr int kNumSchemes = 7;

struct Constellation {
  ModScheme scheme = ModScheme::from_order(4);
  std::vector<std::complex<double>> points;  // unit mean power
};

Constellation build_constellation(ModScheme scheme);
// Built once per scheme and shared.
const Constellation& constellation(ModScheme scheme);

// Gaussian tail Q(x) = P[N(0,1) > x].
double q_function(double x);

// Approximate symbol error probability at linear SINR, clamped to [0, 1]:
//   square QAM: 1 - (1 - 2(sqrt(M)-1)/sqrt(M) Q(sqrt(3 g/(M-1))))^2
//   8-PSK:      2 Q(sqrt(2 g sin^2(pi/M)))
//   cross QAM:  4 Q(sqrt(3 g/(M-1)))
double ser_analytic(ModScheme scheme, double sinr);

struct SerEstimate {
  std::uint64_t errors = 0;
  std::uint64_t symbols = 0;
  double rate() const { return symbols == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(symbols); }
  // sqrt(p(1-p)/n) evaluated at probability p.
  double std_error(double p) const { return std::sqrt(p * (1.0 - p) / static_cast<double>(symbols)); }
};

// Symbol-level simulation: random unit-modulus channel, complex Gaussian
// interference-plus-noise of variance 1/sinr, LS equalization and ML
// (minimum-distance) decisions. Parallel over fixed-size chunks, each with
// its own RNG stream, so the result depends only on the seed.
SerEstimate ser_monte_carlo(ModScheme scheme, double sinr, std::uint64_t n_symbols, std::uint64_t seed);

// R = W (1 - Ps) a log2(M), in bits/s.
double throughput(bool transmit, std::optional<ModScheme> scheme, double ser, double bandwidth_hz);

std::string constellation_csv(const Constellation& c);

}  // namespace specshare
