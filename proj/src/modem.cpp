#include "specshare/modem.hpp"

#include <algorithm>
#include <bit>
#include <numbers>
#include <sstream>

#include "specshare/kernels.hpp"

namespace specshare {

namespace {

constexpr std::array<int, kNumSchemes> kOrders = {4, 8, 16, 32, 64, 128, 256};

}  // namespace

ModScheme ModScheme::from_order(int order) {
  if (std::find(kOrders.begin(), kOrders.end(), order) == kOrders.end()) {
    throw ConfigError("unsupported modulation order " + std::to_string(order));
  }
  return ModScheme(order);
}

ModScheme ModScheme::from_index(int k) {
  if (k < 0 || k >= kNumSchemes) throw ContractViolation("modulation index out of range");
  return ModScheme(kOrders[k]);
}

const std::array<ModScheme, 7>& ModScheme::all() {
  static const std::array<ModScheme, 7> schemes = {ModScheme(4),  ModScheme(8),   ModScheme(16), ModScheme(32),
                                                   ModScheme(64), ModScheme(128), ModScheme(256)};
  return schemes;
}

int ModScheme::index() const {
  return static_cast<int>(std::find(kOrders.begin(), kOrders.end(), order_) - kOrders.begin());
}

Family ModScheme::family() const {
  switch (order_) {
    case 8:
      return Family::Psk;
    case 32:
    case 128:
      return Family::CrossQam;
    default:
      return Family::SquareQam;
  }
}

int ModScheme::bits() const { return std::countr_zero(static_cast<unsigned>(order_)); }

Constellation build_constellation(ModScheme scheme) {
  Constellation c{scheme, {}};
  const int m = scheme.order();
  switch (scheme.family()) {
    case Family::Psk:
      for (int b = 0; b < m; ++b) c.points.push_back(std::polar(1.0, 2.0 * std::numbers::pi * b / m));
      break;
    case Family::SquareQam: {
      const int side = static_cast<int>(std::lround(std::sqrt(m)));
      const double scale = std::sqrt(3.0 / (2.0 * (m - 1)));
      for (int bi = 0; bi < side; ++bi) {
        for (int bq = 0; bq < side; ++bq) {
          c.points.emplace_back(scale * (2 * bi + 1 - side), scale * (2 * bq + 1 - side));
        }
      }
      break;
    }
    case Family::CrossQam: {
      // 6x6 array of v x v blocks with the four corner blocks removed, on an
      // odd-integer lattice, then scaled to unit power.
      const int v = static_cast<int>(std::lround(std::sqrt(m / 32.0)));
      const int side = 6 * v;
      double power = 0.0;
      for (int i = 0; i < side; ++i) {
        for (int q = 0; q < side; ++q) {
          const int bi = i / v;
          const int bq = q / v;
          if ((bi == 0 || bi == 5) && (bq == 0 || bq == 5)) continue;
          const std::complex<double> s(2 * i + 1 - side, 2 * q + 1 - side);
          power += std::norm(s);
          c.points.push_back(s);
        }
      }
      const double scale = 1.0 / std::sqrt(power / static_cast<double>(c.points.size()));
      for (auto& s : c.points) s *= scale;
      break;
    }
  }
  return c;
}

const Constellation& constellation(ModScheme scheme) {
  static const std::array<Constellation, kNumSchemes> cache = [] {
    std::array<Constellation, kNumSchemes> out;
    for (int k = 0; k < kNumSchemes; ++k) out[k] = build_constellation(ModScheme::from_index(k));
    return out;
  }();
  return cache[scheme.index()];
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ser_analytic(ModScheme scheme, double sinr) {
  require(sinr >= 0.0, "ser_analytic: sinr must be non-negative");
  const double m = scheme.order();
  double p = 0.0;
  switch (scheme.family()) {
    case Family::SquareQam: {
      const double sm = std::sqrt(m);
      const double inner = 1.0 - 2.0 * (sm - 1.0) / sm * q_function(std::sqrt(3.0 * sinr / (m - 1.0)));
      p = 1.0 - inner * inner;
      break;
    }
    case Family::Psk: {
      const double s = std::sin(std::numbers::pi / m);
      p = 2.0 * q_function(std::sqrt(2.0 * sinr * s * s));
      break;
    }
    case Family::CrossQam:
      p = 4.0 * q_function(std::sqrt(3.0 * sinr / (m - 1.0)));
      break;
  }
  return std::clamp(p, 0.0, 1.0);
}

SerEstimate ser_monte_carlo(ModScheme scheme, double sinr, std::uint64_t n_symbols, std::uint64_t seed) {
  require(n_symbols >= 1, "ser_monte_carlo: need at least one symbol");
  require(sinr >= 0.0, "ser_monte_carlo: sinr must be non-negative");
  return kernels::ser_mc_omp(constellation(scheme), sinr, n_symbols, seed);
}

double throughput(bool transmit, std::optional<ModScheme> scheme, double ser, double bandwidth_hz) {
  if (!transmit) return 0.0;
  if (!scheme) throw ContractViolation("throughput: transmitting without a modulation scheme");
  return bandwidth_hz * (1.0 - ser) * scheme->bits();
}

std::string constellation_csv(const Constellation& c) {
  std::ostringstream os;
  os.precision(17);
  os << "index,i,q\n";
  for (std::size_t k = 0; k < c.points.size(); ++k) os << k << ',' << c.points[k].real() << ',' << c.points[k].imag() << '\n';
  return os.str();
}

}  // namespace specshare
