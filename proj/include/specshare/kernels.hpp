#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial twin kept as the
// reference implementation; both must return bit-identical results.

#include <cstdint>
#include <span>

#include "specshare/common.hpp"
#include "specshare/modem.hpp"

namespace specshare::kernels {

inline constexpr std::uint64_t kSerChunk = 1u << 16;

SerEstimate ser_mc_serial(const Constellation& c, double sinr, std::uint64_t n_symbols, std::uint64_t seed);
SerEstimate ser_mc_omp(const Constellation& c, double sinr, std::uint64_t n_symbols, std::uint64_t seed);

struct PfProblem {
  std::span<const double> xbar;       // X̄_j[n-1], bits/s
  const Matrix<double>* gain = nullptr;  // gain(i, j): BS i -> UE j
  double bandwidth_hz = 0.0;
  double tx_power_w = 0.0;
  double noise_w = 0.0;
};

struct PfSolution {
  std::uint64_t mask = 0;  // bit i set <=> BS i transmits
  double metric = 0.0;
};

// sum_j W log2(1 + SINR_j) / X̄_j over transmitting j, summed in index order.
double pf_metric(std::uint64_t mask, const PfProblem& p);

// Strict total order: larger metric, then fewer transmitters, then the
// lexicographically smaller on/off vector (a_0, a_1, ...).
bool pf_better(const PfSolution& a, const PfSolution& b);

PfSolution pf_search_serial(const PfProblem& p);
PfSolution pf_search_omp(const PfProblem& p);

}  // namespace specshare::kernels
