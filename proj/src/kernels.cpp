#include "specshare/kernels.hpp"

#include <bit>
#include <limits>
#include <numbers>
#include <vector>

#include "specshare/rng.hpp"

namespace specshare::kernels {

namespace {

std::uint64_t ser_chunk(const Constellation& c, double sinr, std::uint64_t begin, std::uint64_t end,
                        std::uint64_t seed, std::uint64_t chunk) {
  Rng rng = make_stream(seed, "ser-mc", chunk);
  const auto& pts = c.points;
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double sigma = std::isinf(sinr) ? 0.0 : std::sqrt(0.5 / (sinr > 0.0 ? sinr : 1.0));
  const double signal_scale = sinr > 0.0 ? 1.0 : 0.0;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uint64_t errors = 0;
  for (std::uint64_t k = begin; k < end; ++k) {
    const std::size_t tx = pick(rng);
    const std::complex<double> h = std::polar(1.0, phase(rng));
    const double nr = noise(rng);
    const double ni = noise(rng);
    const std::complex<double> y = h * pts[tx] * signal_scale + sigma * std::complex<double>(nr, ni);
    const std::complex<double> eq = y / h;  // LS equalization with known channel
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < pts.size(); ++m) {
      const double d = std::norm(eq - pts[m]);
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    if (best != tx) ++errors;
  }
  return errors;
}

}  // namespace

SerEstimate ser_mc_serial(const Constellation& c, double sinr, std::uint64_t n_symbols, std::uint64_t seed) {
  const std::uint64_t chunks = (n_symbols + kSerChunk - 1) / kSerChunk;
  std::uint64_t errors = 0;
  for (std::uint64_t ch = 0; ch < chunks; ++ch) {
    const std::uint64_t b = ch * kSerChunk;
    const std::uint64_t e = std::min(n_symbols, b + kSerChunk);
    errors += ser_chunk(c, sinr, b, e, seed, ch);
  }
  return {errors, n_symbols};
}

SerEstimate ser_mc_omp(const Constellation& c, double sinr, std::uint64_t n_symbols, std::uint64_t seed) {
  const auto chunks = static_cast<std::int64_t>((n_symbols + kSerChunk - 1) / kSerChunk);
  std::uint64_t errors = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : errors)
  for (std::int64_t ch = 0; ch < chunks; ++ch) {
    const std::uint64_t b = static_cast<std::uint64_t>(ch) * kSerChunk;
    const std::uint64_t e = std::min(n_symbols, b + kSerChunk);
    errors += ser_chunk(c, sinr, b, e, seed, static_cast<std::uint64_t>(ch));
  }
  return {errors, n_symbols};
}

double pf_metric(std::uint64_t mask, const PfProblem& p) {
  const std::size_t n = p.xbar.size();
  const Matrix<double>& g = *p.gain;
  double metric = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!((mask >> j) & 1u)) continue;
    double interference = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j && ((mask >> i) & 1u)) interference += p.tx_power_w * g(i, j);
    }
    const double sinr = p.tx_power_w * g(j, j) / (interference + p.noise_w);
    metric += p.bandwidth_hz * std::log2(1.0 + sinr) / p.xbar[j];
  }
  return metric;
}

bool pf_better(const PfSolution& a, const PfSolution& b) {
  if (a.metric != b.metric) return a.metric > b.metric;
  const int ca = std::popcount(a.mask);
  const int cb = std::popcount(b.mask);
  if (ca != cb) return ca < cb;
  const std::uint64_t diff = a.mask ^ b.mask;
  if (diff == 0) return false;
  // At the first differing position, the vector with a 0 is smaller.
  const int first = std::countr_zero(diff);
  return ((a.mask >> first) & 1u) == 0;
}

PfSolution pf_search_serial(const PfProblem& p) {
  const std::uint64_t count = std::uint64_t{1} << p.xbar.size();
  PfSolution best{0, pf_metric(0, p)};
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    const PfSolution cand{mask, pf_metric(mask, p)};
    if (pf_better(cand, best)) best = cand;
  }
  return best;
}

PfSolution pf_search_omp(const PfProblem& p) {
  const auto count = static_cast<std::int64_t>(std::uint64_t{1} << p.xbar.size());
  PfSolution best{0, pf_metric(0, p)};
#pragma omp parallel
  {
    PfSolution local = best;
#pragma omp for schedule(static) nowait
    for (std::int64_t m = 1; m < count; ++m) {
      const PfSolution cand{static_cast<std::uint64_t>(m), pf_metric(static_cast<std::uint64_t>(m), p)};
      if (pf_better(cand, local)) local = cand;
    }
#pragma omp critical
    {
      if (pf_better(local, best)) best = local;
    }
  }
  return best;
}

}  // namespace specshare::kernels
