#pragma once

// Shared oracles for the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "specshare/neural.hpp"
#include "specshare/rng.hpp"
#include "specshare/rl_targets.hpp"

namespace specshare::testing {

struct GradCheck {
  std::size_t coordinates = 0;
  std::size_t passed = 0;
  double worst = 0.0;
  double pass_fraction() const { return coordinates == 0 ? 0.0 : static_cast<double>(passed) / coordinates; }
};

// Loss over raw outputs: sum w * raw + 0.5 raw^2 for value heads, and a
// weighted cross-entropy for softmax heads, so every output feeds back.
inline double probe_loss(const NetSpec& spec, const Matrix<double>& raw, const Matrix<double>& w,
                         Matrix<double>* d_raw) {
  double loss = 0.0;
  const std::size_t k = raw.cols();
  for (std::size_t t = 0; t < raw.rows(); ++t) {
    if (spec.head == HeadKind::Softmax) {
      double mx = raw(t, 0);
      for (std::size_t a = 1; a < k; ++a) mx = std::max(mx, raw(t, a));
      double z = 0.0;
      for (std::size_t a = 0; a < k; ++a) z += std::exp(raw(t, a) - mx);
      double wsum = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double logp = raw(t, a) - mx - std::log(z);
        loss -= w(t, a) * logp;
        wsum += w(t, a);
      }
      if (d_raw) {
        for (std::size_t a = 0; a < k; ++a) {
          const double p = std::exp(raw(t, a) - mx) / z;
          (*d_raw)(t, a) = wsum * p - w(t, a);
        }
      }
    } else {
      for (std::size_t a = 0; a < k; ++a) {
        loss += w(t, a) * raw(t, a) + 0.5 * raw(t, a) * raw(t, a);
        if (d_raw) (*d_raw)(t, a) = w(t, a) + raw(t, a);
      }
    }
  }
  return loss;
}

// Central differences with step h against the reverse-mode gradient over
// `sequences` random sequences of `steps` steps each. A coordinate passes when
// |analytic - numeric| <= tol * max(|analytic|, |numeric|, floor).
inline GradCheck gradient_check(const NetSpec& spec, std::uint64_t seed, std::size_t steps = 4,
                                std::size_t sequences = 2, double h = 1e-5, double tol = 1e-4,
                                double floor = 1e-6) {
  Network net(spec, seed);
  Rng rng = make_stream(seed, "gradcheck");
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (double& p : net.params()) p += jitter(rng);

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrix<double>> inputs, weights;
  for (std::size_t s = 0; s < sequences; ++s) {
    Matrix<double> x(steps, spec.input_dim);
    for (double& v : x.data()) v = u(rng);
    Matrix<double> w(steps, spec.output_dim());
    for (double& v : w.data()) v = u(rng);
    if (spec.head == HeadKind::Softmax) {
      // Zero-sum rows act like signed advantages and keep the loss near zero,
      // so the central difference is not swamped by rounding of a large sum.
      for (std::size_t t = 0; t < steps; ++t) {
        double mean = 0.0;
        for (std::size_t a = 0; a < w.cols(); ++a) mean += w(t, a);
        mean /= static_cast<double>(w.cols());
        for (std::size_t a = 0; a < w.cols(); ++a) w(t, a) -= mean;
      }
    }
    inputs.push_back(std::move(x));
    weights.push_back(std::move(w));
  }

  std::vector<SequenceLoss> losses;
  for (std::size_t s = 0; s < sequences; ++s) {
    const Matrix<double>* w = &weights[s];
    losses.push_back([&spec, w](const ForwardTape& tape, Matrix<double>& d_raw) {
      return probe_loss(spec, tape.raw, *w, &d_raw);
    });
  }
  std::vector<double> grad(net.size(), 0.0);
  accumulate_gradient(net, inputs, losses, grad);

  auto total_loss = [&]() {
    double l = 0.0;
    for (std::size_t s = 0; s < sequences; ++s) l += probe_loss(spec, net.forward(inputs[s]).raw, weights[s], nullptr);
    return l;
  };

  GradCheck out;
  auto params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    const double up = total_loss();
    params[k] = keep - h;
    const double down = total_loss();
    params[k] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(grad[k]), std::abs(numeric), floor});
    const double rel = std::abs(grad[k] - numeric) / scale;
    out.worst = std::max(out.worst, rel);
    ++out.coordinates;
    if (rel <= tol) ++out.passed;
  }
  return out;
}

// Explicit alternating chain EOS_0, CON_0, EOS_1, ..., CON_{L-1}: node values,
// one-step residuals, then every lambda-return summed term by term.
struct ChainOracle {
  std::vector<double> target_eos, target_con, advantage_con;
};

inline ChainOracle alternating_chain_oracle(const std::vector<double>& r, const std::vector<double>& v_eos,
                                            const std::vector<double>& v_con, double gamma, double lambda) {
  const std::size_t L = r.size();
  const std::size_t nodes = 2 * L;
  const double g = std::sqrt(gamma);
  std::vector<double> value(nodes), reward(nodes, 0.0);
  for (std::size_t n = 0; n < L; ++n) {
    value[2 * n] = v_eos[n];
    value[2 * n + 1] = v_con[n];
    reward[2 * n + 1] = r[n];  // the EOS half-step carries no reward
  }
  auto next_value = [&](std::size_t k) { return k + 1 < nodes ? value[k + 1] : 0.0; };
  std::vector<double> delta(nodes);
  for (std::size_t k = 0; k < nodes; ++k) delta[k] = reward[k] + g * next_value(k) - value[k];

  std::vector<double> target(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    double sum = 0.0;
    for (std::size_t m = k; m < nodes; ++m) sum += std::pow(g * lambda, static_cast<double>(m - k)) * delta[m];
    target[k] = value[k] + sum;
  }
  ChainOracle o;
  for (std::size_t n = 0; n < L; ++n) {
    o.target_eos.push_back(target[2 * n]);
    o.target_con.push_back(target[2 * n + 1]);
    o.advantage_con.push_back(target[2 * n + 1] - v_con[n]);
  }
  return o;
}

}  // namespace specshare::testing
