#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "specshare/common.hpp"

namespace specshare {

enum class HeadKind { Softmax, Scalar, QVector };

struct NetSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims = {64, 64};  // tanh dense layers
  std::size_t recurrent_width = 0;                  // GRU width; 0 = feed-forward
  HeadKind head = HeadKind::Scalar;
  std::size_t n_actions = 8;

  std::size_t output_dim() const { return head == HeadKind::Scalar ? 1 : n_actions; }
  bool recurrent() const { return recurrent_width > 0; }
  std::size_t param_count() const;
  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

struct HiddenState {
  std::vector<double> h;
};

// Activations of a sequence forward pass, kept for the backward pass.
struct ForwardTape {
  std::size_t steps = 0;
  Matrix<double> cache;    // per-step activations, one row per step
  Matrix<double> raw;      // pre-head-activation outputs (logits for Softmax)
  Matrix<double> outputs;  // probabilities for Softmax, raw otherwise
  HiddenState final_state;
};

// Dense tanh stack, optional GRU cell, linear head. Parameters live in one
// flat vector so optimizers and checkpoints treat them uniformly.
class Network {
 public:
  explicit Network(NetSpec spec, std::uint64_t init_seed = 0);

  const NetSpec& spec() const { return spec_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t size() const { return params_.size(); }

  HiddenState initial_state() const { return {std::vector<double>(spec_.recurrent_width, 0.0)}; }

  // One step; advances `hidden` in place.
  std::vector<double> step(std::span<const double> input, HiddenState& hidden) const;
  // T steps starting from `h0` (zero state if empty).
  ForwardTape forward(const Matrix<double>& inputs, const HiddenState& h0 = {}) const;
  // Accumulates dLoss/dparams into `grad` given dLoss/draw per step.
  // bptt_window > 0 stops the hidden-state gradient every that many steps.
  void backward(const ForwardTape& tape, const Matrix<double>& d_raw, std::span<double> grad,
                std::size_t bptt_window = 0) const;

 private:
  struct Offsets {
    std::vector<std::size_t> dense_w, dense_b;
    std::size_t wz = 0, wr = 0, wh = 0, uz = 0, ur = 0, uh = 0, bz = 0, br = 0, bh = 0;
    std::size_t head_w = 0, head_b = 0;
    std::size_t total = 0;
  };
  struct CacheLayout {
    std::vector<std::size_t> act;  // offsets of dense activations, act[0] = input
    std::size_t h_prev = 0, z = 0, r = 0, c = 0, h_new = 0;
    std::size_t width = 0;
  };

  void compute_step(std::span<const double> input, std::span<const double> h_prev, std::span<double> cache_row,
                    std::span<double> raw_row) const;
  std::size_t feature_dim() const;
  std::size_t gru_input_dim() const;

  NetSpec spec_;
  Offsets off_;
  CacheLayout cache_;
  std::vector<double> params_;
};

void softmax_inplace(std::span<double> v);

// Per-sequence loss: fills dLoss/draw (same shape as tape.raw) and returns
// the loss value.
using SequenceLoss = std::function<double(const ForwardTape& tape, Matrix<double>& d_raw)>;

// Reverse-mode gradient of the summed loss over the given sequences, added
// into `grad`. Throws NumericalError on a non-finite loss.
double accumulate_gradient(const Network& net, const std::vector<Matrix<double>>& sequences,
                           const std::vector<SequenceLoss>& losses, std::span<double> grad,
                           std::size_t bptt_window = 0);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment update.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double learning_rate);

}  // namespace specshare
