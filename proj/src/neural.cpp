#include "specshare/neural.hpp"

#include <algorithm>
#include <sstream>

#include "specshare/rng.hpp"

namespace specshare {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y += W x, W is rows x cols row-major.
void matvec_add(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

// x += W^T d
void matvec_t_add(const double* w, std::size_t rows, std::size_t cols, const double* d, double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    const double dr = d[r];
    for (std::size_t c = 0; c < cols; ++c) x[c] += wr[c] * dr;
  }
}

// G += d x^T
void outer_add(double* g, std::size_t rows, std::size_t cols, const double* d, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* gr = g + r * cols;
    const double dr = d[r];
    for (std::size_t c = 0; c < cols; ++c) gr[c] += dr * x[c];
  }
}

}  // namespace

std::size_t NetSpec::param_count() const {
  std::size_t n = 0;
  std::size_t in = input_dim;
  for (std::size_t h : hidden_dims) {
    n += h * in + h;
    in = h;
  }
  if (recurrent()) {
    const std::size_t hw = recurrent_width;
    n += 3 * (hw * in + hw * hw + hw);
    in = hw;
  }
  n += output_dim() * in + output_dim();
  return n;
}

void NetSpec::validate() const {
  require(input_dim >= 1, "NetSpec: input_dim must be >= 1");
  for (std::size_t h : hidden_dims) require(h >= 1, "NetSpec: hidden widths must be >= 1");
  require(n_actions >= 1, "NetSpec: n_actions must be >= 1");
}

namespace {
constexpr double kHeadInitScale = 0.01;
}

Network::Network(NetSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t pos = 0;
  std::size_t in = spec_.input_dim;
  for (std::size_t h : spec_.hidden_dims) {
    off_.dense_w.push_back(pos);
    pos += h * in;
    off_.dense_b.push_back(pos);
    pos += h;
    in = h;
  }
  const std::size_t hw = spec_.recurrent_width;
  if (spec_.recurrent()) {
    off_.wz = pos;
    off_.wr = off_.wz + hw * in;
    off_.wh = off_.wr + hw * in;
    off_.uz = off_.wh + hw * in;
    off_.ur = off_.uz + hw * hw;
    off_.uh = off_.ur + hw * hw;
    off_.bz = off_.uh + hw * hw;
    off_.br = off_.bz + hw;
    off_.bh = off_.br + hw;
    pos = off_.bh + hw;
  }
  const std::size_t feat = feature_dim();
  off_.head_w = pos;
  pos += spec_.output_dim() * feat;
  off_.head_b = pos;
  pos += spec_.output_dim();
  off_.total = pos;
  require(off_.total == spec_.param_count(), "Network: parameter layout mismatch");

  std::size_t c = 0;
  cache_.act.push_back(c);
  c += spec_.input_dim;
  for (std::size_t h : spec_.hidden_dims) {
    cache_.act.push_back(c);
    c += h;
  }
  if (spec_.recurrent()) {
    cache_.h_prev = c;
    cache_.z = c + hw;
    cache_.r = c + 2 * hw;
    cache_.c = c + 3 * hw;
    cache_.h_new = c + 4 * hw;
    c += 5 * hw;
  }
  cache_.width = c;

  // Uniform fan-in initialization, zero biases. The head starts small so the
  // initial policy is near uniform and initial values are near zero.
  params_.assign(off_.total, 0.0);
  Rng rng = make_stream(init_seed, "net-init");
  auto fill = [&](std::size_t at, std::size_t count, std::size_t fan_in, double scale = 1.0) {
    const double lim = scale / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (std::size_t k = 0; k < count; ++k) params_[at + k] = u(rng);
  };
  in = spec_.input_dim;
  for (std::size_t l = 0; l < spec_.hidden_dims.size(); ++l) {
    fill(off_.dense_w[l], spec_.hidden_dims[l] * in, in);
    in = spec_.hidden_dims[l];
  }
  if (spec_.recurrent()) {
    fill(off_.wz, 3 * hw * in, in);
    fill(off_.uz, 3 * hw * hw, hw);
  }
  fill(off_.head_w, spec_.output_dim() * feat, feat, kHeadInitScale);
}

std::size_t Network::gru_input_dim() const {
  return spec_.hidden_dims.empty() ? spec_.input_dim : spec_.hidden_dims.back();
}

std::size_t Network::feature_dim() const { return spec_.recurrent() ? spec_.recurrent_width : gru_input_dim(); }

void Network::compute_step(std::span<const double> input, std::span<const double> h_prev, std::span<double> row,
                           std::span<double> raw) const {
  const double* p = params_.data();
  std::copy(input.begin(), input.end(), row.begin() + static_cast<std::ptrdiff_t>(cache_.act[0]));
  std::size_t in = spec_.input_dim;
  for (std::size_t l = 0; l < spec_.hidden_dims.size(); ++l) {
    const std::size_t h = spec_.hidden_dims[l];
    const double* x = row.data() + cache_.act[l];
    double* y = row.data() + cache_.act[l + 1];
    std::copy(p + off_.dense_b[l], p + off_.dense_b[l] + h, y);
    matvec_add(p + off_.dense_w[l], h, in, x, y);
    for (std::size_t k = 0; k < h; ++k) y[k] = std::tanh(y[k]);
    in = h;
  }
  const double* feature = row.data() + cache_.act.back();
  if (spec_.recurrent()) {
    const std::size_t hw = spec_.recurrent_width;
    const double* u = row.data() + cache_.act.back();
    double* hp = row.data() + cache_.h_prev;
    double* z = row.data() + cache_.z;
    double* r = row.data() + cache_.r;
    double* c = row.data() + cache_.c;
    double* hn = row.data() + cache_.h_new;
    std::copy(h_prev.begin(), h_prev.end(), hp);
    std::copy(p + off_.bz, p + off_.bz + hw, z);
    std::copy(p + off_.br, p + off_.br + hw, r);
    matvec_add(p + off_.wz, hw, in, u, z);
    matvec_add(p + off_.uz, hw, hw, hp, z);
    matvec_add(p + off_.wr, hw, in, u, r);
    matvec_add(p + off_.ur, hw, hw, hp, r);
    std::vector<double> rh(hw);
    for (std::size_t k = 0; k < hw; ++k) {
      z[k] = sigmoid(z[k]);
      r[k] = sigmoid(r[k]);
      rh[k] = r[k] * hp[k];
    }
    std::copy(p + off_.bh, p + off_.bh + hw, c);
    matvec_add(p + off_.wh, hw, in, u, c);
    matvec_add(p + off_.uh, hw, hw, rh.data(), c);
    for (std::size_t k = 0; k < hw; ++k) {
      c[k] = std::tanh(c[k]);
      hn[k] = (1.0 - z[k]) * hp[k] + z[k] * c[k];
    }
    feature = hn;
  }
  const std::size_t out = spec_.output_dim();
  std::copy(p + off_.head_b, p + off_.head_b + out, raw.begin());
  matvec_add(p + off_.head_w, out, feature_dim(), feature, raw.data());
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

ForwardTape Network::forward(const Matrix<double>& inputs, const HiddenState& h0) const {
  if (inputs.cols() != spec_.input_dim) {
    std::ostringstream os;
    os << "Network::forward: input has " << inputs.cols() << " columns, spec expects " << spec_.input_dim;
    throw ContractViolation(os.str());
  }
  const std::size_t steps = inputs.rows();
  ForwardTape tape;
  tape.steps = steps;
  tape.cache = Matrix<double>(steps, cache_.width);
  tape.raw = Matrix<double>(steps, spec_.output_dim());
  std::vector<double> h = h0.h.empty() ? std::vector<double>(spec_.recurrent_width, 0.0) : h0.h;
  require(h.size() == spec_.recurrent_width, "Network::forward: hidden state width mismatch");
  for (std::size_t t = 0; t < steps; ++t) {
    compute_step(inputs.row(t), h, tape.cache.row(t), tape.raw.row(t));
    if (spec_.recurrent()) {
      const auto row = tape.cache.row(t);
      std::copy(row.begin() + static_cast<std::ptrdiff_t>(cache_.h_new),
                row.begin() + static_cast<std::ptrdiff_t>(cache_.h_new + spec_.recurrent_width), h.begin());
    }
  }
  tape.outputs = tape.raw;
  if (spec_.head == HeadKind::Softmax) {
    for (std::size_t t = 0; t < steps; ++t) softmax_inplace(tape.outputs.row(t));
  }
  tape.final_state.h = std::move(h);
  return tape;
}

std::vector<double> Network::step(std::span<const double> input, HiddenState& hidden) const {
  Matrix<double> one(1, spec_.input_dim);
  require(input.size() == spec_.input_dim, "Network::step: input dimension mismatch");
  std::copy(input.begin(), input.end(), one.row(0).begin());
  ForwardTape tape = forward(one, hidden);
  hidden = std::move(tape.final_state);
  const auto out = tape.outputs.row(0);
  return {out.begin(), out.end()};
}

void Network::backward(const ForwardTape& tape, const Matrix<double>& d_raw, std::span<double> grad,
                       std::size_t bptt_window) const {
  require(grad.size() == params_.size(), "Network::backward: gradient size mismatch");
  require(d_raw.rows() == tape.steps && d_raw.cols() == spec_.output_dim(), "Network::backward: d_raw shape mismatch");
  const double* p = params_.data();
  double* g = grad.data();
  const std::size_t hw = spec_.recurrent_width;
  const std::size_t feat = feature_dim();
  const std::size_t out = spec_.output_dim();
  const std::size_t gin = gru_input_dim();

  std::vector<double> dh_next(hw, 0.0);
  std::vector<double> d_feature(feat);
  std::vector<double> d_act;
  std::vector<double> dh(hw), dz(hw), dr(hw), dc(hw), drh(hw), rh(hw), dh_prev(hw);

  for (std::size_t t = tape.steps; t-- > 0;) {
    const auto row = tape.cache.row(t);
    const double* act = row.data();
    const double* dr_out = d_raw.row(t).data();
    const double* feature = spec_.recurrent() ? act + cache_.h_new : act + cache_.act.back();

    outer_add(g + off_.head_w, out, feat, dr_out, feature);
    for (std::size_t k = 0; k < out; ++k) g[off_.head_b + k] += dr_out[k];
    std::fill(d_feature.begin(), d_feature.end(), 0.0);
    matvec_t_add(p + off_.head_w, out, feat, dr_out, d_feature.data());

    d_act.assign(gin, 0.0);
    if (spec_.recurrent()) {
      const double* u = act + cache_.act.back();
      const double* hp = act + cache_.h_prev;
      const double* z = act + cache_.z;
      const double* r = act + cache_.r;
      const double* c = act + cache_.c;
      for (std::size_t k = 0; k < hw; ++k) {
        dh[k] = d_feature[k] + dh_next[k];
        const double dck = dh[k] * z[k];
        const double dzk = dh[k] * (c[k] - hp[k]);
        dh_prev[k] = dh[k] * (1.0 - z[k]);
        dc[k] = dck * (1.0 - c[k] * c[k]);
        dz[k] = dzk * z[k] * (1.0 - z[k]);
        rh[k] = r[k] * hp[k];
      }
      outer_add(g + off_.wh, hw, gin, dc.data(), u);
      outer_add(g + off_.uh, hw, hw, dc.data(), rh.data());
      for (std::size_t k = 0; k < hw; ++k) g[off_.bh + k] += dc[k];
      std::fill(drh.begin(), drh.end(), 0.0);
      matvec_t_add(p + off_.uh, hw, hw, dc.data(), drh.data());
      for (std::size_t k = 0; k < hw; ++k) {
        dh_prev[k] += drh[k] * r[k];
        dr[k] = drh[k] * hp[k] * r[k] * (1.0 - r[k]);
      }
      outer_add(g + off_.wz, hw, gin, dz.data(), u);
      outer_add(g + off_.uz, hw, hw, dz.data(), hp);
      outer_add(g + off_.wr, hw, gin, dr.data(), u);
      outer_add(g + off_.ur, hw, hw, dr.data(), hp);
      for (std::size_t k = 0; k < hw; ++k) {
        g[off_.bz + k] += dz[k];
        g[off_.br + k] += dr[k];
      }
      matvec_t_add(p + off_.wz, hw, gin, dz.data(), d_act.data());
      matvec_t_add(p + off_.wr, hw, gin, dr.data(), d_act.data());
      matvec_t_add(p + off_.wh, hw, gin, dc.data(), d_act.data());
      matvec_t_add(p + off_.uz, hw, hw, dz.data(), dh_prev.data());
      matvec_t_add(p + off_.ur, hw, hw, dr.data(), dh_prev.data());
      const bool cut = bptt_window > 0 && t % bptt_window == 0;
      if (cut) {
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
      } else {
        dh_next = dh_prev;
      }
    } else {
      std::copy(d_feature.begin(), d_feature.end(), d_act.begin());
    }

    for (std::size_t l = spec_.hidden_dims.size(); l-- > 0;) {
      const std::size_t h = spec_.hidden_dims[l];
      const std::size_t prev = l == 0 ? spec_.input_dim : spec_.hidden_dims[l - 1];
      const double* a_out = act + cache_.act[l + 1];
      const double* a_in = act + cache_.act[l];
      std::vector<double> dzl(h);
      for (std::size_t k = 0; k < h; ++k) dzl[k] = d_act[k] * (1.0 - a_out[k] * a_out[k]);
      outer_add(g + off_.dense_w[l], h, prev, dzl.data(), a_in);
      for (std::size_t k = 0; k < h; ++k) g[off_.dense_b[l] + k] += dzl[k];
      if (l > 0) {
        d_act.assign(prev, 0.0);
        matvec_t_add(p + off_.dense_w[l], h, prev, dzl.data(), d_act.data());
      }
    }
  }
}

double accumulate_gradient(const Network& net, const std::vector<Matrix<double>>& sequences,
                           const std::vector<SequenceLoss>& losses, std::span<double> grad, std::size_t bptt_window) {
  require(sequences.size() == losses.size(), "accumulate_gradient: one loss per sequence");
  double total = 0.0;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const ForwardTape tape = net.forward(sequences[s]);
    Matrix<double> d_raw(tape.steps, net.spec().output_dim());
    const double loss = losses[s](tape, d_raw);
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "non-finite loss " << loss << " on sequence " << s << " (" << tape.steps << " steps, "
         << net.size() << " parameters)";
      throw NumericalError(os.str());
    }
    total += loss;
    net.backward(tape, d_raw, grad, bptt_window);
  }
  return total;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s, double lr) {
  require(params.size() == grads.size(), "adam_step: shape mismatch");
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * grads[k];
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * grads[k] * grads[k];
    const double mhat = s.m[k] / c1;
    const double vhat = s.v[k] / c2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace specshare
