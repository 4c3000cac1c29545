#include "specshare/neural_io.hpp"

#include <algorithm>

namespace specshare {

namespace {

std::string head_name(HeadKind h) {
  switch (h) {
    case HeadKind::Softmax:
      return "softmax";
    case HeadKind::Scalar:
      return "scalar";
    case HeadKind::QVector:
      return "qvector";
  }
  return "scalar";
}

HeadKind head_from(const std::string& s) {
  if (s == "softmax") return HeadKind::Softmax;
  if (s == "scalar") return HeadKind::Scalar;
  if (s == "qvector") return HeadKind::QVector;
  throw ConfigError("unknown network head: " + s);
}

}  // namespace

nlohmann::json to_json(const NetSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_dims", spec.hidden_dims},
          {"recurrent_width", spec.recurrent_width},
          {"head", head_name(spec.head)},
          {"n_actions", spec.n_actions}};
}

NetSpec net_spec_from_json(const nlohmann::json& j) {
  NetSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  s.recurrent_width = j.at("recurrent_width").get<std::size_t>();
  s.head = head_from(j.at("head").get<std::string>());
  s.n_actions = j.at("n_actions").get<std::size_t>();
  return s;
}

nlohmann::json to_json(const Network& net) {
  const auto p = net.params();
  return {{"spec", to_json(net.spec())}, {"params", std::vector<double>(p.begin(), p.end())}};
}

Network network_from_json(const nlohmann::json& j) {
  Network net(net_spec_from_json(j.at("spec")));
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.size()) throw ConfigError("checkpoint: parameter count does not match network shape");
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

nlohmann::json to_json(const AdamState& s) {
  return {{"m", s.m}, {"v", s.v}, {"t", s.t}, {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}};
}

AdamState adam_state_from_json(const nlohmann::json& j) {
  AdamState s;
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  s.t = j.at("t").get<std::uint64_t>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
  return s;
}

}  // namespace specshare
