#include "specshare/agents.hpp"

#include <algorithm>

namespace specshare {

std::string_view to_string(Algorithm a) { return a == Algorithm::Dqn ? "dqn" : "ppo"; }

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "dqn") return Algorithm::Dqn;
  if (s == "ppo") return Algorithm::Ppo;
  throw ConfigError("unknown algorithm: " + std::string(s));
}

std::string_view to_string(CriticMode m) { return m == CriticMode::Centralized ? "centralized" : "local"; }

CriticMode critic_mode_from_string(std::string_view s) {
  if (s == "centralized") return CriticMode::Centralized;
  if (s == "local") return CriticMode::Local;
  throw ConfigError("unknown critic mode: " + std::string(s));
}

double LearnerConfig::epsilon_at(int iteration) const {
  if (epsilon_decay_iterations <= 0) return epsilon_end;
  const double frac = std::clamp(static_cast<double>(iteration) / epsilon_decay_iterations, 0.0, 1.0);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

NetSpec actor_spec(const LearnerConfig& c, const AgentShape& s) {
  return {con_actor_dim(s.k), c.hidden_dims, c.recurrent_width,
          c.algorithm == Algorithm::Ppo ? HeadKind::Softmax : HeadKind::QVector, Action::kCount};
}

NetSpec con_critic_spec(const LearnerConfig& c, const AgentShape& s) {
  return {con_critic_dim(c.critic_mode, s.n_bs, s.k), c.hidden_dims, c.recurrent_width, HeadKind::Scalar,
          Action::kCount};
}

NetSpec eos_critic_spec(const LearnerConfig& c, const AgentShape& s) {
  // EOS inputs are memoryless, so the EOS critics are feed-forward.
  return {eos_critic_dim(c.critic_mode, s.n_bs), c.hidden_dims, 0, HeadKind::Scalar, Action::kCount};
}

namespace {

TrainableNet trainable(NetSpec spec, std::uint64_t seed) { return {Network(std::move(spec), seed), AdamState{}}; }

std::uint64_t net_seed(std::uint64_t seed, std::size_t bs, int which) {
  Rng r = make_stream(seed, "agent-init", bs * 8 + static_cast<std::size_t>(which));
  return r();
}

void build_critics(AgentSet& set, std::uint64_t seed) {
  for (std::size_t b = 0; b < set.agents.size(); ++b) {
    BsAgent& a = set.agents[b];
    if (set.config.algorithm == Algorithm::Ppo) {
      a.v_con = trainable(con_critic_spec(set.config, set.shape), net_seed(seed, b, 1));
      a.v_eos = trainable(eos_critic_spec(set.config, set.shape), net_seed(seed, b, 2));
    } else {
      a.q_eos = trainable(eos_critic_spec(set.config, set.shape), net_seed(seed, b, 4));
    }
  }
}

}  // namespace

const Network& AgentSet::actor(std::size_t bs) const {
  const BsAgent& a = agent(bs);
  return config.algorithm == Algorithm::Ppo ? a.pi_con->net : a.q_con->net;
}

AgentSet make_agents(const LearnerConfig& config, const AgentShape& shape, std::uint64_t seed) {
  require(shape.n_bs >= 1, "make_agents: need at least one BS");
  AgentSet set{config, shape, {}};
  set.agents.resize(config.share_weights ? 1 : shape.n_bs);
  for (std::size_t b = 0; b < set.agents.size(); ++b) {
    if (config.algorithm == Algorithm::Ppo) {
      set.agents[b].pi_con = trainable(actor_spec(config, shape), net_seed(seed, b, 0));
    } else {
      set.agents[b].q_con = trainable(actor_spec(config, shape), net_seed(seed, b, 3));
    }
  }
  build_critics(set, seed);
  return set;
}

AgentSet apply_dacc(AgentSet agents, CriticMode mode, std::uint64_t seed) {
  if (agents.config.critic_mode == mode && !agents.agents.empty()) {
    const BsAgent& a = agents.agents.front();
    const bool built = agents.config.algorithm == Algorithm::Ppo ? a.v_eos.has_value() : a.q_eos.has_value();
    if (built) return agents;
  }
  agents.config.critic_mode = mode;
  build_critics(agents, seed);
  return agents;
}

NetworkPolicy::NetworkPolicy(const AgentSet& agents, ActMode mode, std::uint64_t seed, double epsilon)
    : agents_(&agents), mode_(mode), epsilon_(epsilon), rng_(make_stream(seed, "actor-policy")) {}

void NetworkPolicy::begin_episode(std::size_t n_bs) {
  require(n_bs == agents_->shape.n_bs, "NetworkPolicy: layout size differs from the agents' shape");
  hidden_.clear();
  rollouts_.assign(n_bs, BsRollout{});
  for (std::size_t b = 0; b < n_bs; ++b) hidden_.push_back(agents_->actor(b).initial_state());
}

Action NetworkPolicy::decide(std::size_t bs, const ConObservation& obs) {
  const Network& net = agents_->actor(bs);
  const std::size_t k = agents_->shape.k;
  std::vector<double> x(con_actor_dim(k));
  encode_con_actor(obs, k, agents_->config.scaling, x);
  const std::vector<double> out = net.step(x, hidden_[bs]);

  int action = 0;
  double prob = 1.0;
  const auto argmax = [&] { return static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin()); };
  switch (mode_) {
    case ActMode::Sample: {
      require(net.spec().head == HeadKind::Softmax, "NetworkPolicy: sampling needs a softmax head");
      std::discrete_distribution<int> pick(out.begin(), out.end());
      action = pick(rng_);
      prob = out[static_cast<std::size_t>(action)];
      break;
    }
    case ActMode::Greedy:
      action = argmax();
      break;
    case ActMode::EpsilonGreedy: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng_) < epsilon_) {
        std::uniform_int_distribution<int> any(0, Action::kCount - 1);
        action = any(rng_);
      } else {
        action = argmax();
      }
      break;
    }
  }
  BsRollout& r = rollouts_[bs];
  r.actor_inputs.insert(r.actor_inputs.end(), x.begin(), x.end());
  r.actions.push_back(action);
  r.behaviour_prob.push_back(prob);
  return Action::from_code(action);
}

}  // namespace specshare
