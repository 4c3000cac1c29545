#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specshare/features.hpp"
#include "specshare/mac_sim.hpp"
#include "specshare/neural.hpp"
#include "specshare/rl_targets.hpp"

namespace specshare {

enum class Algorithm { Dqn, Ppo };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);
std::string_view to_string(CriticMode m);
CriticMode critic_mode_from_string(std::string_view s);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::Ppo;
  CriticMode critic_mode = CriticMode::Centralized;
  double gamma = 0.99;
  double lambda = 0.95;
  PpoCoefficients ppo;
  double learning_rate = 1e-3;
  int minibatches = 10;  // time windows, one optimizer step each, per single epoch
  std::size_t bptt_window = 0;  // 0 = backpropagate through the whole episode
  std::vector<std::size_t> hidden_dims = {64, 64};
  std::size_t recurrent_width = 32;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_iterations = 50;
  bool normalize_advantages = true;
  bool share_weights = false;
  FeatureScaling scaling;

  double epsilon_at(int iteration) const;
};

// Dimensions the networks are built for.
struct AgentShape {
  std::size_t n_bs = 0;
  std::size_t k = 0;  // energy entries per CON observation
};

struct TrainableNet {
  Network net;
  AdamState adam;
};

// Networks of one BS. PPO uses pi_con/v_con/v_eos, DQN uses q_con/q_eos.
struct BsAgent {
  std::optional<TrainableNet> pi_con;
  std::optional<TrainableNet> v_con;
  std::optional<TrainableNet> v_eos;
  std::optional<TrainableNet> q_con;
  std::optional<TrainableNet> q_eos;
};

struct AgentSet {
  LearnerConfig config;
  AgentShape shape;
  std::vector<BsAgent> agents;  // one per BS, or a single shared agent

  const BsAgent& agent(std::size_t bs) const { return agents[config.share_weights ? 0 : bs]; }
  BsAgent& agent(std::size_t bs) { return agents[config.share_weights ? 0 : bs]; }
  // The network that acts during generation.
  const Network& actor(std::size_t bs) const;
};

NetSpec actor_spec(const LearnerConfig& c, const AgentShape& s);
NetSpec con_critic_spec(const LearnerConfig& c, const AgentShape& s);
NetSpec eos_critic_spec(const LearnerConfig& c, const AgentShape& s);

AgentSet make_agents(const LearnerConfig& config, const AgentShape& shape, std::uint64_t seed);

// Rebuilds the critics (V_eos, V_con, Q_eos) for the requested input mode;
// actors are left untouched.
AgentSet apply_dacc(AgentSet agents, CriticMode mode, std::uint64_t seed);

enum class ActMode { Sample, Greedy, EpsilonGreedy };

// Per-BS actor inputs and decisions recorded during generation.
struct BsRollout {
  std::vector<double> actor_inputs;  // row-major, one row per slot
  std::vector<int> actions;
  std::vector<double> behaviour_prob;  // probability of the taken action
};

// Runs the actor networks inside the contention loop. Each BS keeps its own
// recurrent state; decide() sees nothing but that BS's ConObservation.
class NetworkPolicy : public ContentionPolicy {
 public:
  NetworkPolicy(const AgentSet& agents, ActMode mode, std::uint64_t seed, double epsilon = 0.0);

  void begin_episode(std::size_t n_bs) override;
  Action decide(std::size_t bs, const ConObservation& obs) override;

  const std::vector<BsRollout>& rollouts() const { return rollouts_; }

 private:
  const AgentSet* agents_;
  ActMode mode_;
  double epsilon_;
  Rng rng_;
  std::vector<HiddenState> hidden_;
  std::vector<BsRollout> rollouts_;
};

}  // namespace specshare
