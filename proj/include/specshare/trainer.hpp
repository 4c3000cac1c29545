#pragma once

#include <cstdint>
#include <vector>

#include "specshare/agents.hpp"

namespace specshare {

struct TrainingSetup {
  Layout layout;
  EnvConfig env;
  LearnerConfig learner;
  int n_batch = 8;
  int episode_length = 2000;
  std::uint64_t seed = 0;
  std::uint64_t configuration_pool = 20000;
};

struct EpisodeRollout {
  EpisodeTrace trace;
  std::vector<BsRollout> per_bs;
};

struct IterationMetrics {
  int iteration = 0;
  double mean_cum_reward = 0.0;  // discounted with gamma, true rewards
  double sum_rate = 0.0;         // mean over episodes of sum_j X̄_j[L-1]
  double max_rate = 0.0;         // mean over episodes of max_j X̄_j[L-1]
  double loss_policy = 0.0;
  double loss_value_con = 0.0;
  double loss_value_eos = 0.0;
  double entropy = 0.0;
  double loss_q_con = 0.0;
  double loss_q_eos = 0.0;
  double epsilon = 0.0;
  std::size_t samples = 0;
  std::vector<double> episode_returns;
};

// Inputs of one BS for one episode, in slot order.
struct BsEpisodeData {
  Matrix<double> actor_in;
  Matrix<double> con_critic_in;
  Matrix<double> eos_in;
  std::vector<int> actions;
  std::vector<double> behaviour_prob;
  std::vector<double> rewards;
};

// Common rewards with the action-independent sum_j log X̄_j[-1] removed from
// slot 0, leaving sum_j r_j[0]. Only the training signal uses this.
std::vector<double> training_rewards(const EpisodeTrace& trace);
BsEpisodeData collect_bs_data(const EpisodeRollout& rollout, std::size_t bs, const AgentSet& agents);

// Targets for BS `bs` from the current critics.
GaeTargets gae_targets(const BsEpisodeData& data, const AgentSet& agents, std::size_t bs);
DqnLabels dqn_labels(const BsEpisodeData& data, const AgentSet& agents, std::size_t bs);

UeConfiguration training_configuration(const TrainingSetup& setup, std::uint64_t index);

// Fresh on-policy episodes for one iteration, generated in parallel over actors.
std::vector<EpisodeRollout> generate_rollouts(const TrainingSetup& setup, const AgentSet& agents, int iteration,
                                              ActMode mode, double epsilon);

IterationMetrics ppo_train_iteration(AgentSet& agents, const TrainingSetup& setup, int iteration);
IterationMetrics dqn_train_iteration(AgentSet& agents, const TrainingSetup& setup, int iteration);

class Trainer {
 public:
  explicit Trainer(TrainingSetup setup);
  Trainer(TrainingSetup setup, AgentSet agents, int completed_iterations);

  IterationMetrics run_iteration();

  const AgentSet& agents() const { return agents_; }
  AgentSet& agents() { return agents_; }
  const TrainingSetup& setup() const { return setup_; }
  int iterations_done() const { return done_; }

 private:
  TrainingSetup setup_;
  AgentSet agents_;
  int done_ = 0;
};

struct EvalEpisode {
  double cum_reward = 0.0;
  double sum_rate = 0.0;
  double max_rate = 0.0;
  EpisodeTrace trace;
};

// Greedy rollout: argmax probability for PPO, argmax Q for DQN.
EvalEpisode evaluate_greedy(const AgentSet& agents, const Layout& layout, const EnvConfig& env,
                            const UeConfiguration& ues, std::uint64_t channel_seed, int episode_length, double gamma);
EvalEpisode evaluate_policy(ContentionPolicy& policy, const Layout& layout, const EnvConfig& env,
                            const UeConfiguration& ues, std::uint64_t channel_seed, int episode_length, double gamma);

}  // namespace specshare
