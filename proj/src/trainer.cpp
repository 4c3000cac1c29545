#include "specshare/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "specshare/parallel.hpp"

namespace specshare {

namespace {

std::vector<double> column(const Matrix<double>& m, std::size_t c = 0) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
  return out;
}

void check_finite(double v, const char* what, int iteration, std::size_t agent) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << what << " is not finite (" << v << ") at iteration " << iteration << ", agent " << agent;
  throw NumericalError(os.str());
}

// BSs whose data feed agent `a`.
std::vector<std::size_t> bs_of_agent(const AgentSet& agents, std::size_t a) {
  std::vector<std::size_t> out;
  if (agents.config.share_weights) {
    out.resize(agents.shape.n_bs);
    std::iota(out.begin(), out.end(), std::size_t{0});
  } else {
    out.push_back(a);
  }
  return out;
}

struct Item {
  std::size_t bs;
  BsEpisodeData data;
};

std::vector<Item> gather(const std::vector<EpisodeRollout>& rollouts, const AgentSet& agents, std::size_t a) {
  std::vector<Item> items;
  for (std::size_t bs : bs_of_agent(agents, a)) {
    for (const auto& r : rollouts) items.push_back({bs, collect_bs_data(r, bs, agents)});
  }
  return items;
}

// Contiguous split of [0, n) into at most `m` non-empty windows.
std::vector<std::pair<std::size_t, std::size_t>> split(std::size_t n, int m) {
  const std::size_t groups = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 1)), 1, std::max<std::size_t>(n, 1));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t g = 0; g < groups; ++g) out.emplace_back(g * n / groups, (g + 1) * n / groups);
  return out;
}

Matrix<double> slice_rows(const Matrix<double>& m, std::size_t lo, std::size_t hi) {
  Matrix<double> out(hi - lo, m.cols());
  for (std::size_t r = lo; r < hi; ++r) std::copy(m.row(r).begin(), m.row(r).end(), out.row(r - lo).begin());
  return out;
}

// Recurrent state entering each window, from the parameters before the update.
std::vector<HiddenState> window_states(const Network& net, const Matrix<double>& in,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& windows) {
  std::vector<HiddenState> out;
  HiddenState h = net.initial_state();
  for (const auto& [lo, hi] : windows) {
    out.push_back(h);
    if (net.spec().recurrent()) h = net.forward(slice_rows(in, lo, hi), h).final_state;
  }
  return out;
}

std::size_t episode_length(const std::vector<Item>& items) {
  const std::size_t L = items.front().data.actions.size();
  for (const auto& it : items) require(it.data.actions.size() == L, "trainer: episodes of unequal length");
  return L;
}

void adam(TrainableNet& t, const std::vector<double>& grad, double lr) { adam_step(t.net.params(), grad, t.adam, lr); }

Matrix<double> as_column(std::span<const double> v) {
  Matrix<double> m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

template <class T>
std::span<const T> window(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  return std::span<const T>(v).subspan(lo, hi - lo);
}

struct AgentLoss {
  PpoLossTerms ppo;
  double q_con = 0.0;
  double q_eos = 0.0;
};

// One epoch over all items, split in time into `minibatches` windows with one
// optimizer step each.
AgentLoss ppo_update(AgentSet& agents, std::size_t a, std::vector<Item>& items, int iteration) {
  const LearnerConfig& c = agents.config;
  std::vector<GaeTargets> targets;
  targets.reserve(items.size());
  for (const auto& it : items) targets.push_back(gae_targets(it.data, agents, it.bs));

  if (c.normalize_advantages) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& t : targets)
      for (double v : t.advantage_con) sum += v, sq += v * v, ++n;
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(std::max(sq / static_cast<double>(n) - mean * mean, 0.0)) + 1e-8;
    for (auto& t : targets)
      for (double& v : t.advantage_con) v = (v - mean) / sd;
  }

  BsAgent& agent = agents.agents[a];
  const auto windows = split(episode_length(items), c.minibatches);
  std::vector<std::vector<HiddenState>> h_pi, h_vc;
  for (const auto& it : items) {
    h_pi.push_back(window_states(agent.pi_con->net, it.data.actor_in, windows));
    h_vc.push_back(window_states(agent.v_con->net, it.data.con_critic_in, windows));
  }

  AgentLoss report;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto [lo, hi] = windows[w];
    const double normalizer = static_cast<double>(items.size() * (hi - lo));
    std::vector<double> g_pi(agent.pi_con->net.size(), 0.0);
    std::vector<double> g_vc(agent.v_con->net.size(), 0.0);
    std::vector<double> g_ve(agent.v_eos->net.size(), 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const BsEpisodeData& d = items[i].data;
      const GaeTargets& t = targets[i];
      const ForwardTape pi = agent.pi_con->net.forward(slice_rows(d.actor_in, lo, hi), h_pi[i][w]);
      const ForwardTape vc = agent.v_con->net.forward(slice_rows(d.con_critic_in, lo, hi), h_vc[i][w]);
      const ForwardTape ve = agent.v_eos->net.forward(slice_rows(d.eos_in, lo, hi));
      const std::vector<double> v_con = column(vc.outputs);
      const std::vector<double> v_eos = column(ve.outputs);
      PpoBatch batch{&pi.raw,
                     window(d.actions, lo, hi),
                     window(d.behaviour_prob, lo, hi),
                     window(t.advantage_con, lo, hi),
                     v_con,
                     window(t.target_con, lo, hi),
                     v_eos,
                     window(t.target_eos, lo, hi)};
      PpoGradients grads;
      const PpoLossTerms terms = ppo_loss(batch, c.ppo, normalizer, &grads);
      check_finite(terms.total(c.ppo), "PPO loss", iteration, a);
      const double share = 1.0 / static_cast<double>(windows.size());
      report.ppo.policy += share * terms.policy;
      report.ppo.value_con += share * terms.value_con;
      report.ppo.value_eos += share * terms.value_eos;
      report.ppo.entropy += share * terms.entropy;
      agent.pi_con->net.backward(pi, grads.d_logits, g_pi, c.bptt_window);
      agent.v_con->net.backward(vc, as_column(grads.d_v_con), g_vc, c.bptt_window);
      agent.v_eos->net.backward(ve, as_column(grads.d_v_eos), g_ve);
    }
    adam(*agent.pi_con, g_pi, c.learning_rate);
    adam(*agent.v_con, g_vc, c.learning_rate);
    adam(*agent.v_eos, g_ve, c.learning_rate);
  }
  return report;
}

AgentLoss dqn_update(AgentSet& agents, std::size_t a, std::vector<Item>& items, int iteration) {
  const LearnerConfig& c = agents.config;
  std::vector<DqnLabels> labels;
  labels.reserve(items.size());
  for (const auto& it : items) labels.push_back(dqn_labels(it.data, agents, it.bs));

  BsAgent& agent = agents.agents[a];
  const auto windows = split(episode_length(items), c.minibatches);
  std::vector<std::vector<HiddenState>> h_qc;
  for (const auto& it : items) h_qc.push_back(window_states(agent.q_con->net, it.data.actor_in, windows));

  AgentLoss report;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto [lo, hi] = windows[w];
    const double normalizer = static_cast<double>(items.size() * (hi - lo));
    std::vector<double> g_qc(agent.q_con->net.size(), 0.0);
    std::vector<double> g_qe(agent.q_eos->net.size(), 0.0);
    double loss_con = 0.0, loss_eos = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const BsEpisodeData& d = items[i].data;
      const DqnLabels& y = labels[i];
      const ForwardTape qc = agent.q_con->net.forward(slice_rows(d.actor_in, lo, hi), h_qc[i][w]);
      const ForwardTape qe = agent.q_eos->net.forward(slice_rows(d.eos_in, lo, hi));
      Matrix<double> d_qc(qc.raw.rows(), qc.raw.cols());
      Matrix<double> d_qe(qe.raw.rows(), 1);
      for (std::size_t n = lo; n < hi; ++n) {
        const auto act = static_cast<std::size_t>(d.actions[n]);
        const double ec = qc.raw(n - lo, act) - y.con[n];
        const double ee = qe.raw(n - lo, 0) - y.eos[n];
        loss_con += ec * ec / normalizer;
        loss_eos += ee * ee / normalizer;
        d_qc(n - lo, act) = 2.0 * ec / normalizer;
        d_qe(n - lo, 0) = 2.0 * ee / normalizer;
      }
      check_finite(loss_con + loss_eos, "DQN loss", iteration, a);
      agent.q_con->net.backward(qc, d_qc, g_qc, c.bptt_window);
      agent.q_eos->net.backward(qe, d_qe, g_qe);
    }
    adam(*agent.q_con, g_qc, c.learning_rate);
    adam(*agent.q_eos, g_qe, c.learning_rate);
    report.q_con += loss_con / static_cast<double>(windows.size());
    report.q_eos += loss_eos / static_cast<double>(windows.size());
  }
  return report;
}

IterationMetrics summarize(const std::vector<EpisodeRollout>& rollouts, const TrainingSetup& setup, int iteration) {
  IterationMetrics m;
  m.iteration = iteration;
  for (const auto& r : rollouts) {
    const double ret = discounted_return(r.trace, setup.learner.gamma);
    m.episode_returns.push_back(ret);
    m.mean_cum_reward += ret;
    const auto& x = r.trace.final_xbar;
    m.sum_rate += std::accumulate(x.begin(), x.end(), 0.0);
    m.max_rate += *std::max_element(x.begin(), x.end());
    m.samples += r.trace.slots.size();
  }
  const double n = static_cast<double>(rollouts.size());
  m.mean_cum_reward /= n;
  m.sum_rate /= n;
  m.max_rate /= n;
  return m;
}

template <class Update>
IterationMetrics train_iteration(AgentSet& agents, const TrainingSetup& setup, int iteration, ActMode mode,
                                 double epsilon, Update update) {
  std::vector<EpisodeRollout> rollouts = generate_rollouts(setup, agents, iteration, mode, epsilon);
  IterationMetrics m = summarize(rollouts, setup, iteration);
  m.epsilon = epsilon;

  std::vector<AgentLoss> losses(agents.agents.size());
  parallel_for(agents.agents.size(), [&](std::size_t a) {
    std::vector<Item> items = gather(rollouts, agents, a);
    losses[a] = update(agents, a, items, iteration);
  });
  const double n = static_cast<double>(losses.size());
  for (const auto& l : losses) {
    m.loss_policy += l.ppo.policy / n;
    m.loss_value_con += l.ppo.value_con / n;
    m.loss_value_eos += l.ppo.value_eos / n;
    m.entropy += l.ppo.entropy / n;
    m.loss_q_con += l.q_con / n;
    m.loss_q_eos += l.q_eos / n;
  }
  return m;
}

}  // namespace

std::vector<double> training_rewards(const EpisodeTrace& trace) {
  std::vector<double> r(trace.slots.size());
  for (std::size_t n = 0; n < r.size(); ++n) r[n] = trace.slots[n].reward;
  if (!r.empty()) {
    for (double x : trace.warmup_xbar) r[0] -= std::log(x);
  }
  return r;
}

BsEpisodeData collect_bs_data(const EpisodeRollout& rollout, std::size_t bs, const AgentSet& agents) {
  const EpisodeTrace& trace = rollout.trace;
  const BsRollout& br = rollout.per_bs.at(bs);
  const std::size_t L = trace.slots.size();
  const std::size_t n_bs = agents.shape.n_bs;
  const std::size_t k = agents.shape.k;
  const CriticMode mode = agents.config.critic_mode;
  const FeatureScaling& s = agents.config.scaling;
  require(br.actions.size() == L, "collect_bs_data: rollout and trace lengths differ");

  BsEpisodeData d;
  const std::size_t ad = con_actor_dim(k);
  d.actor_in = Matrix<double>(L, ad);
  std::copy(br.actor_inputs.begin(), br.actor_inputs.end(), d.actor_in.data().begin());
  d.con_critic_in = Matrix<double>(L, con_critic_dim(mode, n_bs, k));
  d.eos_in = Matrix<double>(L, eos_critic_dim(mode, n_bs));
  for (std::size_t n = 0; n < L; ++n) {
    const SlotRecord& rec = trace.slots[n];
    encode_con_critic(mode, rec.con[bs], rec.global_eos, k, s, d.con_critic_in.row(n));
    encode_eos_critic(mode, rec.con[bs], rec.global_eos, s, d.eos_in.row(n));
  }
  d.actions = br.actions;
  d.behaviour_prob = br.behaviour_prob;
  d.rewards = training_rewards(trace);
  return d;
}

GaeTargets gae_targets(const BsEpisodeData& data, const AgentSet& agents, std::size_t bs) {
  const BsAgent& a = agents.agent(bs);
  require(a.v_con && a.v_eos, "gae_targets: PPO critics are missing");
  const std::vector<double> v_con = column(a.v_con->net.forward(data.con_critic_in).outputs);
  const std::vector<double> v_eos = column(a.v_eos->net.forward(data.eos_in).outputs);
  return alternating_gae(data.rewards, v_eos, v_con, agents.config.gamma, agents.config.lambda);
}

DqnLabels dqn_labels(const BsEpisodeData& data, const AgentSet& agents, std::size_t bs) {
  const BsAgent& a = agents.agent(bs);
  require(a.q_con && a.q_eos, "dqn_labels: Q networks are missing");
  const ForwardTape qc = a.q_con->net.forward(data.actor_in);
  const std::vector<double> q_eos = column(a.q_eos->net.forward(data.eos_in).outputs);
  return dqn_labels(data.rewards, qc.outputs, q_eos, agents.config.gamma);
}

UeConfiguration training_configuration(const TrainingSetup& setup, std::uint64_t index) {
  const std::uint64_t pool = std::max<std::uint64_t>(setup.configuration_pool, 1);
  Rng rng = make_stream(setup.seed, "train-configuration", index % pool);
  return sample_configuration(setup.layout, rng);
}

std::vector<EpisodeRollout> generate_rollouts(const TrainingSetup& setup, const AgentSet& agents, int iteration,
                                              ActMode mode, double epsilon) {
  require(setup.n_batch >= 1, "generate_rollouts: N_batch must be at least 1");
  require(setup.episode_length >= 1, "generate_rollouts: L must be at least 1");
  const auto nb = static_cast<std::size_t>(setup.n_batch);
  std::vector<EpisodeRollout> out(nb);
  parallel_for(nb, [&](std::size_t a) {
    const std::uint64_t index = static_cast<std::uint64_t>(iteration) * nb + a;
    Rng pick = make_stream(setup.seed, "train-pick", index);
    const UeConfiguration ues = training_configuration(setup, pick());
    const std::uint64_t channel_seed = make_stream(setup.seed, "train-channel", index)();
    MacEnvironment env(setup.layout, setup.env);
    env.reset(ues, channel_seed);
    NetworkPolicy policy(agents, mode, make_stream(setup.seed, "train-actor", index)(), epsilon);
    out[a].trace = generate_episode(env, policy, setup.episode_length);
    out[a].per_bs = policy.rollouts();
  });
  return out;
}

IterationMetrics ppo_train_iteration(AgentSet& agents, const TrainingSetup& setup, int iteration) {
  require(agents.config.algorithm == Algorithm::Ppo, "ppo_train_iteration: agents are not PPO agents");
  return train_iteration(agents, setup, iteration, ActMode::Sample, 0.0, ppo_update);
}

IterationMetrics dqn_train_iteration(AgentSet& agents, const TrainingSetup& setup, int iteration) {
  require(agents.config.algorithm == Algorithm::Dqn, "dqn_train_iteration: agents are not DQN agents");
  return train_iteration(agents, setup, iteration, ActMode::EpsilonGreedy, agents.config.epsilon_at(iteration),
                         dqn_update);
}

namespace {
AgentShape shape_for(const TrainingSetup& s) {
  return {s.layout.n_bs(), s.env.energy_slots(s.layout.n_bs())};
}
}  // namespace

Trainer::Trainer(TrainingSetup setup)
    : setup_(std::move(setup)), agents_(make_agents(setup_.learner, shape_for(setup_), setup_.seed)) {}

Trainer::Trainer(TrainingSetup setup, AgentSet agents, int completed_iterations)
    : setup_(std::move(setup)), agents_(std::move(agents)), done_(completed_iterations) {
  require(agents_.shape.n_bs == setup_.layout.n_bs(), "Trainer: agents and layout disagree on N");
}

IterationMetrics Trainer::run_iteration() {
  IterationMetrics m = agents_.config.algorithm == Algorithm::Ppo ? ppo_train_iteration(agents_, setup_, done_)
                                                                  : dqn_train_iteration(agents_, setup_, done_);
  m.iteration = ++done_;  // iterations completed so far
  return m;
}

EvalEpisode evaluate_policy(ContentionPolicy& policy, const Layout& layout, const EnvConfig& env,
                            const UeConfiguration& ues, std::uint64_t channel_seed, int episode_length, double gamma) {
  MacEnvironment e(layout, env);
  e.reset(ues, channel_seed);
  EvalEpisode out;
  out.trace = generate_episode(e, policy, episode_length);
  out.cum_reward = discounted_return(out.trace, gamma);
  const auto& x = out.trace.final_xbar;
  out.sum_rate = std::accumulate(x.begin(), x.end(), 0.0);
  out.max_rate = *std::max_element(x.begin(), x.end());
  return out;
}

EvalEpisode evaluate_greedy(const AgentSet& agents, const Layout& layout, const EnvConfig& env,
                            const UeConfiguration& ues, std::uint64_t channel_seed, int episode_length, double gamma) {
  NetworkPolicy policy(agents, ActMode::Greedy, channel_seed);
  return evaluate_policy(policy, layout, env, ues, channel_seed, episode_length, gamma);
}

}  // namespace specshare
