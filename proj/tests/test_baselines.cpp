#include <cmath>

#include "doctest.h"
#include "specshare/baselines.hpp"

using namespace specshare;

namespace {

// Independent PF enumeration: Shannon surrogate, ties toward fewer
// transmitters and then the lexicographically smaller 0/1 vector.
std::vector<bool> oracle_pf(const std::vector<double>& xbar, const Matrix<double>& g, double w, double p, double noise,
                            double* metric_out = nullptr) {
  const std::size_t n = xbar.size();
  std::vector<bool> best;
  double best_metric = -1.0;
  for (std::uint64_t code = 0; code < (1ull << n); ++code) {
    std::vector<bool> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = (code >> (n - 1 - i)) & 1u;  // lexicographic enumeration
    double metric = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!a[j]) continue;
      double interf = noise;
      for (std::size_t i = 0; i < n; ++i)
        if (i != j && a[i]) interf += p * g(i, j);
      metric += w * std::log2(1.0 + p * g(j, j) / interf) / xbar[j];
    }
    const auto ones = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
    if (best.empty() || metric > best_metric || (metric == best_metric && ones(a) < ones(best))) {
      best = a;
      best_metric = metric;
    }
  }
  if (metric_out) *metric_out = best_metric;
  return best;
}

double oracle_score(int order, double sinr) {
  const ModScheme m = ModScheme::from_order(order);
  const double s = (1.0 - ser_analytic(m, sinr)) * std::log2(static_cast<double>(order));
  return s * s;
}

struct Slot {
  MacEnvironment env;
  std::vector<double> xbar;
};

Slot random_slot(std::uint64_t seed, int rows = 2, int cols = 2) {
  MacEnvironment env(inh_grid_layout(rows, cols, 20.0), EnvConfig{});
  env.reset(sample_configuration(env.layout(), seed), seed);
  UniformRandomPolicy warm(seed);
  for (int n = 0; n < 3; ++n) env.run_data_phase(env.run_contention_phase(warm));
  std::vector<double> x = env.state().xbar;
  return {std::move(env), std::move(x)};
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("ED decision examples") {
  const double e0 = dbm_to_watts(-72.0);
  CHECK(ed_decision({}, e0));
  const double at[] = {e0 / 2, e0 / 2};
  CHECK_FALSE(ed_decision(at, e0));
  const double exact[] = {e0};
  CHECK_FALSE(ed_decision(exact, e0));
  const double two[] = {dbm_to_watts(-75.0), dbm_to_watts(-75.0)};
  CHECK(watts_to_dbm(two[0] + two[1]) == doctest::Approx(-71.99).epsilon(1e-3));
  CHECK_FALSE(ed_decision(two, e0));
  const double one[] = {dbm_to_watts(-75.0)};
  CHECK(ed_decision(one, e0));
}

TEST_CASE("ED decision is monotone in added energy") {
  Rng rng = make_stream(3, "ed-monotone");
  std::uniform_real_distribution<double> dbm(-110.0, -50.0);
  const double e0 = dbm_to_watts(-72.0);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> e(static_cast<std::size_t>(t % 6));
    for (double& x : e) x = dbm_to_watts(dbm(rng));
    const bool before = ed_decision(e, e0);
    e.push_back(dbm_to_watts(dbm(rng)));
    if (!before) CHECK_FALSE(ed_decision(e, e0));
  }
}

TEST_CASE("default sweep spans -22 to -92 dBm in 5 dB steps") {
  const auto s = default_ed_sweep();
  REQUIRE(s.size() == 15);
  CHECK(s.front() == -22.0);
  CHECK(s.back() == doctest::Approx(-92.0));
  for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k - 1] - s[k] == doctest::Approx(5.0));
}

TEST_CASE("genie modulation examples") {
  CHECK(genie_modulation(0.0) == ModScheme::from_order(4));
  CHECK(genie_modulation(1e12) == ModScheme::from_order(256));
  int best = 4;
  for (int m : {8, 16, 32, 64, 128, 256})
    if (oracle_score(m, 100.0) > oracle_score(best, 100.0)) best = m;
  CHECK(genie_modulation(100.0).order() == best);
}

TEST_CASE("genie modulation matches squared-score argmax and is monotone") {
  int prev = 0;
  for (int k = 0; k < 10000; ++k) {
    const double sinr = db_to_linear(-10.0 + 50.0 * k / 9999.0);
    int best = 4;
    for (int m : {8, 16, 32, 64, 128, 256})
      if (oracle_score(m, sinr) > oracle_score(best, sinr)) best = m;
    const int got = genie_modulation(sinr).order();
    CHECK(got == best);
    CHECK(got >= prev);
    prev = got;
  }
}

TEST_CASE("centralized PF: one BS always transmits") {
  Slot s = random_slot(1, 1, 1);
  const EnvConfig& c = s.env.config();
  CHECK(centralized_pf(s.xbar, s.env.state().channel, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w()) ==
        std::vector<bool>{true});
}

TEST_CASE("centralized PF: zero cross gains turn everybody on") {
  Slot s = random_slot(2, 1, 2);
  ChannelRealization ch = s.env.state().channel;
  ch.access.gain(0, 1) = 0.0;
  ch.access.gain(1, 0) = 0.0;
  const EnvConfig& c = s.env.config();
  CHECK(centralized_pf(s.xbar, ch, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w()) == std::vector<bool>{true, true});
}

TEST_CASE("centralized PF ties go to fewer transmitters") {
  Slot s = random_slot(3, 1, 3);
  ChannelRealization ch = s.env.state().channel;
  for (std::size_t i = 0; i < 3; ++i) {
    ch.access.gain(i, 2) = 0.0;
    ch.access.gain(2, i) = 0.0;
  }
  const EnvConfig& c = s.env.config();
  const auto a = centralized_pf(s.xbar, ch, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w());
  CHECK_FALSE(a[2]);
}

TEST_CASE("lexicographic tie-break prefers the vector with the earlier zero") {
  using kernels::PfSolution;
  CHECK(kernels::pf_better(PfSolution{0b10, 1.0}, PfSolution{0b01, 1.0}));
  CHECK_FALSE(kernels::pf_better(PfSolution{0b01, 1.0}, PfSolution{0b10, 1.0}));
  CHECK(kernels::pf_better(PfSolution{0b1, 1.0}, PfSolution{0b11, 1.0}));
  CHECK(kernels::pf_better(PfSolution{0b11, 2.0}, PfSolution{0b1, 1.0}));
}

TEST_CASE("centralized PF matches an independent enumeration and dominates ED") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Slot s = random_slot(seed);
    const auto& ch = s.env.state().channel;
    const EnvConfig& c = s.env.config();
    double oracle_metric = 0.0;
    const auto want = oracle_pf(s.xbar, ch.access.gain, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w(), &oracle_metric);
    const auto got = centralized_pf(s.xbar, ch, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w());
    CHECK(got == want);
    const double metric = pf_slot_metric(got, s.xbar, ch, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w());
    CHECK(metric == oracle_metric);
    for (double t : default_ed_sweep()) {
      MacEnvironment probe = s.env;
      EdPolicy ed(t);
      const auto acts = probe.run_contention_phase(ed);
      std::vector<bool> on(acts.size());
      for (std::size_t i = 0; i < acts.size(); ++i) on[i] = acts[i].transmits();
      CHECK(metric >= pf_slot_metric(on, s.xbar, ch, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w()));
    }
  }
}

TEST_CASE("PF search: serial and OpenMP twins agree") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Slot s = random_slot(seed, 3, 4);
    const EnvConfig& c = s.env.config();
    const kernels::PfProblem p{s.xbar, &s.env.state().channel.access.gain, c.bandwidth_hz, c.tx_power_w(),
                               c.noise_power_w()};
    const auto a = kernels::pf_search_serial(p);
    const auto b = kernels::pf_search_omp(p);
    CHECK(a.mask == b.mask);
    CHECK(a.metric == b.metric);
  }
}

TEST_CASE("centralized PF refuses oversized problems without force") {
  const Layout big = inh_grid_layout(3, 7);
  MacEnvironment env(big, EnvConfig{});
  env.reset(sample_configuration(big, 1), 1);
  const EnvConfig& c = env.config();
  CHECK_THROWS_AS(centralized_pf(env.state().xbar, env.state().channel, c.bandwidth_hz, c.tx_power_w(), c.noise_power_w()),
                  CapabilityError);
}

TEST_CASE("ED policy transmits exactly when the sensed total is below threshold") {
  MacEnvironment env(inh_grid_layout(2, 3), EnvConfig{});
  env.reset(sample_configuration(env.layout(), 4), 4);
  for (double t : {-30.0, -60.0, -72.0, -90.0}) {
    MacEnvironment probe = env;
    EdPolicy ed(t);
    const auto acts = probe.run_contention_phase(ed);
    for (std::size_t i = 0; i < acts.size(); ++i)
      CHECK(acts[i].transmits() == (probe.last_observations()[i].total_energy_w < dbm_to_watts(t)));
  }
}

TEST_CASE("adaptive ED") {
  const Layout layout = inh_grid_layout(1, 3, 20.0);
  const UeConfiguration cfg = sample_configuration(layout, 5);
  AdaptiveEdRequest req;
  req.layout = &layout;
  req.configuration = &cfg;
  req.thresholds_dbm = default_ed_sweep();
  req.episodes_per_threshold = 2;
  req.episode_length = 60;
  req.seeds = {1, 2};

  SUBCASE("matches a brute-force sweep and dominates every threshold") {
    const AdaptiveEdResult r = adaptive_ed(req);
    double best = -1e300, best_t = 0.0;
    for (double t : req.thresholds_dbm) {
      double total = 0.0;
      for (int e = 0; e < 2; ++e) {
        MacEnvironment env(layout, req.env);
        env.reset(cfg, req.seeds[static_cast<std::size_t>(e)]);
        EdPolicy ed(t);
        total += discounted_return(generate_episode(env, ed, req.episode_length), req.gamma);
      }
      if (total / 2 > best) {
        best = total / 2;
        best_t = t;
      }
    }
    CHECK(r.best_threshold_dbm == best_t);
    CHECK(r.best_return == doctest::Approx(best).epsilon(1e-14));
    for (const auto& p : r.sweep) CHECK(r.best_return >= p.mean_return);
    CHECK(r.best_threshold_dbm <= -22.0);
    CHECK(r.best_threshold_dbm >= -92.0);
    const AdaptiveEdResult serial = kernels::adaptive_ed_serial(req);
    CHECK(serial.best_threshold_dbm == r.best_threshold_dbm);
    CHECK(serial.best_return == r.best_return);
  }

  SUBCASE("single threshold is returned as is") {
    req.thresholds_dbm = {-61.0};
    CHECK(adaptive_ed(req).best_threshold_dbm == -61.0);
  }

  SUBCASE("an isolated BS is indifferent to the threshold") {
    const Layout one = inh_grid_layout(1, 1);
    const UeConfiguration c1 = sample_configuration(one, 1);
    req.layout = &one;
    req.configuration = &c1;
    const AdaptiveEdResult r = adaptive_ed(req);
    for (const auto& p : r.sweep) CHECK(p.mean_return == r.sweep.front().mean_return);
    CHECK(r.best_threshold_dbm == req.thresholds_dbm.front());
  }

  SUBCASE("empty sweep is a contract violation") {
    req.thresholds_dbm.clear();
    CHECK_THROWS_AS(adaptive_ed(req), ContractViolation);
  }
}

}
