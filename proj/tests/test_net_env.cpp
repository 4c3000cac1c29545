#include <cmath>
#include <complex>

#include "doctest.h"
#include "specshare/net_env.hpp"

using namespace specshare;

namespace {

// Independent evaluation of the 38.901 closed forms used as oracles below.
double oracle_inh_los(double d3, double fc) { return 32.4 + 17.3 * std::log10(d3) + 20.0 * std::log10(fc); }

double oracle_umi_los(double d2, double h_bs, double h_ut, double fc) {
  const double c = 3.0e8;
  const double dbp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc * 1.0e9 / c;
  const double d3 = std::sqrt(d2 * d2 + (h_bs - h_ut) * (h_bs - h_ut));
  if (d2 <= dbp) return 32.4 + 21.0 * std::log10(d3) + 20.0 * std::log10(fc);
  return 32.4 + 40.0 * std::log10(d3) + 20.0 * std::log10(fc) -
         9.5 * std::log10(dbp * dbp + (h_bs - h_ut) * (h_bs - h_ut));
}

double oracle_umi_plos(double d2) {
  if (d2 <= 18.0) return 1.0;
  return 18.0 / d2 + std::exp(-d2 / 36.0) * (1.0 - 18.0 / d2);
}

}  // namespace

TEST_SUITE("net_env") {

TEST_CASE("standard layouts") {
  const Layout inh = generate_layout(Scenario::InhOffice);
  CHECK(inh.n_bs() == 12);
  CHECK(inh.bs_height == doctest::Approx(3.0));
  for (const auto& p : inh.bs_positions) CHECK(p.z == doctest::Approx(3.0));
  CHECK(inh.x_max - inh.x_min == doctest::Approx(120.0));
  CHECK(inh.y_max - inh.y_min == doctest::Approx(50.0));

  const Layout umi = generate_layout(Scenario::UmiStreetCanyon);
  CHECK(umi.n_bs() == 19);
  CHECK(umi.bs_height == doctest::Approx(10.0));
}

TEST_CASE("UMi center site has six nearest neighbours at the inter-site distance") {
  for (double d : {200.0, 57.0}) {
    const Layout umi = generate_layout(Scenario::UmiStreetCanyon, d);
    const Vec3& c = umi.bs_positions[0];
    CHECK(c.x == doctest::Approx(0.0));
    CHECK(c.y == doctest::Approx(0.0));
    int at_d = 0;
    double nearest = 1e300;
    for (std::size_t i = 1; i < umi.n_bs(); ++i) {
      const double r = distance_2d(c, umi.bs_positions[i]);
      nearest = std::min(nearest, r);
      if (std::abs(r - d) < 1e-9 * d) ++at_d;
    }
    CHECK(at_d == 6);
    CHECK(nearest == doctest::Approx(d));
  }
}

TEST_CASE("bad layout arguments are configuration errors") {
  CHECK_THROWS_AS(scenario_from_string("RMa"), ConfigError);
  CHECK_THROWS_AS(inh_grid_layout(0, 2), ConfigError);
  CHECK_THROWS_AS(umi_hex_layout(1, -5.0), ConfigError);
  CHECK(scenario_from_string(to_string(Scenario::UmiStreetCanyon)) == Scenario::UmiStreetCanyon);
}

TEST_CASE("configuration sampling is seeded") {
  const Layout inh = generate_layout(Scenario::InhOffice);
  const UeConfiguration a = sample_configuration(inh, 7);
  const UeConfiguration b = sample_configuration(inh, 7);
  const UeConfiguration c = sample_configuration(inh, 8);
  CHECK(a.ue_positions == b.ue_positions);
  CHECK(a.ue_positions != c.ue_positions);
  CHECK(a.ue_positions.size() == 12);
}

TEST_CASE("sampled UEs stay in bounds, in their own cell, and see finite positive gains") {
  for (Scenario s : {Scenario::InhOffice, Scenario::UmiStreetCanyon}) {
    const Layout layout = generate_layout(s);
    const int draws = s == Scenario::InhOffice ? 10000 : 2000;
    bool ok_bounds = true, ok_cell = true, ok_gain = true;
    for (int k = 0; k < draws; ++k) {
      const UeConfiguration cfg = sample_configuration(layout, static_cast<std::uint64_t>(k));
      for (std::size_t j = 0; j < cfg.ue_positions.size(); ++j) {
        const Vec3& u = cfg.ue_positions[j];
        ok_bounds = ok_bounds && u.x >= layout.x_min && u.x <= layout.x_max && u.y >= layout.y_min &&
                    u.y <= layout.y_max && layout.contains(u.x, u.y);
        ok_cell = ok_cell && layout.nearest_bs(u.x, u.y) == j;
      }
      Rng rng = make_stream(static_cast<std::uint64_t>(k), "test-channel");
      const ChannelRealization ch = realize_channel(layout, cfg, ChannelParams{}, rng);
      for (double g : ch.access.gain.data()) ok_gain = ok_gain && std::isfinite(g) && g > 0.0;
    }
    CHECK(ok_bounds);
    CHECK(ok_cell);
    CHECK(ok_gain);
  }
}

TEST_CASE("InH LOS pathloss at 10 m matches the closed form") {
  const Vec3 tx{0.0, 0.0, 3.0};
  const Vec3 rx{10.0, 0.0, 1.0};
  const Pathloss pl = pathloss_db(Scenario::InhOffice, tx, rx, 6.0, true);
  CHECK_FALSE(pl.clamped);
  CHECK(pl.db == doctest::Approx(oracle_inh_los(std::sqrt(104.0), 6.0)).epsilon(1e-12));
}

TEST_CASE("UMi LOS pathloss on both sides of the breakpoint") {
  for (double d : {50.0, 200.0, 500.0, 900.0}) {
    const Pathloss pl = pathloss_db(Scenario::UmiStreetCanyon, {0, 0, 10.0}, {d, 0, 1.5}, 6.0, true);
    CHECK(pl.db == doctest::Approx(oracle_umi_los(d, 10.0, 1.5, 6.0)).epsilon(1e-12));
  }
}

TEST_CASE("pathloss: NLOS dominates LOS and grows with distance") {
  for (Scenario s : {Scenario::InhOffice, Scenario::UmiStreetCanyon}) {
    const double hb = s == Scenario::InhOffice ? 3.0 : 10.0;
    const double hu = s == Scenario::InhOffice ? 1.0 : 1.5;
    for (double d = 2.0; d < 2000.0; d *= 1.7) {
      const Pathloss los = pathloss_db(s, {0, 0, hb}, {d, 0, hu}, 6.0, true);
      const Pathloss nlos = pathloss_db(s, {0, 0, hb}, {d, 0, hu}, 6.0, false);
      const Pathloss far = pathloss_db(s, {0, 0, hb}, {2 * d, 0, hu}, 6.0, true);
      CHECK(std::isfinite(los.db));
      CHECK(nlos.db >= los.db);
      if (!los.clamped) CHECK(far.db > los.db);
    }
  }
}

TEST_CASE("pathloss clamps below the validity range") {
  const Pathloss pl = pathloss_db(Scenario::UmiStreetCanyon, {0, 0, 10}, {3, 0, 1.5}, 6.0, true);
  CHECK(pl.clamped);
  CHECK(pl.db == doctest::Approx(oracle_umi_los(10.0, 10.0, 1.5, 6.0)));
}

TEST_CASE("LOS probability") {
  CHECK(los_probability(Scenario::InhOffice, 0.0) == 1.0);
  CHECK(los_probability(Scenario::UmiStreetCanyon, 0.0) == 1.0);
  CHECK(los_probability(Scenario::UmiStreetCanyon, 18.0) == doctest::Approx(oracle_umi_plos(18.0)));
  CHECK(los_probability(Scenario::UmiStreetCanyon, 60.0) == doctest::Approx(oracle_umi_plos(60.0)).epsilon(1e-12));
  CHECK(los_probability(Scenario::InhOffice, 3.0) == doctest::Approx(std::exp(-1.8 / 4.7)));
  CHECK(los_probability(Scenario::InhOffice, 20.0) == doctest::Approx(0.32 * std::exp(-13.5 / 32.6)));
  for (Scenario s : {Scenario::InhOffice, Scenario::UmiStreetCanyon}) {
    double prev = 1.0;
    for (double d = 0.0; d < 500.0; d += 0.25) {
      const double p = los_probability(s, d);
      CHECK(p >= 0.0);
      CHECK(p <= prev + 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("channel realization is deterministic") {
  const Layout layout = generate_layout(Scenario::InhOffice);
  const UeConfiguration cfg = sample_configuration(layout, 3);
  Rng r1 = make_stream(11, "ch");
  Rng r2 = make_stream(11, "ch");
  ChannelRealization a = realize_channel(layout, cfg, {}, r1);
  ChannelRealization b = realize_channel(layout, cfg, {}, r2);
  for (int n = 0; n < 20; ++n) {
    CHECK(a.access.gain == b.access.gain);
    CHECK(a.sensing.gain == b.sensing.gain);
    a = evolve_channel(a, {}, r1);
    b = evolve_channel(b, {}, r2);
  }
  for (std::size_t i = 0; i < a.n(); ++i) {
    CHECK(a.sensing_gain(i, i) == 0.0);
    for (std::size_t j = 0; j < a.n(); ++j) CHECK(a.sensing_gain(i, j) == a.sensing_gain(j, i));
  }
}

TEST_CASE("alpha = 0 freezes the channel; large-scale terms never move") {
  const Layout layout = inh_grid_layout(2, 2);
  const UeConfiguration cfg = sample_configuration(layout, 1);
  Rng rng = make_stream(1, "ch");
  const ChannelRealization first = realize_channel(layout, cfg, {}, rng);
  ChannelRealization frozen = first;
  ChannelRealization moving = first;
  for (int n = 0; n < 50; ++n) {
    frozen = evolve_channel(frozen, FadingProcess{0.0}, rng);
    moving = evolve_channel(moving, FadingProcess{0.3}, rng);
  }
  CHECK(frozen.access.gain == first.access.gain);
  CHECK(moving.access.gain != first.access.gain);
  CHECK(moving.access.pathloss_db == first.access.pathloss_db);
  CHECK(moving.access.shadowing_db == first.access.shadowing_db);
  CHECK(moving.access.los == first.access.los);
}

TEST_CASE("fading autocorrelation and stationarity") {
  const Layout layout = generate_layout(Scenario::InhOffice);
  const UeConfiguration cfg = sample_configuration(layout, 5);

  auto run = [&](double alpha, int slots, double& rho, double& power) {
    Rng rng = make_stream(99, "fading-test");
    ChannelRealization ch = realize_channel(layout, cfg, {}, rng);
    const auto links = static_cast<double>(ch.access.fading.data().size());
    double cross = 0.0, sq = 0.0;
    for (int n = 0; n < slots; ++n) {
      ChannelRealization next = evolve_channel(ch, FadingProcess{alpha}, rng);
      const auto a = ch.access.fading.data();
      const auto b = next.access.fading.data();
      for (std::size_t k = 0; k < a.size(); ++k) {
        cross += (b[k] * std::conj(a[k])).real();
        sq += std::norm(b[k]);
      }
      ch = std::move(next);
    }
    rho = cross / sq;
    power = sq / (links * slots);
  };

  double rho = 0.0, power = 0.0;
  run(0.1, 100000, rho, power);
  CHECK(rho == doctest::Approx(std::sqrt(1.0 - 0.01)).epsilon(0.01));
  CHECK(power == doctest::Approx(1.0).epsilon(0.02));

  run(1.0, 10000, rho, power);
  CHECK(std::abs(rho) < 0.05);
}

TEST_CASE("layout JSON round-trip") {
  const Layout layout = generate_layout(Scenario::UmiStreetCanyon, 150.0);
  const UeConfiguration cfg = sample_configuration(layout, 21);
  UeConfiguration back_cfg;
  const Layout back = layout_from_json(layout_to_json(layout, &cfg), &back_cfg);
  CHECK(back.scenario == layout.scenario);
  CHECK(back.bs_positions == layout.bs_positions);
  CHECK(back.inter_site_distance == layout.inter_site_distance);
  CHECK(back_cfg.ue_positions == cfg.ue_positions);
  CHECK_THROWS_AS(layout_from_json("{\"schema\":\"layout-v0\"}"), ConfigError);
}

}
