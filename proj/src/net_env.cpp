#include "specshare/net_env.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>

#include "json.hpp"

namespace specshare {

namespace {

constexpr double kSpeedOfLight = 3.0e8;
constexpr double kMinUeBsDistance = 1.0;

// Unit vectors from a hex site to its six neighbours.
const std::array<std::pair<double, double>, 6>& hex_directions() {
  static const std::array<std::pair<double, double>, 6> dirs = [] {
    std::array<std::pair<double, double>, 6> d{};
    for (int k = 0; k < 6; ++k) {
      const double a = k * std::numbers::pi / 3.0;
      d[k] = {std::cos(a), std::sin(a)};
    }
    return d;
  }();
  return dirs;
}

bool inside_hex_cell(const Vec3& site, double isd, double x, double y) {
  const double dx = x - site.x;
  const double dy = y - site.y;
  for (const auto& [ux, uy] : hex_directions()) {
    if (dx * ux + dy * uy > 0.5 * isd + 1e-9) return false;
  }
  return true;
}

void fill_bounds(Layout& layout) {
  layout.x_min = layout.y_min = std::numeric_limits<double>::infinity();
  layout.x_max = layout.y_max = -std::numeric_limits<double>::infinity();
  const double hx = 0.5 * layout.inter_site_distance;
  const double hy = layout.inter_site_distance / std::sqrt(3.0);
  for (const auto& p : layout.bs_positions) {
    layout.x_min = std::min(layout.x_min, p.x - hx);
    layout.x_max = std::max(layout.x_max, p.x + hx);
    layout.y_min = std::min(layout.y_min, p.y - hy);
    layout.y_max = std::max(layout.y_max, p.y + hy);
  }
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::InhOffice:
      return "inh-office";
    case Scenario::UmiStreetCanyon:
      return "umi-street-canyon";
  }
  return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
  if (name == "inh-office" || name == "InhOffice") return Scenario::InhOffice;
  if (name == "umi-street-canyon" || name == "UmiStreetCanyon") return Scenario::UmiStreetCanyon;
  throw ConfigError("unsupported scenario: " + std::string(name));
}

bool Layout::contains(double x, double y) const {
  if (x < x_min || x > x_max || y < y_min || y > y_max) return false;
  if (scenario == Scenario::InhOffice) return true;
  for (const auto& p : bs_positions) {
    if (inside_hex_cell(p, inter_site_distance, x, y)) return true;
  }
  return false;
}

std::size_t Layout::nearest_bs(double x, double y) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bs_positions.size(); ++i) {
    const double d = std::hypot(bs_positions[i].x - x, bs_positions[i].y - y);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Layout inh_grid_layout(int rows, int cols, double isd) {
  if (rows < 1 || cols < 1 || !(isd > 0.0)) throw ConfigError("InH grid needs rows, cols >= 1 and isd > 0");
  Layout layout;
  layout.scenario = Scenario::InhOffice;
  layout.bs_height = 3.0;
  layout.ue_height = 1.0;
  layout.inter_site_distance = isd;
  // 38.901 office: 120 m x 50 m, sites 20 m apart, 15 m from the long walls.
  layout.x_min = 0.0;
  layout.x_max = cols * isd;
  layout.y_min = 0.0;
  layout.y_max = rows * isd + 0.5 * isd;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      layout.bs_positions.push_back({0.5 * isd + c * isd, 0.75 * isd + r * isd, layout.bs_height});
    }
  }
  return layout;
}

Layout umi_hex_layout(int rings, double isd) {
  if (rings < 0 || !(isd > 0.0)) throw ConfigError("UMi hexagon needs rings >= 0 and isd > 0");
  Layout layout;
  layout.scenario = Scenario::UmiStreetCanyon;
  layout.bs_height = 10.0;
  layout.ue_height = 1.5;
  layout.inter_site_distance = isd;
  // Axial hex coordinates, ordered by ring so BS 0 is the center site.
  for (int ring = 0; ring <= rings; ++ring) {
    for (int q = -ring; q <= ring; ++q) {
      for (int r = -ring; r <= ring; ++r) {
        const int s = -q - r;
        if (std::max({std::abs(q), std::abs(r), std::abs(s)}) != ring) continue;
        layout.bs_positions.push_back({isd * (q + 0.5 * r), isd * (std::sqrt(3.0) / 2.0) * r, layout.bs_height});
      }
    }
  }
  fill_bounds(layout);
  return layout;
}

Layout generate_layout(Scenario scenario, double isd) {
  switch (scenario) {
    case Scenario::InhOffice:
      return inh_grid_layout(2, 6, isd > 0.0 ? isd : kInhDefaultIsd);
    case Scenario::UmiStreetCanyon:
      return umi_hex_layout(2, isd > 0.0 ? isd : kUmiDefaultIsd);
  }
  throw ConfigError("unsupported scenario");
}

UeConfiguration sample_configuration(const Layout& layout, Rng& rng) {
  UeConfiguration cfg;
  cfg.ue_height = layout.ue_height;
  const double reach = layout.inter_site_distance;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j = 0; j < layout.n_bs(); ++j) {
    const Vec3& bs = layout.bs_positions[j];
    const double x0 = std::max(layout.x_min, bs.x - reach);
    const double x1 = std::min(layout.x_max, bs.x + reach);
    const double y0 = std::max(layout.y_min, bs.y - reach);
    const double y1 = std::min(layout.y_max, bs.y + reach);
    for (;;) {
      const double x = x0 + (x1 - x0) * unit(rng);
      const double y = y0 + (y1 - y0) * unit(rng);
      if (!layout.contains(x, y) || layout.nearest_bs(x, y) != j) continue;
      const bool too_close = std::any_of(layout.bs_positions.begin(), layout.bs_positions.end(),
                                         [&](const Vec3& p) { return std::hypot(p.x - x, p.y - y) < kMinUeBsDistance; });
      if (too_close) continue;
      cfg.ue_positions.push_back({x, y, layout.ue_height});
      break;
    }
  }
  return cfg;
}

UeConfiguration sample_configuration(const Layout& layout, std::uint64_t seed) {
  Rng rng = make_stream(seed, "configuration");
  UeConfiguration cfg = sample_configuration(layout, rng);
  cfg.seed = seed;
  return cfg;
}

// Constants: 3GPP TR 38.901 v16 Table 7.4.1-1 and Table 7.4.2-1.
Pathloss pathloss_db(Scenario scenario, const Vec3& tx, const Vec3& rx, double fc_ghz, bool los) {
  Pathloss out;
  double d2 = distance_2d(tx, rx);
  const double dh = tx.z - rx.z;
  const double log_fc = std::log10(fc_ghz);
  switch (scenario) {
    case Scenario::UmiStreetCanyon: {
      if (d2 < 10.0) {
        d2 = 10.0;
        out.clamped = true;
      }
      const double d3 = std::sqrt(d2 * d2 + dh * dh);
      const double h_bs = std::max(tx.z, rx.z);
      const double h_ut = std::min(tx.z, rx.z);
      const double d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1e9 / kSpeedOfLight;
      double pl_los;
      if (d2 <= d_bp) {
        pl_los = 32.4 + 21.0 * std::log10(d3) + 20.0 * log_fc;
      } else {
        pl_los = 32.4 + 40.0 * std::log10(d3) + 20.0 * log_fc - 9.5 * std::log10(d_bp * d_bp + dh * dh);
      }
      if (los) {
        out.db = pl_los;
      } else {
        const double pl_nlos = 35.3 * std::log10(d3) + 22.4 + 21.3 * log_fc - 0.3 * (h_ut - 1.5);
        out.db = std::max(pl_los, pl_nlos);
      }
      break;
    }
    case Scenario::InhOffice: {
      double d3 = std::sqrt(d2 * d2 + dh * dh);
      if (d3 < 1.0) {
        d3 = 1.0;
        out.clamped = true;
      }
      const double pl_los = 32.4 + 17.3 * std::log10(d3) + 20.0 * log_fc;
      if (los) {
        out.db = pl_los;
      } else {
        const double pl_nlos = 38.3 * std::log10(d3) + 17.30 + 24.9 * log_fc;
        out.db = std::max(pl_los, pl_nlos);
      }
      break;
    }
  }
  return out;
}

double los_probability(Scenario scenario, double d2) {
  require(d2 >= 0.0, "los_probability: negative distance");
  switch (scenario) {
    case Scenario::UmiStreetCanyon:
      if (d2 <= 18.0) return 1.0;
      return 18.0 / d2 + std::exp(-d2 / 36.0) * (1.0 - 18.0 / d2);
    case Scenario::InhOffice:
      // InH-Office, mixed office.
      if (d2 <= 1.2) return 1.0;
      if (d2 < 6.5) return std::exp(-(d2 - 1.2) / 4.7);
      return std::exp(-(d2 - 6.5) / 32.6) * 0.32;
  }
  return 0.0;
}

double shadowing_sigma_db(Scenario scenario, bool los) {
  switch (scenario) {
    case Scenario::UmiStreetCanyon:
      return los ? 4.0 : 7.82;
    case Scenario::InhOffice:
      return los ? 3.0 : 8.03;
  }
  return 0.0;
}

namespace {

std::complex<double> draw_cn(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

LinkSet empty_links(std::size_t n) {
  return LinkSet{Matrix<double>(n, n), Matrix<double>(n, n), Matrix<double>(n, n), Matrix<std::uint8_t>(n, n),
                 Matrix<std::complex<double>>(n, n)};
}

void draw_link(LinkSet& links, std::size_t i, std::size_t j, Scenario scenario, const Vec3& tx, const Vec3& rx,
               double fc, Rng& rng, std::size_t& clamped) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool los = unit(rng) < los_probability(scenario, distance_2d(tx, rx));
  const Pathloss pl = pathloss_db(scenario, tx, rx, fc, los);
  if (pl.clamped) ++clamped;
  std::normal_distribution<double> shadow(0.0, shadowing_sigma_db(scenario, los));
  links.los(i, j) = los ? 1 : 0;
  links.pathloss_db(i, j) = pl.db;
  links.shadowing_db(i, j) = shadow(rng);
  links.fading(i, j) = draw_cn(rng);
}

void refresh_gains(LinkSet& links, bool zero_diagonal) {
  const std::size_t n = links.gain.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (zero_diagonal && i == j) {
        links.gain(i, j) = 0.0;
        continue;
      }
      links.gain(i, j) = db_to_linear(-links.pathloss_db(i, j) - links.shadowing_db(i, j)) * std::norm(links.fading(i, j));
    }
  }
}

}  // namespace

ChannelRealization realize_channel(const Layout& layout, const UeConfiguration& ues, const ChannelParams& params,
                                   Rng& rng) {
  const std::size_t n = layout.n_bs();
  require(ues.ue_positions.size() == n, "realize_channel: one UE per BS required");
  ChannelRealization ch;
  ch.access = empty_links(n);
  ch.sensing = empty_links(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      draw_link(ch.access, i, j, layout.scenario, layout.bs_positions[i], ues.ue_positions[j], params.carrier_ghz,
                rng, ch.clamped_links);
    }
  }
  // BS-BS links are reciprocal: draw once per pair.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      draw_link(ch.sensing, i, j, layout.scenario, layout.bs_positions[j], layout.bs_positions[i],
                params.carrier_ghz, rng, ch.clamped_links);
      ch.sensing.los(j, i) = ch.sensing.los(i, j);
      ch.sensing.pathloss_db(j, i) = ch.sensing.pathloss_db(i, j);
      ch.sensing.shadowing_db(j, i) = ch.sensing.shadowing_db(i, j);
      ch.sensing.fading(j, i) = ch.sensing.fading(i, j);
    }
  }
  refresh_gains(ch.access, false);
  refresh_gains(ch.sensing, true);
  ch.slot_index = 0;
  return ch;
}

ChannelRealization evolve_channel(const ChannelRealization& prev, const FadingProcess& fading, Rng& rng) {
  require(fading.alpha >= 0.0 && fading.alpha <= 1.0, "evolve_channel: alpha must lie in [0, 1]");
  ChannelRealization next = prev;
  ++next.slot_index;
  if (fading.alpha == 0.0) return next;
  const double keep = std::sqrt(1.0 - fading.alpha * fading.alpha);
  const std::size_t n = prev.n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      next.access.fading(i, j) = keep * prev.access.fading(i, j) + fading.alpha * draw_cn(rng);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto h = keep * prev.sensing.fading(i, j) + fading.alpha * draw_cn(rng);
      next.sensing.fading(i, j) = h;
      next.sensing.fading(j, i) = h;
    }
  }
  refresh_gains(next.access, false);
  refresh_gains(next.sensing, true);
  return next;
}

namespace {

nlohmann::json positions_json(const std::vector<Vec3>& ps) {
  auto arr = nlohmann::json::array();
  for (const auto& p : ps) arr.push_back({p.x, p.y, p.z});
  return arr;
}

std::vector<Vec3> positions_from(const nlohmann::json& arr) {
  std::vector<Vec3> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 3) throw ConfigError("layout-v1: positions must be [x, y, z] triples");
    out.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  return out;
}

}  // namespace

std::string layout_to_json(const Layout& layout, const UeConfiguration* ues) {
  nlohmann::json j;
  j["schema"] = "layout-v1";
  j["scenario"] = std::string(to_string(layout.scenario));
  j["inter_site_distance"] = layout.inter_site_distance;
  j["bounds"] = {layout.x_min, layout.x_max, layout.y_min, layout.y_max};
  j["heights"] = {{"bs", layout.bs_height}, {"ue", layout.ue_height}};
  j["bs_positions"] = positions_json(layout.bs_positions);
  if (ues != nullptr) {
    j["ue_positions"] = positions_json(ues->ue_positions);
    j["seed"] = ues->seed;
  }
  return j.dump(2);
}

Layout layout_from_json(const std::string& text, UeConfiguration* ues) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("layout-v1: ") + e.what());
  }
  if (j.value("schema", "") != "layout-v1") throw ConfigError("layout-v1: missing or wrong schema tag");
  try {
    Layout layout;
    layout.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    layout.inter_site_distance = j.at("inter_site_distance").get<double>();
    const auto& b = j.at("bounds");
    layout.x_min = b.at(0);
    layout.x_max = b.at(1);
    layout.y_min = b.at(2);
    layout.y_max = b.at(3);
    layout.bs_height = j.at("heights").at("bs").get<double>();
    layout.ue_height = j.at("heights").at("ue").get<double>();
    layout.bs_positions = positions_from(j.at("bs_positions"));
    if (ues != nullptr && j.contains("ue_positions")) {
      ues->ue_positions = positions_from(j.at("ue_positions"));
      ues->ue_height = layout.ue_height;
      ues->seed = j.value("seed", std::uint64_t{0});
      if (ues->ue_positions.size() != layout.n_bs()) throw ConfigError("layout-v1: one UE per BS required");
    }
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("layout-v1: ") + e.what());
  }
}

}  // namespace specshare
