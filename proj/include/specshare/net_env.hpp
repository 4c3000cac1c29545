#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "specshare/common.hpp"
#include "specshare/rng.hpp"

namespace specshare {

enum class Scenario { InhOffice, UmiStreetCanyon };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);

// BS geometry plus the region UEs may be dropped into.
struct Layout {
  Scenario scenario = Scenario::InhOffice;
  std::vector<Vec3> bs_positions;
  double bs_height = 0.0;
  double ue_height = 0.0;
  double inter_site_distance = 0.0;
  // Axis-aligned bounds of the region. For UMi the region is the union of the
  // hexagonal cells; the box only bounds it.
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

  std::size_t n_bs() const { return bs_positions.size(); }
  bool contains(double x, double y) const;
  std::size_t nearest_bs(double x, double y) const;
};

struct UeConfiguration {
  std::vector<Vec3> ue_positions;  // UE j is served by BS j
  double ue_height = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr double kInhDefaultIsd = 20.0;
inline constexpr double kUmiDefaultIsd = 200.0;

// Standard layouts: 12-BS InH-Office (120 m x 50 m at the default 20 m
// spacing) and 19-BS UMi hexagon (two rings). `inter_site_distance <= 0`
// selects the default for the scenario.
Layout generate_layout(Scenario scenario, double inter_site_distance = 0.0);

// Smaller InH-style office: rows x cols ceiling BSs on a square grid.
Layout inh_grid_layout(int rows, int cols, double inter_site_distance = kInhDefaultIsd);
// UMi hexagon with `rings` rings around a center site (rings = 0 is one BS).
Layout umi_hex_layout(int rings, double inter_site_distance = kUmiDefaultIsd);

// One UE per BS, uniform in that BS's cell (region ∩ Voronoi cell), at least
// 1 m (2D) from every BS.
UeConfiguration sample_configuration(const Layout& layout, Rng& rng);
UeConfiguration sample_configuration(const Layout& layout, std::uint64_t seed);

struct Pathloss {
  double db = 0.0;
  bool clamped = false;  // distance was raised to the model's validity floor
};

// TR 38.901 Table 7.4.1-1 pathloss, without shadowing. See docs/channel_model.md.
Pathloss pathloss_db(Scenario scenario, const Vec3& tx, const Vec3& rx, double carrier_ghz, bool los);
double los_probability(Scenario scenario, double distance_2d);
double shadowing_sigma_db(Scenario scenario, bool los);

struct FadingProcess {
  double alpha = 0.1;
  std::string innovation_stream = "fading";
};

struct ChannelParams {
  double carrier_ghz = 6.0;
};

// Link budget for one set of N x N links.
struct LinkSet {
  Matrix<double> gain;  // linear power gain, large-scale x |h|^2
  Matrix<double> pathloss_db;
  Matrix<double> shadowing_db;
  Matrix<std::uint8_t> los;
  Matrix<std::complex<double>> fading;  // small-scale coefficient h
};

struct ChannelRealization {
  // access(i, j): gain from BS i's transmission to UE j.
  LinkSet access;
  // sensing(i, j): gain from BS j's transmission to BS i's receiver; zero diagonal.
  LinkSet sensing;
  int slot_index = 0;
  std::size_t clamped_links = 0;

  std::size_t n() const { return access.gain.rows(); }
  double gain(std::size_t bs, std::size_t ue) const { return access.gain(bs, ue); }
  double sensing_gain(std::size_t rx_bs, std::size_t tx_bs) const { return sensing.gain(rx_bs, tx_bs); }
};

// Draws LOS state, shadowing and an initial CN(0,1) small-scale coefficient
// for every link. Large-scale terms stay fixed for the episode.
ChannelRealization realize_channel(const Layout& layout, const UeConfiguration& ues, const ChannelParams& params,
                                   Rng& rng);

// h[n] = sqrt(1 - a^2) h[n-1] + a w[n],  w ~ CN(0, 1).
ChannelRealization evolve_channel(const ChannelRealization& prev, const FadingProcess& fading, Rng& rng);

// layout-v1 JSON document.
std::string layout_to_json(const Layout& layout, const UeConfiguration* ues);
Layout layout_from_json(const std::string& text, UeConfiguration* ues = nullptr);

}  // namespace specshare
