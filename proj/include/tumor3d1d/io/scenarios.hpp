// Builtin scenarios and the assembly of a ready-to-run Simulation from a
// configuration.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tumor3d1d/engine.hpp"
#include "tumor3d1d/io/config.hpp"
#include "tumor3d1d/io/network_io.hpp"
#include "tumor3d1d/network.hpp"

namespace tumor3d1d::io {

inline constexpr const char* kSyntheticNetworkName = "capillary-lattice";

/// Deterministic stand-in for an imported capillary network: a jittered
/// 4 x 4 x 3 lattice with all x and y links and every other z link, fed by
/// four inlet stubs reaching to x = 0.05 and drained by five outlet stubs
/// reaching to x = 1.95. Radii are spread between 0.0307 and 0.0613 with a
/// power law whose exponent is chosen so that the mean radius is 0.0418.
inline NetworkGraph synthetic_capillary_network(double p_in = 25000.0, double p_out = 10000.0) {
  constexpr std::size_t nx = 4, ny = 4, nz = 3;
  constexpr double r_min = 0.0307, r_max = 0.0613, r_mean = 0.0418;
  std::mt19937 rng(20200);
  // raw engine output is portable, distributions are not
  auto uniform = [&rng] { return (static_cast<double>(rng()) + 0.5) / 4294967296.0; };

  NetworkGraph net;
  auto id = [](std::size_t i, std::size_t j, std::size_t k) { return i + nx * (j + ny * k); };
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const Vec3 base{0.35 + 0.43 * static_cast<double>(i), 0.35 + 0.43 * static_cast<double>(j),
                        0.4 + 0.6 * static_cast<double>(k)};
        const Vec3 jitter{0.14 * (uniform() - 0.5), 0.14 * (uniform() - 0.5), 0.14 * (uniform() - 0.5)};
        net.nodes.push_back(base + jitter);
      }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        if (i + 1 < nx) links.emplace_back(id(i, j, k), id(i + 1, j, k));
        if (j + 1 < ny) links.emplace_back(id(i, j, k), id(i, j + 1, k));
        if (k + 1 < nz && (i + j) % 2 == 0) links.emplace_back(id(i, j, k), id(i, j, k + 1));
      }
  const std::vector<std::pair<std::size_t, std::size_t>> inlets{{0, 0}, {1, 2}, {2, 1}, {3, 2}};
  const std::vector<std::pair<std::size_t, std::size_t>> outlets{{0, 1}, {1, 0}, {2, 2}, {3, 1}, {1, 1}};
  std::vector<BoundaryNode> boundary;
  for (const auto& [j, k] : inlets) {
    const Vec3 at = net.nodes[id(0, j, k)];
    net.nodes.push_back({0.05, at.y, at.z});
    links.emplace_back(net.nodes.size() - 1, id(0, j, k));
    boundary.push_back({net.nodes.size() - 1, p_in, 1.0});
  }
  for (const auto& [j, k] : outlets) {
    const Vec3 at = net.nodes[id(nx - 1, j, k)];
    net.nodes.push_back({1.95, at.y, at.z});
    links.emplace_back(id(nx - 1, j, k), net.nodes.size() - 1);
    boundary.push_back({net.nodes.size() - 1, p_out, std::nullopt});
  }

  std::vector<double> u(links.size());
  for (double& x : u) x = uniform();
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double umin = *lo, urange = *hi - *lo;
  for (double& x : u) x = (x - umin) / urange;
  auto mean_for = [&](double gamma) {
    double s = 0.0;
    for (double x : u) s += r_min + (r_max - r_min) * std::pow(x, gamma);
    return s / static_cast<double>(u.size());
  };
  double g_lo = 0.01, g_hi = 100.0;  // mean radius decreases with gamma
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(g_lo * g_hi);
    (mean_for(mid) > r_mean ? g_lo : g_hi) = mid;
  }
  const double gamma = std::sqrt(g_lo * g_hi);
  for (std::size_t e = 0; e < links.size(); ++e)
    net.edges.push_back({links[e].first, links[e].second, r_min + (r_max - r_min) * std::pow(u[e], gamma)});
  net.boundary = std::move(boundary);
  return net;
}

inline ScenarioConfig two_vessel_config() {
  ScenarioConfig c;
  c.name = "two-vessel";
  c.cells = 40;
  c.network_kind = NetworkKind::Vessels;
  VesselSpec artery{{0.2, 0.2, 0.0}, {0.2, 0.2, 2.0}, 0.08, 10000.0, 5000.0, 1.0, std::nullopt};
  VesselSpec vein{{1.8, 1.8, 0.0}, {1.8, 1.8, 2.0}, 0.1, 1000.0, 2000.0, std::nullopt, 0.0};
  c.vessels = {artery, vein};
  c.tumor_center = {1.0, 1.0, 1.0};
  c.tumor_radius = 0.3;
  c.sigma0 = 0.6;
  c.ecm0 = 1.0;
  c.dt = 0.05;
  c.t_end = 3.0;
  c.vtk_every = 10;
  c.output_dir = "output/two-vessel";
  return c;
}

inline ScenarioConfig network_config() {
  ScenarioConfig c = two_vessel_config();
  c.name = "network";
  c.network_kind = NetworkKind::Builtin;
  c.network_builtin = kSyntheticNetworkName;
  c.vessels.clear();
  c.tumor_center = {1.3, 0.9, 0.7};
  c.tumor_radius = 0.25;
  c.output_dir = "output/network";
  return c;
}

inline std::vector<std::string> builtin_scenario_names() { return {"two-vessel", "network"}; }

inline ScenarioConfig builtin_config(const std::string& name) {
  if (name == "two-vessel") return two_vessel_config();
  if (name == "network") return network_config();
  throw ConfigError("unknown builtin scenario '" + name + "' (expected two-vessel or network)");
}

/// Straight vessels from [vessel.N] sections; each has its own two end nodes.
inline NetworkGraph network_from_vessels(const std::vector<VesselSpec>& vessels) {
  NetworkGraph net;
  for (const auto& v : vessels) {
    const std::size_t a = net.nodes.size();
    net.nodes.push_back(v.start);
    net.nodes.push_back(v.end);
    net.edges.push_back({a, a + 1, v.radius});
    net.boundary.push_back({a, v.p_start, v.phi_start});
    net.boundary.push_back({a + 1, v.p_end, v.phi_end});
  }
  return net;
}

/// Network described by the configuration. Relative file paths are resolved
/// against base_dir.
inline NetworkGraph resolve_network(const ScenarioConfig& cfg, const std::filesystem::path& base_dir = ".") {
  switch (cfg.network_kind) {
    case NetworkKind::Vessels: return network_from_vessels(cfg.vessels);
    case NetworkKind::File: {
      std::filesystem::path p = cfg.network_path;
      if (p.is_relative()) p = base_dir / p;
      return read_network_json(p.string());
    }
    case NetworkKind::Builtin:
      if (cfg.network_builtin == kSyntheticNetworkName) return synthetic_capillary_network();
      throw ConfigError("unknown builtin network '" + cfg.network_builtin + "'");
  }
  return {};
}

/// Network problems that make a configuration unusable.
inline std::vector<std::string> check_network(const NetworkGraph& net, const Grid3D& grid) {
  auto rep = validate_network(net);
  std::vector<std::string> out = rep.violations;
  if (!net.has_pressure_dirichlet()) out.push_back("network has no pressure boundary condition");
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    if (!grid.contains(net.nodes[i])) out.push_back("node " + std::to_string(i) + " lies outside the domain");
  return out;
}

inline EngineConfig engine_config(const ScenarioConfig& cfg) {
  EngineConfig e;
  e.time = cfg.time();
  e.solver = cfg.solver();
  e.n_theta = cfg.n_theta;
  return e;
}

/// Sets the initial fields: a spherical proliferative seed, constant
/// nutrient and ECM, no hypoxic, necrotic, MDE or TAF, and vessel nutrient at
/// free nodes equal to phi_v (defaulting to the tissue nutrient value).
inline void apply_initial_condition(Simulation& sim, const ScenarioConfig& cfg) {
  TissueState& st = sim.state();
  const Grid3D& g = st.grid;
  const double eps = cfg.parameters.epsilon_P;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const double r = norm(g.cell_center(c) - cfg.tumor_center);
    st.phi_P[c] = initial_tumor_profile(r, cfg.tumor_radius, eps);
    st.phi_H[c] = st.phi_N[c] = st.phi_MDE[c] = st.phi_TAF[c] = 0.0;
    st.phi_sigma[c] = cfg.sigma0;
    st.phi_ECM[c] = cfg.ecm0;
  }
  st.t = 0.0;
  sim.set_initial_vessel_nutrient(cfg.phi_v0.value_or(cfg.sigma0));
  sim.initialize();
}

inline Simulation build_simulation(const ScenarioConfig& cfg, const std::filesystem::path& base_dir = ".") {
  const Grid3D grid = cfg.grid();
  const NetworkGraph net = resolve_network(cfg, base_dir);
  const auto problems = check_network(net, grid);
  if (!problems.empty()) {
    std::string msg = "invalid network:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  Simulation sim(grid, net, cfg.parameters, engine_config(cfg));
  apply_initial_condition(sim, cfg);
  return sim;
}

}  // namespace tumor3d1d::io
