// 3D-1D exchange: cylinder-surface quadrature around each vessel piece,
// circumference averages, Starling and Kedem-Katchalsky fluxes, and the
// deposition of surface fluxes onto grid cells and network nodes.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/linalg.hpp"
#include "tumor3d1d/network.hpp"

namespace tumor3d1d {

struct CirclePoint {
  Vec3 position;
  std::size_t cell = 0;  // containing cell (after clamping)
  double weight = 0.0;   // surface area represented by the point
  TrilinearStencil stencil;
};

/// A straight piece of vessel wall of length `length` centred at `center`.
/// Its circle points are points[first_point, first_point + n_points).
struct CouplingPiece {
  std::size_t edge = 0;
  std::size_t owner = 0;  // network node receiving the lumped exchange
  double length = 0.0;
  double radius = 0.0;
  Vec3 center;
  std::size_t first_point = 0;
  std::size_t n_points = 0;
};

struct CouplingMap {
  Grid3D grid;
  std::size_t n_theta = 8;
  std::vector<CouplingPiece> pieces;
  std::vector<CirclePoint> points;
  std::vector<std::string> warnings;

  std::vector<ExchangePiece> exchange_pieces() const {
    std::vector<ExchangePiece> out;
    out.reserve(pieces.size());
    for (const auto& p : pieces) out.push_back({p.owner, p.length, p.radius});
    return out;
  }
};

struct CouplingOptions {
  std::size_t n_theta = 8;
  double target_length = 0.0;     // 0: use min_pieces_per_edge only
  std::size_t min_pieces_per_edge = 1;
};

struct ExchangeParams {
  double L_p = 0.0;
  double L_sigma = 0.0;
  double r_sigma = 0.0;
};

/// Orthonormal pair spanning the plane perpendicular to the unit vector t.
inline std::pair<Vec3, Vec3> perpendicular_frame(Vec3 t) {
  std::size_t axis = 0;
  for (std::size_t a = 1; a < 3; ++a)
    if (std::abs(t[a]) < std::abs(t[axis])) axis = a;
  Vec3 e{};
  e[axis] = 1.0;
  Vec3 u = e - dot(e, t) * t;
  u = (1.0 / norm(u)) * u;
  return {u, cross(t, u)};
}

/// Splits every edge into pieces and places n_theta equally spaced points on
/// the circle of radius R perpendicular to the edge at each piece centre.
/// Each point carries weight 2 pi R ds / n_theta. A piece is owned by the
/// nearer end node of its edge (ties go to the first node).
inline CouplingMap build_coupling_map(const Grid3D& grid, const NetworkGraph& net, CouplingOptions opt = {}) {
  if (opt.n_theta < 4) throw std::invalid_argument("coupling: n_theta must be at least 4");
  CouplingMap map;
  map.grid = grid;
  map.n_theta = opt.n_theta;
  bool warned_radius = false;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    const Vec3 xa = net.nodes[ed.a];
    const Vec3 xb = net.nodes[ed.b];
    const double len = norm(xb - xa);
    const Vec3 t = (1.0 / len) * (xb - xa);
    const auto [u, w] = perpendicular_frame(t);
    std::size_t m = std::max<std::size_t>(opt.min_pieces_per_edge, 1);
    if (opt.target_length > 0.0)
      m = std::max(m, static_cast<std::size_t>(std::ceil(len / opt.target_length - 1e-9)));
    if (ed.radius < 0.5 * grid.h && !warned_radius) {
      map.warnings.push_back("edge " + std::to_string(e) + ": radius " + std::to_string(ed.radius) +
                             " is below half the cell size " + std::to_string(0.5 * grid.h));
      warned_radius = true;
    }
    const double ds = len / static_cast<double>(m);
    const double weight = 2.0 * std::numbers::pi * ed.radius * ds / static_cast<double>(opt.n_theta);
    for (std::size_t s = 0; s < m; ++s) {
      const double frac = (static_cast<double>(s) + 0.5) / static_cast<double>(m);
      CouplingPiece piece;
      piece.edge = e;
      piece.owner = frac <= 0.5 ? ed.a : ed.b;
      piece.length = ds;
      piece.radius = ed.radius;
      piece.center = xa + frac * (xb - xa);
      piece.first_point = map.points.size();
      piece.n_points = opt.n_theta;
      for (std::size_t k = 0; k < opt.n_theta; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(opt.n_theta);
        CirclePoint pt;
        pt.position = piece.center + ed.radius * (std::cos(theta) * u + std::sin(theta) * w);
        pt.cell = grid.locate(pt.position);
        pt.weight = weight;
        pt.stencil = trilinear_stencil(grid, pt.position);
        map.points.push_back(pt);
      }
      map.pieces.push_back(piece);
    }
  }
  return map;
}

/// Mean of the trilinear samples on the circle of one piece.
inline double circle_average(const CellField& field, const CouplingMap& map, std::size_t piece) {
  const auto& pc = map.pieces.at(piece);
  double s = 0.0;
  for (std::size_t k = 0; k < pc.n_points; ++k) s += interpolate(map.points[pc.first_point + k].stencil, field.values);
  return s / static_cast<double>(pc.n_points);
}

inline std::vector<double> circle_averages(const CellField& field, const CouplingMap& map) {
  std::vector<double> out(map.pieces.size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = circle_average(field, map, s);
  return out;
}

/// Fluid flux across the wall, positive out of the vessel.
inline double starling_flux(double p_bar, double p_v, double l_p) { return l_p * (p_v - p_bar); }

/// Nutrient flux across the wall, positive out of the vessel. The advective
/// part is upwinded: vessel value when p_v >= p_bar, tissue value otherwise.
inline double kedem_katchalsky_flux(double phi_sigma_bar, double p_bar, double phi_v, double p_v,
                                    const ExchangeParams& prm) {
  const double upwind = p_v >= p_bar ? phi_v : phi_sigma_bar;
  return (1.0 - prm.r_sigma) * starling_flux(p_bar, p_v, prm.L_p) * upwind + prm.L_sigma * (phi_v - phi_sigma_bar);
}

struct SurfaceSources {
  CellField tissue;           // per unit volume
  std::vector<double> network;  // per unit length at each node (negative: loss)
};

/// Spreads weight * J of every circle point over the cells of its trilinear
/// stencil (the adjoint of sampling, divided by the cell volume) and removes
/// the same amount from the owning node (divided by its lumped length).
inline SurfaceSources accumulate_surface_sources(const CouplingMap& map, std::span<const double> flux_per_point,
                                                 std::span<const double> node_lengths) {
  if (flux_per_point.size() != map.points.size())
    throw linalg::DimensionError("accumulate: flux count does not match circle points");
  SurfaceSources out{CellField(map.grid), std::vector<double>(node_lengths.size(), 0.0)};
  std::vector<double> node_total(node_lengths.size(), 0.0);
  const double inv_vol = 1.0 / map.grid.cell_volume();
  for (const auto& pc : map.pieces) {
    double piece_total = 0.0;
    for (std::size_t k = 0; k < pc.n_points; ++k) {
      const auto& pt = map.points[pc.first_point + k];
      const double q = pt.weight * flux_per_point[pc.first_point + k];
      for (std::size_t m = 0; m < 8; ++m) out.tissue[pt.stencil.cells[m]] += pt.stencil.weights[m] * q * inv_vol;
      piece_total += q;
    }
    node_total.at(pc.owner) += piece_total;
  }
  for (std::size_t i = 0; i < node_total.size(); ++i)
    if (node_total[i] != 0.0) out.network[i] = -node_total[i] / node_lengths[i];
  return out;
}

/// Pointwise fluxes on the vessel wall: tissue values sampled trilinearly at
/// each circle point, vessel values taken from the owning node.
struct PointFluxes {
  std::vector<double> fluid;     // J_pv per point
  std::vector<double> nutrient;  // J_sigma_v per point
};

inline PointFluxes evaluate_point_fluxes(const CouplingMap& map, const CellField& p, const CellField& phi_sigma,
                                         std::span<const double> p_v, std::span<const double> phi_v,
                                         const ExchangeParams& prm) {
  PointFluxes out{std::vector<double>(map.points.size()), std::vector<double>(map.points.size())};
  for (const auto& pc : map.pieces) {
    for (std::size_t k = 0; k < pc.n_points; ++k) {
      const std::size_t q = pc.first_point + k;
      const auto& st = map.points[q].stencil;
      const double pt_p = interpolate(st, p.values);
      const double pt_sigma = interpolate(st, phi_sigma.values);
      out.fluid[q] = starling_flux(pt_p, p_v[pc.owner], prm.L_p);
      out.nutrient[q] = kedem_katchalsky_flux(pt_sigma, pt_p, phi_v[pc.owner], p_v[pc.owner], prm);
    }
  }
  return out;
}

/// Wall operator for an exchange law coeff * (tissue - vessel): each circle
/// point with weight w and trilinear stencil s contributes coeff w s s^T / h^3.
/// Symmetric positive semidefinite, geometry only.
inline linalg::CsrMatrix wall_operator(const CouplingMap& map, double coeff) {
  const std::size_t nc = map.grid.num_cells();
  linalg::TripletBuilder tb(nc, nc);
  tb.reserve(64 * map.points.size());
  const double scale = coeff / map.grid.cell_volume();
  for (const auto& pt : map.points) {
    const auto& st = pt.stencil;
    for (std::size_t a = 0; a < 8; ++a) {
      if (st.weights[a] == 0.0) continue;
      for (std::size_t b = 0; b < 8; ++b)
        if (st.weights[b] != 0.0) tb.add(st.cells[a], st.cells[b], scale * pt.weight * st.weights[a] * st.weights[b]);
    }
  }
  return tb.build();
}

/// Matching load: coeff w value(owner) s / h^3 summed over circle points.
inline linalg::Vector wall_load(const CouplingMap& map, double coeff, std::span<const double> node_values) {
  linalg::Vector out(map.grid.num_cells(), 0.0);
  const double scale = coeff / map.grid.cell_volume();
  for (const auto& pc : map.pieces) {
    for (std::size_t k = 0; k < pc.n_points; ++k) {
      const auto& pt = map.points[pc.first_point + k];
      for (std::size_t m = 0; m < 8; ++m)
        out[pt.stencil.cells[m]] += scale * pt.weight * pt.stencil.weights[m] * node_values[pc.owner];
    }
  }
  return out;
}

/// Nutrient flux split for a step that treats the permeation term implicitly
/// in the tissue: the part that does not depend on the new tissue nutrient,
/// (1 - r_sigma) J_pv upwind + L_sigma phi_v, per circle point. Upwinding
/// uses the given (old) tissue state.
inline std::vector<double> nutrient_flux_explicit_part(const CouplingMap& map, const CellField& p,
                                                       const CellField& phi_sigma, std::span<const double> p_v,
                                                       std::span<const double> phi_v, const ExchangeParams& prm) {
  ExchangeParams conv = prm;
  conv.L_sigma = 0.0;
  auto flux = evaluate_point_fluxes(map, p, phi_sigma, p_v, phi_v, conv).nutrient;
  for (const auto& pc : map.pieces)
    for (std::size_t k = 0; k < pc.n_points; ++k) flux[pc.first_point + k] += prm.L_sigma * phi_v[pc.owner];
  return flux;
}

/// Completes the split flux with -L_sigma times the sampled new tissue value.
inline void add_nutrient_uptake(const CouplingMap& map, const CellField& phi_sigma, double l_sigma,
                                std::span<double> flux) {
  for (std::size_t q = 0; q < map.points.size(); ++q)
    flux[q] -= l_sigma * interpolate(map.points[q].stencil, phi_sigma.values);
}

}  // namespace tumor3d1d
