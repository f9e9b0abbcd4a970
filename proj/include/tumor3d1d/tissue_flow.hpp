// Darcy flow in the tissue: Korteweg forcing, the TPFA pressure system with
// vessel leakage, and face velocities.
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "tumor3d1d/coupling.hpp"
#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/linalg.hpp"
#include "tumor3d1d/species.hpp"

namespace tumor3d1d {

/// Dirichlet pressure on a set of boundary faces; every other boundary face is
/// zero-flux.
struct FlowBC {
  std::vector<std::pair<std::size_t, double>> dirichlet;  // (face, value)

  bool empty() const { return dirichlet.empty(); }

  DirichletLookup lookup(const Grid3D& g) const {
    if (dirichlet.empty()) return {};
    auto table = std::make_shared<std::vector<std::pair<bool, double>>>(g.num_faces(), std::pair{false, 0.0});
    for (const auto& [f, val] : dirichlet) (*table).at(f) = {true, val};
    return [table](std::size_t f, double& value) {
      const auto& [on, val] = (*table)[f];
      if (on) value = val;
      return on;
    };
  }

  /// Dirichlet on every boundary face with value g(face center).
  template <class F>
  static FlowBC everywhere(const Grid3D& grid, F&& g) {
    FlowBC bc;
    for (std::size_t f = 0; f < grid.num_faces(); ++f) {
      const auto info = grid.face(f);
      if (!(info.has_lower && info.has_upper)) bc.dirichlet.emplace_back(f, g(grid.face_center(f)));
    }
    return bc;
  }
};

/// Face values of the Korteweg forcing S_p, zero on boundary faces.
inline FaceField korteweg_source(const TissueState& st, const Parameters& prm) {
  const Grid3D& g = st.grid;
  FaceField out(g);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (!(info.has_lower && info.has_upper)) continue;
    const std::size_t lo = info.lower, up = info.upper;
    const double taxis = prm.chi_c * (st.phi_sigma[up] - st.phi_sigma[lo]) +
                         prm.chi_h * (st.phi_ECM[up] - st.phi_ECM[lo]);
    const double cP = 0.5 * (cutoff(st.phi_P[lo]) + cutoff(st.phi_P[up]));
    const double cH = 0.5 * (cutoff(st.phi_H[lo]) + cutoff(st.phi_H[up]));
    out[f] = -(cP * (st.mu_P[up] - st.mu_P[lo] + taxis) + cH * (st.mu_H[up] - st.mu_H[lo] + taxis)) / g.h;
  }
  return out;
}

/// TPFA system for -div(K grad p) = surface_source - div(K S_p) per unit
/// volume. Dirichlet faces are eliminated with a ghost cell.
inline linalg::LinearSystem assemble_tissue_pressure(const Grid3D& g, double K, const CellField& surface_source,
                                                     const FaceField& s_p, const FlowBC& bc) {
  const std::vector<double> coeff(g.num_faces(), K);
  auto sys = assemble_diffusion(g, coeff, bc.lookup(g));
  FaceField ks(g);
  for (std::size_t f = 0; f < g.num_faces(); ++f) ks[f] = K * s_p[f];
  const CellField div = divergence(ks);
  for (std::size_t c = 0; c < g.num_cells(); ++c) sys.rhs[c] += surface_source[c] - div[c];
  return sys;
}

/// Vessel leakage treated implicitly: L_p times the wall operator of the
/// coupling map on the matrix side and L_p times the wall load of p_v on the
/// right-hand side.
inline linalg::CsrMatrix assemble_leakage(const CouplingMap& map, double l_p) { return wall_operator(map, l_p); }

inline linalg::Vector leakage_rhs(const CouplingMap& map, double l_p, std::span<const double> p_v) {
  return wall_load(map, l_p, p_v);
}

/// v = -K (grad p - S_p) on faces. Dirichlet faces use the half-cell
/// distance to the boundary value; zero-flux faces get 0.
inline FaceField face_velocity(const CellField& p, const FaceField& s_p, double K, const FlowBC& bc = {}) {
  const Grid3D& g = p.grid;
  FaceField v(g);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (info.has_lower && info.has_upper) v[f] = -K * ((p[info.upper] - p[info.lower]) / g.h - s_p[f]);
  }
  for (const auto& [f, val] : bc.dirichlet) {
    const auto info = g.face(f);
    if (info.has_upper)  // lower domain boundary: ghost below
      v[f] = -K * (p[info.upper] - val) / (0.5 * g.h);
    else
      v[f] = -K * (val - p[info.lower]) / (0.5 * g.h);
  }
  return v;
}

}  // namespace tumor3d1d
