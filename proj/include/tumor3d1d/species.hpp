// Tissue species: the Cahn-Hilliard pair (proliferative, hypoxic), necrotic
// and ECM ODEs, and the nutrient/MDE/TAF reaction-diffusion equations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/linalg.hpp"
#include "tumor3d1d/network.hpp"
#include "tumor3d1d/parameters.hpp"

namespace tumor3d1d {

struct TissueState {
  Grid3D grid;
  CellField phi_P, phi_H, phi_N, phi_sigma, phi_MDE, phi_TAF, phi_ECM;
  CellField mu_P, mu_H;
  CellField p;
  FaceField v;
  double t = 0.0;

  TissueState() = default;
  explicit TissueState(const Grid3D& g)
      : grid(g), phi_P(g), phi_H(g), phi_N(g), phi_sigma(g), phi_MDE(g), phi_TAF(g), phi_ECM(g), mu_P(g),
        mu_H(g), p(g), v(g) {}

  CellField phi_T() const {
    CellField out(grid);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = phi_P[c] + phi_H[c] + phi_N[c];
    return out;
  }

  bool all_finite() const {
    for (const CellField* f : {&phi_P, &phi_H, &phi_N, &phi_sigma, &phi_MDE, &phi_TAF, &phi_ECM, &mu_P, &mu_H, &p})
      if (!f->all_finite()) return false;
    return std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); });
  }
};

inline double cutoff(double x) { return std::clamp(x, 0.0, 1.0); }

inline CellField cutoff(const CellField& f) {
  CellField out = f;
  for (double& x : out.values) x = cutoff(x);
  return out;
}

/// Step with H(0) = 1 for eps == 0, logistic sigmoid of width eps otherwise.
inline double heaviside(double x, double eps) {
  if (eps < 0.0) throw std::invalid_argument("heaviside: width must be nonnegative");
  if (eps == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-x / eps));
}

/// Double well C s^2 (1-s)^2 on [0,1], extended quadratically outside.
inline double potential(double s, double c_psi) {
  if (s < 0.0) return c_psi * s * s;
  if (s > 1.0) return c_psi * (1.0 - s) * (1.0 - s);
  return c_psi * s * s * (1.0 - s) * (1.0 - s);
}

inline double potential_derivative(double s, double c_psi) {
  if (s < 0.0) return 2.0 * c_psi * s;
  if (s > 1.0) return -2.0 * c_psi * (1.0 - s);
  return 2.0 * c_psi * s * (1.0 - s) * (1.0 - 2.0 * s);
}

struct PotentialValues {
  double psi = 0.0;
  double d_P = 0.0, d_H = 0.0, d_N = 0.0;
};

/// The potential depends on the sum phi_P + phi_H + phi_N only, so all three
/// partial derivatives coincide.
inline PotentialValues potential_and_derivatives(double phi_P, double phi_H, double phi_N, double c_psi) {
  const double s = phi_P + phi_H + phi_N;
  const double d = potential_derivative(s, c_psi);
  return {potential(s, c_psi), d, d, d};
}

inline double ch_mobility(double phi, double m, double m_min) {
  const double c = cutoff(phi);
  return std::max(m_min, m * c * c * (1.0 - c) * (1.0 - c));
}

struct SpeciesValues {
  double P = 0.0, H = 0.0, N = 0.0, sigma = 0.0, MDE = 0.0, TAF = 0.0, ECM = 0.0;
};

/// Source terms with every volume fraction in a product replaced by its
/// cut-off value. Exchange terms are computed once and added with opposite
/// signs so that S_P + S_H + S_N + S_sigma + S_ECM cancels exactly.
inline SpeciesValues eval_sources(const SpeciesValues& phi, const Parameters& prm) {
  const double eps = prm.epsilon_heaviside;
  const double P = cutoff(phi.P), H = cutoff(phi.H), sig = cutoff(phi.sigma);
  const double MDE = cutoff(phi.MDE), TAF = cutoff(phi.TAF), ECM = cutoff(phi.ECM);
  const double free = cutoff(1.0 - (phi.P + phi.H + phi.N));

  const double growth_P = prm.lambda_P * sig * P * free;
  const double growth_H = prm.lambda_Ph * sig * H * free;
  const double apoptosis_P = prm.lambda_A * P;
  const double apoptosis_H = prm.lambda_Ah * H;
  const double p_to_h = prm.lambda_PH * heaviside(prm.sigma_PH - phi.sigma, eps) * P;
  const double h_to_p = prm.lambda_HP * heaviside(phi.sigma - prm.sigma_HP, eps) * H;
  const double h_to_n = prm.lambda_HN * heaviside(prm.sigma_HN - phi.sigma, eps) * H;
  const double ecm_decay = prm.lambda_ECMD * ECM * MDE;
  const double ecm_growth = prm.lambda_ECMP * sig * (1.0 - ECM) * heaviside(phi.ECM - prm.phi_ECMP, eps);

  SpeciesValues s;
  s.P = growth_P - apoptosis_P - p_to_h + h_to_p;
  s.H = growth_H - apoptosis_H + p_to_h - h_to_p - h_to_n;
  s.N = h_to_n;
  s.sigma = -growth_P - growth_H + apoptosis_P + apoptosis_H + ecm_decay - ecm_growth;
  s.ECM = -ecm_decay + ecm_growth;
  s.MDE = -prm.lambda_MDED * MDE + prm.lambda_MDEP * (P + H) * ECM * prm.sigma_HP / (prm.sigma_HP + sig) * (1.0 - MDE) -
          ecm_decay;
  s.TAF = prm.lambda_TAFP * (1.0 - TAF) * H * heaviside(phi.H - prm.phi_HP, eps) - prm.lambda_TAFD * TAF;
  return s;
}

inline SpeciesValues cell_values(const TissueState& st, std::size_t c) {
  return {st.phi_P[c], st.phi_H[c], st.phi_N[c], st.phi_sigma[c], st.phi_MDE[c], st.phi_TAF[c], st.phi_ECM[c]};
}

/// Copy of prm with every reaction rate set to zero.
inline Parameters without_sources(Parameters prm) {
  for (double Parameters::*rate :
       {&Parameters::lambda_P, &Parameters::lambda_Ph, &Parameters::lambda_A, &Parameters::lambda_Ah,
        &Parameters::lambda_PH, &Parameters::lambda_HP, &Parameters::lambda_HN, &Parameters::lambda_ECMD,
        &Parameters::lambda_ECMP, &Parameters::lambda_MDED, &Parameters::lambda_MDEP, &Parameters::lambda_TAFP,
        &Parameters::lambda_TAFD})
    prm.*rate = 0.0;
  return prm;
}

enum class Phase { P, H };

/// mu = Psi'(phi_T) - eps^2 Lap(phi) - chi_c sigma - chi_h ECM with the
/// Neumann 7-point Laplacian.
inline CellField chemical_potential(const TissueState& st, Phase which, const Parameters& prm) {
  const CellField& phi = which == Phase::P ? st.phi_P : st.phi_H;
  const double eps = which == Phase::P ? prm.epsilon_P : prm.epsilon_H;
  const CellField lap = laplacian(phi);
  CellField mu(st.grid);
  for (std::size_t c = 0; c < mu.size(); ++c) {
    const double s = st.phi_P[c] + st.phi_H[c] + st.phi_N[c];
    mu[c] = potential_derivative(s, prm.C_psi) - eps * eps * lap[c] - prm.chi_c * st.phi_sigma[c] -
            prm.chi_h * st.phi_ECM[c];
  }
  return mu;
}

inline void check_convection_cfl(const FaceField& v, double dt) {
  const double courant = dt * v.max_abs() / v.grid.h;
  if (courant > 1.0) throw CflError("tissue convection CFL violated: courant number " + std::to_string(courant));
}

/// Face mobilities: arithmetic mean of the two cell values.
inline std::vector<double> face_mobility(const CellField& phi, double m, double m_min) {
  const Grid3D& g = phi.grid;
  std::vector<double> out(g.num_faces(), 0.0);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (info.has_lower && info.has_upper)
      out[f] = 0.5 * (ch_mobility(phi[info.lower], m, m_min) + ch_mobility(phi[info.upper], m, m_min));
  }
  return out;
}

struct ChReport {
  std::size_t iterations_P = 0, iterations_H = 0;
};

namespace detail {

// One convex-split step for a single phase. With A = -div(m grad .) and
// L = -Lap (both Neumann), the pair
//   phi = r1 - dt A mu,   mu = Sc phi + eps^2 L phi + e
// is solved for phi after eliminating mu; phi is then recomputed from mu so
// that the mass balance holds to rounding.
inline std::size_t ch_single(const CellField& phi_old, const CellField& phi_T_old, const CellField& source,
                             const TissueState& old, double m, double eps, double dt, const Parameters& prm,
                             const linalg::SolverConfig& cfg, CellField& phi_new, CellField& mu_new) {
  const Grid3D& g = phi_old.grid;
  const std::size_t nc = g.num_cells();
  const double sc = prm.s_stab * prm.C_psi;
  const CellField conv = upwind_divergence(cutoff(phi_old), old.v);

  linalg::Vector r1(nc), e(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    r1[c] = phi_old[c] + dt * (source[c] - conv[c]);
    e[c] = potential_derivative(phi_T_old[c], prm.C_psi) - sc * phi_old[c] - prm.chi_c * old.phi_sigma[c] -
           prm.chi_h * old.phi_ECM[c];
  }
  const auto mob = face_mobility(phi_old, m, prm.m_min);
  const linalg::CsrMatrix A = assemble_diffusion(g, mob).matrix;
  const linalg::CsrMatrix L = neumann_laplacian(g);
  const linalg::CsrMatrix AL = linalg::multiply(A, L);
  linalg::CsrMatrix lhs = linalg::add(1.0, linalg::CsrMatrix::identity(nc), dt * sc, A);
  lhs = linalg::add(1.0, lhs, dt * eps * eps, AL);

  const linalg::Vector Ae = linalg::spmv(A, e);
  linalg::Vector b(nc);
  for (std::size_t c = 0; c < nc; ++c) b[c] = r1[c] - dt * Ae[c];

  linalg::SolverConfig scfg = cfg;
  scfg.method = linalg::Method::BiCGStab;
  linalg::Vector x = phi_old.values;
  const auto rep = linalg::solve_into(lhs, b, x, scfg);

  const linalg::Vector Lx = linalg::spmv(L, x);
  mu_new = CellField(g);
  for (std::size_t c = 0; c < nc; ++c) mu_new[c] = sc * x[c] + eps * eps * Lx[c] + e[c];
  const linalg::Vector Amu = linalg::spmv(A, mu_new.values);
  phi_new = CellField(g);
  for (std::size_t c = 0; c < nc; ++c) phi_new[c] = r1[c] - dt * Amu[c];
  return rep.iterations;
}

}  // namespace detail

/// Advances phi_P and phi_H (and their potentials) by one step. Both phases
/// use the old total tumor fraction, old mobilities and old velocity.
inline ChReport advance_ch_pair(const TissueState& old, TissueState& next, double dt, const Parameters& prm,
                                const linalg::SolverConfig& cfg = {}) {
  check_convection_cfl(old.v, dt);
  const Grid3D& g = old.grid;
  CellField sP(g), sH(g);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto s = eval_sources(cell_values(old, c), prm);
    sP[c] = s.P;
    sH[c] = s.H;
  }
  const CellField phi_T = old.phi_T();
  ChReport rep;
  rep.iterations_P =
      detail::ch_single(old.phi_P, phi_T, sP, old, prm.M_P, prm.epsilon_P, dt, prm, cfg, next.phi_P, next.mu_P);
  rep.iterations_H =
      detail::ch_single(old.phi_H, phi_T, sH, old, prm.M_H, prm.epsilon_H, dt, prm, cfg, next.phi_H, next.mu_H);
  return rep;
}

inline ChReport advance_ch_pair(TissueState& state, double dt, const Parameters& prm,
                                const linalg::SolverConfig& cfg = {}) {
  const TissueState old = state;
  return advance_ch_pair(old, state, dt, prm, cfg);
}

/// Explicit Euler for the necrotic fraction and the ECM density.
inline void advance_necrotic_ecm(const TissueState& old, TissueState& next, double dt, const Parameters& prm) {
  for (std::size_t c = 0; c < old.grid.num_cells(); ++c) {
    const auto s = eval_sources(cell_values(old, c), prm);
    next.phi_N[c] = old.phi_N[c] + dt * s.N;
    next.phi_ECM[c] = old.phi_ECM[c] + dt * s.ECM;
  }
}

inline void advance_necrotic_ecm(TissueState& state, double dt, const Parameters& prm) {
  const TissueState old = state;
  advance_necrotic_ecm(old, state, dt, prm);
}

namespace detail {

// (I + dt*(k*L + extra)) u = rhs with L the Neumann -Laplacian; u is
// recomputed as rhs - dt*(k*L + extra) u so that the diffusive part moves no
// mass beyond rounding.
inline linalg::SolveReport implicit_diffusion(const CellField& warm, const linalg::Vector& rhs, double k, double dt,
                                              const linalg::SolverConfig& cfg, CellField& out,
                                              const linalg::CsrMatrix* extra = nullptr) {
  const Grid3D& g = warm.grid;
  const std::size_t nc = g.num_cells();
  linalg::CsrMatrix op = linalg::scaled(k, neumann_laplacian(g));
  if (extra) op = linalg::add(1.0, op, 1.0, *extra);
  const linalg::CsrMatrix lhs = linalg::add(1.0, linalg::CsrMatrix::identity(nc), dt, op);
  linalg::SolverConfig scfg = cfg;
  scfg.method = linalg::Method::CG;
  linalg::Vector x = warm.values;
  const auto rep = linalg::solve_into(lhs, rhs, x, scfg);
  // rhs - dt op x keeps the diffusive flux balance exact up to round-off
  const linalg::Vector opx = linalg::spmv(op, x);
  out = CellField(g);
  for (std::size_t c = 0; c < nc; ++c) out[c] = rhs[c] - dt * opx[c];
  return rep;
}

}  // namespace detail

/// Nutrient, MDE and TAF. Nutrient: implicit diffusion, explicit upwind
/// convection of C(sigma) v, explicit cross-diffusion, explicit reaction and
/// vessel exchange (surface_source, per unit volume). If `uptake` is given,
/// uptake * sigma is an additional implicit sink in the nutrient equation.
/// MDE and TAF: implicit diffusion with explicit reactions. Zero-flux
/// boundaries throughout.
inline void advance_rd(const TissueState& old, TissueState& next, double dt, const CellField& surface_source,
                       const Parameters& prm, const linalg::SolverConfig& cfg = {},
                       const linalg::CsrMatrix* uptake = nullptr) {
  check_convection_cfl(old.v, dt);
  const Grid3D& g = old.grid;
  const std::size_t nc = g.num_cells();
  const CellField conv = upwind_divergence(cutoff(old.phi_sigma), old.v);
  CellField tumor(g);
  for (std::size_t c = 0; c < nc; ++c) tumor[c] = old.phi_P[c] + old.phi_H[c];
  const CellField lap_tumor = laplacian(tumor);

  linalg::Vector r_sigma(nc), r_mde(nc), r_taf(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto s = eval_sources(cell_values(old, c), prm);
    r_sigma[c] = old.phi_sigma[c] +
                 dt * (-conv[c] - prm.chi_c * prm.m_sigma * lap_tumor[c] + s.sigma + surface_source[c]);
    r_mde[c] = old.phi_MDE[c] + dt * s.MDE;
    r_taf[c] = old.phi_TAF[c] + dt * s.TAF;
  }
  detail::implicit_diffusion(old.phi_sigma, r_sigma, prm.D_sigma * prm.m_sigma, dt, cfg, next.phi_sigma, uptake);
  detail::implicit_diffusion(old.phi_MDE, r_mde, prm.D_MDE * prm.m_MDE, dt, cfg, next.phi_MDE);
  detail::implicit_diffusion(old.phi_TAF, r_taf, prm.D_TAF * prm.m_TAF, dt, cfg, next.phi_TAF);
}

inline void advance_rd(TissueState& state, double dt, const CellField& surface_source, const Parameters& prm,
                       const linalg::SolverConfig& cfg = {}) {
  const TissueState old = state;
  advance_rd(old, state, dt, surface_source, prm, cfg);
}

/// Radially symmetric tumor seed: 1 in the core, a tanh transition of width
/// w = 2 eps_P that ends three widths inside the ball, 0 outside radius r0.
inline double initial_tumor_profile(double r, double r0, double epsilon_P) {
  if (r > r0) return 0.0;
  const double w = 2.0 * epsilon_P;
  return cutoff(0.5 - 0.5 * std::tanh((r - r0 + 3.0 * w) / w));
}

}  // namespace tumor3d1d
