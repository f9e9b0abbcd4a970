// Time stepping of the coupled tissue/network system and its diagnostics.
//
// Each step runs, in order: the coupled flow solve (network and tissue
// pressure alternated to a fixed point), the nutrient exchange, the
// Cahn-Hilliard pair, the necrotic/ECM update, the reaction-diffusion
// species, vessel transport, and a recomputation of the chemical potentials.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumor3d1d/coupling.hpp"
#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/linalg.hpp"
#include "tumor3d1d/network.hpp"
#include "tumor3d1d/parameters.hpp"
#include "tumor3d1d/species.hpp"
#include "tumor3d1d/tissue_flow.hpp"

namespace tumor3d1d {

enum class FixedPointScope { Flow, All };

struct TimeLoopConfig {
  double dt = 0.025;
  double t_end = 5.0;
  double fixed_point_tol = 1e-8;
  std::size_t fixed_point_max_iters = 50;
  std::size_t output_every = 1;
  FixedPointScope scope = FixedPointScope::Flow;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("time: dt must be positive");
    if (!(t_end >= 0.0)) throw std::invalid_argument("time: t_end must be nonnegative");
    if (!(fixed_point_tol > 0.0)) throw std::invalid_argument("time: fixed_point_tol must be positive");
    if (fixed_point_max_iters == 0) throw std::invalid_argument("time: fixed_point_max_iters must be positive");
    if (output_every == 0) throw std::invalid_argument("time: output_every must be positive");
  }

  std::size_t num_steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }
};

struct EngineConfig {
  TimeLoopConfig time;
  linalg::SolverConfig solver;
  std::size_t n_theta = 8;
  FlowBC tissue_bc;          // empty: zero-flux tissue boundary (needs L_p > 0)
  bool flow_enabled = true;  // false keeps p, v, p_v and v_v frozen
};

class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(std::size_t iterations, double change)
      : std::runtime_error("fixed point did not converge after " + std::to_string(iterations) +
                           " iterations, last relative change " + std::to_string(change)),
        iterations(iterations),
        change(change) {}
  std::size_t iterations;
  double change;
};

struct FlowReport {
  std::size_t iterations = 0;
  double change = 0.0;
};

struct StepReport {
  FlowReport flow;
  std::size_t outer_iterations = 1;
  TransportBudget vessel_budget;
  double tissue_exchange = 0.0;  // nutrient entering the tissue, times dt
};

struct Diagnostics {
  double t = 0.0;
  double energy = 0.0;
  double mass_P = 0.0, mass_H = 0.0, mass_N = 0.0, mass_sigma = 0.0, mass_MDE = 0.0, mass_TAF = 0.0,
         mass_ECM = 0.0;
  double mass_phi_v = 0.0;
  double p_min = 0.0, p_max = 0.0, pv_min = 0.0, pv_max = 0.0;
  std::size_t fp_iters = 0;
  double phi_min = 0.0, phi_max = 0.0;  // over the seven volume fractions

  bool all_finite() const {
    for (double x : {t, energy, mass_P, mass_H, mass_N, mass_sigma, mass_MDE, mass_TAF, mass_ECM, mass_phi_v, p_min,
                     p_max, pv_min, pv_max, phi_min, phi_max})
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline constexpr const char* kDiagnosticsHeader =
    "t,E,mass_P,mass_H,mass_N,mass_sigma,mass_MDE,mass_TAF,mass_ECM,mass_phi_v,p_min,p_max,pv_min,pv_max,fp_iters";

/// Free energy: cell sums of the potential, the RD terms D/2 phi^2 and the
/// taxis coupling, plus eps^2/2 |grad phi|^2 over interior faces.
inline double compute_energy(const TissueState& st, const Parameters& prm) {
  const Grid3D& g = st.grid;
  const double vol = g.cell_volume();
  double e = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const double s = st.phi_P[c] + st.phi_H[c] + st.phi_N[c];
    e += potential(s, prm.C_psi) + 0.5 * prm.D_sigma * st.phi_sigma[c] * st.phi_sigma[c] +
         0.5 * prm.D_MDE * st.phi_MDE[c] * st.phi_MDE[c] + 0.5 * prm.D_TAF * st.phi_TAF[c] * st.phi_TAF[c] -
         (prm.chi_c * st.phi_sigma[c] + prm.chi_h * st.phi_ECM[c]) * (st.phi_P[c] + st.phi_H[c]);
  }
  e *= vol;
  const double eP = prm.epsilon_P * prm.epsilon_P, eH = prm.epsilon_H * prm.epsilon_H,
               eN = prm.epsilon_N * prm.epsilon_N;
  double grad = 0.0;
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (!(info.has_lower && info.has_upper)) continue;
    const std::size_t lo = info.lower, up = info.upper;
    const double dP = st.phi_P[up] - st.phi_P[lo], dH = st.phi_H[up] - st.phi_H[lo], dN = st.phi_N[up] - st.phi_N[lo];
    grad += eP * dP * dP + eH * dH * dH + eN * dN * dN;
  }
  // face volume h^3 times (delta / h)^2 = h * delta^2
  return e + 0.5 * g.h * grad;
}

namespace detail {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline double relative_change(std::span<const double> next, std::span<const double> prev) {
  return max_abs_diff(next, prev) / std::max(max_abs(next), std::numeric_limits<double>::min());
}

}  // namespace detail

/// Owns the discretization (grid, refined network, coupling map, cached
/// matrices) and the evolving tissue and vessel states.
class Simulation {
 public:
  Simulation(const Grid3D& grid, const NetworkGraph& network, const Parameters& prm, EngineConfig cfg)
      : grid_(grid), prm_(prm), cfg_(std::move(cfg)), state_(grid) {
    grid_.validate();
    cfg_.time.validate();
    network_ = network.edges.empty() ? network : refine(network, grid_.h);
    map_ = build_coupling_map(grid_, network_, {cfg_.n_theta, 0.0, 2});
    node_lengths_ = lumped_lengths(network_);
    vessel_ = VesselState::zeros(network_);
    for (const auto& b : network_.boundary) {
      if (b.pressure) vessel_.p_v[b.node] = *b.pressure;
      if (b.nutrient) vessel_.phi_v[b.node] = *b.nutrient;
    }
    if (prm_.L_sigma > 0.0 && !map_.points.empty()) uptake_ = wall_operator(map_, prm_.L_sigma);
    if (cfg_.flow_enabled) {
      if ((prm_.L_p == 0.0 || map_.points.empty()) && cfg_.tissue_bc.empty())
        throw SingularSystemError("tissue pressure: without vessel leakage a Dirichlet boundary patch is required");
      const std::vector<double> coeff(grid_.num_faces(), prm_.K);
      linalg::CsrMatrix base = assemble_diffusion(grid_, coeff, cfg_.tissue_bc.lookup(grid_)).matrix;
      tissue_matrix_ = prm_.L_p > 0.0 && !map_.points.empty()
                           ? linalg::add(1.0, base, 1.0, assemble_leakage(map_, prm_.L_p))
                           : std::move(base);
    }
  }

  const Grid3D& grid() const { return grid_; }
  const NetworkGraph& network() const { return network_; }
  const CouplingMap& coupling() const { return map_; }
  const Parameters& parameters() const { return prm_; }
  const EngineConfig& config() const { return cfg_; }
  const std::vector<double>& node_lengths() const { return node_lengths_; }
  TissueState& state() { return state_; }
  const TissueState& state() const { return state_; }
  VesselState& vessel() { return vessel_; }
  const VesselState& vessel() const { return vessel_; }
  std::size_t last_flow_iterations() const { return last_flow_iterations_; }

  /// Fills phi_v at free nodes with `value` (Dirichlet nodes keep theirs).
  void set_initial_vessel_nutrient(double value) {
    const auto bnd = network_.boundary_lookup();
    for (std::size_t i = 0; i < vessel_.phi_v.size(); ++i)
      if (!(bnd[i] && bnd[i]->nutrient)) vessel_.phi_v[i] = value;
  }

  /// Recomputes mu from the current fractions and, if flow is enabled, the
  /// pressures and velocities. Call after setting the initial condition.
  void initialize() {
    state_.mu_P = chemical_potential(state_, Phase::P, prm_);
    state_.mu_H = chemical_potential(state_, Phase::H, prm_);
    if (cfg_.flow_enabled) last_flow_iterations_ = solve_flow(state_, vessel_).iterations;
  }

  /// Alternates network and tissue pressure solves until the relative change
  /// of both drops below the tolerance, then updates v and v_v.
  FlowReport solve_flow(TissueState& st, VesselState& ves) const {
    FlowReport rep;
    if (!cfg_.flow_enabled) return rep;
    const FaceField s_p = korteweg_source(st, prm_);
    const auto base = assemble_tissue_pressure(grid_, prm_.K, CellField(grid_), s_p, cfg_.tissue_bc);
    const auto pieces = map_.exchange_pieces();
    const bool has_network = !network_.edges.empty();
    linalg::SolverConfig scfg = cfg_.solver;
    scfg.method = linalg::Method::CG;
    for (rep.iterations = 1;; ++rep.iterations) {
      double change = 0.0;
      if (has_network) {
        const auto pbar = circle_averages(st.p, map_);
        const auto sys = assemble_vgm_pressure(network_, pieces, pbar, prm_.L_p, prm_.mu_bl);
        linalg::Vector pv = ves.p_v;
        linalg::solve_into(sys.matrix, sys.rhs, pv, scfg);
        change = detail::relative_change(pv, ves.p_v);
        ves.p_v = std::move(pv);
      }
      linalg::Vector rhs = base.rhs;
      if (prm_.L_p > 0.0 && has_network) {
        const auto leak = leakage_rhs(map_, prm_.L_p, ves.p_v);
        for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] += leak[c];
      }
      linalg::Vector p = st.p.values;
      linalg::solve_into(tissue_matrix_, rhs, p, scfg);
      change = std::max(change, detail::relative_change(p, st.p.values));
      st.p.values = std::move(p);
      rep.change = change;
      if (prm_.L_p == 0.0 || !has_network) break;
      if (change < cfg_.time.fixed_point_tol) break;
      if (rep.iterations >= cfg_.time.fixed_point_max_iters) throw FixedPointError(rep.iterations, change);
    }
    st.v = face_velocity(st.p, s_p, prm_.K, cfg_.tissue_bc);
    if (has_network) ves.v_v = edge_flux(network_, ves.p_v, prm_.mu_bl);
    return rep;
  }

  /// Nutrient exchange between vessels and tissue for the given states.
  SurfaceSources nutrient_exchange(const TissueState& st, const VesselState& ves) const {
    const ExchangeParams ex{prm_.L_p, prm_.L_sigma, prm_.r_sigma};
    const auto flux = evaluate_point_fluxes(map_, st.p, st.phi_sigma, ves.p_v, ves.phi_v, ex);
    return accumulate_surface_sources(map_, flux.nutrient, node_lengths_);
  }

  StepReport step() {
    const double dt = cfg_.time.dt;
    const TissueState old = state_;
    const VesselState vold = vessel_;
    TissueState iterate = old;
    VesselState viter = vold;
    StepReport rep;
    const std::size_t max_outer = cfg_.time.scope == FixedPointScope::All ? cfg_.time.fixed_point_max_iters : 1;
    double change = 0.0;
    for (rep.outer_iterations = 1;; ++rep.outer_iterations) {
      const FlowReport flow = solve_flow(iterate, viter);
      rep.flow.iterations += flow.iterations;
      rep.flow.change = flow.change;
      // Permeation L_sigma (phi_v - sigma) acts on the new tissue nutrient;
      // explicitly it is unstable at any practical dt.
      const ExchangeParams ex{prm_.L_p, prm_.L_sigma, prm_.r_sigma};
      std::vector<double> flux =
          nutrient_flux_explicit_part(map_, iterate.p, iterate.phi_sigma, viter.p_v, viter.phi_v, ex);
      const SurfaceSources explicit_src = accumulate_surface_sources(map_, flux, node_lengths_);

      TissueState base = old;
      base.p = iterate.p;
      base.v = iterate.v;
      TissueState next = base;
      advance_ch_pair(base, next, dt, prm_, cfg_.solver);
      advance_necrotic_ecm(base, next, dt, prm_);
      advance_rd(base, next, dt, explicit_src.tissue, prm_, cfg_.solver, uptake_ ? &*uptake_ : nullptr);
      if (uptake_) add_nutrient_uptake(map_, next.phi_sigma, prm_.L_sigma, flux);
      const SurfaceSources src = accumulate_surface_sources(map_, flux, node_lengths_);
      rep.tissue_exchange = dt * src.tissue.integral();
      VesselState vnext = vold;
      vnext.p_v = viter.p_v;
      vnext.v_v = viter.v_v;
      if (!network_.edges.empty())
        rep.vessel_budget = advance_vessel_transport(network_, vnext, src.network, dt, prm_.D_v, cfg_.solver);
      next.mu_P = chemical_potential(next, Phase::P, prm_);
      next.mu_H = chemical_potential(next, Phase::H, prm_);
      next.t = old.t + dt;

      change = 0.0;
      if (max_outer > 1) {
        for (auto f : {&TissueState::phi_P, &TissueState::phi_H, &TissueState::phi_N, &TissueState::phi_sigma,
                       &TissueState::phi_MDE, &TissueState::phi_TAF, &TissueState::phi_ECM})
          change = std::max(change, detail::relative_change((next.*f).values, (iterate.*f).values));
        if (!vnext.phi_v.empty()) change = std::max(change, detail::relative_change(vnext.phi_v, viter.phi_v));
      }
      iterate = std::move(next);
      viter = std::move(vnext);
      if (max_outer == 1 || change < cfg_.time.fixed_point_tol) break;
      if (rep.outer_iterations >= max_outer) throw FixedPointError(rep.outer_iterations, change);
    }
    state_ = std::move(iterate);
    vessel_ = std::move(viter);
    last_flow_iterations_ = rep.flow.iterations;
    return rep;
  }

  Diagnostics diagnostics() const {
    Diagnostics d;
    const TissueState& st = state_;
    d.t = st.t;
    d.energy = compute_energy(st, prm_);
    d.mass_P = st.phi_P.integral();
    d.mass_H = st.phi_H.integral();
    d.mass_N = st.phi_N.integral();
    d.mass_sigma = st.phi_sigma.integral();
    d.mass_MDE = st.phi_MDE.integral();
    d.mass_TAF = st.phi_TAF.integral();
    d.mass_ECM = st.phi_ECM.integral();
    for (std::size_t i = 0; i < vessel_.phi_v.size(); ++i) d.mass_phi_v += node_lengths_[i] * vessel_.phi_v[i];
    d.p_min = st.p.min();
    d.p_max = st.p.max();
    if (!vessel_.p_v.empty()) {
      d.pv_min = *std::min_element(vessel_.p_v.begin(), vessel_.p_v.end());
      d.pv_max = *std::max_element(vessel_.p_v.begin(), vessel_.p_v.end());
    }
    d.fp_iters = last_flow_iterations_;
    d.phi_min = std::numeric_limits<double>::infinity();
    d.phi_max = -std::numeric_limits<double>::infinity();
    for (const CellField* f : {&st.phi_P, &st.phi_H, &st.phi_N, &st.phi_sigma, &st.phi_MDE, &st.phi_TAF, &st.phi_ECM}) {
      d.phi_min = std::min(d.phi_min, f->min());
      d.phi_max = std::max(d.phi_max, f->max());
    }
    return d;
  }

 private:
  Grid3D grid_;
  NetworkGraph network_;
  Parameters prm_;
  EngineConfig cfg_;
  CouplingMap map_;
  std::vector<double> node_lengths_;
  linalg::CsrMatrix tissue_matrix_;
  std::optional<linalg::CsrMatrix> uptake_;  // L_sigma wall operator, if any
  TissueState state_;
  VesselState vessel_;
  std::size_t last_flow_iterations_ = 0;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steps to t_end. `observer(step, diagnostics)` is called for the initial
/// state (step 0) and after every step. Aborts on non-finite values.
inline void run(Simulation& sim, const std::function<void(std::size_t, const Diagnostics&)>& observer) {
  const std::size_t n = sim.config().time.num_steps();
  auto check = [&](std::size_t step, const Diagnostics& d) {
    if (!d.all_finite() || !sim.state().all_finite())
      throw NonFiniteError("non-finite value at step " + std::to_string(step) + " (t = " + std::to_string(d.t) + ")");
  };
  Diagnostics d = sim.diagnostics();
  check(0, d);
  if (observer) observer(0, d);
  for (std::size_t s = 1; s <= n; ++s) {
    try {
      sim.step();
    } catch (const std::exception& e) {
      throw std::runtime_error("step " + std::to_string(s) + ": " + e.what());
    }
    d = sim.diagnostics();
    check(s, d);
    if (observer) observer(s, d);
  }
}

}  // namespace tumor3d1d
