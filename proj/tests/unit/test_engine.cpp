#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "tumor3d1d/engine.hpp"

using namespace tumor3d1d;

namespace {

NetworkGraph vertical_vessel() {
  NetworkGraph net;
  net.nodes = {{0.9, 1.1, 0.1}, {0.9, 1.1, 1.9}};
  net.edges = {{0, 1, 0.1}};
  net.boundary = {{0, 5000.0, 1.0}, {1, 2000.0, std::nullopt}};
  return net;
}

EngineConfig small_config(double dt = 0.02, double t_end = 0.1) {
  EngineConfig cfg;
  cfg.time.dt = dt;
  cfg.time.t_end = t_end;
  cfg.solver.rel_tol = 1e-12;
  return cfg;
}

void seed_tumor(TissueState& st, Vec3 center, double radius) {
  for (std::size_t c = 0; c < st.grid.num_cells(); ++c) {
    const double r = norm(st.grid.cell_center(c) - center);
    st.phi_P[c] = initial_tumor_profile(r, radius, 0.05);
  }
  st.phi_sigma = CellField(st.grid, 0.6);
  st.phi_ECM = CellField(st.grid, 1.0);
}

Parameters coupled_parameters() {
  Parameters prm;
  prm.epsilon_P = prm.epsilon_H = 0.05;
  prm.K = 1e-2;
  prm.L_p = 1e-3;
  return prm;
}

}  // namespace

TEST(Engine, ZeroFluxTissueWithoutLeakageIsSingular) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  Parameters prm;
  prm.L_p = 0.0;
  EXPECT_THROW(Simulation(g, vertical_vessel(), prm, small_config()), SingularSystemError);
  EXPECT_THROW(Simulation(g, NetworkGraph{}, Parameters{}, small_config()), SingularSystemError);
  EngineConfig cfg = small_config();
  cfg.tissue_bc = FlowBC::everywhere(g, [](Vec3) { return 0.0; });
  EXPECT_NO_THROW(Simulation(g, vertical_vessel(), prm, cfg));
}

TEST(Engine, UniformStateWithoutSourcesIsAFixedPoint) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  EngineConfig cfg = small_config();
  cfg.flow_enabled = false;
  Simulation sim(g, NetworkGraph{}, without_sources(Parameters{}), cfg);
  auto& st = sim.state();
  st.phi_P = CellField(g, 0.3);
  st.phi_H = CellField(g, 0.1);
  st.phi_sigma = CellField(g, 0.5);
  st.phi_ECM = CellField(g, 0.9);
  sim.initialize();
  const TissueState before = st;
  sim.step();
  for (auto f : {&TissueState::phi_P, &TissueState::phi_H, &TissueState::phi_N, &TissueState::phi_sigma,
                 &TissueState::phi_ECM})
    EXPECT_LT(testing_support::max_abs_diff((st.*f).values, (before.*f).values), 1e-12);
  EXPECT_DOUBLE_EQ(st.t, 0.02);
}

TEST(Engine, DecoupledStepIsTheSequenceOfSpeciesUpdates) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  EngineConfig cfg = small_config();
  cfg.flow_enabled = false;
  Parameters prm;
  prm.epsilon_P = prm.epsilon_H = 0.1;
  Simulation sim(g, NetworkGraph{}, prm, cfg);
  seed_tumor(sim.state(), {1, 1, 1}, 0.7);
  sim.initialize();
  const TissueState old = sim.state();

  TissueState next = old;
  advance_ch_pair(old, next, cfg.time.dt, prm, cfg.solver);
  advance_necrotic_ecm(old, next, cfg.time.dt, prm);
  advance_rd(old, next, cfg.time.dt, CellField(g), prm, cfg.solver);
  next.mu_P = chemical_potential(next, Phase::P, prm);
  next.mu_H = chemical_potential(next, Phase::H, prm);

  sim.step();
  const TissueState& st = sim.state();
  for (auto f : {&TissueState::phi_P, &TissueState::phi_H, &TissueState::phi_N, &TissueState::phi_sigma,
                 &TissueState::phi_MDE, &TissueState::phi_TAF, &TissueState::phi_ECM, &TissueState::mu_P,
                 &TissueState::mu_H})
    EXPECT_EQ((st.*f).values, (next.*f).values);
}

TEST(Engine, RunReportsEveryStep) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  Simulation sim(g, vertical_vessel(), coupled_parameters(), small_config(0.02, 0.1));
  seed_tumor(sim.state(), {1.2, 1.0, 1.0}, 0.5);
  sim.set_initial_vessel_nutrient(0.6);
  sim.initialize();
  std::vector<std::size_t> steps;
  std::vector<double> times;
  run(sim, [&](std::size_t s, const Diagnostics& d) {
    steps.push_back(s);
    times.push_back(d.t);
    EXPECT_TRUE(d.all_finite());
    EXPECT_GE(d.fp_iters, 1u);
  });
  ASSERT_EQ(steps.size(), 6u);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    EXPECT_EQ(steps[i], i);
    EXPECT_NEAR(times[i], 0.02 * static_cast<double>(i), 1e-14);
  }
}

TEST(Engine, FlowSolveSatisfiesBothPressureSystems) {
  const Grid3D g = Grid3D::cube(2.0, 8);
  EngineConfig cfg = small_config();
  cfg.time.fixed_point_tol = 1e-10;
  cfg.time.fixed_point_max_iters = 200;  // block Gauss-Seidel contracts slowly at this K/L_p ratio
  Simulation sim(g, vertical_vessel(), coupled_parameters(), cfg);
  seed_tumor(sim.state(), {1.2, 1.0, 1.0}, 0.5);
  sim.initialize();
  const auto& net = sim.network();
  const auto& p_v = sim.vessel().p_v;
  for (double v : p_v) {
    EXPECT_GE(v, 2000.0 - 1e-6);
    EXPECT_LE(v, 5000.0 + 1e-6);
  }
  // fluid leaving the network equals fluid entering the tissue
  const auto bnd = net.boundary_lookup();
  double net_in = 0.0;
  const auto q = sim.vessel().v_v;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (bnd[net.edges[e].a] && bnd[net.edges[e].a]->pressure) net_in += q[e];
    if (bnd[net.edges[e].b] && bnd[net.edges[e].b]->pressure) net_in -= q[e];
  }
  const CellField div = divergence(sim.state().v);
  EXPECT_NEAR(div.integral(), net_in, 1e-6 * std::abs(q[0]));
}

TEST(Engine, TissueNutrientChangesOnlyThroughExchange) {
  const Grid3D g = Grid3D::cube(2.0, 8);
  Parameters prm = without_sources(coupled_parameters());
  Simulation sim(g, vertical_vessel(), prm, small_config(0.05, 0.2));
  sim.state().phi_sigma = CellField(g, 0.1);
  sim.set_initial_vessel_nutrient(0.9);
  sim.initialize();
  for (int n = 0; n < 4; ++n) {
    const double before = sim.state().phi_sigma.integral();
    const auto rep = sim.step();
    EXPECT_GT(rep.tissue_exchange, 0.0);
    EXPECT_LT(rep.vessel_budget.exchange, 0.0);
    EXPECT_NEAR(sim.state().phi_sigma.integral() - before, rep.tissue_exchange, 1e-9 * before);
  }
}

TEST(Engine, FullFixedPointConverges) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  EngineConfig cfg = small_config();
  cfg.time.scope = FixedPointScope::All;
  cfg.time.fixed_point_tol = 1e-9;
  Simulation sim(g, vertical_vessel(), coupled_parameters(), cfg);
  seed_tumor(sim.state(), {1.2, 1.0, 1.0}, 0.5);
  sim.set_initial_vessel_nutrient(0.6);
  sim.initialize();
  const auto rep = sim.step();
  EXPECT_GE(rep.outer_iterations, 2u);
  EXPECT_LT(rep.outer_iterations, cfg.time.fixed_point_max_iters);
}

TEST(Engine, RunsAreDeterministic) {
  const Grid3D g = Grid3D::cube(2.0, 6);
  auto once = [&] {
    Simulation sim(g, vertical_vessel(), coupled_parameters(), small_config(0.02, 0.06));
    seed_tumor(sim.state(), {1.2, 1.0, 1.0}, 0.5);
    sim.set_initial_vessel_nutrient(0.6);
    sim.initialize();
    std::vector<double> trace;
    run(sim, [&](std::size_t, const Diagnostics& d) {
      for (double v : {d.energy, d.mass_P, d.mass_sigma, d.mass_phi_v, d.p_min, d.p_max}) trace.push_back(v);
    });
    return trace;
  };
  EXPECT_EQ(once(), once());
}

TEST(Engine, EnergyHasTheGradientContribution) {
  const Grid3D g = Grid3D::cube(1.0, 4);
  TissueState st(g);
  st.phi_P = CellField::from_function(g, [](Vec3 x) { return x.x; });
  Parameters prm = without_sources(Parameters{});
  prm.C_psi = 0.0;
  prm.epsilon_P = 0.5;
  // 3 * 16 interior x-faces, each with (delta = h)^2 * h / 2 * eps^2
  const double h = 0.25;
  EXPECT_NEAR(compute_energy(st, prm), 48.0 * 0.5 * 0.25 * h * h * h, 1e-14);
}
