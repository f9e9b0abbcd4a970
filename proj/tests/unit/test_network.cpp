#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tumor3d1d/network.hpp"

using namespace tumor3d1d;

namespace {

NetworkGraph straight(double p_a, double p_b, std::size_t segments, double radius = 0.05) {
  NetworkGraph net;
  for (std::size_t i = 0; i <= segments; ++i)
    net.nodes.push_back({0.0, 0.0, 2.0 * static_cast<double>(i) / static_cast<double>(segments)});
  for (std::size_t i = 0; i < segments; ++i) net.edges.push_back({i, i + 1, radius});
  net.boundary = {{0, p_a, 1.0}, {segments, p_b, std::nullopt}};
  return net;
}

// Inlet 0 -> junction 1 -> outlets 2, 3.
NetworkGraph y_junction() {
  NetworkGraph net;
  net.nodes = {{0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {2, -0.5, 0.3}};
  net.edges = {{0, 1, 0.06}, {1, 2, 0.04}, {1, 3, 0.05}};
  net.boundary = {{0, 9000.0, 1.0}, {2, 3000.0, std::nullopt}, {3, 4000.0, std::nullopt}};
  return net;
}

}  // namespace

TEST(Network, ConductanceIsPoiseuille) {
  EXPECT_DOUBLE_EQ(conductance(0.1, 2.0), std::numbers::pi * 1e-4 / 16.0);
}

TEST(Network, RefineKeepsOriginalNodesAndSplitsEvenly) {
  NetworkGraph net = y_junction();
  const NetworkGraph fine = refine(net, 0.25);
  for (std::size_t i = 0; i < net.nodes.size(); ++i) EXPECT_EQ(fine.nodes[i], net.nodes[i]);
  EXPECT_EQ(fine.boundary, net.boundary);
  double total = 0.0, fine_total = 0.0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) total += net.length(e);
  for (std::size_t e = 0; e < fine.edges.size(); ++e) {
    EXPECT_LE(fine.length(e), 0.25 + 1e-12);
    fine_total += fine.length(e);
  }
  EXPECT_NEAR(fine_total, total, 1e-12);
  std::size_t expected = 0;
  for (std::size_t e = 0; e < net.edges.size(); ++e)
    expected += static_cast<std::size_t>(std::ceil(net.length(e) / 0.25 - 1e-9));
  EXPECT_EQ(fine.edges.size(), expected);
  EXPECT_TRUE(validate_network(fine).ok());
  EXPECT_THROW(refine(net, 0.0), std::invalid_argument);
}

TEST(Network, LumpedLengthsPartitionTheNetwork) {
  const NetworkGraph net = refine(y_junction(), 0.1);
  const auto l = lumped_lengths(net);
  double s = 0.0, total = 0.0;
  for (double v : l) s += v;
  for (std::size_t e = 0; e < net.edges.size(); ++e) total += net.length(e);
  EXPECT_NEAR(s, total, 1e-12);
}

TEST(Network, PressureWithoutLeakageIsLinearAlongAVessel) {
  const NetworkGraph net = straight(10000.0, 5000.0, 16);
  const auto sys = assemble_vgm_pressure(net, {}, {}, 0.0, 1.0);
  EXPECT_TRUE(sys.matrix.is_symmetric(1e-14));
  const auto p = testing_support::dense_solve(testing_support::to_dense(sys.matrix), sys.rhs);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = net.nodes[i].z;
    EXPECT_NEAR(p[i], 10000.0 - 2500.0 * z, 1e-9 * 10000.0);
  }
  const auto q = edge_flux(net, p, 1.0);
  for (double v : q) EXPECT_GT(v, 0.0);  // flows a -> b, from high to low pressure
}

TEST(Network, JunctionConservesFlux) {
  const NetworkGraph net = y_junction();
  const auto sys = assemble_vgm_pressure(net, {}, {}, 0.0, 1.0);
  linalg::SolverConfig cfg;
  cfg.rel_tol = 1e-14;
  const auto p = linalg::solve(sys.matrix, sys.rhs, cfg).x;
  const auto q = edge_flux(net, p, 1.0);
  EXPECT_NEAR(q[0] - q[1] - q[2], 0.0, 1e-10 * std::max({std::abs(q[0]), std::abs(q[1]), std::abs(q[2])}));
  // independent closed form: p1 = sum(t_i p_i) / sum(t_i)
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < 3; ++e) {
    const double t = conductance(net.edges[e].radius, 1.0) / net.length(e);
    const std::size_t other = e == 0 ? 0 : net.edges[e].b;
    num += t * *net.boundary_lookup()[other]->pressure;
    den += t;
  }
  EXPECT_NEAR(p[1], num / den, 1e-8);
}

TEST(Network, LeakagePullsPressureTowardTissue) {
  const NetworkGraph net = straight(10000.0, 10000.0, 8);
  std::vector<ExchangePiece> pieces;
  const auto l = lumped_lengths(net);
  for (std::size_t i = 0; i < net.nodes.size(); ++i) pieces.push_back({i, l[i], 0.05});
  const std::vector<double> pbar(pieces.size(), 0.0);
  const auto sys = assemble_vgm_pressure(net, pieces, pbar, 1e-3, 1.0);
  const auto p = testing_support::dense_solve(testing_support::to_dense(sys.matrix), sys.rhs);
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    EXPECT_LT(p[i], 10000.0);
    EXPECT_GT(p[i], 0.0);
  }
  EXPECT_NEAR(p[3], p[5], 1e-9 * 10000.0);  // symmetric about the midpoint
}

TEST(Network, NoPressureConditionIsSingular) {
  NetworkGraph net = straight(1.0, 2.0, 2);
  for (auto& b : net.boundary) b.pressure.reset();
  EXPECT_THROW(assemble_vgm_pressure(net, {}, {}, 0.0, 1.0), SingularSystemError);
}

TEST(Network, TransportKeepsAConstantStateAndBalancesMass) {
  NetworkGraph net = refine(y_junction(), 0.2);
  VesselState st = VesselState::zeros(net);
  const auto sys = assemble_vgm_pressure(net, {}, {}, 0.0, 1.0);
  st.p_v = linalg::solve(sys.matrix, sys.rhs, {}).x;
  st.v_v = edge_flux(net, st.p_v, 1.0);
  const double vmax = testing_support::max_abs(st.v_v);
  const double dt = 0.5 * 0.2 / (2.0 * vmax);
  std::fill(st.phi_v.begin(), st.phi_v.end(), 1.0);
  const std::vector<double> no_sink(net.nodes.size(), 0.0);
  advance_vessel_transport(net, st, no_sink, dt, 0.1);
  for (double v : st.phi_v) EXPECT_NEAR(v, 1.0, 1e-9);

  // mass budget with a sink and a non-uniform state
  for (std::size_t i = 0; i < st.phi_v.size(); ++i) st.phi_v[i] = i == 0 ? 1.0 : 0.2 + 0.01 * static_cast<double>(i % 7);
  std::vector<double> sink(net.nodes.size());
  for (std::size_t i = 0; i < sink.size(); ++i) sink[i] = -0.3 * st.phi_v[i];
  const auto len = lumped_lengths(net);
  const auto bnd = net.boundary_lookup();
  auto mass = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < len.size(); ++i)
      if (!(bnd[i] && bnd[i]->nutrient)) m += len[i] * st.phi_v[i];
    return m;
  };
  const double before = mass();
  linalg::SolverConfig cfg;
  cfg.rel_tol = 1e-13;
  const auto budget = advance_vessel_transport(net, st, sink, dt, 0.1, cfg);
  EXPECT_NEAR(mass() - before, budget.inflow - budget.outflow + budget.exchange, 1e-10);
  EXPECT_NEAR(st.phi_v[0], 1.0, 0.0);
}

TEST(Network, TransportRejectsCflViolation) {
  NetworkGraph net = straight(10000.0, 5000.0, 4);
  VesselState st = VesselState::zeros(net);
  const auto sys = assemble_vgm_pressure(net, {}, {}, 0.0, 1.0);
  st.p_v = linalg::solve(sys.matrix, sys.rhs, {}).x;
  st.v_v = edge_flux(net, st.p_v, 1.0);
  const double dt = 10.0 * 0.5 / st.v_v[0];
  EXPECT_GT(transport_courant(net, st.v_v, dt), 1.0);
  const std::vector<double> sink(net.nodes.size(), 0.0);
  EXPECT_THROW(advance_vessel_transport(net, st, sink, dt, 0.0), CflError);
}

TEST(Network, ValidationReportsViolations) {
  EXPECT_TRUE(validate_network(y_junction()).ok());

  NetworkGraph bad = y_junction();
  bad.edges[1].radius = 0.0;
  EXPECT_FALSE(validate_network(bad).ok());

  NetworkGraph loose = y_junction();
  loose.nodes.push_back({5, 5, 5});
  EXPECT_FALSE(validate_network(loose).ok());

  NetworkGraph missing_bc = y_junction();
  missing_bc.boundary.pop_back();
  EXPECT_FALSE(validate_network(missing_bc).ok());

  NetworkGraph interior_bc = y_junction();
  interior_bc.boundary.push_back({1, 1.0, std::nullopt});
  EXPECT_FALSE(validate_network(interior_bc).ok());

  // two separate vessels are fine as long as each has a pressure value
  NetworkGraph two = straight(2.0, 1.0, 1);
  two.nodes.push_back({1, 0, 0});
  two.nodes.push_back({1, 0, 1});
  two.edges.push_back({2, 3, 0.1});
  two.boundary.push_back({2, std::nullopt, 0.0});
  two.boundary.push_back({3, std::nullopt, std::nullopt});
  EXPECT_FALSE(validate_network(two).ok());
  two.boundary.back().pressure = 3.0;
  EXPECT_TRUE(validate_network(two).ok());
}

TEST(Network, RadiusStats) {
  const auto s = radius_stats(y_junction());
  EXPECT_DOUBLE_EQ(s.max, 0.06);
  EXPECT_DOUBLE_EQ(s.min, 0.04);
  EXPECT_NEAR(s.mean, 0.05, 1e-15);
}
