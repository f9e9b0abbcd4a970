#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "tumor3d1d/grid.hpp"

using namespace tumor3d1d;

TEST(Grid, IndexRoundTripAndCenters) {
  const Grid3D g = Grid3D::cube(2.0, 5);
  EXPECT_DOUBLE_EQ(g.h, 0.4);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto [i, j, k] = g.ijk(c);
    EXPECT_EQ(g.index(i, j, k), c);
    EXPECT_EQ(g.locate(g.cell_center(c)), c);
  }
  EXPECT_EQ(g.locate({-1.0, 5.0, 0.0}), g.index(0, 4, 0));
  EXPECT_THROW(Grid3D::cube(1.0, 1), std::invalid_argument);
}

TEST(Grid, FacesAreConsistentWithCells) {
  const Grid3D g = Grid3D::cube(1.0, 4);
  EXPECT_EQ(g.num_faces(), 3u * 5u * 16u);
  std::size_t boundary = 0;
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (!(info.has_lower && info.has_upper)) ++boundary;
    const Vec3 fc = g.face_center(f);
    if (info.has_upper) {
      EXPECT_EQ(g.cell_face(info.upper, info.axis, false), f);
      EXPECT_NEAR(g.cell_center(info.upper)[info.axis] - fc[info.axis], 0.5 * g.h, 1e-15);
    }
    if (info.has_lower) {
      EXPECT_EQ(g.cell_face(info.lower, info.axis, true), f);
    }
  }
  EXPECT_EQ(boundary, 6u * 16u);
}

TEST(Grid, NeumannMatrixMatchesStencilRows) {
  const Grid3D g = Grid3D::cube(1.0, 4);
  const auto a = neumann_laplacian(g);
  a.check_invariants();
  EXPECT_TRUE(a.is_symmetric(1e-15));
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto row = laplacian_row(g, c, BoundaryCondition::neumann());
    EXPECT_DOUBLE_EQ(a.at(c, c), row.diagonal);
    for (const auto& [nb, v] : row.neighbors) EXPECT_DOUBLE_EQ(a.at(c, nb), v);
    double sum = 0.0;
    for (std::size_t k = a.row_offsets[c]; k < a.row_offsets[c + 1]; ++k) sum += a.values[k];
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(Grid, DirichletStencilRowGhostElimination) {
  const Grid3D g = Grid3D::cube(1.0, 3);
  const auto row = laplacian_row(g, g.index(0, 0, 0), BoundaryCondition::dirichlet(2.0));
  const double ih2 = 9.0;
  EXPECT_DOUBLE_EQ(row.diagonal, 3.0 * ih2 + 3.0 * 2.0 * ih2);
  EXPECT_DOUBLE_EQ(row.rhs, 3.0 * 2.0 * 2.0 * ih2);
  EXPECT_EQ(row.neighbors.size(), 3u);
  EXPECT_THROW(laplacian_row(g, 27, {}), std::out_of_range);
}

TEST(Grid, LinearFunctionIsReproducedWithDirichletFaces) {
  // Ghost elimination at the half-cell distance is exact for linear u.
  const Grid3D g = Grid3D::cube(2.0, 6);
  auto u = [](Vec3 x) { return 1.0 + 2.0 * x.x - 0.5 * x.y + 0.25 * x.z; };
  const std::vector<double> k(g.num_faces(), 3.0);
  const auto sys = assemble_diffusion(g, k, [&](std::size_t f, double& val) {
    const auto info = g.face(f);
    if (info.has_lower && info.has_upper) return false;
    val = u(g.face_center(f));
    return true;
  });
  const auto x = testing_support::dense_solve(testing_support::to_dense(sys.matrix), sys.rhs);
  for (std::size_t c = 0; c < g.num_cells(); ++c) EXPECT_NEAR(x[c], u(g.cell_center(c)), 1e-11);
}

TEST(Grid, DivergenceTheoremHoldsDiscretely) {
  const Grid3D g = Grid3D::cube(2.0, 5);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-1, 1);
  FaceField v(g);
  for (auto& x : v.values) x = d(rng);
  const CellField div = divergence(v);
  EXPECT_NEAR(div.integral(), boundary_outflow(v), 1e-12);
}

TEST(Grid, GradientOfLinearFieldIsExactOnInteriorFaces) {
  const Grid3D g = Grid3D::cube(1.0, 4);
  const auto u = CellField::from_function(g, [](Vec3 x) { return 3.0 * x.x - 2.0 * x.z; });
  const FaceField gu = gradient(u);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    const double expect = (info.has_lower && info.has_upper) ? (info.axis == 0 ? 3.0 : info.axis == 2 ? -2.0 : 0.0) : 0.0;
    EXPECT_NEAR(gu[f], expect, 1e-12);
  }
  EXPECT_NEAR(laplacian(u).integral(), 0.0, 1e-12);
}

TEST(Grid, TrilinearStencilIsAPartitionOfUnityAndExactForLinear) {
  const Grid3D g = Grid3D::cube(2.0, 8, {-1.0, 0.0, 0.5});
  auto lin = [](Vec3 x) { return 0.5 - x.x + 2.0 * x.y + 0.1 * x.z; };
  const auto u = CellField::from_function(g, lin);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    // stay inside the cell-center hull where interpolation is exact
    const Vec3 p{-1.0 + g.h * (0.5 + 7.0 * d(rng)), g.h * (0.5 + 7.0 * d(rng)), 0.5 + g.h * (0.5 + 7.0 * d(rng))};
    const auto st = trilinear_stencil(g, p);
    double sum = 0.0;
    for (double w : st.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(sample_trilinear(u, p), lin(p), 1e-12);
  }
  // outside the hull the value is extrapolated constantly
  EXPECT_NEAR(sample_trilinear(u, {-1.0, 0.0, 0.5}), u[0], 1e-12);
}

TEST(Grid, UpwindDivergenceConservesAndPicksUpwindValues) {
  const Grid3D g = Grid3D::cube(1.0, 4);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(-1, 1);
  CellField phi(g);
  for (auto& x : phi.values) x = d(rng);
  FaceField v(g);
  for (auto& x : v.values) x = d(rng);
  EXPECT_NEAR(upwind_divergence(phi, v).sum(), 0.0, 1e-12);

  const std::size_t f = g.face_index(0, 2, 1, 1);
  const auto info = g.face(f);
  v[f] = 1.0;
  EXPECT_EQ(upwind_face_value(phi, v, f), phi[info.lower]);
  v[f] = -1.0;
  EXPECT_EQ(upwind_face_value(phi, v, f), phi[info.upper]);

  // constant field in a uniform flow: interior cells see no net flux
  const CellField one(g, 1.0);
  FaceField ux(g);
  for (std::size_t ff = 0; ff < g.faces_per_axis(); ++ff) ux[ff] = 0.7;
  const CellField div = upwind_divergence(one, ux);
  EXPECT_NEAR(div[g.index(1, 2, 2)], 0.0, 1e-14);
}
