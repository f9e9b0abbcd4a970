// Uniform cubic mesh, cell/face indexing and the discrete operators shared by
// every 3D field: 7-point Laplacian (TPFA), face gradients, divergence,
// trilinear sampling and first-order upwinding.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tumor3d1d/linalg.hpp"

namespace tumor3d1d {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](std::size_t a) { return a == 0 ? x : (a == 1 ? y : z); }
  double operator[](std::size_t a) const { return a == 0 ? x : (a == 1 ? y : z); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

struct CellIndex {
  std::size_t i, j, k;
};

/// n^3 cubic cells of edge h starting at origin.
struct Grid3D {
  Vec3 origin{};
  std::size_t n = 2;
  double h = 1.0;

  static Grid3D cube(double length, std::size_t cells, Vec3 origin = {}) {
    Grid3D g{origin, cells, length / static_cast<double>(cells)};
    g.validate();
    return g;
  }

  void validate() const {
    if (n < 2) throw std::invalid_argument("grid: need at least 2 cells per axis");
    if (!(h > 0.0)) throw std::invalid_argument("grid: cell size must be positive");
  }

  std::size_t num_cells() const { return n * n * n; }
  double extent() const { return static_cast<double>(n) * h; }
  double cell_volume() const { return h * h * h; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + n * (j + n * k); }
  CellIndex ijk(std::size_t c) const { return {c % n, (c / n) % n, c / (n * n)}; }

  Vec3 cell_center(std::size_t c) const {
    const auto [i, j, k] = ijk(c);
    return {origin.x + (static_cast<double>(i) + 0.5) * h, origin.y + (static_cast<double>(j) + 0.5) * h,
            origin.z + (static_cast<double>(k) + 0.5) * h};
  }

  Vec3 clamp(Vec3 p) const {
    for (std::size_t a = 0; a < 3; ++a) p[a] = std::clamp(p[a], origin[a], origin[a] + extent());
    return p;
  }

  bool contains(Vec3 p) const {
    for (std::size_t a = 0; a < 3; ++a)
      if (p[a] < origin[a] || p[a] > origin[a] + extent()) return false;
    return true;
  }

  /// Cell containing p after clamping to the domain.
  std::size_t locate(Vec3 p) const {
    p = clamp(p);
    std::array<std::size_t, 3> idx{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double u = std::floor((p[a] - origin[a]) / h);
      idx[a] = static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(n - 1)));
    }
    return index(idx[0], idx[1], idx[2]);
  }

  // Faces: for each axis a, faces are indexed by (i, j, k) where the
  // coordinate along a runs over [0, n] and the other two over [0, n).
  std::size_t faces_per_axis() const { return (n + 1) * n * n; }
  std::size_t num_faces() const { return 3 * faces_per_axis(); }

  std::size_t face_index(std::size_t axis, std::size_t i, std::size_t j, std::size_t k) const {
    const std::size_t dx = n + (axis == 0), dy = n + (axis == 1);
    return axis * faces_per_axis() + i + dx * (j + dy * k);
  }

  struct FaceInfo {
    std::size_t axis;
    std::array<std::size_t, 3> ijk;
    bool has_lower, has_upper;
    std::size_t lower, upper;  // valid when has_lower / has_upper
  };

  FaceInfo face(std::size_t f) const {
    const std::size_t axis = f / faces_per_axis();
    std::size_t r = f % faces_per_axis();
    const std::size_t dx = n + (axis == 0), dy = n + (axis == 1);
    std::array<std::size_t, 3> c{r % dx, (r / dx) % dy, r / (dx * dy)};
    FaceInfo info{axis, c, c[axis] > 0, c[axis] < n, 0, 0};
    if (info.has_upper) info.upper = index(c[0], c[1], c[2]);
    if (info.has_lower) {
      auto l = c;
      --l[axis];
      info.lower = index(l[0], l[1], l[2]);
    }
    return info;
  }

  /// Face on side `upper` (false: lower) of cell c along axis.
  std::size_t cell_face(std::size_t c, std::size_t axis, bool upper) const {
    const auto [i, j, k] = ijk(c);
    std::array<std::size_t, 3> f{i, j, k};
    if (upper) ++f[axis];
    return face_index(axis, f[0], f[1], f[2]);
  }

  Vec3 face_center(std::size_t f) const {
    const auto info = face(f);
    Vec3 p;
    for (std::size_t a = 0; a < 3; ++a)
      p[a] = origin[a] + (static_cast<double>(info.ijk[a]) + (a == info.axis ? 0.0 : 0.5)) * h;
    return p;
  }

  friend bool operator==(const Grid3D&, const Grid3D&) = default;
};

/// Cell-centered scalar field.
struct CellField {
  Grid3D grid;
  std::vector<double> values;

  CellField() = default;
  explicit CellField(const Grid3D& g, double fill = 0.0) : grid(g), values(g.num_cells(), fill) {}

  template <class F>
  static CellField from_function(const Grid3D& g, F&& f) {
    CellField out(g);
    for (std::size_t c = 0; c < g.num_cells(); ++c) out.values[c] = f(g.cell_center(c));
    return out;
  }

  double& operator[](std::size_t c) { return values[c]; }
  double operator[](std::size_t c) const { return values[c]; }
  std::size_t size() const { return values.size(); }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  double integral() const { return sum() * grid.cell_volume(); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

/// One normal component per axis-aligned face, oriented along +axis.
struct FaceField {
  Grid3D grid;
  std::vector<double> values;

  FaceField() = default;
  explicit FaceField(const Grid3D& g, double fill = 0.0) : grid(g), values(g.num_faces(), fill) {}

  double& operator[](std::size_t f) { return values[f]; }
  double operator[](std::size_t f) const { return values[f]; }
  std::size_t size() const { return values.size(); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

enum class BoundaryKind { Neumann, Dirichlet };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Neumann;
  double value = 0.0;

  static BoundaryCondition neumann() { return {}; }
  static BoundaryCondition dirichlet(double g) { return {BoundaryKind::Dirichlet, g}; }
};

/// One row of the -Laplacian: center coefficient, neighbour coefficients and
/// the right-hand-side contribution from eliminated Dirichlet ghosts.
struct StencilRow {
  double diagonal = 0.0;
  std::vector<std::pair<std::size_t, double>> neighbors;
  double rhs = 0.0;
};

/// Row of -Laplacian for cell c with the same condition on every boundary face.
inline StencilRow laplacian_row(const Grid3D& g, std::size_t c, BoundaryCondition bc) {
  if (c >= g.num_cells()) throw std::out_of_range("laplacian_row: cell out of range");
  const double ih2 = 1.0 / (g.h * g.h);
  StencilRow row;
  const auto idx = g.ijk(c);
  const std::array<std::size_t, 3> ijk{idx.i, idx.j, idx.k};
  for (std::size_t a = 0; a < 3; ++a) {
    for (int side : {-1, 1}) {
      const bool boundary = side < 0 ? ijk[a] == 0 : ijk[a] == g.n - 1;
      if (!boundary) {
        auto nb = ijk;
        nb[a] = side < 0 ? nb[a] - 1 : nb[a] + 1;
        row.diagonal += ih2;
        row.neighbors.emplace_back(g.index(nb[0], nb[1], nb[2]), -ih2);
      } else if (bc.kind == BoundaryKind::Dirichlet) {
        row.diagonal += 2.0 * ih2;
        row.rhs += 2.0 * bc.value * ih2;
      }
    }
  }
  return row;
}

/// Per-face coefficient callback for Dirichlet boundary faces: returns the
/// ghost value when the face is Dirichlet.
using DirichletLookup = std::function<bool(std::size_t face, double& value)>;

/// Matrix of -div(k grad .) with face coefficients k (size num_faces; boundary
/// entries used only on Dirichlet faces). Neumann faces contribute nothing.
inline linalg::LinearSystem assemble_diffusion(const Grid3D& g, std::span<const double> face_coeff,
                                               const DirichletLookup& dirichlet = {}) {
  const std::size_t nc = g.num_cells();
  const double ih2 = 1.0 / (g.h * g.h);
  linalg::TripletBuilder tb(nc, nc);
  tb.reserve(7 * nc);
  linalg::Vector rhs(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) tb.add(c, c, 0.0);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    const double k = face_coeff[f];
    if (info.has_lower && info.has_upper) {
      if (k == 0.0) continue;
      tb.add(info.lower, info.lower, k * ih2);
      tb.add(info.upper, info.upper, k * ih2);
      tb.add(info.lower, info.upper, -k * ih2);
      tb.add(info.upper, info.lower, -k * ih2);
    } else if (dirichlet) {
      double gval = 0.0;
      if (dirichlet(f, gval)) {
        const std::size_t c = info.has_lower ? info.lower : info.upper;
        tb.add(c, c, 2.0 * k * ih2);
        rhs[c] += 2.0 * k * gval * ih2;
      }
    }
  }
  return {tb.build(), std::move(rhs)};
}

/// Neumann -Laplacian with unit coefficient.
inline linalg::CsrMatrix neumann_laplacian(const Grid3D& g) {
  const std::vector<double> ones(g.num_faces(), 1.0);
  return assemble_diffusion(g, ones).matrix;
}

/// Face differences divided by h on interior faces; zero on boundary faces.
inline FaceField gradient(const CellField& u) {
  const Grid3D& g = u.grid;
  FaceField out(g);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (info.has_lower && info.has_upper) out[f] = (u[info.upper] - u[info.lower]) / g.h;
  }
  return out;
}

/// Cell divergence of a face field: sum over axes of (v_upper - v_lower)/h.
inline CellField divergence(const FaceField& v) {
  const Grid3D& g = v.grid;
  CellField out(g);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) s += v[g.cell_face(c, a, true)] - v[g.cell_face(c, a, false)];
    out[c] = s / g.h;
  }
  return out;
}

/// Net outward flux through the domain boundary (integrated over face area).
inline double boundary_outflow(const FaceField& v) {
  const Grid3D& g = v.grid;
  double s = 0.0;
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (!info.has_lower) s -= v[f];
    else if (!info.has_upper) s += v[f];
  }
  return s * g.h * g.h;
}

/// Neumann Laplacian (div grad) applied to a cell field.
inline CellField laplacian(const CellField& u) { return divergence(gradient(u)); }

/// Cell-centered trilinear interpolation; points are clamped to the domain
/// and the outer half-cell layer extrapolates constantly.
struct TrilinearStencil {
  std::array<std::size_t, 8> cells{};
  std::array<double, 8> weights{};
};

inline TrilinearStencil trilinear_stencil(const Grid3D& g, Vec3 p) {
  p = g.clamp(p);
  std::array<std::size_t, 3> i0{};
  std::array<double, 3> t{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double u = (p[a] - g.origin[a]) / g.h - 0.5;
    const double base = std::clamp(std::floor(u), 0.0, static_cast<double>(g.n - 2));
    i0[a] = static_cast<std::size_t>(base);
    t[a] = std::clamp(u - base, 0.0, 1.0);
  }
  TrilinearStencil s;
  std::size_t m = 0;
  for (std::size_t dk = 0; dk < 2; ++dk)
    for (std::size_t dj = 0; dj < 2; ++dj)
      for (std::size_t di = 0; di < 2; ++di, ++m) {
        s.cells[m] = g.index(i0[0] + di, i0[1] + dj, i0[2] + dk);
        s.weights[m] = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
      }
  return s;
}

inline double interpolate(const TrilinearStencil& s, std::span<const double> values) {
  double v = 0.0;
  for (std::size_t m = 0; m < 8; ++m) v += s.weights[m] * values[s.cells[m]];
  return v;
}

inline double sample_trilinear(const CellField& field, Vec3 point) {
  return interpolate(trilinear_stencil(field.grid, point), field.values);
}

/// Upwind value of phi at face f for the normal velocity v[f]; zero velocity
/// takes the mean. Boundary faces return the adjacent interior cell value.
inline double upwind_face_value(const CellField& phi, const FaceField& v, std::size_t f) {
  const auto info = phi.grid.face(f);
  if (!info.has_lower) return phi[info.upper];
  if (!info.has_upper) return phi[info.lower];
  if (v[f] > 0.0) return phi[info.lower];
  if (v[f] < 0.0) return phi[info.upper];
  return 0.5 * (phi[info.lower] + phi[info.upper]);
}

/// div(phi v) with upwind face values and zero flux through the domain boundary.
inline CellField upwind_divergence(const CellField& phi, const FaceField& v) {
  const Grid3D& g = phi.grid;
  FaceField flux(g);
  for (std::size_t f = 0; f < g.num_faces(); ++f) {
    const auto info = g.face(f);
    if (info.has_lower && info.has_upper) flux[f] = v[f] * upwind_face_value(phi, v, f);
  }
  return divergence(flux);
}

}  // namespace tumor3d1d
