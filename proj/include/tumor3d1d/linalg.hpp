// Sparse linear algebra: CSR storage, SpMV and Jacobi-preconditioned Krylov
// solvers (CG, BiCGStab).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace tumor3d1d::linalg {

using Vector = std::vector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::size_t> col_indices;
  std::vector<double> values;

  static CsrMatrix identity(std::size_t n) {
    CsrMatrix m;
    m.n_rows = m.n_cols = n;
    m.row_offsets.resize(n + 1);
    m.col_indices.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) m.row_offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) m.col_indices[i] = i;
    return m;
  }

  static CsrMatrix zero(std::size_t rows, std::size_t cols) {
    CsrMatrix m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.row_offsets.assign(rows + 1, 0);
    return m;
  }

  std::size_t nnz() const { return values.size(); }

  /// Entry (r, c), zero when not stored.
  double at(std::size_t r, std::size_t c) const {
    const auto first = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
    const auto last = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
  }

  Vector diagonal() const {
    Vector d(std::min(n_rows, n_cols), 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = at(r, r);
    return d;
  }

  bool is_square() const { return n_rows == n_cols; }

  bool is_symmetric(double tol = 0.0) const {
    if (!is_square()) return false;
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
        const double a = values[k];
        const double b = at(col_indices[k], r);
        if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
      }
    }
    return true;
  }

  /// Throws std::logic_error when the structural invariants are broken.
  void check_invariants() const {
    if (row_offsets.size() != n_rows + 1) throw std::logic_error("csr: row_offsets length");
    if (row_offsets.front() != 0 || row_offsets.back() != values.size() ||
        col_indices.size() != values.size())
      throw std::logic_error("csr: storage size mismatch");
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (row_offsets[r] > row_offsets[r + 1]) throw std::logic_error("csr: row_offsets not monotone");
      for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
        if (col_indices[k] >= n_cols) throw std::logic_error("csr: column index out of range");
        if (k > row_offsets[r] && col_indices[k] <= col_indices[k - 1])
          throw std::logic_error("csr: columns not strictly increasing");
      }
    }
  }
};

/// Collects (row, col, value) entries; duplicates are summed on build().
class TripletBuilder {
 public:
  TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  void reserve(std::size_t n) { entries_.reserve(n); }

  void add(std::size_t r, std::size_t c, double v) {
    if (r >= rows_ || c >= cols_) throw DimensionError("triplet index out of range");
    entries_.push_back({r, c, v});
  }

  CsrMatrix build() const {
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.r, a.c) < std::tie(b.r, b.c);
    });
    CsrMatrix m = CsrMatrix::zero(rows_, cols_);
    m.col_indices.reserve(sorted.size());
    m.values.reserve(sorted.size());
    std::vector<std::size_t> counts(rows_, 0);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (k > 0 && sorted[k].r == sorted[k - 1].r && sorted[k].c == sorted[k - 1].c) {
        m.values.back() += sorted[k].v;
        continue;
      }
      m.col_indices.push_back(sorted[k].c);
      m.values.push_back(sorted[k].v);
      ++counts[sorted[k].r];
    }
    for (std::size_t r = 0; r < rows_; ++r) m.row_offsets[r + 1] = m.row_offsets[r] + counts[r];
    return m;
  }

 private:
  struct Entry {
    std::size_t r, c;
    double v;
  };
  std::size_t rows_, cols_;
  std::vector<Entry> entries_;
};

inline void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.n_cols || y.size() != a.n_rows)
    throw DimensionError("spmv: dimension mismatch (" + std::to_string(a.n_rows) + "x" +
                         std::to_string(a.n_cols) + " with x of length " + std::to_string(x.size()) + ")");
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    double s = 0.0;
    for (std::size_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) s += a.values[k] * x[a.col_indices[k]];
    y[r] = s;
  }
}

inline Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.n_rows);
  spmv(a, x, y);
  return y;
}

/// alpha*A + beta*B for equally sized matrices.
inline CsrMatrix scaled(double alpha, CsrMatrix a) {
  for (double& v : a.values) v *= alpha;
  return a;
}

inline CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols) throw DimensionError("add: shape mismatch");
  CsrMatrix m = CsrMatrix::zero(a.n_rows, a.n_cols);
  m.col_indices.reserve(a.nnz() + b.nnz());
  m.values.reserve(a.nnz() + b.nnz());
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    std::size_t ka = a.row_offsets[r], kb = b.row_offsets[r];
    const std::size_t ea = a.row_offsets[r + 1], eb = b.row_offsets[r + 1];
    while (ka < ea || kb < eb) {
      if (kb == eb || (ka < ea && a.col_indices[ka] < b.col_indices[kb])) {
        m.col_indices.push_back(a.col_indices[ka]);
        m.values.push_back(alpha * a.values[ka++]);
      } else if (ka == ea || b.col_indices[kb] < a.col_indices[ka]) {
        m.col_indices.push_back(b.col_indices[kb]);
        m.values.push_back(beta * b.values[kb++]);
      } else {
        m.col_indices.push_back(a.col_indices[ka]);
        m.values.push_back(alpha * a.values[ka++] + beta * b.values[kb++]);
      }
    }
    m.row_offsets[r + 1] = m.values.size();
  }
  return m;
}

/// Sparse product A*B (Gustavson, row by row).
inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.n_cols != b.n_rows) throw DimensionError("multiply: inner dimension mismatch");
  CsrMatrix m = CsrMatrix::zero(a.n_rows, b.n_cols);
  std::vector<double> acc(b.n_cols, 0.0);
  std::vector<char> used(b.n_cols, 0);
  std::vector<std::size_t> cols;
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    cols.clear();
    for (std::size_t ka = a.row_offsets[r]; ka < a.row_offsets[r + 1]; ++ka) {
      const std::size_t mid = a.col_indices[ka];
      const double av = a.values[ka];
      for (std::size_t kb = b.row_offsets[mid]; kb < b.row_offsets[mid + 1]; ++kb) {
        const std::size_t c = b.col_indices[kb];
        if (!used[c]) {
          used[c] = 1;
          cols.push_back(c);
        }
        acc[c] += av * b.values[kb];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (std::size_t c : cols) {
      m.col_indices.push_back(c);
      m.values.push_back(acc[c]);
      acc[c] = 0.0;
      used[c] = 0;
    }
    m.row_offsets[r + 1] = m.values.size();
  }
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

enum class Method { CG, BiCGStab };
enum class Preconditioner { None, Jacobi };

struct SolverConfig {
  Method method = Method::CG;
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  std::size_t max_iters = 0;  // 0 selects 10 * n
  Preconditioner preconditioner = Preconditioner::Jacobi;
  bool record_history = false;
};

struct SolveReport {
  std::size_t iterations = 0;
  double residual_norm = 0.0;  // ||b - A x||_2 recomputed at exit
  double rhs_norm = 0.0;
  std::vector<double> residual_history;  // recurrence residual per iteration, if requested
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { NoConvergence, Breakdown };

  SolverError(Kind kind, std::size_t iterations, double residual)
      : std::runtime_error(describe(kind, iterations, residual)),
        kind_(kind),
        iterations_(iterations),
        residual_(residual) {}

  Kind kind() const { return kind_; }
  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  static std::string describe(Kind kind, std::size_t iterations, double residual) {
    return std::string(kind == Kind::NoConvergence ? "solver did not converge" : "solver breakdown") +
           " after " + std::to_string(iterations) + " iterations (residual " + std::to_string(residual) + ")";
  }
  Kind kind_;
  std::size_t iterations_;
  double residual_;
};

namespace detail {

inline Vector inverse_diagonal(const CsrMatrix& a, Preconditioner pc) {
  Vector inv(a.n_rows, 1.0);
  if (pc == Preconditioner::Jacobi) {
    const Vector d = a.diagonal();
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
  }
  return inv;
}

inline double true_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x) {
  Vector r = spmv(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

inline void cg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const Vector& minv,
               double target, std::size_t max_iters, SolveReport& report, bool history) {
  const std::size_t n = b.size();
  Vector r = spmv(a, x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double rnorm = norm2(r);
  if (history) report.residual_history.push_back(rnorm);
  if (rnorm <= target) return;
  Vector z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = minv[i] * r[i];
  double rz = dot(r, z);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    spmv(a, p, q);
    const double pq = dot(p, q);
    if (pq == 0.0 || !std::isfinite(pq)) throw SolverError(SolverError::Kind::Breakdown, it, rnorm);
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = norm2(r);
    report.iterations = it;
    if (history) report.residual_history.push_back(rnorm);
    if (rnorm <= target) return;
    for (std::size_t i = 0; i < n; ++i) z[i] = minv[i] * r[i];
    const double rz_new = dot(r, z);
    if (rz == 0.0) throw SolverError(SolverError::Kind::Breakdown, it, rnorm);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError(SolverError::Kind::NoConvergence, max_iters, rnorm);
}

inline void bicgstab(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const Vector& minv,
                     double target, std::size_t max_iters, SolveReport& report, bool history) {
  const std::size_t n = b.size();
  Vector r = spmv(a, x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double rnorm = norm2(r);
  if (history) report.residual_history.push_back(rnorm);
  if (rnorm <= target) return;
  const Vector r_hat = r;
  Vector p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), zv(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    const double rho_new = dot(r_hat, r);
    if (rho_new == 0.0 || omega == 0.0) throw SolverError(SolverError::Kind::Breakdown, it, rnorm);
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (std::size_t i = 0; i < n; ++i) y[i] = minv[i] * p[i];
    spmv(a, y, v);
    const double rv = dot(r_hat, v);
    if (rv == 0.0 || !std::isfinite(rv)) throw SolverError(SolverError::Kind::Breakdown, it, rnorm);
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    const double snorm = norm2(s);
    report.iterations = it;
    if (snorm <= target) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i];
      if (history) report.residual_history.push_back(snorm);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) zv[i] = minv[i] * s[i];
    spmv(a, zv, t);
    const double tt = dot(t, t);
    if (tt == 0.0) throw SolverError(SolverError::Kind::Breakdown, it, snorm);
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * y[i] + omega * zv[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = norm2(r);
    if (history) report.residual_history.push_back(rnorm);
    if (!std::isfinite(rnorm)) throw SolverError(SolverError::Kind::Breakdown, it, rnorm);
    if (rnorm <= target) return;
  }
  throw SolverError(SolverError::Kind::NoConvergence, max_iters, rnorm);
}

}  // namespace detail

/// Solves A x = b starting from the contents of x (warm start).
/// On return ||b - A x||_2 <= max(abs_tol, rel_tol * ||b||_2).
inline SolveReport solve_into(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                              const SolverConfig& cfg) {
  if (!a.is_square()) throw DimensionError("solve: matrix is not square");
  if (b.size() != a.n_rows || x.size() != a.n_cols) throw DimensionError("solve: dimension mismatch");
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("solve: rel_tol must be positive");
  SolveReport report;
  report.rhs_norm = norm2(b);
  const double target = std::max(cfg.abs_tol, cfg.rel_tol * report.rhs_norm);
  const std::size_t max_iters = cfg.max_iters > 0 ? cfg.max_iters : std::max<std::size_t>(10 * a.n_rows, 1);
  const Vector minv = detail::inverse_diagonal(a, cfg.preconditioner);
  if (cfg.method == Method::CG)
    detail::cg(a, b, x, minv, target, max_iters, report, cfg.record_history);
  else
    detail::bicgstab(a, b, x, minv, target, max_iters, report, cfg.record_history);
  report.residual_norm = detail::true_residual(a, b, x);
  // The recurrence residual can drift from the true one; polish once if needed.
  if (report.residual_norm > target) {
    SolveReport extra;
    extra.rhs_norm = report.rhs_norm;
    if (cfg.method == Method::CG)
      detail::cg(a, b, x, minv, target, max_iters, extra, false);
    else
      detail::bicgstab(a, b, x, minv, target, max_iters, extra, false);
    report.iterations += extra.iterations;
    report.residual_norm = detail::true_residual(a, b, x);
    if (report.residual_norm > target)
      throw SolverError(SolverError::Kind::NoConvergence, report.iterations, report.residual_norm);
  }
  return report;
}

struct SolveResult {
  Vector x;
  SolveReport report;
};

inline SolveResult solve(const CsrMatrix& a, std::span<const double> b, const SolverConfig& cfg) {
  SolveResult out{Vector(a.n_cols, 0.0), {}};
  out.report = solve_into(a, b, out.x, cfg);
  return out;
}

/// A linear system produced by an assembly routine.
struct LinearSystem {
  CsrMatrix matrix;
  Vector rhs;
};

}  // namespace tumor3d1d::linalg
