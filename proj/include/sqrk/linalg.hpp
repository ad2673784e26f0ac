#pragma once

// Dense row-major storage plus the handful of kernels the solvers and the
// rate estimates need: dot products, residuals, Gram matrices, small
// symmetric eigensolvers (cyclic Jacobi for the spectrum, tridiagonal
// bisection for the smallest eigenvalue), power iteration for the top
// singular value, and uniform subset sampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/rng.hpp"

namespace sqrk {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

inline double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols) : DenseMatrix(rows, cols, Vector(rows * cols, 0.0)) {}

  DenseMatrix(std::size_t rows, std::size_t cols, Vector values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows_ < 1 || cols_ < 1) throw InvalidArgument("matrix must have at least one row and column");
    if (values_.size() != rows_ * cols_) throw InvalidArgument("matrix value count does not match shape");
    for (double v : values_) {
      if (!std::isfinite(v)) throw InvalidArgument("matrix entries must be finite");
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye.values_[i * n + i] = 1.0;
    return eye;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  Vector values_;
};

/// A matrix whose rows all have unit Euclidean norm (within 1e-12).
class RowNormalizedMatrix {
 public:
  static constexpr double kUnitTolerance = 1e-12;

  /// Wraps `m` after checking every row is already unit length.
  static RowNormalizedMatrix adopt(DenseMatrix m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double norm = std::sqrt(squared_norm(m.row(i)));
      if (std::fabs(norm - 1.0) > kUnitTolerance) {
        throw NonUnitRowError("row " + std::to_string(i) + " has norm " + std::to_string(norm));
      }
    }
    return RowNormalizedMatrix(std::move(m));
  }

  const DenseMatrix& inner() const noexcept { return inner_; }
  std::size_t rows() const noexcept { return inner_.rows(); }
  std::size_t cols() const noexcept { return inner_.cols(); }
  std::span<const double> row(std::size_t i) const noexcept { return inner_.row(i); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return inner_(i, j); }

  friend bool operator==(const RowNormalizedMatrix&, const RowNormalizedMatrix&) = default;

 private:
  friend RowNormalizedMatrix row_normalize(const DenseMatrix&);
  explicit RowNormalizedMatrix(DenseMatrix m) : inner_(std::move(m)) {}

  DenseMatrix inner_;
};

/// Sorted, duplicate-free row indices drawn from [0, universe).
class IndexSet {
 public:
  IndexSet() = default;

  static IndexSet from_sorted(std::vector<std::size_t> indices, std::size_t universe) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] >= universe) throw InvalidArgument("index out of range");
      if (k > 0 && indices[k] <= indices[k - 1]) {
        throw InvalidArgument("indices must be strictly increasing");
      }
    }
    return IndexSet(std::move(indices), universe);
  }

  static IndexSet from_unsorted(std::vector<std::size_t> indices, std::size_t universe) {
    std::sort(indices.begin(), indices.end());
    return from_sorted(std::move(indices), universe);
  }

  static IndexSet full(std::size_t universe) {
    std::vector<std::size_t> all(universe);
    for (std::size_t i = 0; i < universe; ++i) all[i] = i;
    return IndexSet(std::move(all), universe);
  }

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t universe() const noexcept { return universe_; }
  std::size_t operator[](std::size_t k) const noexcept { return indices_[k]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }
  std::span<const std::size_t> indices() const noexcept { return indices_; }

  bool contains(std::size_t i) const noexcept {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  IndexSet(std::vector<std::size_t> indices, std::size_t universe)
      : indices_(std::move(indices)), universe_(universe) {}

  std::vector<std::size_t> indices_;
  std::size_t universe_ = 0;
};

inline RowNormalizedMatrix row_normalize(const DenseMatrix& m) {
  Vector out(m.values().begin(), m.values().end());
  const std::size_t n = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = std::sqrt(squared_norm(m.row(i)));
    if (!(norm > 1e-300)) throw ZeroRowError(i);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= norm;
  }
  return RowNormalizedMatrix(DenseMatrix(m.rows(), n, std::move(out)));
}

/// Signed residual <a_i, x> - b_hat_i.
inline double residual(const RowNormalizedMatrix& a, std::span<const double> x,
                       std::span<const double> b_hat, std::size_t i) {
  if (x.size() != a.cols() || b_hat.size() != a.rows()) throw InvalidArgument("residual: dimension mismatch");
  if (i >= a.rows()) throw InvalidArgument("residual: row index out of range");
  return dot(a.row(i), x) - b_hat[i];
}

// ---------------------------------------------------------------------------
// Symmetric n x n matrices, stored dense row-major.

struct SymmetricMatrix {
  std::size_t n = 0;
  Vector values;

  explicit SymmetricMatrix(std::size_t dim = 0) : n(dim), values(dim * dim, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) noexcept { return values[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * n + j]; }
};

/// Adds sign * a a^T for each listed row to the upper triangle of `gram`.
template <typename Rows>
void accumulate_gram_upper(const DenseMatrix& a, const Rows& rows, double sign, SymmetricMatrix& gram) {
  const std::size_t n = a.cols();
  for (std::size_t i : rows) {
    const double* r = a.row(i).data();
    for (std::size_t p = 0; p < n; ++p) {
      const double rp = sign * r[p];
      double* g = &gram.values[p * n];
      for (std::size_t q = p; q < n; ++q) g[q] += rp * r[q];
    }
  }
}

inline void mirror_upper(SymmetricMatrix& gram) noexcept {
  for (std::size_t p = 0; p < gram.n; ++p) {
    for (std::size_t q = p + 1; q < gram.n; ++q) gram(q, p) = gram(p, q);
  }
}

/// A^T A.
inline SymmetricMatrix gram_matrix(const DenseMatrix& a) {
  SymmetricMatrix g(a.cols());
  std::vector<std::size_t> all(a.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  accumulate_gram_upper(a, all, 1.0, g);
  mirror_upper(g);
  return g;
}

/// A_S^T A_S for the row subset S.
inline SymmetricMatrix gram_matrix(const DenseMatrix& a, std::span<const std::size_t> rows) {
  SymmetricMatrix g(a.cols());
  accumulate_gram_upper(a, rows, 1.0, g);
  mirror_upper(g);
  return g;
}

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.
/// Stops once the off-diagonal Frobenius norm falls below
/// rel_tol * ||M||_F.
inline Vector symmetric_eigenvalues(SymmetricMatrix m, double rel_tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = m.n;
  double total = 0.0;
  for (double v : m.values) total += v * v;
  const double target = rel_tol * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * m(p, q) * m(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > target) {
    if (++sweep > max_sweeps) throw NonConvergenceError("Jacobi eigensolver did not converge");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        m(p, p) -= t * apq;
        m(q, q) += t * apq;
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double g = m(r, p);
          const double h = m(r, q);
          const double gp = g - s * (h + g * tau);
          const double hq = h + s * (g - h * tau);
          m(r, p) = gp;
          m(p, r) = gp;
          m(r, q) = hq;
          m(q, r) = hq;
        }
      }
    }
  }
  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Smallest eigenvalue of a symmetric matrix: Householder reduction to
/// tridiagonal form, then Sturm-sequence bisection to full precision.
inline double smallest_symmetric_eigenvalue(SymmetricMatrix m) {
  const std::size_t n = m.n;
  if (n == 0) throw InvalidArgument("empty matrix has no eigenvalues");
  Vector d(n), e(n, 0.0), v(n), p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += m(i, k) * m(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    const double x0 = m(k + 1, k);
    const double sigma = x0 >= 0.0 ? alpha : -alpha;
    for (std::size_t i = k + 1; i < n; ++i) v[i] = m(i, k);
    v[k + 1] += sigma;
    const double vtv = 2.0 * alpha * (alpha + std::fabs(x0));
    const double beta = 2.0 / vtv;
    double kdot = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += m(i, j) * v[j];
      p[i] = beta * s;
      kdot += v[i] * p[i];
    }
    const double kk = 0.5 * beta * kdot;
    for (std::size_t i = k + 1; i < n; ++i) p[i] -= kk * v[i];
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= v[i] * p[j] + p[i] * v[j];
    m(k + 1, k) = -sigma;
    m(k, k + 1) = -sigma;
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = m(i, i);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = m(i + 1, i);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::fabs(e[i - 1]) : 0.0) + (i + 1 < n ? std::fabs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double scale = std::max(std::fabs(lo), std::fabs(hi));
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  auto count_below = [&](double x) {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      q = d[i] - x - (i > 0 ? e[i - 1] * e[i - 1] / q : 0.0);
      if (std::fabs(q) < tiny) q = -tiny;
      if (q < 0.0) ++count;
    }
    return count;
  };
  for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= 1) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// sqrt of an eigenvalue of a PSD Gram matrix. Round-off can push a zero
/// eigenvalue slightly negative; those are clamped to 0.
inline double singular_from_gram_eigenvalue(double lambda, double scale) {
  if (lambda >= 0.0) return std::sqrt(lambda);
  if (lambda >= -1e-10 * std::fmax(1.0, scale)) return 0.0;
  throw NumericalError("Gram matrix has a significantly negative eigenvalue");
}

inline double sigma_min_from_gram(const SymmetricMatrix& gram) {
  double trace = 0.0;
  for (std::size_t i = 0; i < gram.n; ++i) trace += gram(i, i);
  return singular_from_gram_eigenvalue(smallest_symmetric_eigenvalue(gram), trace);
}

struct PowerIterationOptions {
  double rel_tol = 1e-8;
  int max_iters = 10000;
  std::uint64_t start_seed = 0x5157524B5EEDULL;
};

/// Largest singular value via power iteration on A^T A, stopped when the
/// eigen-residual ||G v - lambda v|| drops below rel_tol * lambda.
inline double sigma_max(const DenseMatrix& a, const PowerIterationOptions& opts = {}) {
  const SymmetricMatrix g = gram_matrix(a);
  const std::size_t n = g.n;
  Rng rng(opts.start_seed);
  Vector v(n), w(n);
  for (double& x : v) x = rng.normal();
  double norm = std::sqrt(squared_norm(v));
  for (double& x : v) x /= norm;

  for (int it = 0; it < opts.max_iters; ++it) {
    for (std::size_t p = 0; p < n; ++p) w[p] = dot(std::span<const double>(&g.values[p * n], n), v);
    const double lambda = dot(v, w);
    if (lambda <= 0.0) {
      // v lies in the null space of a PSD matrix; only possible when G = 0.
      if (squared_norm(w) == 0.0) return 0.0;
    }
    double res = 0.0;
    for (std::size_t p = 0; p < n; ++p) res += (w[p] - lambda * v[p]) * (w[p] - lambda * v[p]);
    if (std::sqrt(res) <= opts.rel_tol * lambda) return std::sqrt(lambda);
    norm = std::sqrt(squared_norm(w));
    for (std::size_t p = 0; p < n; ++p) v[p] = w[p] / norm;
  }
  throw NonConvergenceError("power iteration for sigma_max did not converge");
}

inline double sigma_max(const RowNormalizedMatrix& a, const PowerIterationOptions& opts = {}) {
  return sigma_max(a.inner(), opts);
}

/// Smallest singular value of the row submatrix A_S. Zero when |S| < n.
inline double sigma_min_rows(const RowNormalizedMatrix& a, const IndexSet& rows) {
  if (rows.empty()) throw InvalidArgument("sigma_min_rows: empty row set");
  if (rows.universe() != a.rows()) throw InvalidArgument("sigma_min_rows: index set built for another matrix");
  if (rows.size() < a.cols()) return 0.0;
  return sigma_min_from_gram(gram_matrix(a.inner(), rows.indices()));
}

/// Caches A^T A so the Gram matrix of a large row subset S can be formed as
/// A^T A minus the rows outside S, whichever side is cheaper.
class SubsetGram {
 public:
  explicit SubsetGram(const DenseMatrix& a) : a_(&a), full_(gram_matrix(a)), outside_(a.rows(), 1) {}

  /// Smallest singular value of A_S; `rows` must be increasing and in range.
  double sigma_min(std::span<const std::size_t> rows) {
    const std::size_t m = a_->rows();
    if (rows.empty()) throw InvalidArgument("sigma_min: empty row set");
    if (rows.size() < a_->cols()) return 0.0;
    if (2 * rows.size() <= m) return sigma_min_from_gram(gram_matrix(*a_, rows));

    for (std::size_t i : rows) outside_[i] = 0;
    std::vector<std::size_t> complement;
    complement.reserve(m - rows.size());
    for (std::size_t i = 0; i < m; ++i)
      if (outside_[i]) complement.push_back(i);
    for (std::size_t i : rows) outside_[i] = 1;

    SymmetricMatrix g = full_;
    accumulate_gram_upper(*a_, complement, -1.0, g);
    mirror_upper(g);
    return sigma_min_from_gram(g);
  }

 private:
  const DenseMatrix* a_;
  SymmetricMatrix full_;
  std::vector<unsigned char> outside_;
};

// ---------------------------------------------------------------------------
// Sampling without replacement.

/// Floyd's algorithm over a reusable membership table: for j = m-k .. m-1,
/// draw t uniformly from [0, j] and take t, or j if t was already taken.
/// Consumes exactly k uniform_index draws; output is sorted ascending.
class SubsetSampler {
 public:
  explicit SubsetSampler(std::size_t universe = 0) : taken_(universe, 0) {}

  std::size_t universe() const noexcept { return taken_.size(); }

  void sample(std::size_t k, Rng& rng, std::vector<std::size_t>& out) {
    const std::size_t m = taken_.size();
    if (k < 1 || k > m) throw InvalidArgument("sample size must lie in [1, m]");
    out.clear();
    // Dense samples: a linear scan of the table beats sorting.
    const bool dense = k * 16 >= m;
    for (std::size_t j = m - k; j < m; ++j) {
      std::size_t t = rng.uniform_index(j + 1);
      if (taken_[t]) t = j;
      taken_[t] = 1;
      if (!dense) out.push_back(t);
    }
    if (dense) {
      out.resize(k + 1);
      std::size_t n = 0;
      for (std::size_t i = 0; i < m; ++i) {
        out[n] = i;
        n += taken_[i];
        taken_[i] = 0;
      }
      out.resize(k);
      return;
    }
    std::sort(out.begin(), out.end());
    for (std::size_t t : out) taken_[t] = 0;
  }

 private:
  std::vector<unsigned char> taken_;
};

inline IndexSet sample_without_replacement(std::size_t m, std::size_t k, Rng& rng) {
  if (k > m) throw InvalidArgument("cannot sample more rows than exist");
  SubsetSampler sampler(m);
  std::vector<std::size_t> out;
  sampler.sample(k, rng, out);
  return IndexSet::from_sorted(std::move(out), m);
}

}  // namespace sqrk
