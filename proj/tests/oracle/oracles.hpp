#pragma once

// Reference implementations used only by tests. Deliberately slow and
// simple; none of them share code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracle {

/// k-th smallest (1-based) of a copy of `values` via full sort.
inline double kth_smallest(std::vector<double> values, std::size_t k) {
  std::sort(values.begin(), values.end());
  return values.at(k - 1);
}

/// Singular values (descending) of a rows x cols row-major matrix by
/// one-sided Jacobi rotations on the columns.
inline std::vector<double> singular_values(std::vector<double> a, std::size_t rows, std::size_t cols) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * cols + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t r = p + 1; r < cols; ++r) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += at(i, p) * at(i, p);
          beta += at(i, r) * at(i, r);
          gamma += at(i, p) * at(i, r);
        }
        if (gamma == 0.0) continue;
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        off = std::max(off, rel);
        if (rel < 1e-15) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double x = at(i, p), y = at(i, r);
          at(i, p) = c * x - s * y;
          at(i, r) = s * x + c * y;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += at(i, j) * at(i, j);
    sv[j] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

/// Smallest singular value of the row submatrix; 0 when it has fewer rows
/// than columns.
inline double sigma_min_of_rows(const std::vector<double>& a, std::size_t cols, std::span<const std::size_t> rows) {
  if (rows.size() < cols) return 0.0;
  std::vector<double> sub;
  sub.reserve(rows.size() * cols);
  for (std::size_t i : rows) sub.insert(sub.end(), a.begin() + static_cast<long>(i * cols),
                                        a.begin() + static_cast<long>((i + 1) * cols));
  return singular_values(std::move(sub), rows.size(), cols).back();
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(x[i]) * y[i];
  return static_cast<double>(s);
}

/// Rate-condition check written straight from its definition.
inline bool rate_condition(double m, double alpha, double q, double beta, double smax, double smin) {
  const double w = beta / (alpha * q);
  const double d = alpha * (1 - q) - beta;
  const double rg = 1 - smin * smin / (alpha * q * m);
  const double rc = 1 + 2 / std::sqrt(beta * m) * smax * smax / std::sqrt(m * d) + smax * smax / (m * d);
  return rg < (1 - w * rc) / (1 - w);
}

}  // namespace oracle
