#pragma once

// Planted corrupted linear systems: A x* = b is consistent, the solver only
// sees b_hat = b + c where c is supported on a small set C.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/linalg.hpp"
#include "sqrk/rng.hpp"
#include "sqrk/rounding.hpp"

namespace sqrk {

enum class XStarPolicy { kZero, kGaussian, kGiven };

enum class CorruptionMode {
  kConstant,      // every corrupted entry equals +magnitude
  kRandomSigned,  // +-U[magnitude/2, 3 magnitude/2]
};

struct GenSpec {
  std::size_t m = 5000;
  std::size_t n = 50;
  double beta = 0.0;
  double corruption_magnitude = 10.0;
  XStarPolicy x_star_policy = XStarPolicy::kZero;
  Vector given_x_star;
  CorruptionMode corruption_mode = CorruptionMode::kConstant;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || m <= n) throw InvalidArgument("need m > n >= 1");
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
    if (!std::isfinite(corruption_magnitude)) throw InvalidArgument("corruption magnitude must be finite");
    if (floor_count(beta * static_cast<double>(m)) > 0 && corruption_magnitude == 0.0)
      throw InvalidArgument("corruption magnitude must be nonzero when beta * m >= 1");
    if (x_star_policy == XStarPolicy::kGiven && given_x_star.size() != n)
      throw InvalidArgument("given x* must have length n");
  }
};

struct Corruption {
  Vector c;
  IndexSet support;
};

/// floor(beta m) entries at uniformly random rows. Rows are drawn with
/// SubsetSampler (Floyd); values follow `mode`.
inline Corruption corrupt(std::size_t m, double beta, double magnitude, Rng& rng,
                          CorruptionMode mode = CorruptionMode::kConstant) {
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
  const std::size_t count = floor_count(beta * static_cast<double>(m));
  Corruption out{Vector(m, 0.0), IndexSet::from_sorted({}, m)};
  if (count == 0) return out;
  std::vector<std::size_t> rows;
  SubsetSampler(m).sample(count, rng, rows);
  for (std::size_t i : rows) {
    if (mode == CorruptionMode::kConstant) {
      out.c[i] = magnitude;
    } else {
      const double size = magnitude * (0.5 + rng.uniform01());
      out.c[i] = (rng.next() & 1U) ? size : -size;
    }
  }
  out.support = IndexSet::from_sorted(std::move(rows), m);
  return out;
}

inline Corruption corrupt(std::span<const double> b, double beta, double magnitude, Rng& rng,
                          CorruptionMode mode = CorruptionMode::kConstant) {
  return corrupt(b.size(), beta, magnitude, rng, mode);
}

class CorruptedSystem {
 public:
  /// Builds b = A x*, b_hat = b + c and checks the support matches c.
  static CorruptedSystem assemble(RowNormalizedMatrix a, Vector x_star, Vector c, IndexSet support, double beta,
                                  std::uint64_t seed = 0) {
    const std::size_t m = a.rows();
    if (x_star.size() != a.cols()) throw InvalidArgument("x* length must equal n");
    if (c.size() != m || support.universe() != m) throw InvalidArgument("corruption length must equal m");
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
    Vector b(m);
    for (std::size_t i = 0; i < m; ++i) b[i] = dot(a.row(i), x_star);
    Vector b_hat(m);
    for (std::size_t i = 0; i < m; ++i) b_hat[i] = b[i] + c[i];
    return CorruptedSystem(std::move(a), std::move(x_star), std::move(b), std::move(c), std::move(b_hat),
                           std::move(support), beta, seed);
  }

  /// Reassembles a stored system, verifying every invariant.
  static CorruptedSystem restore(RowNormalizedMatrix a, Vector x_star, Vector b, Vector c, Vector b_hat,
                                 IndexSet support, double beta, std::uint64_t seed) {
    const std::size_t m = a.rows();
    if (x_star.size() != a.cols() || b.size() != m || c.size() != m || b_hat.size() != m ||
        support.universe() != m)
      throw InvalidArgument("stored system has inconsistent dimensions");
    for (std::size_t i = 0; i < m; ++i) {
      if (std::fabs(dot(a.row(i), x_star) - b[i]) > 1e-10) throw InvalidArgument("stored b != A x*");
      if (b_hat[i] != b[i] + c[i]) throw InvalidArgument("stored b_hat != b + c");
    }
    return CorruptedSystem(std::move(a), std::move(x_star), std::move(b), std::move(c), std::move(b_hat),
                           std::move(support), beta, seed);
  }

  const RowNormalizedMatrix& a() const noexcept { return a_; }
  std::span<const double> x_star() const noexcept { return x_star_; }
  std::span<const double> b() const noexcept { return b_; }
  std::span<const double> c() const noexcept { return c_; }
  std::span<const double> b_hat() const noexcept { return b_hat_; }
  const IndexSet& corrupt_support() const noexcept { return support_; }
  double beta() const noexcept { return beta_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t rows() const noexcept { return a_.rows(); }
  std::size_t cols() const noexcept { return a_.cols(); }
  bool is_corrupted(std::size_t i) const noexcept { return corrupt_mask_[i] != 0; }

  friend bool operator==(const CorruptedSystem& l, const CorruptedSystem& r) {
    return l.a_ == r.a_ && l.x_star_ == r.x_star_ && l.b_ == r.b_ && l.c_ == r.c_ && l.b_hat_ == r.b_hat_ &&
           l.support_ == r.support_ && l.beta_ == r.beta_ && l.seed_ == r.seed_;
  }

 private:
  CorruptedSystem(RowNormalizedMatrix a, Vector x_star, Vector b, Vector c, Vector b_hat, IndexSet support,
                  double beta, std::uint64_t seed)
      : a_(std::move(a)),
        x_star_(std::move(x_star)),
        b_(std::move(b)),
        c_(std::move(c)),
        b_hat_(std::move(b_hat)),
        support_(std::move(support)),
        beta_(beta),
        seed_(seed),
        corrupt_mask_(a_.rows(), 0) {
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if ((c_[i] != 0.0) != support_.contains(i)) throw InvalidArgument("corruption support does not match c");
    }
    for (std::size_t i : support_) corrupt_mask_[i] = 1;
  }

  RowNormalizedMatrix a_;
  Vector x_star_;
  Vector b_;
  Vector c_;
  Vector b_hat_;
  IndexSet support_;
  double beta_;
  std::uint64_t seed_;
  std::vector<unsigned char> corrupt_mask_;
};

inline Vector gaussian_unit_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& x : v) x = rng.normal();
    norm = std::sqrt(squared_norm(v));
  }
  for (double& x : v) x /= norm;
  return v;
}

/// i.i.d. N(0,1) matrix, row-normalized; x* per policy; floor(beta m)
/// corrupted entries. Independent streams of Rng(seed) feed the matrix (0),
/// x* (1) and the corruption (2).
inline CorruptedSystem gen_gaussian_system(const GenSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);

  Rng matrix_rng = root.split(0);
  Vector entries(spec.m * spec.n);
  for (double& v : entries) v = matrix_rng.normal();
  RowNormalizedMatrix a = row_normalize(DenseMatrix(spec.m, spec.n, std::move(entries)));

  Vector x_star;
  switch (spec.x_star_policy) {
    case XStarPolicy::kZero:
      x_star.assign(spec.n, 0.0);
      break;
    case XStarPolicy::kGaussian: {
      Rng x_rng = root.split(1);
      x_star = gaussian_unit_vector(spec.n, x_rng);
      break;
    }
    case XStarPolicy::kGiven:
      x_star = spec.given_x_star;
      break;
  }

  Rng corruption_rng = root.split(2);
  Corruption corruption =
      corrupt(spec.m, spec.beta, spec.corruption_magnitude, corruption_rng, spec.corruption_mode);
  return CorruptedSystem::assemble(std::move(a), std::move(x_star), std::move(corruption.c),
                                   std::move(corruption.support), spec.beta, spec.seed);
}

}  // namespace sqrk
