#pragma once

/**
 * @file
 * @brief Equality-constrained subproblem on a free set F.
 *
 * Solves the saddle-point system
 *
 *   [ H_FF  1 ] [ x_F ]   [ h_F ]
 *   [ 1^T   0 ] [ lam ] = [ s   ]
 *
 * by block elimination: two SPD solves with H_FF and the scalar Schur
 * complement 1^T H_FF^{-1} 1, which is positive whenever H_FF is.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "unmix/model.hpp"

namespace unmix {

/// Sorted, duplicate-free list of endmember indices.
using IndexSet = std::vector<Index>;

/// Lower-triangular Cholesky factor of a restricted Gram.
class SpdFactorization
{
public:
  explicit SpdFactorization(Matrix lower) : lower_(std::move(lower)) {}

  Index dimension() const noexcept { return lower_.rows(); }
  const Matrix & factor() const noexcept { return lower_; }

  /// Solves (L L^T) z = rhs.
  Vector solve(const Vector & rhs) const
  {
    Vector z = lower_.triangularView<Eigen::Lower>().solve(rhs);
    lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    return z;
  }

  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

private:
  Matrix lower_;
};

struct SubproblemSolution
{
  /// x~*_F, ordered like the free set.
  Vector free_values;
  /// lam*, multiplier of the sum constraint.
  double multiplier = 0.0;
  /// 1^T H_FF^{-1} 1 (of the matrix actually factorized).
  double schur = 0.0;
  /// True if H_FF was singular and H_FF + rho 1 1^T was factorized instead.
  bool augmented = false;
};

struct SubproblemOptions
{
  /// Rank of the full Gram when known (the number of bands N); |F| > rank_bound
  /// means H_FF is singular and the plain factorization is skipped.
  std::optional<Index> rank_bound;
  bool jitter = false;
};

/// H restricted to rows `rows` and columns `cols`.
inline Matrix restrict(const Matrix & gram, const IndexSet & rows, const IndexSet & cols)
{
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) { out(r, c) = gram(rows[r], cols[c]); }
  }
  return out;
}

inline Vector restrict(const Vector & v, const IndexSet & idx)
{
  Vector out(static_cast<Index>(idx.size()));
  for (Index i = 0; i < out.size(); ++i) { out(i) = v(idx[i]); }
  return out;
}

namespace detail {

inline void check_index_set(const IndexSet & set, Index p)
{
  for (std::size_t k = 0; k < set.size(); ++k) {
    require(
      set[k] >= 0 && set[k] < p, ErrorCode::DimensionMismatch,
      "index " + std::to_string(set[k]) + " outside [0, " + std::to_string(p) + ")");
    require(
      k == 0 || set[k - 1] < set[k], ErrorCode::DimensionMismatch,
      "index set must be strictly increasing");
  }
}

/**
 * Cholesky with an explicit pivot floor: a pivot at or below `floor` means the
 * matrix is not numerically positive definite.
 */
inline std::optional<Matrix> cholesky(const Matrix & m, double floor)
{
  const Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > floor)) { return std::nullopt; }
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  return l;
}

inline double pivot_floor(const Matrix & m, Index p)
{
  const double max_diag = m.rows() > 0 ? m.diagonal().maxCoeff() : 0.0;
  return static_cast<double>(p) * std::numeric_limits<double>::epsilon() * std::max(max_diag, 0.0);
}

inline UnmixError rank_deficient(Index free_size, const std::optional<Index> & rank_bound)
{
  std::string msg = "restricted Gram of " + std::to_string(free_size) +
                    " free endmembers is not positive definite";
  if (rank_bound && free_size > *rank_bound) {
    msg += " (more free endmembers than the " + std::to_string(*rank_bound) +
           " spectral bands; requires |F| <= N linearly independent columns)";
  } else {
    msg += " (library columns in the free set are linearly dependent)";
  }
  return UnmixError(ErrorCode::RankDeficientLibrary, msg);
}

}  // namespace detail

/**
 * @brief Cholesky factor of H_FF.
 *
 * Throws RankDeficientLibrary when a pivot falls to P * eps * max(diag H_FF)
 * or below, P being the full dimension of the Gram.
 */
inline SpdFactorization factorize(const Matrix & gram, const IndexSet & free)
{
  detail::require(!free.empty(), ErrorCode::EmptyFreeSet, "cannot factorize an empty free set");
  detail::check_index_set(free, gram.rows());
  const Matrix hff = restrict(gram, free, free);
  auto lower = detail::cholesky(hff, detail::pivot_floor(hff, gram.rows()));
  if (!lower) { throw detail::rank_deficient(static_cast<Index>(free.size()), std::nullopt); }
  return SpdFactorization(std::move(*lower));
}

/**
 * @brief Solve the equality-constrained subproblem on `free`.
 *
 * With H_FF u = h_F and H_FF v = 1: lam* = (1^T u - s) / (1^T v), x_F* = u - lam* v.
 *
 * If H_FF is singular but positive definite on {d : 1^T d = 0} (typically
 * |F| = N + 1), the saddle-point system is still nonsingular. The same
 * elimination is then carried out with H_FF + rho 1 1^T, which is SPD in that
 * case and has the same solution x_F* (its multiplier is shifted by rho * s).
 */
inline SubproblemSolution solve_subproblem(
  const Matrix & gram, const Vector & linear, double budget, const IndexSet & free,
  const SubproblemOptions & options = {})
{
  const Index p = gram.rows();
  detail::require(
    gram.cols() == p && linear.size() == p, ErrorCode::DimensionMismatch,
    "Gram is " + detail::dims(gram.rows(), gram.cols()) + ", linear term has length " +
      std::to_string(linear.size()));
  if (free.empty()) {
    detail::require(
      budget <= 0.0, ErrorCode::EmptyFreeSet, "empty free set with positive budget");
    return {};
  }
  detail::check_index_set(free, p);

  const auto k = static_cast<Index>(free.size());
  Matrix hff = restrict(gram, free, free);
  if (options.jitter) { hff.diagonal().array() += 1e-10 * hff.trace() / static_cast<double>(k); }
  const Vector hf = restrict(linear, free);
  const Vector ones = Vector::Ones(k);

  double rho = 0.0;
  std::optional<Matrix> lower;
  if (!options.rank_bound || k <= *options.rank_bound) {
    lower = detail::cholesky(hff, detail::pivot_floor(hff, p));
  }
  if (!lower) {
    rho = std::max(hff.diagonal().maxCoeff(), 0.0);
    if (rho == 0.0) { rho = 1.0; }
    const Matrix shifted = hff + rho * ones * ones.transpose();
    lower = detail::cholesky(shifted, detail::pivot_floor(shifted, p));
    if (!lower) { throw detail::rank_deficient(k, options.rank_bound); }
  }

  const SpdFactorization factor(std::move(*lower));
  const Vector u = factor.solve(hf);
  const Vector v = factor.solve(ones);
  const double schur = v.sum();
  detail::require(
    schur > 0.0 && std::isfinite(schur), ErrorCode::RankDeficientLibrary,
    "Schur complement 1^T H_FF^{-1} 1 is not positive");

  SubproblemSolution out;
  const double shifted_multiplier = (u.sum() - budget) / schur;
  out.free_values = u - shifted_multiplier * v;
  out.multiplier = shifted_multiplier + rho * budget;
  out.schur = schur;
  out.augmented = rho != 0.0;
  return out;
}

}  // namespace unmix
