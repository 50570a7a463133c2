#pragma once

/**
 * @file
 * @brief Domain types for lower-bounded, sum-to-one linear unmixing.
 *
 * The original problem is
 *
 *   min_x  1/2 |y - A x|^2   s.t.  x >= l,  1^T x = 1
 *
 * with A an N x P spectral library. Solvers work on the shifted form
 * (x~ = x - l) described by ShiftedProblem.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "unmix/error.hpp"

namespace unmix {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string & what)
{
  if (!condition) { throw UnmixError(code, what); }
}

inline std::string dims(Index rows, Index cols)
{
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail

/**
 * @brief Dense N x P matrix of endmember spectra, one endmember per column.
 *
 * Immutable after construction. Copies share the underlying storage.
 */
class SpectralLibrary
{
public:
  explicit SpectralLibrary(Matrix entries)
  {
    detail::require(
      entries.rows() >= 1 && entries.cols() >= 1, ErrorCode::DimensionMismatch,
      "spectral library must be at least 1x1, got " + detail::dims(entries.rows(), entries.cols()));
    detail::require(
      entries.allFinite(), ErrorCode::NonFiniteInput, "spectral library has non-finite entries");
    entries_ = std::make_shared<const Matrix>(std::move(entries));
  }

  /// Number of spectral bands.
  Index bands() const noexcept { return entries_->rows(); }
  /// Number of endmembers.
  Index endmembers() const noexcept { return entries_->cols(); }

  const Matrix & matrix() const noexcept { return *entries_; }
  const std::shared_ptr<const Matrix> & shared() const noexcept { return entries_; }

private:
  std::shared_ptr<const Matrix> entries_;
};

struct UnmixingProblem
{
  SpectralLibrary library;
  /// Measured spectrum y, length N.
  Vector measurement;
  /// Minimum abundances l, length P. Must be nonnegative and sum to at most one.
  Vector lower_bounds;
};

/**
 * @brief The problem after the shift x~ = x - l.
 *
 *   f(x~) = 1/2 x~^T H x~ - h^T x~ + const_term,   x~ >= 0,  1^T x~ = budget
 *
 * with H = A^T A, h = A^T y~, y~ = y - A l, budget = 1 - 1^T l.
 * The library pointer may be null when the problem is given directly in
 * quadratic form; only the brute-force oracle needs it.
 */
struct ShiftedProblem
{
  std::shared_ptr<const Matrix> library;
  std::shared_ptr<const Matrix> gram;
  Vector linear;
  Vector shifted_target;
  double budget = 0.0;
  double const_term = 0.0;

  Index size() const noexcept { return linear.size(); }
  const Matrix & H() const noexcept { return *gram; }
};

enum class TieBreakPolicy { SmallestIndex, Random };

struct TieBreak
{
  TieBreakPolicy policy = TieBreakPolicy::SmallestIndex;
  std::uint64_t seed = 0;

  static TieBreak smallest_index() { return {}; }
  static TieBreak random(std::uint64_t seed) { return {TieBreakPolicy::Random, seed}; }
};

struct SolverConfig
{
  double primal_tol = 1e-10;
  double dual_tol = 1e-10;
  /// Cap on subproblem solves. Unset means 10 * P.
  std::optional<Index> max_outer_iterations;
  TieBreak tie_break;
  /// Add 1e-10 * trace / |F| to the diagonal of every reduced Gram. Changes the optimizer.
  bool jitter = false;

  Index iteration_cap(Index endmembers) const
  {
    return max_outer_iterations.value_or(10 * endmembers);
  }

  void validate() const
  {
    detail::require(
      primal_tol > 0.0 && dual_tol > 0.0, ErrorCode::InvalidConfig,
      "tolerances must be strictly positive");
    detail::require(
      !max_outer_iterations || *max_outer_iterations >= 1, ErrorCode::InvalidConfig,
      "max_outer_iterations must be at least 1");
  }
};

/**
 * @brief Check dimensions, finiteness and feasibility of the lower bounds.
 *
 * sum(l) may exceed one by at most primal_tol.
 */
inline void validate_problem(const UnmixingProblem & problem, double primal_tol = 1e-10)
{
  const Index n = problem.library.bands();
  const Index p = problem.library.endmembers();
  detail::require(
    problem.measurement.size() == n, ErrorCode::DimensionMismatch,
    "measurement has length " + std::to_string(problem.measurement.size()) + ", library has " +
      std::to_string(n) + " bands");
  detail::require(
    problem.lower_bounds.size() == p, ErrorCode::DimensionMismatch,
    "lower bounds have length " + std::to_string(problem.lower_bounds.size()) +
      ", library has " + std::to_string(p) + " endmembers");
  detail::require(
    problem.measurement.allFinite(), ErrorCode::NonFiniteInput, "measurement has non-finite entries");
  detail::require(
    problem.lower_bounds.allFinite(), ErrorCode::NonFiniteInput,
    "lower bounds have non-finite entries");
  detail::require(
    problem.lower_bounds.minCoeff() >= 0.0, ErrorCode::InfeasibleLowerBounds,
    "lower bounds must be nonnegative");
  const double total = problem.lower_bounds.sum();
  detail::require(
    total <= 1.0 + primal_tol, ErrorCode::InfeasibleLowerBounds,
    "lower bounds sum to " + std::to_string(total) + " > 1");
}

/// f(x~) evaluated through the quadratic form.
inline double objective_value(const ShiftedProblem & shifted, const Vector & x)
{
  detail::require(
    x.size() == shifted.size(), ErrorCode::DimensionMismatch,
    "iterate has length " + std::to_string(x.size()) + ", problem has " +
      std::to_string(shifted.size()));
  detail::require(x.allFinite(), ErrorCode::NonFiniteInput, "iterate has non-finite entries");
  return 0.5 * x.dot(shifted.H() * x) - shifted.linear.dot(x) + shifted.const_term;
}

/// H x~ - h.
inline Vector objective_gradient(const ShiftedProblem & shifted, const Vector & x)
{
  detail::require(
    x.size() == shifted.size(), ErrorCode::DimensionMismatch, "iterate length mismatch");
  return shifted.H() * x - shifted.linear;
}

}  // namespace unmix
