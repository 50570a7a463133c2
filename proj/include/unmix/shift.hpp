#pragma once

#include <algorithm>
#include <memory>

#include "unmix/model.hpp"

namespace unmix {

/// Symmetrized A^T A. Computed once per library and shared across pixels.
inline Matrix precompute_gram(const SpectralLibrary & library)
{
  const Matrix & a = library.matrix();
  Matrix gram = a.transpose() * a;
  return 0.5 * (gram + gram.transpose());
}

/**
 * @brief Shift the lower bounds out of the problem, reusing a precomputed Gram.
 *
 * The Gram must be A^T A for the problem's library; it is shared, not copied.
 */
inline ShiftedProblem shift_problem(
  const UnmixingProblem & problem, std::shared_ptr<const Matrix> gram,
  double primal_tol = 1e-10)
{
  validate_problem(problem, primal_tol);
  const Index p = problem.library.endmembers();
  detail::require(
    gram && gram->rows() == p && gram->cols() == p, ErrorCode::DimensionMismatch,
    "precomputed Gram must be " + detail::dims(p, p));

  const Matrix & a = problem.library.matrix();
  ShiftedProblem shifted;
  shifted.library = problem.library.shared();
  shifted.gram = std::move(gram);
  shifted.shifted_target = problem.measurement - a * problem.lower_bounds;
  shifted.linear = a.transpose() * shifted.shifted_target;
  // sum(l) may overshoot 1 by primal_tol; keep the budget nonnegative.
  shifted.budget = std::max(0.0, 1.0 - problem.lower_bounds.sum());
  shifted.const_term = 0.5 * shifted.shifted_target.squaredNorm();
  return shifted;
}

inline ShiftedProblem shift_problem(const UnmixingProblem & problem, double primal_tol = 1e-10)
{
  validate_problem(problem, primal_tol);
  return shift_problem(
    problem, std::make_shared<const Matrix>(precompute_gram(problem.library)), primal_tol);
}

/// x = x~ + l.
inline Vector unshift_solution(const Vector & shifted_abundances, const Vector & lower_bounds)
{
  detail::require(
    shifted_abundances.size() == lower_bounds.size(), ErrorCode::DimensionMismatch,
    "shifted abundances and lower bounds differ in length");
  return shifted_abundances + lower_bounds;
}

}  // namespace unmix
