#pragma once

#include <algorithm>
#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "unmix/active_set.hpp"
#include "unmix/shift.hpp"
#include "unmix/verify.hpp"

namespace unmix {

namespace detail {

inline Solution unmix_with_gram(
  const UnmixingProblem & problem, std::shared_ptr<const Matrix> gram, const SolverConfig & config)
{
  config.validate();
  const ShiftedProblem shifted = shift_problem(problem, std::move(gram), config.primal_tol);
  Solution solution = active_set_solve(shifted, config);
  solution.abundances = unshift_solution(solution.shifted_abundances, problem.lower_bounds);
  return solution;
}

}  // namespace detail

/// Validate, shift, solve and shift back.
inline Solution unmix(const UnmixingProblem & problem, const SolverConfig & config = {})
{
  validate_problem(problem, config.primal_tol);
  return detail::unmix_with_gram(
    problem, std::make_shared<const Matrix>(precompute_gram(problem.library)), config);
}

struct BatchJob
{
  SpectralLibrary library;
  /// N x M, one measured spectrum per column.
  Matrix pixels;
  Vector lower_bounds;
  SolverConfig config;
};

struct PixelResult
{
  std::optional<Solution> solution;
  /// Set when the pixel threw.
  std::optional<ErrorCode> error;
  std::string message;
  /// KKT residuals of the returned solution in the shifted problem.
  std::optional<KktReport> kkt;

  bool solved() const
  {
    return solution && !error && solution->status == SolveStatus::Optimal;
  }
};

struct BatchResult
{
  std::vector<PixelResult> pixels;
  std::size_t failures = 0;
};

/**
 * @brief Unmix every column of job.pixels against one shared Gram.
 *
 * Per-pixel errors land in that pixel's slot. Output order matches column
 * order for any `workers` count.
 */
inline BatchResult unmix_batch(const BatchJob & job, unsigned workers = 1, double kkt_tol = 1e-8)
{
  detail::require(
    job.pixels.rows() == job.library.bands(), ErrorCode::DimensionMismatch,
    "pixel matrix has " + std::to_string(job.pixels.rows()) + " rows, library has " +
      std::to_string(job.library.bands()) + " bands");
  detail::require(job.pixels.cols() >= 1, ErrorCode::DimensionMismatch, "no pixels to unmix");
  // dimensions and lower bounds are batch-level; pixel contents are checked per pixel
  validate_problem(
    {job.library, Vector::Zero(job.library.bands()), job.lower_bounds}, job.config.primal_tol);
  job.config.validate();

  const auto gram = std::make_shared<const Matrix>(precompute_gram(job.library));
  const Index m = job.pixels.cols();
  BatchResult result;
  result.pixels.resize(static_cast<std::size_t>(m));

  auto run = [&](Index col) {
    PixelResult & slot = result.pixels[static_cast<std::size_t>(col)];
    try {
      const UnmixingProblem problem{job.library, job.pixels.col(col), job.lower_bounds};
      const ShiftedProblem shifted = shift_problem(problem, gram, job.config.primal_tol);
      Solution solution = active_set_solve(shifted, job.config);
      solution.abundances = unshift_solution(solution.shifted_abundances, job.lower_bounds);
      slot.kkt = verify_kkt(
        shifted, solution.shifted_abundances, solution.eq_multiplier, solution.ineq_multipliers,
        kkt_tol);
      slot.solution = std::move(solution);
    } catch (const UnmixError & e) {
      slot.error = e.code();
      slot.message = e.what();
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(m)));
  if (workers == 1) {
    for (Index col = 0; col < m; ++col) { run(col); }
  } else {
    std::atomic<Index> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (Index col = next++; col < m; col = next++) { run(col); }
      });
    }
  }

  result.failures = static_cast<std::size_t>(
    std::count_if(result.pixels.begin(), result.pixels.end(), [](const PixelResult & r) {
      return !r.solved();
    }));
  return result;
}

}  // namespace unmix
