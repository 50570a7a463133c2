#pragma once

/**
 * @file
 * @brief Independent correctness instruments.
 *
 * verify_kkt measures how far a primal/dual triple is from satisfying the
 * first-order optimality conditions of the shifted problem. brute_force_solve
 * enumerates every nonempty free set and solves the bordered system with a
 * full-pivot LU, so it shares no numerical path with the active-set solver.
 */

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "unmix/active_set.hpp"
#include "unmix/model.hpp"

namespace unmix {

struct KktReport
{
  /// |H x~ - h + lam 1 - mu|_inf
  double stationarity_residual = 0.0;
  /// |1^T x~ - s|
  double primal_eq_residual = 0.0;
  /// max(0, -min x~)
  double primal_ineq_violation = 0.0;
  /// max(0, -min mu)
  double dual_violation = 0.0;
  /// max |mu_i x~_i|
  double complementarity_residual = 0.0;
  /// Threshold every residual was compared against: tol * max(1, |h|_inf).
  double threshold = 0.0;
  bool satisfied = false;
};

inline KktReport verify_kkt(
  const ShiftedProblem & shifted, const Vector & x, double eq_multiplier, const Vector & mu,
  double tol)
{
  const Index p = shifted.size();
  detail::require(
    x.size() == p && mu.size() == p && shifted.H().rows() == p, ErrorCode::DimensionMismatch,
    "KKT check needs x~ and mu of length " + std::to_string(p));

  KktReport report;
  Vector stationarity = shifted.H() * x - shifted.linear - mu;
  stationarity.array() += eq_multiplier;
  report.stationarity_residual = p > 0 ? stationarity.lpNorm<Eigen::Infinity>() : 0.0;
  report.primal_eq_residual = std::abs(x.sum() - shifted.budget);
  report.primal_ineq_violation = p > 0 ? std::max(0.0, -x.minCoeff()) : 0.0;
  report.dual_violation = p > 0 ? std::max(0.0, -mu.minCoeff()) : 0.0;
  report.complementarity_residual =
    p > 0 ? mu.cwiseProduct(x).lpNorm<Eigen::Infinity>() : 0.0;

  const double h_scale = p > 0 ? shifted.linear.lpNorm<Eigen::Infinity>() : 0.0;
  report.threshold = tol * std::max(1.0, h_scale);
  report.satisfied = report.stationarity_residual <= report.threshold &&
                     report.primal_eq_residual <= report.threshold &&
                     report.primal_ineq_violation <= report.threshold &&
                     report.dual_violation <= report.threshold &&
                     report.complementarity_residual <= report.threshold;
  return report;
}

inline constexpr Index kMaxOracleEndmembers = 15;

struct OracleResult
{
  /// KKT-satisfying candidate of least objective (or the best feasible one if
  /// no candidate passed the dual check).
  Solution solution;
  /// Objective of the best primal-feasible candidate, regardless of duals.
  double min_feasible_objective = std::numeric_limits<double>::infinity();
  bool kkt_candidate_found = false;
  /// Number of pairwise-distinct optimal points among the candidates; 1 means
  /// the optimum is unique.
  std::size_t distinct_optima = 0;
  std::size_t candidates_solved = 0;
};

namespace detail {

/// 1/2 |y~ - A x~|^2 straight from the library when available.
inline double residual_objective(const ShiftedProblem & shifted, const Vector & x)
{
  if (shifted.library) {
    return 0.5 * (shifted.shifted_target - (*shifted.library) * x).squaredNorm();
  }
  return 0.5 * x.dot(shifted.H() * x) - shifted.linear.dot(x) + shifted.const_term;
}

}  // namespace detail

/**
 * @brief Global optimum by enumerating all 2^P - 1 nonempty free sets.
 *
 * For each F the bordered system [H_FF 1; 1^T 0][x; lam] = [h_F; s] is solved
 * by full-pivot LU; singular systems are skipped. A candidate with x_F >= 0
 * and mu_L >= 0 is a global minimizer; the least-objective feasible
 * candidate is tracked separately as a cross-check.
 */
inline OracleResult brute_force_solve(const ShiftedProblem & shifted)
{
  const Index p = shifted.size();
  detail::require(
    p <= kMaxOracleEndmembers, ErrorCode::InstanceTooLarge,
    "enumeration is limited to " + std::to_string(kMaxOracleEndmembers) + " endmembers, got " +
      std::to_string(p));
  detail::require(p >= 1, ErrorCode::DimensionMismatch, "empty problem");
  detail::require(shifted.budget > 0.0, ErrorCode::InfeasibleLowerBounds, "budget must be positive");

  const Matrix & h_mat = shifted.H();
  const double h_scale = std::max(1.0, shifted.linear.lpNorm<Eigen::Infinity>());
  const double primal_slack = 1e-10 * std::max(1.0, shifted.budget);
  const double dual_slack = 1e-9 * h_scale;

  struct Candidate
  {
    Vector x;
    double lam = 0.0;
    Vector mu;
    double objective = 0.0;
    IndexSet free;
  };

  OracleResult result;
  std::vector<Candidate> optimal;
  Candidate best_feasible;
  bool have_feasible = false;

  for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
    IndexSet free;
    IndexSet active;
    for (Index i = 0; i < p; ++i) { ((mask >> i) & 1u ? free : active).push_back(i); }
    const auto k = static_cast<Index>(free.size());

    Matrix bordered = Matrix::Zero(k + 1, k + 1);
    Vector rhs(k + 1);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c < k; ++c) { bordered(r, c) = h_mat(free[r], free[c]); }
      bordered(r, k) = 1.0;
      bordered(k, r) = 1.0;
      rhs(r) = shifted.linear(free[r]);
    }
    rhs(k) = shifted.budget;

    Eigen::FullPivLU<Matrix> lu(bordered);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) { continue; }
    const Vector sol = lu.solve(rhs);
    if (!sol.allFinite()) { continue; }
    ++result.candidates_solved;

    Candidate cand;
    cand.free = free;
    cand.x = Vector::Zero(p);
    for (Index r = 0; r < k; ++r) { cand.x(free[r]) = sol(r); }
    cand.lam = sol(k);
    if (cand.x.minCoeff() < -primal_slack) { continue; }
    cand.x = cand.x.cwiseMax(0.0);
    cand.objective = detail::residual_objective(shifted, cand.x);

    if (!have_feasible || cand.objective < best_feasible.objective) {
      best_feasible = cand;
      have_feasible = true;
    }

    cand.mu = h_mat * cand.x - shifted.linear;
    cand.mu.array() += cand.lam;
    for (const Index i : free) { cand.mu(i) = 0.0; }
    bool dual_ok = true;
    for (const Index i : active) { dual_ok = dual_ok && cand.mu(i) >= -dual_slack; }
    if (dual_ok) { optimal.push_back(std::move(cand)); }
  }

  detail::require(
    have_feasible, ErrorCode::NoFeasibleCandidate,
    "no free set produced a nonsingular, primal-feasible subproblem");
  result.min_feasible_objective = best_feasible.objective;
  result.kkt_candidate_found = !optimal.empty();

  const Candidate * chosen = &best_feasible;
  if (!optimal.empty()) {
    // least objective, ties to the first enumerated free set
    chosen = &optimal.front();
    for (const auto & c : optimal) {
      if (c.objective < chosen->objective) { chosen = &c; }
    }
    std::vector<const Vector *> distinct;
    for (const auto & c : optimal) {
      const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const Vector * v) {
        return (*v - c.x).lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, shifted.budget);
      });
      if (!seen) { distinct.push_back(&c.x); }
    }
    result.distinct_optima = distinct.size();
  }

  Solution & s = result.solution;
  s.shifted_abundances = chosen->x;
  s.abundances = chosen->x;
  s.eq_multiplier = chosen->lam;
  s.ineq_multipliers = chosen->mu.size() == p ? chosen->mu : Vector::Zero(p);
  s.objective = chosen->objective;
  s.final_free = chosen->free;
  s.outer_iterations = static_cast<Index>(result.candidates_solved);
  s.status = SolveStatus::Optimal;
  return result;
}

}  // namespace unmix
