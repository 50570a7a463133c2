#pragma once

/**
 * @file
 * @brief Active-set solver for the shifted unmixing problem.
 *
 * Each outer iteration solves the equality-constrained subproblem on the
 * free set F, then either
 *  - moves towards the candidate as far as nonnegativity allows and fixes the
 *    blocking index (F -> L), or
 *  - if the candidate is nonnegative, takes it, computes the bound multipliers
 *    on L and releases the most negative one (L -> F), or stops when none is
 *    negative.
 */

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <variant>
#include <vector>

#include "unmix/kkt.hpp"
#include "unmix/model.hpp"

namespace unmix {

struct ActiveSetState
{
  /// F, sorted.
  IndexSet free;
  /// L, sorted. iterate is exactly zero here.
  IndexSet active;
  /// Current feasible x~, length P.
  Vector iterate;
};

enum class SolveStatus { Optimal, MaxIterationsExceeded };

constexpr std::string_view to_string(SolveStatus status) noexcept
{
  return status == SolveStatus::Optimal ? "optimal" : "max_iterations_exceeded";
}

struct Solution
{
  /// x = x~ + l.
  Vector abundances;
  /// x~.
  Vector shifted_abundances;
  /// lam, multiplier of 1^T x~ = s (Lagrangian term +lam (1^T x~ - s)).
  double eq_multiplier = 0.0;
  /// mu, multipliers of x~ >= 0. Zero on the final free set.
  Vector ineq_multipliers;
  /// f(x~), which equals 1/2 |y - A x|^2.
  double objective = 0.0;
  Index outer_iterations = 0;
  IndexSet final_free;
  SolveStatus status = SolveStatus::Optimal;
};

/// Chooses among tied minimizers of the step ratio.
class TieBreaker
{
public:
  explicit TieBreaker(TieBreak policy = {}) : policy_(policy), rng_(policy.seed) {}

  /// `tied` is non-empty and sorted ascending.
  Index choose(const IndexSet & tied)
  {
    if (policy_.policy == TieBreakPolicy::SmallestIndex || tied.size() == 1) {
      return tied.front();
    }
    std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
    return tied[pick(rng_)];
  }

private:
  TieBreak policy_;
  std::mt19937_64 rng_;
};

/**
 * @brief Starting point.
 *
 * budget = 0: the origin with every index active. Otherwise the uniform point
 * (budget / P) 1 with every index free, unless P exceeds the number of bands;
 * then all-free gives a singular subproblem and the start is the vertex
 * budget * e_j minimizing f over the vertices.
 */
inline ActiveSetState initialize_state(const ShiftedProblem & shifted)
{
  const Index p = shifted.size();
  ActiveSetState state;
  state.iterate = Vector::Zero(p);
  if (shifted.budget <= 0.0) {
    for (Index i = 0; i < p; ++i) { state.active.push_back(i); }
    return state;
  }

  const Index bands = shifted.shifted_target.size();
  if (bands == 0 || p <= bands) {
    state.iterate.setConstant(shifted.budget / static_cast<double>(p));
    for (Index i = 0; i < p; ++i) { state.free.push_back(i); }
    return state;
  }

  const double s = shifted.budget;
  Index best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < p; ++j) {
    const double value = 0.5 * s * s * shifted.H()(j, j) - s * shifted.linear(j);
    if (value < best_value) {
      best_value = value;
      best = j;
    }
  }
  state.iterate(best) = s;
  state.free.push_back(best);
  for (Index i = 0; i < p; ++i) {
    if (i != best) { state.active.push_back(i); }
  }
  return state;
}

struct FeasibleStep
{
  double step = 0.0;
  Index blocking = -1;
};

/**
 * @brief Largest step along d = x~* - x~ that keeps x~ >= 0.
 *
 * alpha* = min over {i in F : d_i < 0} of -x~_i / d_i. Exact ties go to `ties`.
 */
inline FeasibleStep max_feasible_step(
  const ActiveSetState & state, const SubproblemSolution & candidate, TieBreaker & ties)
{
  detail::require(
    candidate.free_values.size() == static_cast<Index>(state.free.size()),
    ErrorCode::DimensionMismatch, "candidate does not match the free set");

  double best = std::numeric_limits<double>::infinity();
  IndexSet tied;
  for (std::size_t k = 0; k < state.free.size(); ++k) {
    const Index i = state.free[k];
    const double d = candidate.free_values(static_cast<Index>(k)) - state.iterate(i);
    if (!(d < 0.0)) { continue; }
    const double ratio = -state.iterate(i) / d;
    if (ratio < best) {
      best = ratio;
      tied.assign(1, i);
    } else if (ratio == best) {
      tied.push_back(i);
    }
  }
  detail::require(
    !tied.empty(), ErrorCode::NoBlockingIndex,
    "candidate has a negative entry but no free coordinate decreases");
  return {best, ties.choose(tied)};
}

/**
 * @brief x~ += step * direction, then fix `blocking` at exactly zero and move it to L.
 *
 * `direction` has length P and is zero on L.
 */
inline ActiveSetState transfer_to_active(
  const ActiveSetState & state, double step, const Vector & direction, Index blocking)
{
  auto pos = std::lower_bound(state.free.begin(), state.free.end(), blocking);
  detail::require(
    pos != state.free.end() && *pos == blocking, ErrorCode::DimensionMismatch,
    "blocking index " + std::to_string(blocking) + " is not free");

  ActiveSetState next;
  next.iterate = state.iterate + step * direction;
  for (const Index i : state.free) {
    // rounding can leave -1e-17 on coordinates that only approach zero
    next.iterate(i) = std::max(next.iterate(i), 0.0);
  }
  next.iterate(blocking) = 0.0;
  for (const Index i : state.active) { next.iterate(i) = 0.0; }

  next.free = state.free;
  next.free.erase(next.free.begin() + (pos - state.free.begin()));
  next.active = state.active;
  next.active.insert(std::lower_bound(next.active.begin(), next.active.end(), blocking), blocking);
  return next;
}

/// mu*_L = H_LF x~*_F - h_L + lam* 1, ordered like `active`.
inline Vector lagrange_multipliers(
  const ShiftedProblem & shifted, const SubproblemSolution & candidate, const IndexSet & free,
  const IndexSet & active)
{
  detail::require(
    candidate.free_values.size() == static_cast<Index>(free.size()),
    ErrorCode::DimensionMismatch, "candidate does not match the free set");
  const Vector free_part = free.empty()
                             ? Vector::Zero(static_cast<Index>(active.size()))
                             : Vector(restrict(shifted.H(), active, free) * candidate.free_values);
  Vector mu = free_part - restrict(shifted.linear, active);
  mu.array() += candidate.multiplier;
  return mu;
}

struct Optimal
{};

/**
 * @brief Dual check on L.
 *
 * Returns Optimal when min mu >= -dual_tol, otherwise the state with the index
 * of the most negative multiplier (smallest index on ties) moved from L to F.
 */
inline std::variant<Optimal, ActiveSetState> release_from_active(
  const ActiveSetState & state, const Vector & multipliers, double dual_tol)
{
  detail::require(
    multipliers.size() == static_cast<Index>(state.active.size()), ErrorCode::DimensionMismatch,
    "multipliers do not match the active set");
  if (multipliers.size() == 0) { return Optimal{}; }

  Index worst = 0;
  multipliers.minCoeff(&worst);
  if (multipliers(worst) >= -dual_tol) { return Optimal{}; }

  const Index released = state.active[worst];
  ActiveSetState next = state;
  next.active.erase(next.active.begin() + worst);
  next.free.insert(std::lower_bound(next.free.begin(), next.free.end(), released), released);
  return next;
}

/// Reported after every outer iteration (one subproblem solve each).
struct IterationEvent
{
  enum class Kind { Blocked, Released, Optimal };

  Index iteration = 0;
  Kind kind = Kind::Optimal;
  /// f at the iterate after this iteration's update.
  double objective = 0.0;
  /// alpha* for Blocked, 1 otherwise.
  double step = 1.0;
  /// Index moved between F and L, -1 for Optimal.
  Index moved = -1;
  /// |F| after the update.
  Index free_size = 0;
  /// x~ after the update.
  const Vector * iterate = nullptr;
};

using IterationObserver = std::function<void(const IterationEvent &)>;

namespace detail {

inline Vector scatter(const Vector & values, const IndexSet & idx, Index p)
{
  Vector out = Vector::Zero(p);
  for (std::size_t k = 0; k < idx.size(); ++k) { out(idx[k]) = values(static_cast<Index>(k)); }
  return out;
}

}  // namespace detail

/**
 * @brief Solve the shifted problem to KKT optimality.
 *
 * abundances in the result equal shifted_abundances (no lower bounds are
 * known here); unmix() shifts them back.
 */
inline Solution active_set_solve(
  const ShiftedProblem & shifted, const SolverConfig & config = {},
  const IterationObserver & observer = {})
{
  config.validate();
  const Index p = shifted.size();
  detail::require(
    shifted.gram && shifted.H().rows() == p && shifted.H().cols() == p,
    ErrorCode::DimensionMismatch, "Gram does not match the linear term");
  detail::require(shifted.budget >= 0.0, ErrorCode::InfeasibleLowerBounds, "negative budget");

  Solution out;
  ActiveSetState state = initialize_state(shifted);

  if (shifted.budget <= 0.0) {
    // Single feasible point. lam = max h makes mu = lam 1 - h dual feasible.
    out.shifted_abundances = state.iterate;
    out.abundances = state.iterate;
    out.eq_multiplier = shifted.linear.maxCoeff();
    out.ineq_multipliers = out.eq_multiplier - shifted.linear.array();
    out.objective = shifted.const_term;
    return out;
  }

  SubproblemOptions options;
  if (shifted.shifted_target.size() > 0) { options.rank_bound = shifted.shifted_target.size(); }
  options.jitter = config.jitter;

  TieBreaker ties(config.tie_break);
  const Index cap = config.iteration_cap(p);
  double multiplier = 0.0;
  Vector mu = Vector::Zero(p);

  auto report = [&](IterationEvent::Kind kind, double step, Index moved) {
    if (!observer) { return; }
    IterationEvent event;
    event.iteration = out.outer_iterations;
    event.kind = kind;
    event.objective = objective_value(shifted, state.iterate);
    event.step = step;
    event.moved = moved;
    event.free_size = static_cast<Index>(state.free.size());
    event.iterate = &state.iterate;
    observer(event);
  };

  out.status = SolveStatus::MaxIterationsExceeded;
  while (out.outer_iterations < cap) {
    ++out.outer_iterations;
    SubproblemSolution candidate =
      solve_subproblem(shifted.H(), shifted.linear, shifted.budget, state.free, options);
    multiplier = candidate.multiplier;

    bool feasible = true;
    for (Index k = 0; k < candidate.free_values.size(); ++k) {
      double & value = candidate.free_values(k);
      if (value < -config.primal_tol) {
        feasible = false;
      } else if (value < 0.0) {
        value = 0.0;
      }
    }

    if (!feasible) {
      const FeasibleStep step = max_feasible_step(state, candidate, ties);
      const Vector direction =
        detail::scatter(candidate.free_values, state.free, p) - state.iterate;
      state = transfer_to_active(state, step.step, direction, step.blocking);
      report(IterationEvent::Kind::Blocked, step.step, step.blocking);
      continue;
    }

    state.iterate = detail::scatter(candidate.free_values, state.free, p);
    const Vector mu_active = lagrange_multipliers(shifted, candidate, state.free, state.active);
    mu = detail::scatter(mu_active, state.active, p);

    auto decision = release_from_active(state, mu_active, config.dual_tol);
    if (std::holds_alternative<Optimal>(decision)) {
      out.status = SolveStatus::Optimal;
      report(IterationEvent::Kind::Optimal, 1.0, -1);
      break;
    }
    auto & next = std::get<ActiveSetState>(decision);
    Index released = -1;
    for (const Index i : next.free) {
      if (!std::binary_search(state.free.begin(), state.free.end(), i)) { released = i; }
    }
    state = std::move(next);
    report(IterationEvent::Kind::Released, 1.0, released);
  }

  out.shifted_abundances = state.iterate;
  out.abundances = state.iterate;
  out.eq_multiplier = multiplier;
  out.ineq_multipliers = mu;
  for (const Index i : state.free) { out.ineq_multipliers(i) = 0.0; }
  out.objective = objective_value(shifted, state.iterate);
  out.final_free = state.free;
  return out;
}

}  // namespace unmix
