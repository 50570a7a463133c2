#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "unmix/unmix.hpp"

namespace unmix::testkit {

/// Uniform point on the simplex scaled to `total` (normalized exponentials).
inline Vector random_simplex(Index p, double total, std::mt19937_64 & rng)
{
  std::exponential_distribution<double> expo(1.0);
  Vector w(p);
  for (Index i = 0; i < p; ++i) { w(i) = expo(rng); }
  return total * w / w.sum();
}

/// |N(0,1)| entries.
inline Matrix abs_normal(Index rows, Index cols, std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) { a(r, c) = std::abs(normal(rng)); }
  }
  return a;
}

/**
 * Abs-normal library, y = A x_true + N(0, 0.05^2) with x_true uniform on the
 * simplex, lower bounds summing to U[0, max_bound_total].
 */
inline UnmixingProblem random_problem(
  Index bands, Index endmembers, std::mt19937_64 & rng, double max_bound_total = 0.9)
{
  const Matrix a = abs_normal(bands, endmembers, rng);
  const Vector x_true = random_simplex(endmembers, 1.0, rng);
  std::normal_distribution<double> noise(0.0, 0.05);
  Vector y = a * x_true;
  for (Index i = 0; i < bands; ++i) { y(i) += noise(rng); }
  std::uniform_real_distribution<double> total(0.0, max_bound_total);
  const Vector lower = random_simplex(endmembers, total(rng), rng);
  return {SpectralLibrary(a), y, lower};
}

/// N ~ U{5..30}, P ~ U{2..10}.
inline UnmixingProblem random_small_problem(std::mt19937_64 & rng)
{
  std::uniform_int_distribution<Index> bands(5, 30);
  std::uniform_int_distribution<Index> endmembers(2, 10);
  const Index n = bands(rng);
  const Index p = endmembers(rng);
  return random_problem(n, p, rng);
}

/// Problem given directly by A and y~ with zero lower bounds, shifted.
inline ShiftedProblem shifted_from(const Matrix & a, const Vector & y, double budget = 1.0)
{
  ShiftedProblem s;
  s.library = std::make_shared<const Matrix>(a);
  Matrix gram = a.transpose() * a;
  s.gram = std::make_shared<const Matrix>(0.5 * (gram + gram.transpose()));
  s.shifted_target = y;
  s.linear = a.transpose() * y;
  s.budget = budget;
  s.const_term = 0.5 * y.squaredNorm();
  return s;
}

inline std::string slurp(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

/// Runs a shell command, returns its exit status.
inline int run_command(const std::string & command)
{
  const int raw = std::system(command.c_str());
  if (raw == -1) { return -1; }
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

inline std::filesystem::path scratch_dir(const std::string & name)
{
  auto dir = std::filesystem::temp_directory_path() / ("unmix_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace unmix::testkit
