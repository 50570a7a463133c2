// Batch unmixing: one abundance column per measured spectrum.
//
// Exit codes: 0 all pixels solved, 2 invalid input, 3 at least one pixel
// failed numerically.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "unmix/unmix.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitNumericalFailure = 3;

unmix::TieBreak parse_tie_break(const std::string & text)
{
  if (text == "smallest") { return unmix::TieBreak::smallest_index(); }
  const std::string prefix = "random:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    std::size_t used = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(digits, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (!digits.empty() && used == digits.size()) { return unmix::TieBreak::random(seed); }
  }
  throw unmix::UnmixError(
    unmix::ErrorCode::InvalidConfig, "--tie-break must be 'smallest' or 'random:SEED', got '" +
                                       text + "'");
}

nlohmann::json diagnostics_record(std::size_t pixel, const unmix::PixelResult & r)
{
  nlohmann::json rec;
  rec["pixel"] = pixel;
  if (r.error) {
    rec["status"] = "error";
    rec["error"] = std::string(unmix::to_string(*r.error));
    rec["message"] = r.message;
    return rec;
  }
  const auto & s = *r.solution;
  rec["status"] = std::string(unmix::to_string(s.status));
  rec["iterations"] = s.outer_iterations;
  rec["free_size"] = s.final_free.size();
  rec["objective"] = s.objective;
  rec["eq_multiplier"] = s.eq_multiplier;
  if (r.kkt) {
    rec["kkt"] = {
      {"stationarity", r.kkt->stationarity_residual},
      {"primal_eq", r.kkt->primal_eq_residual},
      {"primal_ineq", r.kkt->primal_ineq_violation},
      {"dual", r.kkt->dual_violation},
      {"complementarity", r.kkt->complementarity_residual},
      {"satisfied", r.kkt->satisfied},
    };
  }
  return rec;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Fully constrained linear unmixing with minimum-abundance bounds"};
  app.name("unmix");

  std::string library_path;
  std::string input_path;
  std::string output_path;
  std::optional<std::string> bounds_path;
  std::optional<std::string> diagnostics_path;
  unmix::SolverConfig config;
  std::optional<unmix::Index> max_iter;
  std::string tie_break = "smallest";
  bool header = false;
  unsigned jobs = 1;

  app.add_option("--library", library_path, "N x P spectral library CSV")
    ->required()
    ->envname("UNMIX_LIBRARY");
  app.add_option("--input", input_path, "N x M measured spectra CSV, one pixel per column")
    ->required()
    ->envname("UNMIX_INPUT");
  app.add_option("--lower-bounds", bounds_path, "P minimum abundances (one row or column)")
    ->envname("UNMIX_LOWER_BOUNDS");
  app.add_option("--output", output_path, "P x M abundance CSV")
    ->required()
    ->envname("UNMIX_OUTPUT");
  app.add_option("--diagnostics", diagnostics_path, "per-pixel JSON lines")
    ->envname("UNMIX_DIAGNOSTICS");
  app.add_option("--tol", config.primal_tol, "primal feasibility tolerance")
    ->envname("UNMIX_TOL")
    ->check(CLI::PositiveNumber);
  app.add_option("--dual-tol", config.dual_tol, "dual feasibility tolerance")
    ->envname("UNMIX_DUAL_TOL")
    ->check(CLI::PositiveNumber);
  app.add_option("--max-iter", max_iter, "outer iteration cap (default 10 * P)")
    ->envname("UNMIX_MAX_ITER")
    ->check(CLI::PositiveNumber);
  app.add_option("--tie-break", tie_break, "smallest | random:SEED")
    ->envname("UNMIX_TIE_BREAK");
  app.add_flag("--header", header, "CSV inputs start with a header row; write one on output")
    ->envname("UNMIX_HEADER");
  app.add_option("--jobs", jobs, "worker threads")
    ->envname("UNMIX_JOBS")
    ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitInvalidInput;
  }

  unmix::BatchResult result;
  try {
    config.max_outer_iterations = max_iter;
    config.tie_break = parse_tie_break(tie_break);

    unmix::SpectralLibrary library(unmix::csv::read(library_path, header));
    unmix::Matrix pixels = unmix::csv::read(input_path, header);
    unmix::Vector bounds = bounds_path ? unmix::csv::read_vector(*bounds_path, header)
                                       : unmix::Vector::Zero(library.endmembers());
    result = unmix::unmix_batch({library, std::move(pixels), std::move(bounds), config}, jobs);

    const auto m = static_cast<unmix::Index>(result.pixels.size());
    unmix::Matrix abundances =
      unmix::Matrix::Constant(library.endmembers(), m, std::numeric_limits<double>::quiet_NaN());
    for (unmix::Index c = 0; c < m; ++c) {
      const auto & r = result.pixels[static_cast<std::size_t>(c)];
      if (r.solution) { abundances.col(c) = r.solution->abundances; }
    }
    std::vector<std::string> columns;
    if (header) {
      for (unmix::Index c = 0; c < m; ++c) { columns.push_back("pixel_" + std::to_string(c + 1)); }
    }
    unmix::csv::write(output_path, abundances, columns);

    if (diagnostics_path) {
      std::ofstream diag(*diagnostics_path, std::ios::trunc);
      if (!diag) {
        throw unmix::UnmixError(unmix::ErrorCode::ParseError, "cannot write " + *diagnostics_path);
      }
      for (std::size_t i = 0; i < result.pixels.size(); ++i) {
        diag << diagnostics_record(i, result.pixels[i]).dump() << '\n';
      }
    }
  } catch (const unmix::UnmixError & e) {
    std::cerr << "unmix: " << e.what() << '\n';
    return kExitInvalidInput;
  }

  if (result.failures > 0) {
    std::cerr << "unmix: " << result.failures << " of " << result.pixels.size()
              << " pixels failed\n";
    return kExitNumericalFailure;
  }
  return kExitOk;
}
