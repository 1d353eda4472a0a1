#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ibmot::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kInfeasible = 3,
  kNumerical = 4,
};

struct RunConfig {
  std::string command;  ///< check | convexify | solve | evaluate | simulate
  std::string mu_path;
  std::string nu_path;
  std::string coupling_path;
  double t0 = 0.0;
  double t1 = 1.0;
  int n_noise = 288;
  int n_time = 64;
  double epsilon = 1e-2;
  std::optional<std::int64_t> max_iters;
  std::int64_t n_paths = 100'000;
  int grid = 200;
  std::uint64_t seed = 0;
  double alpha = 2.0;
  double beta = 2.0;
  bool repair = true;
  std::optional<int> discretize;
  std::string out_path;
  std::string out_mu_path;  ///< convexify only
  std::string out_nu_path;  ///< convexify only
  std::string report_path;  ///< report goes to `out` stream when empty
};

/// Runs one command. The JSON report is written to config.report_path, or to
/// `out` when no path is given; failures print an error object to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace ibmot::cli
