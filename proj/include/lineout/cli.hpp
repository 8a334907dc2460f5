#pragma once

// Command-line front end: case-info, simulate, identify, reproduce-118.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lineout {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int input = 2;
inline constexpr int simulation = 3;
inline constexpr int not_converged = 4;
}  // namespace exit_code

struct RunSpec {
  std::string command;
  std::optional<std::string> case_path;
  std::optional<std::string> internal;  ///< bus list or path to a file holding one
  std::optional<int> reference;
  std::optional<std::string> scenario;  ///< inline list or path to a scenario JSON
  std::optional<std::string> event_path;
  std::optional<double> sigma;
  std::optional<double> sigma_fraction;
  std::uint64_t seed = 1;
  int seeds = 10;
  int lambdas = 20;
  double decay = 1e-3;
  std::string criterion = "mdl";
  std::optional<int> k;
  int k_max = 5;
  std::string score_basis = "refit";  ///< "refit" or "lasso"
  std::optional<std::string> out;
};

/// Directory holding the bundled cases.
std::string data_dir();

/// `args` excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs an already-parsed spec.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace lineout
