#pragma once

// End-to-end identification: observed internal angle changes -> Lasso path ->
// selected line-change support.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lineout/dc_flow.hpp"
#include "lineout/grid_model.hpp"
#include "lineout/lasso_bcd.hpp"
#include "lineout/model_select.hpp"

namespace lineout {

/// theta~_I = theta'_I - theta_I, taken from internal rows only.
Eigen::VectorXd internal_angle_change(const GridCase& grid, const EventRecord& event);

/// y = B_I theta~_I with the pre-event B; regressors M, external block B_E.
LassoProblem build_problem(const GridCase& grid, const Eigen::VectorXd& internal_change);

struct IdentifyOptions {
  int lambda_count = 20;
  double decay = 1e-3;
  Criterion criterion = Criterion::Mdl;
  SelectionParams selection;
  SolverConfig solver;
};

struct Identification {
  LassoProblem problem;
  PathResult path;
  SelectionReport report;
};

/// Runs lambda_grid -> solve_path -> select. For the variance criterion the
/// noise variance defaults to sigma_v^2 when `selection.noise_variance` is unset.
Identification identify(const GridCase& grid, const Eigen::VectorXd& internal_change,
                        const IdentifyOptions& options, double sigma_v = 0.0);

struct SeedOutcome {
  std::uint64_t seed = 0;
  EventRecord event;
  std::vector<LineIndex> true_support;
  PathResult path;
  SelectionReport mdl;
  SelectionReport variance;
  bool on_path = false;  ///< some path solution has exactly the true support
  bool success = false;  ///< on_path and both criteria pick the true support
};

/// Simulates and identifies one event per seed, scoring with both MDL and
/// variance deviation. Seeds are processed in parallel when OpenMP is
/// available; results keep the order of `seeds`.
std::vector<SeedOutcome> reproduce(const GridCase& grid, const OutageScenario& scenario,
                                   double sigma_v, const std::vector<std::uint64_t>& seeds,
                                   const IdentifyOptions& options = {});

}  // namespace lineout
