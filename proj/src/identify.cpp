#include "lineout/identify.hpp"

#include <algorithm>
#include <exception>
#include <string>

namespace lineout {

Eigen::VectorXd internal_angle_change(const GridCase& grid, const EventRecord& event) {
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  if (event.pre_angles.values.size() != n || event.post_angles.values.size() != n) {
    throw InvalidInput("event angles do not match the case bus count");
  }
  const auto& rows = grid.internal_rows();
  Eigen::VectorXd change(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    change[static_cast<Eigen::Index>(i)] = event.post_angles.values[r] - event.pre_angles.values[r];
  }
  return change;
}

LassoProblem build_problem(const GridCase& grid, const Eigen::VectorXd& internal_change) {
  for (std::size_t i = 0; i < grid.line_count(); ++i) {
    if (grid.lines()[i].index != static_cast<LineIndex>(i + 1)) {
      throw InvalidInput("identification needs lines labelled 1..L in order");
    }
  }
  const IncidenceMatrix incidence = build_incidence(grid);
  const LaplacianPartition part =
      partition_columns(build_laplacian(incidence, grid.reactances()), grid);
  return LassoProblem(observation(part.internal, internal_change), incidence.entries,
                      part.external);
}

Identification identify(const GridCase& grid, const Eigen::VectorXd& internal_change,
                        const IdentifyOptions& options, double sigma_v) {
  options.solver.validate();
  LassoProblem problem = build_problem(grid, internal_change);
  const std::vector<double> lambdas = lambda_grid(problem, options.lambda_count, options.decay);
  PathResult path = solve_path(problem, lambdas, options.solver);
  SelectionParams params = options.selection;
  if (options.criterion == Criterion::VarianceDeviation && !params.noise_variance) {
    params.noise_variance = sigma_v * sigma_v;
  }
  SelectionReport report = select(problem, path, options.criterion, params);
  return {std::move(problem), std::move(path), std::move(report)};
}

namespace {

SeedOutcome run_seed(const GridCase& grid, const OutageScenario& scenario, double sigma_v,
                     std::uint64_t seed, const IdentifyOptions& options) {
  SeedOutcome out;
  out.seed = seed;
  out.event = simulate_event(grid, scenario, sigma_v, seed);
  out.true_support = scenario.changed_lines();

  IdentifyOptions mdl = options;
  mdl.criterion = Criterion::Mdl;
  Identification id = identify(grid, internal_angle_change(grid, out.event), mdl, sigma_v);
  out.on_path = std::find(id.path.supports.begin(), id.path.supports.end(), out.true_support) !=
                id.path.supports.end();

  SelectionParams params = options.selection;
  params.noise_variance = sigma_v * sigma_v;
  out.variance = select(id.problem, id.path, Criterion::VarianceDeviation, params);
  out.mdl = std::move(id.report);
  out.path = std::move(id.path);

  out.success = out.on_path && out.mdl.chosen_support == out.true_support &&
                out.variance.chosen_support == out.true_support;
  return out;
}

}  // namespace

std::vector<SeedOutcome> reproduce(const GridCase& grid, const OutageScenario& scenario,
                                   double sigma_v, const std::vector<std::uint64_t>& seeds,
                                   const IdentifyOptions& options) {
  std::vector<SeedOutcome> outcomes(seeds.size());
  std::vector<std::exception_ptr> failures(seeds.size());
  const auto count = static_cast<long>(seeds.size());

#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      outcomes[k] = run_seed(grid, scenario, sigma_v, seeds[k], options);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return outcomes;
}

}  // namespace lineout
