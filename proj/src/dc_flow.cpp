#include "lineout/dc_flow.hpp"

#include <cmath>
#include <random>

namespace lineout {

InjectionVector case_injections(const GridCase& grid) {
  return {grid.injections(), grid.slack_adjustment() != 0.0};
}

AngleVector solve_dc(const GridCase& grid, const InjectionVector& p) {
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  if (p.values.size() != n) {
    throw InvalidInput("injection vector has length " + std::to_string(p.values.size()) +
                       ", expected " + std::to_string(n));
  }
  const double imbalance = p.values.sum();
  if (std::abs(imbalance) > 1e-9 * std::max(1.0, p.values.lpNorm<1>())) {
    throw InvalidInput("injections are unbalanced (sum = " + std::to_string(imbalance) + ")");
  }
  if (component_count(grid) != 1) {
    throw SingularSystemError("DC system is singular: grid is disconnected");
  }

  AngleVector theta{Eigen::VectorXd::Zero(n)};
  if (n == 1) return theta;

  const Eigen::MatrixXd& b = laplacian_of(grid).entries;
  const auto ref = static_cast<Eigen::Index>(grid.reference_row());
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != ref) keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd reduced(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rhs[i] = p.values[keep[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < m; ++j) {
      reduced(i, j) = b(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
  }
  // The reduced Laplacian of a connected graph is symmetric positive definite.
  Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success) {
    throw SingularSystemError("reduced DC system is not positive definite");
  }
  const Eigen::VectorXd sol = llt.solve(rhs);
  for (Eigen::Index i = 0; i < m; ++i) theta.values[keep[static_cast<std::size_t>(i)]] = sol[i];
  return theta;
}

Eigen::VectorXd line_flows(const GridCase& grid, const AngleVector& theta) {
  if (theta.values.size() != static_cast<Eigen::Index>(grid.bus_count())) {
    throw InvalidInput("angle vector length does not match bus count");
  }
  Eigen::VectorXd flows(static_cast<Eigen::Index>(grid.line_count()));
  for (std::size_t k = 0; k < grid.line_count(); ++k) {
    const Line& line = grid.lines()[k];
    const double from = theta.values[static_cast<Eigen::Index>(grid.row_of(line.from_bus))];
    const double to = theta.values[static_cast<Eigen::Index>(grid.row_of(line.to_bus))];
    flows[static_cast<Eigen::Index>(k)] = (from - to) / line.reactance;
  }
  return flows;
}

InjectionVector injections_from_angles(const GridCase& grid, const AngleVector& theta) {
  const Eigen::VectorXd flows = line_flows(grid, theta);
  InjectionVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.bus_count())), false};
  for (std::size_t k = 0; k < grid.line_count(); ++k) {
    const Line& line = grid.lines()[k];
    const double f = flows[static_cast<Eigen::Index>(k)];
    p.values[static_cast<Eigen::Index>(grid.row_of(line.from_bus))] += f;
    p.values[static_cast<Eigen::Index>(grid.row_of(line.to_bus))] -= f;
  }
  return p;
}

Eigen::VectorXd draw_gaussian(std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidParameter("noise standard deviation must be finite and non-negative");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (sigma == 0.0) return v;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd draw_noise(std::size_t n, double sigma, std::uint64_t seed) {
  Eigen::VectorXd v = draw_gaussian(n, sigma, seed);
  if (n > 0) v.array() -= v.mean();
  return v;
}

double noise_sigma(const GridCase& grid, double fraction) {
  if (!(fraction >= 0.0) || !std::isfinite(fraction)) {
    throw InvalidParameter("noise fraction must be finite and non-negative");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (const Bus& bus : grid.buses()) {
    if (bus.injection != 0.0) {
      total += std::abs(bus.injection);
      ++count;
    }
  }
  if (count == 0) {
    throw InvalidInput("cannot derive a noise level: every injection is zero");
  }
  return fraction * (total / static_cast<double>(count));
}

EventRecord simulate_event(const GridCase& grid, const OutageScenario& scenario, double sigma_v,
                           std::uint64_t seed) {
  const GridCase post = apply_scenario(grid, scenario);
  const InjectionVector p = case_injections(grid);

  EventRecord event;
  event.scenario = scenario;
  event.seed = seed;
  event.sigma_v = sigma_v;
  event.pre_angles = solve_dc(grid, p);
  event.noise = draw_noise(grid.bus_count(), sigma_v, seed);
  event.post_angles = solve_dc(post, {p.values + event.noise, p.slack_adjusted});
  return event;
}

Eigen::VectorXd true_signal(const GridCase& grid, const OutageScenario& scenario,
                            const AngleVector& post_angles) {
  validate_scenario(grid, scenario);
  if (post_angles.values.size() != static_cast<Eigen::Index>(grid.bus_count())) {
    throw InvalidInput("angle vector length does not match bus count");
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.line_count()));
  for (const LineChange& change : scenario.changes) {
    const std::size_t pos = *grid.position_of(change.line);
    const Line& line = grid.lines()[pos];
    const double diff = post_angles.values[static_cast<Eigen::Index>(grid.row_of(line.from_bus))] -
                        post_angles.values[static_cast<Eigen::Index>(grid.row_of(line.to_bus))];
    s[static_cast<Eigen::Index>(pos)] = change_weight(line, change) * diff;
  }
  return s;
}

}  // namespace lineout
