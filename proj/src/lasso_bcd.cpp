#include "lineout/lasso_bcd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lineout {

namespace {

constexpr double kPinvCutoff = 1e-10;

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  if (a.cols() == 0 || a.rows() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = kPinvCutoff * sv[0];
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// u = y - M s using the column nonzeros.
Eigen::VectorXd unexplained(const LassoProblem& problem, const Eigen::VectorXd& s) {
  Eigen::VectorXd u = problem.y();
  for (Eigen::Index j = 0; j < problem.columns(); ++j) {
    if (s[j] == 0.0) continue;
    for (const auto& e : problem.column(j)) u[e.row] -= e.value * s[j];
  }
  return u;
}

void check_s(const LassoProblem& problem, const Eigen::VectorXd& s) {
  if (s.size() != problem.columns()) {
    throw InvalidInput("coefficient vector has length " + std::to_string(s.size()) +
                       ", expected " + std::to_string(problem.columns()));
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidParameter("solver tolerance must be positive");
  if (max_cycles < 1) throw InvalidParameter("max_cycles must be at least 1");
  if (!(zero_tol >= 0.0)) throw InvalidParameter("zero_tol must be non-negative");
}

LassoProblem::LassoProblem(Eigen::VectorXd y, Eigen::MatrixXd regressors,
                           Eigen::MatrixXd external)
    : y_(std::move(y)), regressors_(std::move(regressors)), external_(std::move(external)) {
  if (regressors_.rows() != y_.size()) {
    throw InvalidInput("regressor matrix has " + std::to_string(regressors_.rows()) +
                       " rows, observation has " + std::to_string(y_.size()));
  }
  if (external_.rows() != y_.size()) {
    if (external_.cols() != 0) {
      throw InvalidInput("external block has " + std::to_string(external_.rows()) +
                         " rows, observation has " + std::to_string(y_.size()));
    }
    external_.resize(y_.size(), 0);
  }
  external_pinv_ = pseudo_inverse(external_);

  column_start_.reserve(static_cast<std::size_t>(regressors_.cols()) + 1);
  column_start_.push_back(0);
  for (Eigen::Index j = 0; j < regressors_.cols(); ++j) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < regressors_.rows(); ++i) {
      const double v = regressors_(i, j);
      if (v != 0.0) {
        entries_.push_back({i, v});
        sq += v * v;
      }
    }
    if (sq == 0.0) throw InvalidInput("regressor column " + std::to_string(j) + " is zero");
    sq_norms_.push_back(sq);
    column_start_.push_back(entries_.size());
  }
}

std::span<const LassoProblem::Entry> LassoProblem::column(Eigen::Index j) const {
  const auto k = static_cast<std::size_t>(j);
  return {entries_.data() + column_start_[k], column_start_[k + 1] - column_start_[k]};
}

bool PathResult::all_converged() const {
  return std::all_of(solutions.begin(), solutions.end(),
                     [](const LassoSolution& s) { return s.converged; });
}

Eigen::VectorXd observation(const Eigen::MatrixXd& internal_columns,
                            const Eigen::VectorXd& internal_change) {
  if (internal_columns.cols() != internal_change.size()) {
    throw InvalidInput("internal angle change has length " +
                       std::to_string(internal_change.size()) + ", expected " +
                       std::to_string(internal_columns.cols()));
  }
  return internal_columns * internal_change;
}

double objective(const LassoProblem& problem, const Eigen::VectorXd& s,
                 const Eigen::VectorXd& theta_E, double lambda) {
  check_s(problem, s);
  if (theta_E.size() != problem.external_count()) {
    throw InvalidInput("external angle vector has wrong length");
  }
  const Eigen::VectorXd r =
      problem.y() - problem.regressors() * s + problem.external() * theta_E;
  return r.squaredNorm() + lambda * s.lpNorm<1>();
}

Eigen::VectorXd update_external_angles(const LassoProblem& problem, const Eigen::VectorXd& s) {
  check_s(problem, s);
  return -(problem.external_pinv() * unexplained(problem, s));
}

Eigen::VectorXd partial_residual(const LassoProblem& problem, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& theta_E, Eigen::Index column) {
  check_s(problem, s);
  if (column < 0 || column >= problem.columns()) {
    throw InvalidInput("column " + std::to_string(column) + " out of range");
  }
  Eigen::VectorXd e = unexplained(problem, s) + problem.external() * theta_E;
  for (const auto& entry : problem.column(column)) e[entry.row] += entry.value * s[column];
  return e;
}

double soft_threshold_scalar(double correlation, double sq_norm, double lambda) {
  const double shrunk = std::abs(correlation) - 0.5 * lambda;
  if (shrunk <= 0.0) return 0.0;
  return std::copysign(shrunk, correlation) / sq_norm;
}

double soft_threshold_update(const Eigen::VectorXd& e, const Eigen::VectorXd& m, double lambda) {
  if (e.size() != m.size()) throw InvalidInput("residual and column lengths differ");
  if (!(lambda >= 0.0)) throw InvalidParameter("lambda must be non-negative");
  const double sq = m.squaredNorm();
  if (sq == 0.0) throw InvalidInput("regressor column is zero");
  return soft_threshold_scalar(m.dot(e), sq, lambda);
}

LassoSolution bcd_solve(const LassoProblem& problem, double lambda, const Eigen::VectorXd& init_s,
                        const SolverConfig& config) {
  config.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("lambda must be finite and non-negative");
  }

  const Eigen::Index cols = problem.columns();
  LassoSolution sol;
  sol.lambda = lambda;
  sol.s_hat = init_s.size() == 0 ? Eigen::VectorXd::Zero(cols) : init_s;
  check_s(problem, sol.s_hat);
  Eigen::VectorXd& s = sol.s_hat;

  Eigen::VectorXd theta;
  Eigen::VectorXd r;
  auto refresh_block = [&] {
    const Eigen::VectorXd u = unexplained(problem, s);
    theta = -(problem.external_pinv() * u);
    r = u + problem.external() * theta;
  };

  refresh_block();
  sol.objective_trace.push_back(r.squaredNorm() + lambda * s.lpNorm<1>());

  for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
    double max_change = 0.0;
    if (cycle > 1) {
      const Eigen::VectorXd previous = theta;
      refresh_block();
      if (theta.size() > 0) max_change = (theta - previous).cwiseAbs().maxCoeff();
    }

    // r holds y + B_E t - M s with the in-cycle s; e_l = r + m_l s_l.
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto column = problem.column(j);
      double c = 0.0;
      for (const auto& e : column) c += e.value * r[e.row];
      c += problem.column_sq_norm(j) * s[j];
      const double updated = soft_threshold_scalar(c, problem.column_sq_norm(j), lambda);
      const double delta = updated - s[j];
      if (delta != 0.0) {
        for (const auto& e : column) r[e.row] -= e.value * delta;
        s[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }

    sol.cycles = cycle;
    sol.objective_trace.push_back(r.squaredNorm() + lambda * s.lpNorm<1>());
    if (max_change <= config.tol) {
      sol.converged = true;
      break;
    }
  }

  // Close with the exact external-block step for the final s.
  refresh_block();
  sol.theta_E_hat = theta;
  sol.objective = objective(problem, s, theta, lambda);
  return sol;
}

double lambda_max(const LassoProblem& problem) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.columns());
  const Eigen::VectorXd r0 = problem.y() + problem.external() * update_external_angles(problem, zero);
  double best = 0.0;
  for (Eigen::Index j = 0; j < problem.columns(); ++j) {
    double c = 0.0;
    for (const auto& e : problem.column(j)) c += e.value * r0[e.row];
    best = std::max(best, std::abs(c));
  }
  return 2.0 * best;
}

std::vector<double> lambda_grid(const LassoProblem& problem, int count, double decay_ratio) {
  if (count < 1) throw InvalidParameter("lambda count must be at least 1");
  if (!(decay_ratio > 0.0 && decay_ratio < 1.0)) {
    throw InvalidParameter("decay ratio must lie in (0, 1)");
  }
  const double top = lambda_max(problem);
  double scale = 0.0;
  for (Eigen::Index j = 0; j < problem.columns(); ++j) {
    scale = std::max(scale, std::sqrt(problem.column_sq_norm(j)));
  }
  scale *= 2.0 * problem.y().norm();
  if (!(top > 1e-12 * scale)) {
    throw DegenerateObservationError(
        "observation lies in the range of the external block; every line coefficient is zero");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  grid[0] = top;
  for (int k = 1; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] =
        top * std::pow(decay_ratio, static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return grid;
}

PathResult solve_path(const LassoProblem& problem, const std::vector<double>& lambdas,
                      const SolverConfig& config) {
  for (std::size_t k = 1; k < lambdas.size(); ++k) {
    if (!(lambdas[k] < lambdas[k - 1])) {
      throw InvalidInput("lambda sequence must be strictly decreasing");
    }
  }
  PathResult path;
  path.lambdas = lambdas;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(problem.columns());
  for (double lambda : lambdas) {
    LassoSolution sol = bcd_solve(problem, lambda, warm, config);
    warm = sol.s_hat;
    path.supports.push_back(support(sol.s_hat, config.zero_tol));
    path.solutions.push_back(std::move(sol));
  }
  return path;
}

std::vector<LineIndex> support(const Eigen::VectorXd& s, double zero_tol) {
  std::vector<LineIndex> out;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (std::abs(s[j]) > zero_tol) out.push_back(static_cast<LineIndex>(j + 1));
  }
  return out;
}

}  // namespace lineout
