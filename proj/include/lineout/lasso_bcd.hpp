#pragma once

// l1-regularised least squares over the overcomplete line-change model
//
//     minimise  || y - M s + B_E t ||_2^2 + lambda ||s||_1     over (s, t)
//
// solved by block coordinate descent: an exact least-squares step in the
// external-angle block t, then exact scalar minimisation (soft thresholding)
// in every s_l, repeated until the iterates settle. A decreasing lambda grid
// is traced with warm starts to give the identification path.
//
// Columns of M are indexed by position; for a case whose lines are labelled
// 1..L the line index of column j is j + 1.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lineout/grid_model.hpp"

namespace lineout {

struct SolverConfig {
  double tol = 1e-8;        ///< max coordinate change over a cycle that counts as converged
  int max_cycles = 10000;
  double zero_tol = 1e-12;  ///< |s_l| above this is in the support

  void validate() const;
};

/// Immutable problem data: observation y, regressors M, external block B_E and
/// its pseudo-inverse. Safe to share across threads.
class LassoProblem {
 public:
  struct Entry {
    Eigen::Index row;
    double value;
  };

  /// `external` may have zero columns. The pseudo-inverse is formed from an
  /// SVD with singular values below 1e-10 * sigma_max treated as zero.
  LassoProblem(Eigen::VectorXd y, Eigen::MatrixXd regressors, Eigen::MatrixXd external);

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& regressors() const noexcept { return regressors_; }
  const Eigen::MatrixXd& external() const noexcept { return external_; }
  const Eigen::MatrixXd& external_pinv() const noexcept { return external_pinv_; }

  Eigen::Index rows() const noexcept { return y_.size(); }
  Eigen::Index columns() const noexcept { return regressors_.cols(); }
  Eigen::Index external_count() const noexcept { return external_.cols(); }

  /// Nonzeros of column j of M.
  std::span<const Entry> column(Eigen::Index j) const;
  double column_sq_norm(Eigen::Index j) const { return sq_norms_[static_cast<std::size_t>(j)]; }

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd regressors_;
  Eigen::MatrixXd external_;
  Eigen::MatrixXd external_pinv_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> column_start_;
  std::vector<double> sq_norms_;
};

struct LassoSolution {
  Eigen::VectorXd s_hat;
  Eigen::VectorXd theta_E_hat;
  double lambda = 0.0;
  double objective = 0.0;
  int cycles = 0;
  bool converged = false;
  std::vector<double> objective_trace;  ///< starting objective, then one entry per cycle
};

struct PathResult {
  std::vector<double> lambdas;
  std::vector<LassoSolution> solutions;
  std::vector<std::vector<LineIndex>> supports;

  bool all_converged() const;
};

/// y = B_I * theta~_I. Throws InvalidInput on a dimension mismatch.
Eigen::VectorXd observation(const Eigen::MatrixXd& internal_columns,
                            const Eigen::VectorXd& internal_change);

double objective(const LassoProblem& problem, const Eigen::VectorXd& s,
                 const Eigen::VectorXd& theta_E, double lambda);

/// Minimum-norm minimiser over the external block with s fixed:
/// t = -pinv(B_E) (y - M s).
Eigen::VectorXd update_external_angles(const LassoProblem& problem, const Eigen::VectorXd& s);

/// e_l = y + B_E t - sum_{j != l} m_j s_j for column `column` (0-based).
Eigen::VectorXd partial_residual(const LassoProblem& problem, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& theta_E, Eigen::Index column);

/// argmin_s ||e - m s||^2 + lambda |s|  =  sign(c) max(|c| - lambda/2, 0) / ||m||^2, c = m^T e.
double soft_threshold_update(const Eigen::VectorXd& e, const Eigen::VectorXd& m, double lambda);

/// Same closed form from the sufficient statistics c = m^T e and ||m||^2.
double soft_threshold_scalar(double correlation, double sq_norm, double lambda);

/// Block coordinate descent from `init_s` (empty means zero). Never throws on
/// non-convergence; check `converged`.
LassoSolution bcd_solve(const LassoProblem& problem, double lambda, const Eigen::VectorXd& init_s,
                        const SolverConfig& config = {});

/// Smallest lambda for which s = 0 is a fixed point: 2 max_l |m_l^T r0| with
/// r0 = y + B_E update_external_angles(0).
double lambda_max(const LassoProblem& problem);

/// `count` values from lambda_max down to decay_ratio * lambda_max, evenly
/// spaced in log scale. Throws DegenerateObservationError if lambda_max is 0.
std::vector<double> lambda_grid(const LassoProblem& problem, int count = 20,
                                double decay_ratio = 1e-3);

/// Algorithm: cold start at the first lambda, then warm start each solve from
/// the previous s. Throws InvalidInput if `lambdas` is not strictly decreasing.
PathResult solve_path(const LassoProblem& problem, const std::vector<double>& lambdas,
                      const SolverConfig& config = {});

/// 1-based indices l with |s_l| > zero_tol.
std::vector<LineIndex> support(const Eigen::VectorXd& s, double zero_tol = 1e-12);

}  // namespace lineout
