#pragma once

// Choosing the number of changed lines from an identification path.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lineout/lasso_bcd.hpp"

namespace lineout {

enum class Criterion { FixedCount, Mdl, VarianceDeviation };

/// What the scores are computed from: an unpenalised least-squares refit on the
/// candidate support, or the shrunk path solution itself.
enum class ScoreBasis { Refit, LassoResidual };

const char* to_string(Criterion criterion);
const char* to_string(ScoreBasis basis);

struct CandidateModel {
  int k = 0;
  std::vector<LineIndex> support;
  std::size_t path_position = 0;  ///< first path solution with this cardinality
  Eigen::VectorXd refit_s;        ///< values on `support`, same order
  Eigen::VectorXd refit_theta_E;
  double rss = 0.0;
  bool refit = false;
};

struct RefitResult {
  Eigen::VectorXd s;
  Eigen::VectorXd theta_E;
  double rss = 0.0;
};

struct ScoredCandidate {
  CandidateModel model;
  double raw_score = 0.0;
  double scaled_score = 0.0;
};

struct SelectionReport {
  Criterion criterion = Criterion::Mdl;
  ScoreBasis basis = ScoreBasis::Refit;
  std::vector<ScoredCandidate> candidates;  ///< ascending k
  int chosen_k = 0;
  std::vector<LineIndex> chosen_support;
};

struct SelectionParams {
  std::optional<int> k_fixed;
  int k_max = 5;
  std::optional<double> noise_variance;
  ScoreBasis basis = ScoreBasis::Refit;
};

/// For k = 1..k_max, the first (largest-lambda) path solution with exactly k
/// nonzeros. Cardinalities never reached are skipped. Candidates are not refit.
std::vector<CandidateModel> candidates_from_path(const PathResult& path, int k_max);

/// Unpenalised minimum of ||y - M_S s_S + B_E t||^2, minimum-norm on rank
/// deficiency. An rss at or below 1e-20 ||y||^2 is reported as exactly 0.
RefitResult refit_least_squares(const LassoProblem& problem, const std::vector<LineIndex>& support);

/// Fills the refit fields of `candidate` using `basis`.
void fit_candidate(const LassoProblem& problem, const PathResult& path, ScoreBasis basis,
                   CandidateModel& candidate);

/// Two-part MDL code length (rows/2) ln(rss/rows) + (k/2) ln(rows); -inf when rss == 0.
double mdl_score(const CandidateModel& candidate, std::size_t rows);

/// |sample variance of the residual on rows untouched by the support - sigma_v^2|.
/// Throws InsufficientRowsError with fewer than two such rows.
double variance_score(const LassoProblem& problem, const CandidateModel& candidate,
                      double noise_variance);

/// Rows where every support column of M is zero.
std::vector<Eigen::Index> unaffected_rows(const LassoProblem& problem,
                                          const std::vector<LineIndex>& support);

/// Divides by the maximum score. Lists with a negative entry (log-scale
/// MDL) are first shifted by (max - 2 min), which maps the best score to 1/2
/// and the worst to 1. -inf entries map to 0; an all-zero list is returned as is.
std::vector<double> scale_scores(std::span<const double> raw);

SelectionReport select(const LassoProblem& problem, const PathResult& path, Criterion criterion,
                       const SelectionParams& params);

}  // namespace lineout
