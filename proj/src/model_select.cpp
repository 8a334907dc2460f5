#include "lineout/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lineout {

namespace {

constexpr double kPerfectFit = 1e-20;

Eigen::Index column_of(const LassoProblem& problem, LineIndex line) {
  const Eigen::Index col = line - 1;
  if (col < 0 || col >= problem.columns()) {
    throw InvalidInput("line " + std::to_string(line) + " is outside the regressor matrix");
  }
  return col;
}

}  // namespace

const char* to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::FixedCount: return "fixed";
    case Criterion::Mdl: return "mdl";
    case Criterion::VarianceDeviation: return "variance";
  }
  return "unknown";
}

const char* to_string(ScoreBasis basis) {
  return basis == ScoreBasis::Refit ? "refit" : "lasso";
}

std::vector<CandidateModel> candidates_from_path(const PathResult& path, int k_max) {
  if (k_max < 1) throw InvalidParameter("k_max must be at least 1");
  if (path.supports.empty()) throw InvalidInput("identification path is empty");
  std::vector<CandidateModel> out;
  for (int k = 1; k <= k_max; ++k) {
    for (std::size_t pos = 0; pos < path.supports.size(); ++pos) {
      if (static_cast<int>(path.supports[pos].size()) == k) {
        CandidateModel c;
        c.k = k;
        c.support = path.supports[pos];
        c.path_position = pos;
        out.push_back(std::move(c));
        break;
      }
    }
  }
  return out;
}

RefitResult refit_least_squares(const LassoProblem& problem,
                                const std::vector<LineIndex>& support) {
  const auto k = static_cast<Eigen::Index>(support.size());
  const Eigen::Index ext = problem.external_count();
  Eigen::MatrixXd design(problem.rows(), k + ext);
  for (Eigen::Index i = 0; i < k; ++i) {
    design.col(i) = problem.regressors().col(column_of(problem, support[static_cast<std::size_t>(i)]));
  }
  if (ext > 0) design.rightCols(ext) = -problem.external();

  RefitResult fit;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k + ext);
  if (design.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    coef = svd.solve(problem.y());
  }
  fit.s = coef.head(k);
  fit.theta_E = coef.tail(ext);
  const Eigen::VectorXd r = problem.y() - design * coef;
  fit.rss = r.squaredNorm();
  if (fit.rss <= kPerfectFit * problem.y().squaredNorm()) fit.rss = 0.0;
  return fit;
}

void fit_candidate(const LassoProblem& problem, const PathResult& path, ScoreBasis basis,
                   CandidateModel& candidate) {
  if (basis == ScoreBasis::Refit) {
    RefitResult fit = refit_least_squares(problem, candidate.support);
    candidate.refit_s = std::move(fit.s);
    candidate.refit_theta_E = std::move(fit.theta_E);
    candidate.rss = fit.rss;
  } else {
    const LassoSolution& sol = path.solutions.at(candidate.path_position);
    candidate.refit_s.resize(static_cast<Eigen::Index>(candidate.support.size()));
    for (std::size_t i = 0; i < candidate.support.size(); ++i) {
      candidate.refit_s[static_cast<Eigen::Index>(i)] =
          sol.s_hat[column_of(problem, candidate.support[i])];
    }
    candidate.refit_theta_E = sol.theta_E_hat;
    const Eigen::VectorXd r =
        problem.y() - problem.regressors() * sol.s_hat + problem.external() * sol.theta_E_hat;
    candidate.rss = r.squaredNorm();
    if (candidate.rss <= kPerfectFit * problem.y().squaredNorm()) candidate.rss = 0.0;
  }
  candidate.refit = true;
}

double mdl_score(const CandidateModel& candidate, std::size_t rows) {
  if (rows == 0) throw InvalidInput("MDL needs at least one observation");
  if (!(candidate.rss >= 0.0)) throw InvalidInput("candidate rss must be non-negative");
  if (candidate.rss == 0.0) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(rows);
  return 0.5 * n * std::log(candidate.rss / n) + 0.5 * candidate.k * std::log(n);
}

std::vector<Eigen::Index> unaffected_rows(const LassoProblem& problem,
                                          const std::vector<LineIndex>& support) {
  std::vector<bool> touched(static_cast<std::size_t>(problem.rows()), false);
  for (LineIndex line : support) {
    for (const auto& e : problem.column(column_of(problem, line))) {
      touched[static_cast<std::size_t>(e.row)] = true;
    }
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < problem.rows(); ++i) {
    if (!touched[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  return rows;
}

double variance_score(const LassoProblem& problem, const CandidateModel& candidate,
                      double noise_variance) {
  if (!(noise_variance >= 0.0)) throw InvalidParameter("noise variance must be non-negative");
  if (!candidate.refit) throw InvalidInput("candidate has not been fitted");
  const std::vector<Eigen::Index> rows = unaffected_rows(problem, candidate.support);
  if (rows.size() < 2) {
    throw InsufficientRowsError("only " + std::to_string(rows.size()) +
                                " rows are unaffected by the candidate support");
  }

  Eigen::VectorXd residual = Eigen::VectorXd::Zero(problem.rows());
  if (candidate.rss != 0.0) {
    residual = problem.y() + problem.external() * candidate.refit_theta_E;
    for (std::size_t i = 0; i < candidate.support.size(); ++i) {
      const double s = candidate.refit_s[static_cast<Eigen::Index>(i)];
      for (const auto& e : problem.column(column_of(problem, candidate.support[i]))) {
        residual[e.row] -= e.value * s;
      }
    }
  }

  double mean = 0.0;
  for (Eigen::Index r : rows) mean += residual[r];
  mean /= static_cast<double>(rows.size());
  double ss = 0.0;
  for (Eigen::Index r : rows) ss += (residual[r] - mean) * (residual[r] - mean);
  const double sample_variance = ss / static_cast<double>(rows.size() - 1);
  return std::abs(sample_variance - noise_variance);
}

std::vector<double> scale_scores(std::span<const double> raw) {
  if (raw.empty()) throw InvalidInput("no scores to scale");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : raw) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } else if (!(v < 0.0)) {
      throw InvalidInput("scores must be finite or -inf");
    }
  }
  std::vector<double> out(raw.begin(), raw.end());
  if (!std::isfinite(hi)) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const double shift = lo < 0.0 ? hi - 2.0 * lo : 0.0;
  const double top = hi + shift;
  for (double& v : out) {
    if (!std::isfinite(v)) {
      v = 0.0;
    } else if (top > 0.0) {
      v = (v + shift) / top;
    } else if (lo < 0.0) {
      v = 1.0;  // all equal and negative
    }
  }
  return out;
}

SelectionReport select(const LassoProblem& problem, const PathResult& path, Criterion criterion,
                       const SelectionParams& params) {
  if (path.supports.empty()) throw InvalidInput("identification path is empty");
  SelectionReport report;
  report.criterion = criterion;
  report.basis = params.basis;

  std::vector<CandidateModel> pool;
  if (criterion == Criterion::FixedCount) {
    if (!params.k_fixed || *params.k_fixed < 1) {
      throw InvalidInput("fixed-count selection needs k >= 1");
    }
    const int k = *params.k_fixed;
    for (std::size_t pos = 0; pos < path.supports.size() && pool.empty(); ++pos) {
      if (static_cast<int>(path.supports[pos].size()) == k) {
        CandidateModel c;
        c.k = k;
        c.support = path.supports[pos];
        c.path_position = pos;
        pool.push_back(std::move(c));
      }
    }
    if (pool.empty()) {
      throw NoCandidateError("no path solution has exactly " + std::to_string(k) +
                             " nonzero coefficients");
    }
  } else {
    if (criterion == Criterion::VarianceDeviation && !params.noise_variance) {
      throw InvalidInput("variance-deviation selection needs the noise variance");
    }
    pool = candidates_from_path(path, params.k_max);
    if (pool.empty()) {
      throw NoCandidateError("no path solution has between 1 and " +
                             std::to_string(params.k_max) + " nonzero coefficients");
    }
  }

  std::vector<double> raw;
  for (CandidateModel& c : pool) {
    fit_candidate(problem, path, params.basis, c);
    switch (criterion) {
      case Criterion::FixedCount: raw.push_back(c.rss); break;
      case Criterion::Mdl: raw.push_back(mdl_score(c, static_cast<std::size_t>(problem.rows()))); break;
      case Criterion::VarianceDeviation:
        raw.push_back(variance_score(problem, c, *params.noise_variance));
        break;
    }
  }
  const std::vector<double> scaled = scale_scores(raw);

  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (raw[i] < raw[best]) best = i;  // strict: ties keep the smaller k
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    report.candidates.push_back({std::move(pool[i]), raw[i], scaled[i]});
  }
  report.chosen_k = report.candidates[best].model.k;
  report.chosen_support = report.candidates[best].model.support;
  return report;
}

}  // namespace lineout
