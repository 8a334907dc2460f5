#pragma once

// Linear DC power flow and the pre/post-event simulator that produces
// phasor-angle data for identification.

#include <cstdint>

#include <Eigen/Dense>

#include "lineout/grid_model.hpp"

namespace lineout {

struct InjectionVector {
  Eigen::VectorXd values;  ///< per-unit, bus order
  bool slack_adjusted = false;
};

struct AngleVector {
  Eigen::VectorXd values;  ///< radians, bus order; reference entry is exactly 0
};

struct EventRecord {
  AngleVector pre_angles;
  AngleVector post_angles;
  Eigen::VectorXd noise;  ///< injection perturbation v, zero-sum
  double sigma_v = 0.0;
  OutageScenario scenario;
  std::uint64_t seed = 0;
};

/// Net injections of the case (already slack-adjusted at load).
InjectionVector case_injections(const GridCase& grid);

/// Solves B theta = p on the reduced system with the reference row and column
/// removed, so theta_ref == 0 exactly.
///
/// Throws InvalidInput when p has the wrong length or is unbalanced
/// (|sum p| > 1e-9 * max(1, ||p||_1)), SingularSystemError when the grid is
/// disconnected.
AngleVector solve_dc(const GridCase& grid, const InjectionVector& p);

/// Per-line flow (theta_from - theta_to) / x, in line order.
Eigen::VectorXd line_flows(const GridCase& grid, const AngleVector& theta);

/// Nodal balance of the line flows: p_n = sum over neighbours (theta_n - theta_m)/x_nm.
InjectionVector injections_from_angles(const GridCase& grid, const AngleVector& theta);

/// I.i.d. N(0, sigma^2) samples from a std::mt19937_64 seeded with `seed`,
/// transformed by std::normal_distribution. Stable per toolchain.
Eigen::VectorXd draw_gaussian(std::size_t n, double sigma, std::uint64_t seed);

/// draw_gaussian with the sample mean subtracted, so the entries sum to zero.
Eigen::VectorXd draw_noise(std::size_t n, double sigma, std::uint64_t seed);

/// sigma_v = fraction * mean(|P_n|) over buses with nonzero injection.
double noise_sigma(const GridCase& grid, double fraction);

/// Pre-event angles from the case injections, post-event angles on the
/// changed topology with injections p + v.
EventRecord simulate_event(const GridCase& grid, const OutageScenario& scenario, double sigma_v,
                           std::uint64_t seed);

/// Ground-truth coefficients s*_l = w_l m_l^T theta' on the changed lines,
/// zero elsewhere; length = grid.line_count(), in line order.
Eigen::VectorXd true_signal(const GridCase& grid, const OutageScenario& scenario,
                            const AngleVector& post_angles);

}  // namespace lineout
