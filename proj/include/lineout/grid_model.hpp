#pragma once

// Grid topology: buses, lines, the internal/external split, and the
// incidence and weighted-Laplacian matrices built from them.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lineout/errors.hpp"

namespace lineout {

using BusId = int;
/// 1-based position of a line in the case file's in-service branch list.
using LineIndex = int;

struct Bus {
  BusId id = 0;
  double injection = 0.0;  ///< per-unit net injection P_n
  bool is_reference = false;

  bool operator==(const Bus&) const = default;
};

struct Line {
  LineIndex index = 0;
  BusId from_bus = 0;
  BusId to_bus = 0;
  double reactance = 0.0;  ///< per-unit, strictly positive

  bool operator==(const Line&) const = default;
};

/// Immutable, validated grid. Bus order defines matrix row order; line order
/// defines incidence column order. Construct through `GridCase::create`.
class GridCase {
 public:
  /// Validates the inputs and, if the injections are out of balance by more
  /// than 1e-9, assigns the imbalance to the reference bus (recorded in
  /// `slack_adjustment()`).
  ///
  /// Throws CaseError for duplicate or unknown buses, self loops, non-positive
  /// reactances, non-increasing line indices, a missing/duplicated/external
  /// reference, or a disconnected graph.
  static GridCase create(std::vector<Bus> buses, std::vector<Line> lines,
                         const std::vector<BusId>& internal_buses, std::string name = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  std::size_t bus_count() const noexcept { return buses_.size(); }
  std::size_t line_count() const noexcept { return lines_.size(); }

  std::size_t row_of(BusId id) const;
  bool has_bus(BusId id) const { return row_index_.contains(id); }
  std::size_t reference_row() const noexcept { return reference_row_; }
  BusId reference_bus() const { return buses_[reference_row_].id; }

  /// Rows (bus positions) of the internal and external systems, in bus order.
  const std::vector<std::size_t>& internal_rows() const noexcept { return internal_rows_; }
  const std::vector<std::size_t>& external_rows() const noexcept { return external_rows_; }
  bool is_internal(BusId id) const { return internal_mask_[row_of(id)]; }
  std::vector<BusId> internal_buses() const;

  /// Position of line `index` in `lines()`, if present.
  std::optional<std::size_t> position_of(LineIndex index) const;
  const Line& line(LineIndex index) const;

  /// Amount added to the reference bus injection at construction (per-unit).
  double slack_adjustment() const noexcept { return slack_adjustment_; }

  Eigen::VectorXd injections() const;
  Eigen::VectorXd reactances() const;

  bool operator==(const GridCase& other) const {
    return buses_ == other.buses_ && lines_ == other.lines_ &&
           internal_mask_ == other.internal_mask_;
  }

 private:
  GridCase() = default;

  std::string name_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::unordered_map<BusId, std::size_t> row_index_;
  std::vector<bool> internal_mask_;
  std::vector<std::size_t> internal_rows_;
  std::vector<std::size_t> external_rows_;
  std::size_t reference_row_ = 0;
  double slack_adjustment_ = 0.0;
};

struct IncidenceMatrix {
  Eigen::MatrixXd entries;         ///< N x L, +1 at from_bus row, -1 at to_bus row
  std::vector<LineIndex> lines;    ///< column labels
};

struct Laplacian {
  Eigen::MatrixXd entries;  ///< N x N
};

struct LaplacianPartition {
  Eigen::MatrixXd internal;  ///< columns of B for internal buses (B_I)
  Eigen::MatrixXd external;  ///< columns of B for external buses (B_E)
};

enum class ChangeKind { Outage, ReactanceChange };

struct LineChange {
  LineIndex line = 0;
  ChangeKind kind = ChangeKind::Outage;
  double new_reactance = 0.0;  ///< used only for ReactanceChange

  bool operator==(const LineChange&) const = default;
};

/// Ground-truth change set applied to a pre-event case.
struct OutageScenario {
  std::vector<LineChange> changes;

  static OutageScenario outages(const std::vector<LineIndex>& lines);
  std::vector<LineIndex> changed_lines() const;  ///< sorted
  std::set<LineIndex> outaged_lines() const;
  bool empty() const noexcept { return changes.empty(); }

  bool operator==(const OutageScenario&) const = default;
};

IncidenceMatrix build_incidence(const GridCase& grid);

/// B = sum_l (1/x_l) m_l m_l^T. Throws InvalidParameter on a non-positive or
/// non-finite reactance, InvalidInput on a length mismatch.
Laplacian build_laplacian(const IncidenceMatrix& incidence, const Eigen::VectorXd& reactances);

/// Convenience: build_laplacian(build_incidence(grid), grid.reactances()).
Laplacian laplacian_of(const GridCase& grid);

LaplacianPartition partition_columns(const Laplacian& laplacian, const GridCase& grid);

/// Throws ScenarioError if the scenario is not applicable to `grid`.
/// Connectivity is not checked here; see apply_scenario.
void validate_scenario(const GridCase& grid, const OutageScenario& scenario);

/// Laplacian weight removed by one change: 1/x for an outage, 1/x - 1/x' for
/// a reactance change.
double change_weight(const Line& line, const LineChange& change);

/// B~ = B - B' for the given change set.
Laplacian delta_laplacian(const GridCase& grid, const OutageScenario& scenario);

/// Post-event case. Surviving lines keep their original indices. Throws
/// IslandingError (listing the outaged lines) if the result is disconnected.
GridCase apply_scenario(const GridCase& grid, const OutageScenario& scenario);

/// Number of connected components after hypothetically removing `removed`.
std::size_t component_count(const GridCase& grid, const std::set<LineIndex>& removed = {});

}  // namespace lineout
