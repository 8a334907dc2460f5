#include "lineout/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lineout {

const char* to_string(CaseIssue issue) {
  switch (issue) {
    case CaseIssue::Schema: return "schema";
    case CaseIssue::DuplicateBus: return "duplicate-bus";
    case CaseIssue::UnknownBus: return "unknown-bus";
    case CaseIssue::SelfLoop: return "self-loop";
    case CaseIssue::NonpositiveReactance: return "nonpositive-reactance";
    case CaseIssue::BadLineIndex: return "bad-line-index";
    case CaseIssue::NoReference: return "no-reference";
    case CaseIssue::MultipleReference: return "multiple-reference";
    case CaseIssue::ReferenceExternal: return "reference-external";
    case CaseIssue::Disconnected: return "disconnected";
    case CaseIssue::MissingMatrix: return "missing-matrix";
    case CaseIssue::MalformedRow: return "malformed-row";
  }
  return "unknown";
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), components_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent_[a] = b;
      --components_;
    }
  }

  std::size_t components() const { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::size_t components_;
};

std::string line_locus(std::size_t position) {
  return "lines[" + std::to_string(position) + "]";
}

}  // namespace

GridCase GridCase::create(std::vector<Bus> buses, std::vector<Line> lines,
                          const std::vector<BusId>& internal_buses, std::string name) {
  GridCase grid;
  grid.name_ = std::move(name);

  std::optional<std::size_t> reference;
  for (std::size_t row = 0; row < buses.size(); ++row) {
    const Bus& bus = buses[row];
    const std::string locus = "buses[" + std::to_string(row) + "]";
    if (!grid.row_index_.emplace(bus.id, row).second) {
      throw CaseError(CaseIssue::DuplicateBus, locus,
                      "duplicate bus id " + std::to_string(bus.id));
    }
    if (!std::isfinite(bus.injection)) {
      throw CaseError(CaseIssue::Schema, locus, "injection is not finite");
    }
    if (bus.is_reference) {
      if (reference) {
        throw CaseError(CaseIssue::MultipleReference, locus,
                        "bus " + std::to_string(bus.id) + " is a second reference bus");
      }
      reference = row;
    }
  }
  if (buses.empty()) {
    throw CaseError(CaseIssue::Schema, "buses", "case has no buses");
  }
  if (!reference) {
    throw CaseError(CaseIssue::NoReference, "buses", "no reference bus");
  }
  grid.reference_row_ = *reference;

  LineIndex previous = 0;
  for (std::size_t pos = 0; pos < lines.size(); ++pos) {
    const Line& line = lines[pos];
    const std::string locus = line_locus(pos);
    if (line.index <= previous) {
      throw CaseError(CaseIssue::BadLineIndex, locus,
                      "line indices must be positive and increasing");
    }
    previous = line.index;
    for (BusId end : {line.from_bus, line.to_bus}) {
      if (!grid.row_index_.contains(end)) {
        throw CaseError(CaseIssue::UnknownBus, locus, "unknown bus " + std::to_string(end));
      }
    }
    if (line.from_bus == line.to_bus) {
      throw CaseError(CaseIssue::SelfLoop, locus,
                      "line " + std::to_string(line.index) + " connects bus " +
                          std::to_string(line.from_bus) + " to itself");
    }
    if (!(line.reactance > 0.0) || !std::isfinite(line.reactance)) {
      throw CaseError(CaseIssue::NonpositiveReactance, locus,
                      "line " + std::to_string(line.index) + " has non-positive reactance");
    }
  }

  grid.internal_mask_.assign(buses.size(), false);
  for (BusId id : internal_buses) {
    auto it = grid.row_index_.find(id);
    if (it == grid.row_index_.end()) {
      throw CaseError(CaseIssue::UnknownBus, "internal_buses",
                      "internal bus " + std::to_string(id) + " is not in the case");
    }
    grid.internal_mask_[it->second] = true;
  }
  if (!grid.internal_mask_[grid.reference_row_]) {
    throw CaseError(CaseIssue::ReferenceExternal, "internal_buses",
                    "reference bus " + std::to_string(buses[grid.reference_row_].id) +
                        " must be internal");
  }
  for (std::size_t row = 0; row < buses.size(); ++row) {
    (grid.internal_mask_[row] ? grid.internal_rows_ : grid.external_rows_).push_back(row);
  }

  DisjointSets sets(buses.size());
  for (const Line& line : lines) {
    sets.unite(grid.row_index_.at(line.from_bus), grid.row_index_.at(line.to_bus));
  }
  if (sets.components() != 1) {
    throw CaseError(CaseIssue::Disconnected, "lines",
                    "graph has " + std::to_string(sets.components()) + " components");
  }

  double imbalance = 0.0;
  for (const Bus& bus : buses) imbalance += bus.injection;
  // Balanced inputs (e.g. a post-event copy of an adjusted case) are left untouched.
  if (std::abs(imbalance) > 1e-9) {
    buses[grid.reference_row_].injection -= imbalance;
    grid.slack_adjustment_ = -imbalance;
  }

  grid.buses_ = std::move(buses);
  grid.lines_ = std::move(lines);
  return grid;
}

std::size_t GridCase::row_of(BusId id) const {
  auto it = row_index_.find(id);
  if (it == row_index_.end()) {
    throw InvalidInput("bus " + std::to_string(id) + " is not in the case");
  }
  return it->second;
}

std::vector<BusId> GridCase::internal_buses() const {
  std::vector<BusId> ids;
  ids.reserve(internal_rows_.size());
  for (std::size_t row : internal_rows_) ids.push_back(buses_[row].id);
  return ids;
}

std::optional<std::size_t> GridCase::position_of(LineIndex index) const {
  auto it = std::lower_bound(lines_.begin(), lines_.end(), index,
                             [](const Line& l, LineIndex i) { return l.index < i; });
  if (it == lines_.end() || it->index != index) return std::nullopt;
  return static_cast<std::size_t>(it - lines_.begin());
}

const Line& GridCase::line(LineIndex index) const {
  auto pos = position_of(index);
  if (!pos) throw InvalidInput("line " + std::to_string(index) + " is not in the case");
  return lines_[*pos];
}

Eigen::VectorXd GridCase::injections() const {
  Eigen::VectorXd p(buses_.size());
  for (std::size_t i = 0; i < buses_.size(); ++i) p[i] = buses_[i].injection;
  return p;
}

Eigen::VectorXd GridCase::reactances() const {
  Eigen::VectorXd x(lines_.size());
  for (std::size_t i = 0; i < lines_.size(); ++i) x[i] = lines_[i].reactance;
  return x;
}

OutageScenario OutageScenario::outages(const std::vector<LineIndex>& lines) {
  OutageScenario scenario;
  for (LineIndex l : lines) scenario.changes.push_back({l, ChangeKind::Outage, 0.0});
  return scenario;
}

std::vector<LineIndex> OutageScenario::changed_lines() const {
  std::vector<LineIndex> out;
  for (const auto& c : changes) out.push_back(c.line);
  std::sort(out.begin(), out.end());
  return out;
}

std::set<LineIndex> OutageScenario::outaged_lines() const {
  std::set<LineIndex> out;
  for (const auto& c : changes) {
    if (c.kind == ChangeKind::Outage) out.insert(c.line);
  }
  return out;
}

IncidenceMatrix build_incidence(const GridCase& grid) {
  IncidenceMatrix m;
  m.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.bus_count()),
                                    static_cast<Eigen::Index>(grid.line_count()));
  m.lines.reserve(grid.line_count());
  for (std::size_t col = 0; col < grid.line_count(); ++col) {
    const Line& line = grid.lines()[col];
    const auto c = static_cast<Eigen::Index>(col);
    m.entries(static_cast<Eigen::Index>(grid.row_of(line.from_bus)), c) = 1.0;
    m.entries(static_cast<Eigen::Index>(grid.row_of(line.to_bus)), c) = -1.0;
    m.lines.push_back(line.index);
  }
  return m;
}

Laplacian build_laplacian(const IncidenceMatrix& incidence, const Eigen::VectorXd& reactances) {
  const Eigen::MatrixXd& m = incidence.entries;
  if (reactances.size() != m.cols()) {
    throw InvalidInput("reactance vector length " + std::to_string(reactances.size()) +
                       " does not match " + std::to_string(m.cols()) + " lines");
  }
  Laplacian b{Eigen::MatrixXd::Zero(m.rows(), m.rows())};
  std::vector<Eigen::Index> rows;
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    const double x = reactances[col];
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InvalidParameter("reactance of column " + std::to_string(col) +
                             " must be positive and finite");
    }
    rows.clear();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (m(r, col) != 0.0) rows.push_back(r);
    }
    const double w = 1.0 / x;
    for (Eigen::Index i : rows) {
      for (Eigen::Index j : rows) b.entries(i, j) += w * m(i, col) * m(j, col);
    }
  }
  return b;
}

Laplacian laplacian_of(const GridCase& grid) {
  return build_laplacian(build_incidence(grid), grid.reactances());
}

LaplacianPartition partition_columns(const Laplacian& laplacian, const GridCase& grid) {
  const auto n = laplacian.entries.rows();
  LaplacianPartition part;
  part.internal.resize(n, static_cast<Eigen::Index>(grid.internal_rows().size()));
  part.external.resize(n, static_cast<Eigen::Index>(grid.external_rows().size()));
  Eigen::Index k = 0;
  for (std::size_t row : grid.internal_rows()) {
    part.internal.col(k++) = laplacian.entries.col(static_cast<Eigen::Index>(row));
  }
  k = 0;
  for (std::size_t row : grid.external_rows()) {
    part.external.col(k++) = laplacian.entries.col(static_cast<Eigen::Index>(row));
  }
  return part;
}

void validate_scenario(const GridCase& grid, const OutageScenario& scenario) {
  std::set<LineIndex> seen;
  for (const LineChange& change : scenario.changes) {
    const auto pos = grid.position_of(change.line);
    if (!pos) {
      throw ScenarioError("scenario references unknown line " + std::to_string(change.line));
    }
    if (!seen.insert(change.line).second) {
      throw ScenarioError("scenario lists line " + std::to_string(change.line) + " twice");
    }
    if (change.kind == ChangeKind::ReactanceChange) {
      const double x_new = change.new_reactance;
      if (!(x_new > 0.0) || !std::isfinite(x_new)) {
        throw ScenarioError("line " + std::to_string(change.line) +
                            ": new reactance must be positive and finite");
      }
      if (x_new == grid.lines()[*pos].reactance) {
        throw ScenarioError("line " + std::to_string(change.line) +
                            ": new reactance equals the current one");
      }
    }
  }
}

double change_weight(const Line& line, const LineChange& change) {
  if (change.kind == ChangeKind::Outage) return 1.0 / line.reactance;
  return 1.0 / line.reactance - 1.0 / change.new_reactance;
}

Laplacian delta_laplacian(const GridCase& grid, const OutageScenario& scenario) {
  validate_scenario(grid, scenario);
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  Laplacian delta{Eigen::MatrixXd::Zero(n, n)};
  for (const LineChange& change : scenario.changes) {
    const Line& line = grid.line(change.line);
    const double w = change_weight(line, change);
    const auto a = static_cast<Eigen::Index>(grid.row_of(line.from_bus));
    const auto b = static_cast<Eigen::Index>(grid.row_of(line.to_bus));
    delta.entries(a, a) += w;
    delta.entries(b, b) += w;
    delta.entries(a, b) -= w;
    delta.entries(b, a) -= w;
  }
  return delta;
}

GridCase apply_scenario(const GridCase& grid, const OutageScenario& scenario) {
  validate_scenario(grid, scenario);
  const std::set<LineIndex> removed = scenario.outaged_lines();
  if (component_count(grid, removed) != 1) {
    std::vector<int> lines(removed.begin(), removed.end());
    std::string msg = "removing lines";
    for (int l : lines) msg += " " + std::to_string(l);
    msg += " islands the grid";
    throw IslandingError(std::move(lines), msg);
  }

  std::vector<Line> lines;
  lines.reserve(grid.line_count() - removed.size());
  for (const Line& line : grid.lines()) {
    if (removed.contains(line.index)) continue;
    Line updated = line;
    for (const LineChange& change : scenario.changes) {
      if (change.line == line.index && change.kind == ChangeKind::ReactanceChange) {
        updated.reactance = change.new_reactance;
      }
    }
    lines.push_back(updated);
  }
  return GridCase::create(grid.buses(), std::move(lines), grid.internal_buses(), grid.name());
}

std::size_t component_count(const GridCase& grid, const std::set<LineIndex>& removed) {
  DisjointSets sets(grid.bus_count());
  for (const Line& line : grid.lines()) {
    if (removed.contains(line.index)) continue;
    sets.unite(grid.row_of(line.from_bus), grid.row_of(line.to_bus));
  }
  return sets.components();
}

}  // namespace lineout
