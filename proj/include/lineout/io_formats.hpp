#pragma once

// Readers and writers for case files (native JSON and a MATPOWER subset),
// scenarios, event records, identification paths (CSV) and reports (JSON).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lineout/dc_flow.hpp"
#include "lineout/grid_model.hpp"
#include "lineout/lasso_bcd.hpp"
#include "lineout/model_select.hpp"

namespace lineout {

inline constexpr const char* kSchemaVersion = "1.0";

struct CaseDocument {
  struct BusEntry {
    BusId id = 0;
    double injection_mw = 0.0;
    bool is_reference = false;
    bool operator==(const BusEntry&) const = default;
  };
  struct BranchEntry {
    BusId from = 0;
    BusId to = 0;
    double x = 0.0;
    bool operator==(const BranchEntry&) const = default;
  };

  std::string schema_version = kSchemaVersion;
  std::string name;
  double base_mva = 100.0;
  std::vector<BusEntry> buses;
  std::vector<BranchEntry> branches;
  std::vector<BusId> internal_buses;

  bool operator==(const CaseDocument&) const = default;
};

/// Overrides applied when turning a document into a GridCase.
struct CaseOptions {
  std::optional<std::vector<BusId>> internal_buses;
  std::optional<BusId> reference_bus;
};

/// Throws ParseError for malformed JSON and CaseError(Schema) with a field
/// path for missing or mistyped fields.
CaseDocument parse_case_document(std::string_view text);
std::string write_case_document(const CaseDocument& doc);

/// Converts MW to per-unit and validates. CaseError loci name document fields.
GridCase to_grid_case(const CaseDocument& doc, const CaseOptions& options = {});
CaseDocument to_case_document(const GridCase& grid, double base_mva = 100.0);

GridCase parse_case_json(std::string_view text, const CaseOptions& options = {});

/// Reads mpc.baseMVA, mpc.bus, mpc.gen and mpc.branch. Net injection is
/// sum(Pg of in-service generators) - Pd; status-0 branches are dropped; AC-only
/// columns are ignored. The type-3 bus is the reference unless overridden.
/// Every bus is internal unless `options.internal_buses` is given.
/// Errors carry a `line N` locus.
CaseDocument parse_matpower_document(std::string_view text, const CaseOptions& options = {});
GridCase parse_matpower_case(std::string_view text, const CaseOptions& options = {});

std::string read_text_file(const std::string& path);
/// Dispatches on extension: `.m` is MATPOWER, anything else native JSON.
GridCase load_case(const std::string& path, const CaseOptions& options = {});

/// "1-45,113,114" style lists; whitespace and commas separate items.
std::vector<BusId> parse_bus_list(std::string_view text);

/// Inline scenario: comma-separated line indices, `l@x` for a reactance change
/// to x (e.g. "66,95,12@0.25").
OutageScenario parse_scenario_inline(std::string_view text);
OutageScenario parse_scenario_json(std::string_view text);
std::string write_scenario_json(const OutageScenario& scenario);

std::string write_event_json(const EventRecord& event, const GridCase& grid);
/// Bus ids in the document must match `grid` row for row.
EventRecord parse_event_json(std::string_view text, const GridCase& grid);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Header `lambda,line_index,s_value`; per lambda (descending) one
/// `lambda,,objective` row followed by `lambda,l,s_l` for every nonzero s_l
/// (ascending l).
std::string write_path_csv(const PathResult& path);

struct PathCsvBlock {
  double lambda = 0.0;
  double objective = 0.0;
  std::vector<std::pair<LineIndex, double>> entries;
};
std::vector<PathCsvBlock> parse_path_csv(std::string_view text);

struct ReportDocument {
  struct PathEntry {
    double lambda = 0.0;
    std::vector<LineIndex> support;
    double objective = 0.0;
    int cycles = 0;
    bool converged = false;
    bool operator==(const PathEntry&) const = default;
  };
  struct ScoreEntry {
    int k = 0;
    std::vector<LineIndex> support;
    double rss = 0.0;
    double raw_score = 0.0;  ///< -inf is written as null
    double scaled_score = 0.0;
    bool operator==(const ScoreEntry&) const = default;
  };

  std::string schema_version = kSchemaVersion;
  std::optional<OutageScenario> scenario;
  std::optional<double> sigma_v;
  std::optional<std::uint64_t> seed;
  std::vector<double> lambdas;
  std::vector<PathEntry> path;
  bool all_converged = true;
  std::string criterion;
  std::string score_basis;
  std::vector<ScoreEntry> scores;
  int chosen_k = 0;
  std::vector<LineIndex> chosen_support;
  std::optional<std::vector<LineIndex>> true_support;
  std::optional<bool> exact_match;

  bool operator==(const ReportDocument&) const = default;
};

/// `event` may be null when the ground truth is unknown.
ReportDocument make_report(const SelectionReport& report, const PathResult& path,
                           const EventRecord* event);
std::string write_report_json(const ReportDocument& doc);
std::string write_report_json(const SelectionReport& report, const PathResult& path,
                              const EventRecord* event);
ReportDocument parse_report_json(std::string_view text);

}  // namespace lineout
