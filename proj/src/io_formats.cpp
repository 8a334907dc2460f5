#include "lineout/io_formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace lineout {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw CaseError(CaseIssue::Schema, path, message);
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string child(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

std::string element(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_error(path, "number is not finite");
  return d;
}

std::int64_t get_integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  schema_error(path, "expected an integer");
}

int get_int(const json& v, const std::string& path) {
  const std::int64_t i = get_integer(v, path);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    schema_error(path, "integer out of range");
  }
  return static_cast<int>(i);
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) schema_error(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_error(path, "expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& v, const std::string& path) {
  if (!v.is_array()) schema_error(path, "expected an array");
  return v;
}

std::vector<int> get_int_list(const json& v, const std::string& path) {
  std::vector<int> out;
  const json& arr = get_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(get_int(arr[i], element(path, i)));
  return out;
}

std::vector<double> get_number_list(const json& v, const std::string& path) {
  std::vector<double> out;
  const json& arr = get_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(get_number(arr[i], element(path, i)));
  return out;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json scenario_json(const OutageScenario& scenario) {
  ordered_json changes = ordered_json::array();
  for (const LineChange& c : scenario.changes) {
    ordered_json item;
    item["line"] = c.line;
    if (c.kind == ChangeKind::Outage) {
      item["kind"] = "outage";
    } else {
      item["kind"] = "reactance";
      item["new_x"] = c.new_reactance;
    }
    changes.push_back(std::move(item));
  }
  ordered_json j;
  j["changes"] = std::move(changes);
  return j;
}

OutageScenario scenario_from_json(const json& j, const std::string& path) {
  OutageScenario scenario;
  const std::string changes_path = child(path, "changes");
  const json& changes = get_array(require(j, "changes", path), changes_path);
  for (std::size_t i = 0; i < changes.size(); ++i) {
    const std::string at = element(changes_path, i);
    LineChange c;
    c.line = get_int(require(changes[i], "line", at), child(at, "line"));
    const std::string kind = get_string(require(changes[i], "kind", at), child(at, "kind"));
    if (kind == "outage") {
      c.kind = ChangeKind::Outage;
    } else if (kind == "reactance") {
      c.kind = ChangeKind::ReactanceChange;
      c.new_reactance = get_number(require(changes[i], "new_x", at), child(at, "new_x"));
    } else {
      schema_error(child(at, "kind"), "expected \"outage\" or \"reactance\"");
    }
    scenario.changes.push_back(c);
  }
  return scenario;
}

ordered_json support_json(const std::vector<LineIndex>& support) {
  ordered_json arr = ordered_json::array();
  for (LineIndex l : support) arr.push_back(l);
  return arr;
}

// Rewrites GridCase loci (`lines[i]`) into document loci (`branches[i]`).
[[noreturn]] void rethrow_with_document_locus(const CaseError& e) {
  std::string locus = e.locus();
  if (locus.rfind("lines", 0) == 0) locus.replace(0, 5, "branches");
  std::string message = e.what();
  if (message.rfind(e.locus() + ": ", 0) == 0) message = message.substr(e.locus().size() + 2);
  throw CaseError(e.issue(), locus, message);
}

double parse_double_token(std::string_view token, const std::string& locus) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw CaseError(CaseIssue::MalformedRow, locus,
                    "malformed number '" + std::string(token) + "'");
  }
  return value;
}

int parse_int_token(std::string_view token, const std::string& locus) {
  const double d = parse_double_token(token, locus);
  if (d != std::floor(d) || std::abs(d) > 2.0e9) {
    throw CaseError(CaseIssue::MalformedRow, locus,
                    "expected an integer, got '" + std::string(token) + "'");
  }
  return static_cast<int>(d);
}

struct MatRow {
  std::size_t line = 0;
  std::vector<std::string> tokens;
};

struct MatpowerTables {
  std::optional<double> base_mva;
  std::map<std::string, std::vector<MatRow>> matrices;
};

MatpowerTables scan_matpower(std::string_view text) {
  MatpowerTables tables;
  std::string current;  // name of the matrix being read, empty outside
  MatRow row;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto flush_row = [&] {
    if (!row.tokens.empty()) tables.matrices[current].push_back(std::move(row));
    row = MatRow{};
  };

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto pct = raw.find('%'); pct != std::string_view::npos) raw = raw.substr(0, pct);

    std::string_view body = raw;
    if (current.empty()) {
      const auto first = body.find_first_not_of(" \t\r");
      if (first == std::string_view::npos) continue;
      body = body.substr(first);
      if (body.rfind("mpc.", 0) != 0) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      std::string name(body.substr(4, eq - 4));
      name.erase(name.find_last_not_of(" \t") + 1);
      std::string_view rhs = body.substr(eq + 1);
      const auto rfirst = rhs.find_first_not_of(" \t");
      if (rfirst == std::string_view::npos) continue;
      rhs = rhs.substr(rfirst);
      if (rhs.front() == '[') {
        if (name != "bus" && name != "gen" && name != "branch") {
          // Skip matrices we do not read, but track their extent.
          if (rhs.find(']') == std::string_view::npos) current = "#skip";
          continue;
        }
        current = name;
        tables.matrices[current];
        body = rhs.substr(1);
      } else {
        if (name == "baseMVA") {
          std::string_view value = rhs.substr(0, rhs.find_first_of("; \t\r"));
          tables.base_mva = parse_double_token(value, "line " + std::to_string(line_no));
        }
        continue;
      }
    }

    // Inside a matrix: rows end at ';' or newline, the matrix at ']'.
    bool closed = false;
    std::size_t i = 0;
    while (i < body.size() && !closed) {
      const char c = body[i];
      if (c == ']') {
        closed = true;
      } else if (c == ';') {
        if (current != "#skip") flush_row();
      } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
      } else {
        std::size_t j = i;
        while (j < body.size() && std::string_view(" \t,;]\r").find(body[j]) == std::string_view::npos) ++j;
        if (current != "#skip") {
          if (row.tokens.empty()) row.line = line_no;
          row.tokens.emplace_back(body.substr(i, j - i));
        }
        i = j;
        continue;
      }
      ++i;
    }
    if (current != "#skip") flush_row();
    if (closed) current.clear();
  }
  return tables;
}

}  // namespace

CaseDocument parse_case_document(std::string_view text) {
  const json j = parse_json_text(text);
  if (!j.is_object()) schema_error("", "case document must be a JSON object");
  CaseDocument doc;
  doc.schema_version = get_string(require(j, "schema_version", ""), "schema_version");
  if (doc.schema_version.rfind("1.", 0) != 0) {
    schema_error("schema_version", "unsupported schema version " + doc.schema_version);
  }
  if (auto it = j.find("name"); it != j.end()) doc.name = get_string(*it, "name");
  doc.base_mva = get_number(require(j, "base_mva", ""), "base_mva");
  if (!(doc.base_mva > 0.0)) schema_error("base_mva", "must be positive");

  const json& buses = get_array(require(j, "buses", ""), "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string at = element("buses", i);
    CaseDocument::BusEntry b;
    b.id = get_int(require(buses[i], "id", at), child(at, "id"));
    b.injection_mw = get_number(require(buses[i], "injection_mw", at), child(at, "injection_mw"));
    if (auto it = buses[i].find("is_reference"); it != buses[i].end()) {
      b.is_reference = get_bool(*it, child(at, "is_reference"));
    }
    doc.buses.push_back(b);
  }
  const json& branches = get_array(require(j, "branches", ""), "branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string at = element("branches", i);
    CaseDocument::BranchEntry br;
    br.from = get_int(require(branches[i], "from", at), child(at, "from"));
    br.to = get_int(require(branches[i], "to", at), child(at, "to"));
    br.x = get_number(require(branches[i], "x", at), child(at, "x"));
    doc.branches.push_back(br);
  }
  doc.internal_buses = get_int_list(require(j, "internal_buses", ""), "internal_buses");
  return doc;
}

std::string write_case_document(const CaseDocument& doc) {
  ordered_json j;
  j["schema_version"] = doc.schema_version;
  j["name"] = doc.name;
  j["base_mva"] = doc.base_mva;
  ordered_json buses = ordered_json::array();
  for (const auto& b : doc.buses) {
    ordered_json item;
    item["id"] = b.id;
    item["injection_mw"] = b.injection_mw;
    item["is_reference"] = b.is_reference;
    buses.push_back(std::move(item));
  }
  j["buses"] = std::move(buses);
  ordered_json branches = ordered_json::array();
  for (const auto& br : doc.branches) {
    ordered_json item;
    item["from"] = br.from;
    item["to"] = br.to;
    item["x"] = br.x;
    branches.push_back(std::move(item));
  }
  j["branches"] = std::move(branches);
  j["internal_buses"] = doc.internal_buses;
  return dump(j);
}

GridCase to_grid_case(const CaseDocument& doc, const CaseOptions& options) {
  std::vector<Bus> buses;
  buses.reserve(doc.buses.size());
  for (const auto& b : doc.buses) {
    const bool ref = options.reference_bus ? b.id == *options.reference_bus : b.is_reference;
    buses.push_back({b.id, b.injection_mw / doc.base_mva, ref});
  }
  if (options.reference_bus &&
      std::none_of(doc.buses.begin(), doc.buses.end(),
                   [&](const auto& b) { return b.id == *options.reference_bus; })) {
    throw CaseError(CaseIssue::UnknownBus, "reference",
                    "reference bus " + std::to_string(*options.reference_bus) + " is not in the case");
  }
  std::vector<Line> lines;
  lines.reserve(doc.branches.size());
  for (std::size_t i = 0; i < doc.branches.size(); ++i) {
    const auto& br = doc.branches[i];
    if (!(br.x > 0.0) || !std::isfinite(br.x)) {
      throw CaseError(CaseIssue::NonpositiveReactance, element("branches", i) + ".x",
                      "branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                          " has non-positive reactance");
    }
    lines.push_back({static_cast<LineIndex>(i + 1), br.from, br.to, br.x});
  }
  try {
    return GridCase::create(std::move(buses), std::move(lines),
                            options.internal_buses.value_or(doc.internal_buses), doc.name);
  } catch (const CaseError& e) {
    rethrow_with_document_locus(e);
  }
}

CaseDocument to_case_document(const GridCase& grid, double base_mva) {
  CaseDocument doc;
  doc.name = grid.name();
  doc.base_mva = base_mva;
  for (const Bus& b : grid.buses()) doc.buses.push_back({b.id, b.injection * base_mva, b.is_reference});
  for (const Line& l : grid.lines()) doc.branches.push_back({l.from_bus, l.to_bus, l.reactance});
  doc.internal_buses = grid.internal_buses();
  return doc;
}

GridCase parse_case_json(std::string_view text, const CaseOptions& options) {
  return to_grid_case(parse_case_document(text), options);
}

CaseDocument parse_matpower_document(std::string_view text, const CaseOptions& options) {
  const MatpowerTables tables = scan_matpower(text);
  if (!tables.base_mva) throw CaseError(CaseIssue::MissingMatrix, "mpc.baseMVA", "missing baseMVA");
  for (const char* name : {"bus", "gen", "branch"}) {
    if (!tables.matrices.contains(name)) {
      throw CaseError(CaseIssue::MissingMatrix, std::string("mpc.") + name,
                      std::string("missing mpc.") + name + " matrix");
    }
  }
  auto check_width = [](const MatRow& r, std::size_t need, const char* what) {
    if (r.tokens.size() < need) {
      throw CaseError(CaseIssue::MalformedRow, "line " + std::to_string(r.line),
                      std::string(what) + " row has " + std::to_string(r.tokens.size()) +
                          " columns, expected at least " + std::to_string(need));
    }
  };

  CaseDocument doc;
  doc.base_mva = *tables.base_mva;
  if (!(doc.base_mva > 0.0)) throw CaseError(CaseIssue::Schema, "mpc.baseMVA", "must be positive");

  std::map<BusId, std::size_t> position;
  std::optional<BusId> type3;
  for (const MatRow& r : tables.matrices.at("bus")) {
    check_width(r, 13, "bus");
    const std::string locus = "line " + std::to_string(r.line);
    const BusId id = parse_int_token(r.tokens[0], locus);
    const int type = parse_int_token(r.tokens[1], locus);
    const double pd = parse_double_token(r.tokens[2], locus);
    if (!position.emplace(id, doc.buses.size()).second) {
      throw CaseError(CaseIssue::DuplicateBus, locus, "duplicate bus id " + std::to_string(id));
    }
    if (type == 3) {
      if (type3 && !options.reference_bus) {
        throw CaseError(CaseIssue::MultipleReference, locus, "second type-3 bus " + std::to_string(id));
      }
      type3 = id;
    }
    doc.buses.push_back({id, -pd, false});
  }
  for (const MatRow& r : tables.matrices.at("gen")) {
    check_width(r, 10, "gen");
    const std::string locus = "line " + std::to_string(r.line);
    const BusId id = parse_int_token(r.tokens[0], locus);
    const double pg = parse_double_token(r.tokens[1], locus);
    const double status = parse_double_token(r.tokens[7], locus);
    auto it = position.find(id);
    if (it == position.end()) {
      throw CaseError(CaseIssue::UnknownBus, locus, "generator at unknown bus " + std::to_string(id));
    }
    if (status > 0.0) doc.buses[it->second].injection_mw += pg;
  }
  for (const MatRow& r : tables.matrices.at("branch")) {
    check_width(r, 11, "branch");
    const std::string locus = "line " + std::to_string(r.line);
    const BusId from = parse_int_token(r.tokens[0], locus);
    const BusId to = parse_int_token(r.tokens[1], locus);
    const double x = parse_double_token(r.tokens[3], locus);
    const double status = parse_double_token(r.tokens[10], locus);
    if (status <= 0.0) continue;
    for (BusId end : {from, to}) {
      if (!position.contains(end)) {
        throw CaseError(CaseIssue::UnknownBus, locus, "branch at unknown bus " + std::to_string(end));
      }
    }
    if (!(x > 0.0)) {
      throw CaseError(CaseIssue::NonpositiveReactance, locus,
                      "branch " + std::to_string(from) + "-" + std::to_string(to) +
                          " has non-positive reactance");
    }
    doc.branches.push_back({from, to, x});
  }

  const std::optional<BusId> reference = options.reference_bus ? options.reference_bus : type3;
  if (!reference) throw CaseError(CaseIssue::NoReference, "mpc.bus", "no type-3 (reference) bus");
  if (!position.contains(*reference)) {
    throw CaseError(CaseIssue::UnknownBus, "reference",
                    "reference bus " + std::to_string(*reference) + " is not in the case");
  }
  doc.buses[position.at(*reference)].is_reference = true;

  if (options.internal_buses) {
    doc.internal_buses = *options.internal_buses;
  } else {
    for (const auto& b : doc.buses) doc.internal_buses.push_back(b.id);
  }
  return doc;
}

GridCase parse_matpower_case(std::string_view text, const CaseOptions& options) {
  const CaseDocument doc = parse_matpower_document(text, options);
  // The document already carries the resolved reference and internal set.
  return to_grid_case(doc);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GridCase load_case(const std::string& path, const CaseOptions& options) {
  const std::string text = read_text_file(path);
  const bool matpower = path.size() >= 2 && path.compare(path.size() - 2, 2, ".m") == 0;
  return matpower ? parse_matpower_case(text, options) : parse_case_json(text, options);
}

std::vector<BusId> parse_bus_list(std::string_view text) {
  std::vector<BusId> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    if (is_sep(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_sep(text[j])) ++j;
    const std::string_view item = text.substr(i, j - i);
    const std::string locus = "bus list item '" + std::string(item) + "'";
    const auto dash = item.find('-', 1);
    if (dash == std::string_view::npos) {
      out.push_back(parse_int_token(item, locus));
    } else {
      const int lo = parse_int_token(item.substr(0, dash), locus);
      const int hi = parse_int_token(item.substr(dash + 1), locus);
      if (hi < lo) throw InvalidInput(locus + ": empty range");
      for (int b = lo; b <= hi; ++b) out.push_back(b);
    }
    i = j;
  }
  return out;
}

OutageScenario parse_scenario_inline(std::string_view text) {
  OutageScenario scenario;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ',' || text[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = text.find_first_of(", ", i);
    if (j == std::string_view::npos) j = text.size();
    const std::string_view item = text.substr(i, j - i);
    const std::string locus = "scenario item '" + std::string(item) + "'";
    LineChange c;
    if (const auto at = item.find('@'); at != std::string_view::npos) {
      c.line = parse_int_token(item.substr(0, at), locus);
      c.kind = ChangeKind::ReactanceChange;
      c.new_reactance = parse_double_token(item.substr(at + 1), locus);
    } else {
      c.line = parse_int_token(item, locus);
    }
    scenario.changes.push_back(c);
    i = j;
  }
  return scenario;
}

OutageScenario parse_scenario_json(std::string_view text) {
  return scenario_from_json(parse_json_text(text), "");
}

std::string write_scenario_json(const OutageScenario& scenario) {
  return dump(scenario_json(scenario));
}

std::string write_event_json(const EventRecord& event, const GridCase& grid) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  ordered_json ids = ordered_json::array();
  for (const Bus& b : grid.buses()) ids.push_back(b.id);
  j["bus_ids"] = std::move(ids);
  j["sigma_v"] = event.sigma_v;
  j["seed"] = event.seed;
  j["scenario"] = scenario_json(event.scenario);
  j["pre_angles"] = vector_json(event.pre_angles.values);
  j["post_angles"] = vector_json(event.post_angles.values);
  j["noise"] = vector_json(event.noise);
  return dump(j);
}

EventRecord parse_event_json(std::string_view text, const GridCase& grid) {
  const json j = parse_json_text(text);
  const std::vector<int> ids = get_int_list(require(j, "bus_ids", ""), "bus_ids");
  if (ids.size() != grid.bus_count()) {
    schema_error("bus_ids", "event has " + std::to_string(ids.size()) + " buses, case has " +
                                std::to_string(grid.bus_count()));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != grid.buses()[i].id) schema_error(element("bus_ids", i), "bus order differs from the case");
  }
  EventRecord event;
  event.sigma_v = get_number(require(j, "sigma_v", ""), "sigma_v");
  const json& seed = require(j, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    schema_error("seed", "expected a non-negative integer");
  }
  event.seed = seed.get<std::uint64_t>();
  event.scenario = scenario_from_json(require(j, "scenario", ""), "scenario");
  auto read_vec = [&](const char* key) {
    std::vector<double> v = get_number_list(require(j, key, ""), key);
    if (v.size() != grid.bus_count()) schema_error(key, "length does not match the bus count");
    return to_vector(v);
  };
  event.pre_angles.values = read_vec("pre_angles");
  event.post_angles.values = read_vec("post_angles");
  event.noise = read_vec("noise");
  return event;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvalidInput("cannot format number");
  return std::string(buf, ptr);
}

std::string write_path_csv(const PathResult& path) {
  std::string out = "lambda,line_index,s_value\n";
  for (std::size_t k = 0; k < path.solutions.size(); ++k) {
    const LassoSolution& sol = path.solutions[k];
    const std::string lambda = format_double(path.lambdas[k]);
    out += lambda + ",," + format_double(sol.objective) + "\n";
    for (Eigen::Index j = 0; j < sol.s_hat.size(); ++j) {
      if (sol.s_hat[j] != 0.0) {
        out += lambda + "," + std::to_string(j + 1) + "," + format_double(sol.s_hat[j]) + "\n";
      }
    }
  }
  return out;
}

std::vector<PathCsvBlock> parse_path_csv(std::string_view text) {
  std::vector<PathCsvBlock> blocks;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != "lambda,line_index,s_value") throw ParseError("line 1", "unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;
    const std::string locus = "line " + std::to_string(line_no);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw ParseError(locus, "expected three fields");
    const double lambda = parse_double_token(line.substr(0, c1), locus);
    const std::string_view index = line.substr(c1 + 1, c2 - c1 - 1);
    const double value = parse_double_token(line.substr(c2 + 1), locus);
    if (index.empty()) {
      blocks.push_back({lambda, value, {}});
    } else {
      if (blocks.empty() || blocks.back().lambda != lambda) {
        throw ParseError(locus, "coefficient row without a preceding objective row");
      }
      blocks.back().entries.emplace_back(parse_int_token(index, locus), value);
    }
  }
  return blocks;
}

ReportDocument make_report(const SelectionReport& report, const PathResult& path,
                           const EventRecord* event) {
  ReportDocument doc;
  if (event) {
    doc.scenario = event->scenario;
    doc.sigma_v = event->sigma_v;
    doc.seed = event->seed;
  }
  doc.lambdas = path.lambdas;
  for (std::size_t k = 0; k < path.solutions.size(); ++k) {
    const LassoSolution& sol = path.solutions[k];
    doc.path.push_back({path.lambdas[k], path.supports[k], sol.objective, sol.cycles, sol.converged});
  }
  doc.all_converged = path.all_converged();
  doc.criterion = to_string(report.criterion);
  doc.score_basis = to_string(report.basis);
  for (const ScoredCandidate& c : report.candidates) {
    doc.scores.push_back({c.model.k, c.model.support, c.model.rss, c.raw_score, c.scaled_score});
  }
  doc.chosen_k = report.chosen_k;
  doc.chosen_support = report.chosen_support;
  if (event) {
    doc.true_support = event->scenario.changed_lines();
    doc.exact_match = *doc.true_support == doc.chosen_support;
  }
  return doc;
}

std::string write_report_json(const ReportDocument& doc) {
  ordered_json j;
  j["schema_version"] = doc.schema_version;
  j["scenario"] = doc.scenario ? scenario_json(*doc.scenario) : ordered_json(nullptr);
  j["sigma_v"] = doc.sigma_v ? ordered_json(*doc.sigma_v) : ordered_json(nullptr);
  j["seed"] = doc.seed ? ordered_json(*doc.seed) : ordered_json(nullptr);
  j["lambdas"] = doc.lambdas;
  ordered_json path = ordered_json::array();
  for (const auto& p : doc.path) {
    ordered_json item;
    item["lambda"] = p.lambda;
    item["support"] = support_json(p.support);
    item["objective"] = p.objective;
    item["cycles"] = p.cycles;
    item["converged"] = p.converged;
    path.push_back(std::move(item));
  }
  j["path"] = std::move(path);
  j["all_converged"] = doc.all_converged;
  ordered_json selection;
  selection["criterion"] = doc.criterion;
  selection["score_basis"] = doc.score_basis;
  ordered_json scores = ordered_json::array();
  for (const auto& s : doc.scores) {
    ordered_json item;
    item["k"] = s.k;
    item["support"] = support_json(s.support);
    item["rss"] = s.rss;
    item["raw_score"] = std::isfinite(s.raw_score) ? ordered_json(s.raw_score) : ordered_json(nullptr);
    item["scaled_score"] = s.scaled_score;
    scores.push_back(std::move(item));
  }
  selection["scores"] = std::move(scores);
  selection["chosen_k"] = doc.chosen_k;
  selection["chosen_support"] = support_json(doc.chosen_support);
  j["selection"] = std::move(selection);
  j["true_support"] = doc.true_support ? support_json(*doc.true_support) : ordered_json(nullptr);
  j["exact_match"] = doc.exact_match ? ordered_json(*doc.exact_match) : ordered_json(nullptr);
  return dump(j);
}

std::string write_report_json(const SelectionReport& report, const PathResult& path,
                              const EventRecord* event) {
  return write_report_json(make_report(report, path, event));
}

ReportDocument parse_report_json(std::string_view text) {
  const json j = parse_json_text(text);
  ReportDocument doc;
  doc.schema_version = get_string(require(j, "schema_version", ""), "schema_version");
  if (const json& s = require(j, "scenario", ""); !s.is_null()) doc.scenario = scenario_from_json(s, "scenario");
  if (const json& s = require(j, "sigma_v", ""); !s.is_null()) doc.sigma_v = get_number(s, "sigma_v");
  if (const json& s = require(j, "seed", ""); !s.is_null()) {
    if (!s.is_number_integer()) schema_error("seed", "expected an integer");
    doc.seed = s.get<std::uint64_t>();
  }
  doc.lambdas = get_number_list(require(j, "lambdas", ""), "lambdas");
  const json& path = get_array(require(j, "path", ""), "path");
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::string at = element("path", i);
    ReportDocument::PathEntry p;
    p.lambda = get_number(require(path[i], "lambda", at), child(at, "lambda"));
    p.support = get_int_list(require(path[i], "support", at), child(at, "support"));
    p.objective = get_number(require(path[i], "objective", at), child(at, "objective"));
    p.cycles = get_int(require(path[i], "cycles", at), child(at, "cycles"));
    p.converged = get_bool(require(path[i], "converged", at), child(at, "converged"));
    doc.path.push_back(std::move(p));
  }
  doc.all_converged = get_bool(require(j, "all_converged", ""), "all_converged");
  const json& sel = require(j, "selection", "");
  doc.criterion = get_string(require(sel, "criterion", "selection"), "selection.criterion");
  doc.score_basis = get_string(require(sel, "score_basis", "selection"), "selection.score_basis");
  const json& scores = get_array(require(sel, "scores", "selection"), "selection.scores");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::string at = element("selection.scores", i);
    ReportDocument::ScoreEntry s;
    s.k = get_int(require(scores[i], "k", at), child(at, "k"));
    s.support = get_int_list(require(scores[i], "support", at), child(at, "support"));
    s.rss = get_number(require(scores[i], "rss", at), child(at, "rss"));
    const json& raw = require(scores[i], "raw_score", at);
    s.raw_score = raw.is_null() ? -std::numeric_limits<double>::infinity()
                                : get_number(raw, child(at, "raw_score"));
    s.scaled_score = get_number(require(scores[i], "scaled_score", at), child(at, "scaled_score"));
    doc.scores.push_back(std::move(s));
  }
  doc.chosen_k = get_int(require(sel, "chosen_k", "selection"), "selection.chosen_k");
  doc.chosen_support = get_int_list(require(sel, "chosen_support", "selection"), "selection.chosen_support");
  if (const json& t = require(j, "true_support", ""); !t.is_null()) doc.true_support = get_int_list(t, "true_support");
  if (const json& e = require(j, "exact_match", ""); !e.is_null()) doc.exact_match = get_bool(e, "exact_match");
  return doc;
}

}  // namespace lineout
