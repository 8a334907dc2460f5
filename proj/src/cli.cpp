#include "lineout/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lineout/identify.hpp"
#include "lineout/io_formats.hpp"

namespace lineout {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string join_support(const std::vector<LineIndex>& support) {
  std::string s = "{";
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(support[i]);
  }
  return s + "}";
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw InvalidInput("failed writing '" + path.string() + "'");
}

fs::path output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

bool is_file(const std::string& path) {
  std::error_code ec;
  return fs::is_regular_file(path, ec);
}

CaseOptions case_options(const RunSpec& spec) {
  CaseOptions options;
  if (spec.internal) {
    const std::string text = is_file(*spec.internal) ? read_text_file(*spec.internal) : *spec.internal;
    options.internal_buses = parse_bus_list(text);
  }
  options.reference_bus = spec.reference;
  return options;
}

GridCase load_grid(const RunSpec& spec, const std::string& fallback = {}) {
  const std::string path = spec.case_path ? *spec.case_path : fallback;
  if (path.empty()) throw UsageError("--case is required");
  return load_case(path, case_options(spec));
}

OutageScenario load_scenario(const std::string& value) {
  if (is_file(value)) return parse_scenario_json(read_text_file(value));
  return parse_scenario_inline(value);
}

double resolve_sigma(const RunSpec& spec, const GridCase& grid) {
  if (spec.sigma) return *spec.sigma;
  const double fraction = spec.sigma_fraction.value_or(0.05);
  return fraction == 0.0 ? 0.0 : noise_sigma(grid, fraction);
}

Criterion parse_criterion(const std::string& name) {
  if (name == "fixed") return Criterion::FixedCount;
  if (name == "mdl") return Criterion::Mdl;
  if (name == "variance") return Criterion::VarianceDeviation;
  throw UsageError("unknown criterion '" + name + "'");
}

IdentifyOptions identify_options(const RunSpec& spec) {
  IdentifyOptions options;
  options.lambda_count = spec.lambdas;
  options.decay = spec.decay;
  options.criterion = parse_criterion(spec.criterion);
  options.selection.k_fixed = spec.k;
  options.selection.k_max = spec.k_max;
  options.selection.basis = spec.score_basis == "lasso" ? ScoreBasis::LassoResidual : ScoreBasis::Refit;
  return options;
}

void print_scores(std::ostream& out, const SelectionReport& report) {
  out << "  " << to_string(report.criterion) << " scores (" << to_string(report.basis) << "):\n";
  for (const ScoredCandidate& c : report.candidates) {
    out << "    k=" << c.model.k << " support=" << join_support(c.model.support)
        << " raw=" << std::setprecision(6) << c.raw_score << " scaled=" << c.scaled_score
        << (c.model.k == report.chosen_k ? "  <- chosen" : "") << "\n";
  }
}

int cmd_case_info(const RunSpec& spec, std::ostream& out) {
  const GridCase grid = load_grid(spec);
  const Eigen::VectorXd p = grid.injections();
  out << "case: " << (grid.name().empty() ? "(unnamed)" : grid.name()) << "\n";
  out << "N=" << grid.bus_count() << " L=" << grid.line_count() << "\n";
  out << "internal=" << grid.internal_rows().size() << " external=" << grid.external_rows().size()
      << "\n";
  out << "reference bus: " << grid.reference_bus() << "\n";
  const std::size_t parts = component_count(grid);
  out << "connected: " << yes_no(parts == 1) << " (" << parts << " component"
      << (parts == 1 ? "" : "s") << ")\n";
  out << "injection sum: " << std::setprecision(6) << p.sum() << " pu (generation "
      << p.cwiseMax(0.0).sum() << " pu, slack adjustment " << grid.slack_adjustment() << " pu)\n";
  return exit_code::ok;
}

int cmd_simulate(const RunSpec& spec, std::ostream& out) {
  const GridCase grid = load_grid(spec);
  const OutageScenario scenario = load_scenario(spec.scenario.value_or(""));
  const double sigma_v = resolve_sigma(spec, grid);
  const EventRecord event = simulate_event(grid, scenario, sigma_v, spec.seed);
  const std::string text = write_event_json(event, grid);
  if (spec.out) {
    const fs::path file = output_dir(*spec.out) / "event.json";
    write_file(file, text);
    out << "wrote " << file.string() << "\n";
  } else {
    out << text;
  }
  return exit_code::ok;
}

int cmd_identify(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const GridCase grid = load_grid(spec);
  const IdentifyOptions options = identify_options(spec);

  EventRecord event;
  const bool simulated = !spec.event_path;
  if (spec.event_path) {
    event = parse_event_json(read_text_file(*spec.event_path), grid);
  } else {
    const OutageScenario scenario = load_scenario(*spec.scenario);
    event = simulate_event(grid, scenario, resolve_sigma(spec, grid), spec.seed);
  }

  // Only the internal rows of the event reach the solver.
  const Identification id = identify(grid, internal_angle_change(grid, event), options, event.sigma_v);

  if (spec.out) {
    const fs::path dir = output_dir(*spec.out);
    if (simulated) write_file(dir / "event.json", write_event_json(event, grid));
    write_file(dir / "path.csv", write_path_csv(id.path));
    write_file(dir / "report.json", write_report_json(id.report, id.path, &event));
  }

  const std::vector<LineIndex> truth = event.scenario.changed_lines();
  out << "lambdas: " << id.path.lambdas.size() << " (max " << std::setprecision(6)
      << id.path.lambdas.front() << ", min " << id.path.lambdas.back() << ")\n";
  print_scores(out, id.report);
  out << "chosen k=" << id.report.chosen_k << " support=" << join_support(id.report.chosen_support)
      << "\n";
  out << "true support=" << join_support(truth)
      << " exact_match=" << yes_no(truth == id.report.chosen_support) << "\n";

  if (!id.path.all_converged()) {
    err << "error: block coordinate descent did not converge at every lambda\n";
    return exit_code::not_converged;
  }
  return exit_code::ok;
}

int cmd_reproduce(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const GridCase grid = load_grid(spec, data_dir() + "/case118.json");
  const OutageScenario scenario = load_scenario(spec.scenario.value_or("66,95,115"));
  const double sigma_v = resolve_sigma(spec, grid);
  IdentifyOptions options = identify_options(spec);

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < spec.seeds; ++i) seeds.push_back(spec.seed + static_cast<std::uint64_t>(i));

  out << "case " << grid.name() << ": N=" << grid.bus_count() << " L=" << grid.line_count()
      << " internal=" << grid.internal_rows().size() << "\n";
  out << "scenario " << join_support(scenario.changed_lines()) << ", sigma_v=" << std::setprecision(6)
      << sigma_v << ", " << options.lambda_count << " lambdas\n";

  const std::vector<SeedOutcome> outcomes = reproduce(grid, scenario, sigma_v, seeds, options);

  std::optional<fs::path> dir;
  if (spec.out) dir = output_dir(*spec.out);
  std::string summary = "seed,on_path,mdl_k,mdl_support,variance_k,variance_support,exact_match\n";
  int successes = 0;
  bool converged = true;
  for (const SeedOutcome& o : outcomes) {
    successes += o.success ? 1 : 0;
    converged = converged && o.path.all_converged();
    out << "seed " << o.seed << ": on_path=" << yes_no(o.on_path) << " mdl k=" << o.mdl.chosen_k
        << " " << join_support(o.mdl.chosen_support) << " variance k=" << o.variance.chosen_k << " "
        << join_support(o.variance.chosen_support) << " exact_match=" << yes_no(o.success) << "\n";
    print_scores(out, o.mdl);
    print_scores(out, o.variance);
    auto quoted = [](const std::vector<LineIndex>& s) { return "\"" + join_support(s) + "\""; };
    summary += std::to_string(o.seed) + "," + (o.on_path ? "1" : "0") + "," +
               std::to_string(o.mdl.chosen_k) + "," + quoted(o.mdl.chosen_support) + "," +
               std::to_string(o.variance.chosen_k) + "," + quoted(o.variance.chosen_support) + "," +
               (o.success ? "1" : "0") + "\n";
    if (dir) {
      const fs::path seed_dir = output_dir((*dir / ("seed_" + std::to_string(o.seed))).string());
      write_file(seed_dir / "event.json", write_event_json(o.event, grid));
      write_file(seed_dir / "path.csv", write_path_csv(o.path));
      write_file(seed_dir / "report_mdl.json", write_report_json(o.mdl, o.path, &o.event));
      write_file(seed_dir / "report_variance.json", write_report_json(o.variance, o.path, &o.event));
    }
  }
  if (dir) write_file(*dir / "summary.csv", summary);
  out << "success " << successes << "/" << outcomes.size() << "\n";

  if (!converged) {
    err << "error: block coordinate descent did not converge at every lambda\n";
    return exit_code::not_converged;
  }
  return exit_code::ok;
}

void validate(const RunSpec& spec) {
  const bool fixed = spec.criterion == "fixed";
  if (fixed && !spec.k) throw UsageError("--criterion fixed needs --k");
  if (spec.k && !fixed) throw UsageError("--k is only valid with --criterion fixed");
  if (spec.command == "identify" && !spec.event_path && !spec.scenario) {
    throw UsageError("identify needs --event or --scenario");
  }
}

}  // namespace

std::string data_dir() {
#ifdef LINEOUT_DATA_DIR
  return LINEOUT_DATA_DIR;
#else
  return "data";
#endif
}

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    validate(spec);
    if (spec.command == "case-info") return cmd_case_info(spec, out);
    if (spec.command == "simulate") return cmd_simulate(spec, out);
    if (spec.command == "identify") return cmd_identify(spec, out, err);
    if (spec.command == "reproduce-118") return cmd_reproduce(spec, out, err);
    throw UsageError("unknown command '" + spec.command + "'");
  } catch (const IslandingError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::simulation;
  } catch (const SingularSystemError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::simulation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::input;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_code::internal;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunSpec spec;
  CLI::App app{"Line outage identification from phasor angle data", "lineout"};
  app.require_subcommand(1);

  auto* info = app.add_subcommand("case-info", "Summarise a case file");
  auto* sim = app.add_subcommand("simulate", "Simulate a pre/post-event angle record");
  auto* ident = app.add_subcommand("identify", "Identify changed lines from an event");
  auto* repro = app.add_subcommand("reproduce-118", "Run the 118-bus three-line outage study");

  for (auto* sub : {info, sim, ident, repro}) {
    auto* c = sub->add_option("--case", spec.case_path, "Case file (.json or MATPOWER .m)");
    if (sub != repro) c->required();
    sub->add_option("--internal", spec.internal, "Internal buses, e.g. 1-45,113 (or a file)");
    sub->add_option("--reference", spec.reference, "Reference bus id (overrides the case)");
  }
  for (auto* sub : {sim, ident, repro}) {
    auto* scenario = sub->add_option("--scenario", spec.scenario,
                                     "Changed lines, e.g. 66,95,12@0.25 (or a scenario JSON file)");
    auto* sigma = sub->add_option("--sigma", spec.sigma, "Noise standard deviation (per-unit)")
                      ->check(CLI::NonNegativeNumber);
    auto* fraction = sub->add_option("--sigma-fraction", spec.sigma_fraction,
                                     "Noise as a fraction of the mean |injection| [0.05]")
                         ->check(CLI::NonNegativeNumber);
    sigma->excludes(fraction);
    auto* seed = sub->add_option("--seed", spec.seed, "Random seed (first seed for reproduce-118)");
    sub->add_option("--out", spec.out, "Output directory");
    if (sub == ident) {
      auto* event = sub->add_option("--event", spec.event_path, "Event record written by simulate");
      event->excludes(scenario)->excludes(sigma)->excludes(fraction)->excludes(seed);
    }
  }
  for (auto* sub : {ident, repro}) {
    sub->add_option("--lambdas", spec.lambdas, "Number of lambda values [20]")
        ->check(CLI::PositiveNumber);
    sub->add_option("--decay", spec.decay, "Smallest lambda as a fraction of the largest [1e-3]")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--k-max", spec.k_max, "Largest candidate cardinality [5]")
        ->check(CLI::PositiveNumber);
    sub->add_option("--score-basis", spec.score_basis,
                    "Score refit least-squares residuals or the raw lasso residuals [refit]")
        ->check(CLI::IsMember({"refit", "lasso"}));
  }
  ident->add_option("--criterion", spec.criterion, "Model selection criterion [mdl]")
      ->check(CLI::IsMember({"fixed", "mdl", "variance"}));
  auto* k = ident->add_option("--k", spec.k, "Number of changed lines for --criterion fixed")
                ->check(CLI::PositiveNumber);
  k->excludes(ident->get_option("--k-max"));
  repro->add_option("--seeds", spec.seeds, "Number of seeds [10]")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::input;
  }
  spec.command = app.get_subcommands().front()->get_name();
  return run(spec, out, err);
}

}  // namespace lineout
