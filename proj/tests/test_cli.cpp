#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lineout/cli.hpp"
#include "lineout/io_formats.hpp"

using namespace lineout;
namespace fs = std::filesystem;

namespace {

const std::string kData = LINEOUT_DATA_DIR;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lineout_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("case-info") {
  const Run big = cli({"case-info", "--case", kData + "/case118.json"});
  CHECK(big.code == 0);
  CHECK(contains(big.out, "N=118"));
  CHECK(contains(big.out, "L=185"));
  CHECK(contains(big.out, "internal=49 external=69"));

  const Run toy = cli({"case-info", "--case", kData + "/two_bus.json"});
  CHECK(toy.code == 0);
  CHECK(contains(toy.out, "N=2 L=1"));

  const Run missing = cli({"case-info", "--case", "/nonexistent/grid.json"});
  CHECK(missing.code == 2);
  CHECK(contains(missing.err, "/nonexistent/grid.json"));

  const Run m = cli({"case-info", "--case", kData + "/case118.m", "--internal", "1-45,113,114,115,117",
                     "--reference", "1"});
  CHECK(m.code == 0);
  CHECK(contains(m.out, "internal=49"));
}

TEST_CASE("usage errors exit with 2 before any work") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"case-info"}).code == 2);
  CHECK(cli({"simulate", "--case", kData + "/triangle.json", "--sigma", "0.1", "--sigma-fraction", "0.2"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--scenario", "1", "--criterion", "fixed"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--scenario", "1", "--k", "1"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--scenario", "1", "--criterion", "best"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--scenario", "1", "--decay", "2"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--event", "e.json", "--scenario", "1"}).code == 2);
  CHECK(cli({"simulate", "--case", kData + "/triangle.json", "--sigma", "-1"}).code == 2);
  CHECK(cli({"identify", "--case", kData + "/triangle.json", "--scenario", "1", "--score-basis", "raw"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("simulate") {
  const fs::path dir = scratch("simulate");
  const Run quiet = cli({"simulate", "--case", kData + "/triangle.json", "--sigma", "0", "--out", dir.string()});
  REQUIRE(quiet.code == 0);
  const GridCase g = load_case(kData + "/triangle.json");
  const EventRecord e = parse_event_json(read_text_file((dir / "event.json").string()), g);
  CHECK(e.post_angles.values == e.pre_angles.values);

  const Run a = cli({"simulate", "--case", kData + "/case118.json", "--scenario", "66,95,115", "--seed", "5"});
  const Run b = cli({"simulate", "--case", kData + "/case118.json", "--scenario", "66,95,115", "--seed", "5"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);

  const Run island = cli({"simulate", "--case", kData + "/triangle.json", "--scenario", "1,3"});
  CHECK(island.code == 3);
  CHECK(contains(island.err, "1"));
  CHECK(contains(island.err, "3"));

  const Run unknown = cli({"simulate", "--case", kData + "/triangle.json", "--scenario", "9"});
  CHECK(unknown.code == 2);
  fs::remove_all(dir);
}

TEST_CASE("identify a single outage on a small grid") {
  const fs::path dir = scratch("identify");
  const Run r = cli({"identify", "--case", kData + "/triangle.json", "--internal", "1,2,3", "--scenario", "1",
                     "--sigma", "0", "--criterion", "fixed", "--k", "1", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "chosen k=1 support={1}"));
  CHECK(contains(r.out, "exact_match=yes"));
  CHECK(fs::exists(dir / "path.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "event.json"));

  const ReportDocument doc = parse_report_json(read_text_file((dir / "report.json").string()));
  CHECK(doc.chosen_support == std::vector<LineIndex>{1});
  CHECK(doc.exact_match == true);

  const Run none = cli({"identify", "--case", kData + "/triangle.json", "--internal", "1,2,3", "--scenario", "1",
                        "--sigma", "0", "--criterion", "fixed", "--k", "3"});
  CHECK(none.code == 2);
  CHECK(contains(none.err, "exactly 3"));
  fs::remove_all(dir);
}

TEST_CASE("score basis flag") {
  const std::vector<std::string> base{"identify", "--case", kData + "/case118.json", "--scenario", "66,95,115", "--seed", "2"};
  auto with = [&](const std::string& basis) {
    auto args = base;
    args.insert(args.end(), {"--score-basis", basis});
    return cli(args);
  };
  const Run refit = with("refit");
  const Run lasso = with("lasso");
  CHECK(refit.code == 0);
  CHECK(lasso.code == 0);
  CHECK(contains(refit.out, "mdl scores (refit)"));
  CHECK(contains(lasso.out, "mdl scores (lasso)"));
  CHECK(cli(base).out == refit.out);
}

TEST_CASE("identification ignores external angles") {
  const fs::path dir = scratch("barrier");
  fs::create_directories(dir);
  const std::string case_path = kData + "/case118.json";
  REQUIRE(cli({"simulate", "--case", case_path, "--scenario", "66", "--seed", "3", "--out", (dir / "sim").string()}).code == 0);
  const GridCase g = load_case(case_path);
  EventRecord e = parse_event_json(read_text_file((dir / "sim" / "event.json").string()), g);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> junk(0.0, 10.0);
  for (std::size_t row : g.external_rows()) {
    e.pre_angles.values[static_cast<Eigen::Index>(row)] = junk(rng);
    e.post_angles.values[static_cast<Eigen::Index>(row)] = junk(rng);
  }
  {
    std::ofstream f(dir / "corrupt.json", std::ios::binary);
    f << write_event_json(e, g);
  }

  const Run clean = cli({"identify", "--case", case_path, "--event", (dir / "sim" / "event.json").string(),
                         "--out", (dir / "clean").string()});
  const Run dirty = cli({"identify", "--case", case_path, "--event", (dir / "corrupt.json").string(),
                         "--out", (dir / "dirty").string()});
  CHECK(clean.code == dirty.code);
  CHECK(clean.out == dirty.out);
  for (const char* file : {"path.csv", "report.json"}) {
    CHECK(read_text_file((dir / "clean" / file).string()) == read_text_file((dir / "dirty" / file).string()));
  }
  fs::remove_all(dir);
}

TEST_CASE("reproduce-118 prints a success count") {
  const Run r = cli({"reproduce-118", "--seeds", "2", "--seed", "4"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "seed 4:"));
  CHECK(contains(r.out, "seed 5:"));
  CHECK(contains(r.out, "success "));
  CHECK(contains(r.out, "/2"));
  CHECK(contains(r.out, "mdl scores"));
  CHECK(contains(r.out, "variance scores"));
}

TEST_CASE("outputs are byte-identical across runs") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  for (const fs::path& dir : {a, b}) {
    REQUIRE(cli({"reproduce-118", "--seeds", "3", "--seed", "11", "--out", dir.string()}).code == 0);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    CHECK(read_text_file(entry.path().string()) == read_text_file((b / rel).string()));
    ++files;
  }
  CHECK(files == 13);
  fs::remove_all(a);
  fs::remove_all(b);
}
