#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lineout/grid_model.hpp"
#include "lineout/io_formats.hpp"
#include "oracles.hpp"

using namespace lineout;

namespace {

GridCase triangle(std::vector<BusId> internal = {1, 2, 3}) {
  return GridCase::create({{1, 1.0, true}, {2, -0.5, false}, {3, -0.5, false}},
                          {{1, 1, 2, 1.0}, {2, 2, 3, 1.0}, {3, 1, 3, 1.0}}, internal, "triangle");
}

GridCase two_bus() {
  return GridCase::create({{1, 0.2, true}, {2, -0.2, false}}, {{1, 1, 2, 0.5}}, {1, 2});
}

GridCase case118() { return load_case(LINEOUT_DATA_DIR "/case118.json"); }

CaseIssue issue_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CaseError& e) {
    return e.issue();
  }
  FAIL("expected a CaseError");
  return CaseIssue::Schema;
}

}  // namespace

TEST_CASE("case construction rejects malformed grids") {
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {1, 0, false}}, {}, {1}); }) ==
        CaseIssue::DuplicateBus);
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {2, 0, false}}, {{1, 1, 3, 1.0}}, {1}); }) ==
        CaseIssue::UnknownBus);
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {2, 0, false}}, {{1, 1, 1, 1.0}}, {1}); }) ==
        CaseIssue::SelfLoop);
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {2, 0, false}}, {{1, 1, 2, 0.0}}, {1}); }) ==
        CaseIssue::NonpositiveReactance);
  CHECK(issue_of([] {
          GridCase::create({{1, 0, true}, {2, 0, false}}, {{1, 1, 2, 1.0}, {1, 1, 2, 1.0}}, {1});
        }) == CaseIssue::BadLineIndex);
  CHECK(issue_of([] { GridCase::create({{1, 0, false}, {2, 0, false}}, {{1, 1, 2, 1.0}}, {1}); }) ==
        CaseIssue::NoReference);
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {2, 0, true}}, {{1, 1, 2, 1.0}}, {1, 2}); }) ==
        CaseIssue::MultipleReference);
  CHECK(issue_of([] { GridCase::create({{1, 0, true}, {2, 0, false}}, {{1, 1, 2, 1.0}}, {2}); }) ==
        CaseIssue::ReferenceExternal);
  CHECK(issue_of([] {
          GridCase::create({{1, 0, true}, {2, 0, false}, {3, 0, false}}, {{1, 1, 2, 1.0}}, {1});
        }) == CaseIssue::Disconnected);
}

TEST_CASE("slack adjustment moves the imbalance to the reference bus") {
  const GridCase g = GridCase::create({{1, 0.0, false}, {2, 0.3, true}}, {{1, 1, 2, 1.0}}, {1, 2});
  CHECK(g.slack_adjustment() == doctest::Approx(-0.3));
  CHECK(g.injections()[1] == doctest::Approx(0.0));
  CHECK(std::abs(g.injections().sum()) < 1e-12);
  CHECK(two_bus().slack_adjustment() == 0.0);
}

TEST_CASE("incidence columns follow the from/to sign convention") {
  const IncidenceMatrix m2 = build_incidence(two_bus());
  CHECK(m2.entries.cols() == 1);
  CHECK(m2.entries(0, 0) == 1.0);
  CHECK(m2.entries(1, 0) == -1.0);

  Eigen::MatrixXd expected(3, 3);
  expected << 1, 0, 1, -1, 1, 0, 0, -1, -1;
  CHECK(build_incidence(triangle()).entries == expected);

  const GridCase g = case118();
  const IncidenceMatrix m = build_incidence(g);
  CHECK(m.entries(static_cast<Eigen::Index>(g.row_of(42)), 65) == 1.0);
  CHECK(m.entries(static_cast<Eigen::Index>(g.row_of(49)), 65) == -1.0);
  CHECK(m.entries.col(65).cwiseAbs().sum() == 2.0);
  for (Eigen::Index c = 0; c < m.entries.cols(); ++c) {
    CHECK(m.entries.col(c).sum() == 0.0);
    CHECK(m.entries.col(c).squaredNorm() == 2.0);
  }
}

TEST_CASE("laplacian of small cases") {
  Eigen::MatrixXd b2(2, 2);
  b2 << 2, -2, -2, 2;
  CHECK(laplacian_of(two_bus()).entries == b2);

  const Eigen::MatrixXd b3 = laplacian_of(triangle()).entries;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(b3(i, j) == (i == j ? 2.0 : -1.0));
  }

  Eigen::VectorXd bad(1);
  bad << -1.0;
  CHECK_THROWS_AS(build_laplacian(build_incidence(two_bus()), bad), InvalidParameter);
  CHECK_THROWS_AS(build_laplacian(build_incidence(two_bus()), Eigen::VectorXd(2)), InvalidInput);
}

TEST_CASE("laplacian matches the entrywise rule on random cases") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const GridCase g = oracle::random_case(rng);
    const Eigen::MatrixXd b = laplacian_of(g).entries;
    const Eigen::MatrixXd ref = oracle::laplacian_entrywise(g);
    CHECK((b - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
    CHECK(b == b.transpose());
    CHECK(b.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * b.cwiseAbs().maxCoeff());
    CHECK((b.diagonal().array() > 0.0).all());
    CHECK(build_incidence(g).entries == oracle::incidence_by_hand(g));

    const Eigen::MatrixXd m = build_incidence(g).entries;
    const Eigen::MatrixXd mdm = m * g.reactances().cwiseInverse().asDiagonal() * m.transpose();
    CHECK((b - mdm).cwiseAbs().maxCoeff() <= 1e-12 * b.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("column partition") {
  const GridCase full = triangle();
  const LaplacianPartition all = partition_columns(laplacian_of(full), full);
  CHECK(all.external.cols() == 0);
  CHECK(all.internal == laplacian_of(full).entries);

  const GridCase part = triangle({1, 2});
  const LaplacianPartition p = partition_columns(laplacian_of(part), part);
  REQUIRE(p.external.cols() == 1);
  CHECK(p.external(0, 0) == -1.0);
  CHECK(p.external(1, 0) == -1.0);
  CHECK(p.external(2, 0) == 2.0);

  const GridCase g = case118();
  const LaplacianPartition q = partition_columns(laplacian_of(g), g);
  CHECK(q.internal.cols() == 49);
  CHECK(q.external.cols() == 69);
}

TEST_CASE("scenario validation") {
  const GridCase g = triangle();
  CHECK_THROWS_AS(validate_scenario(g, OutageScenario::outages({4})), ScenarioError);
  CHECK_THROWS_AS(validate_scenario(g, OutageScenario::outages({1, 1})), ScenarioError);
  CHECK_THROWS_AS(validate_scenario(g, {{{1, ChangeKind::ReactanceChange, 1.0}}}), ScenarioError);
  CHECK_THROWS_AS(validate_scenario(g, {{{1, ChangeKind::ReactanceChange, -2.0}}}), ScenarioError);
  CHECK_NOTHROW(validate_scenario(g, {{{1, ChangeKind::ReactanceChange, 2.0}}}));
}

TEST_CASE("delta laplacian and post-event case") {
  const GridCase g = triangle();
  CHECK(delta_laplacian(g, {}).entries.isZero(0.0));
  CHECK(apply_scenario(g, {}) == g);

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  expected.topLeftCorner(2, 2) << 1, -1, -1, 1;
  CHECK(delta_laplacian(g, OutageScenario::outages({1})).entries == expected);

  const GridCase post = apply_scenario(g, OutageScenario::outages({1}));
  CHECK(post.line_count() == 2);
  CHECK(post.lines()[0].index == 2);
  CHECK(post.lines()[1].index == 3);

  try {
    apply_scenario(g, OutageScenario::outages({1, 3}));
    FAIL("expected islanding");
  } catch (const IslandingError& e) {
    CHECK(e.lines() == std::vector<int>{1, 3});
  }

  const GridCase changed = apply_scenario(g, {{{2, ChangeKind::ReactanceChange, 4.0}}});
  CHECK(changed.line(2).reactance == 4.0);
  CHECK(change_weight(g.line(2), {2, ChangeKind::ReactanceChange, 4.0}) == doctest::Approx(0.75));
}

TEST_CASE("delta laplacian equals the rebuilt difference on random scenarios") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> newx(0.05, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const GridCase g = oracle::random_case(rng);
    const auto lines = oracle::random_connected_outage(rng, g, 1 + trial % 3);
    if (lines.empty()) continue;
    OutageScenario s = OutageScenario::outages(lines);
    if (trial % 2 == 0) s.changes.back() = {lines.back(), ChangeKind::ReactanceChange, newx(rng)};
    const Eigen::MatrixXd before = oracle::laplacian_entrywise(g);
    const Eigen::MatrixXd after = oracle::laplacian_entrywise(apply_scenario(g, s));
    const Eigen::MatrixXd delta = delta_laplacian(g, s).entries;
    CHECK((delta - (before - after)).cwiseAbs().maxCoeff() <= 1e-12 * before.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("component count agrees with breadth-first search") {
  CHECK(component_count(two_bus()) == 1);
  CHECK(component_count(two_bus(), {1}) == 2);
  CHECK(component_count(case118(), {66, 95, 115}) == 1);
  CHECK(oracle::bfs_components(case118(), {66, 95, 115}) == 1);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const GridCase g = oracle::random_case(rng, {2, 30, 0, 0.3, 1.0});
    std::set<LineIndex> removed;
    std::bernoulli_distribution drop(0.3);
    for (const Line& l : g.lines()) {
      if (drop(rng)) removed.insert(l.index);
    }
    CHECK(component_count(g, removed) == static_cast<std::size_t>(oracle::bfs_components(g, removed)));
  }
}

TEST_CASE("118-bus outage scenario keeps the grid connected") {
  const GridCase g = case118();
  const GridCase post = apply_scenario(g, OutageScenario::outages({66, 95, 115}));
  CHECK(post.line_count() == g.line_count() - 3);
  CHECK(!post.position_of(66));
  CHECK(post.position_of(67));
}
