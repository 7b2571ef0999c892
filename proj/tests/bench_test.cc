#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "invevolve/bench.h"

#include <filesystem>
#include <set>

#include "invevolve/errors.h"
#include "invevolve/inventory.h"

namespace iv = invevolve;

TEST_CASE("verdict band is 2 percent of the CBS cost") {
  CHECK(iv::Classify(0.979, 1.0) == iv::Verdict::kWin);
  CHECK(iv::Classify(0.99, 1.0) == iv::Verdict::kTie);
  CHECK(iv::Classify(1.0, 1.0) == iv::Verdict::kTie);
  CHECK(iv::Classify(1.019, 1.0) == iv::Verdict::kTie);
  CHECK(iv::Classify(1.021, 1.0) == iv::Verdict::kLoss);
  CHECK(iv::VerdictLetter(iv::Verdict::kLoss) == 'L');
}

TEST_CASE("scenario grid has 96 distinct cells, 16 per distribution") {
  const auto grid = iv::ScenarioGrid(7);
  REQUIRE(grid.size() == static_cast<std::size_t>(iv::kBenchScenarios));
  std::set<std::string> ids;
  std::map<iv::Stationary, int> per;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i].index == static_cast<int>(i));
    ids.insert(grid[i].Id());
    ++per[grid[i].distribution];
  }
  CHECK(ids.size() == grid.size());
  for (const auto& [d, n] : per) CHECK(n == 16);
  CHECK(grid[0].Id() == std::string(iv::StationarySlug(grid[0].distribution)) + "_L1_p4");
  CHECK(grid[0].seed != grid[1].seed);
}

TEST_CASE("bench config validation") {
  iv::BenchConfig c;
  c.paths = 0;
  CHECK_THROWS_AS(c.Validate(), iv::InputError);
  c = {};
  c.horizon = 0;
  CHECK_THROWS_AS(c.Validate(), iv::InputError);
}

TEST_CASE("one scenario tunes all seven families deterministically") {
  auto s = iv::ScenarioGrid(11, 400, 30)[5];
  const auto a = iv::RunScenario(s, true, 99);
  const auto b = iv::RunScenario(s, true, 99);
  REQUIRE(a.outcomes.size() == std::size(iv::kAllFamilies));
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    CHECK(a.outcomes[i].family == iv::kAllFamilies[i]);
    CHECK(a.outcomes[i].cost == b.outcomes[i].cost);
    CHECK(iv::CanonicalString(a.outcomes[i].policy) == iv::CanonicalString(b.outcomes[i].policy));
  }
  for (const auto& o : a.outcomes) CHECK(o.cost > 0.0);
  CHECK(a.RelativeChange(iv::Family::kCappedBaseStock) == doctest::Approx(0.0));
}

TEST_CASE("summary counts and emitted tables") {
  std::vector<iv::ScenarioResult> results;
  const auto grid = iv::ScenarioGrid(3, 300, 12);
  // Lead times 1, 2 and 3.
  for (int i : {0, 21, 40}) results.push_back(iv::RunScenario(grid[i], true, 5 + i));
  const auto s = iv::Summarize(results);
  CHECK(s.scenarios == 3);
  int credited = 0;
  for (const auto& [f, n] : s.lowest) credited += n;
  CHECK(credited >= 3);
  CHECK(s.aggregate.at(iv::Family::kTiltedPic).Total() == 3);
  CHECK(s.aggregate.at(iv::Family::kTiltedCbs).Total() == 3);
  CHECK(s.kp_by_lead_time.size() == 3);

  const auto dir = std::filesystem::temp_directory_path() / "invevolve_bench_test";
  std::filesystem::remove_all(dir);
  const auto files = iv::WriteBenchTables(results, s, dir, true);
  for (const auto& f : files) CHECK(std::filesystem::exists(dir / f));
  CHECK(std::filesystem::exists(dir / "scenarios.csv"));
  CHECK(std::filesystem::exists(dir / "kp_heatmap.svg"));
  CHECK(iv::BenchMarkdown(s).find("Tilted") != std::string::npos);
  std::filesystem::remove_all(dir);
}
