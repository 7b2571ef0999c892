#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "invevolve/datagen.h"
#include "invevolve/errors.h"
#include "invevolve/workspace.h"
#include "json.hpp"

namespace iv = invevolve;
namespace fs = std::filesystem;

namespace {

// Intercept-only negative binomial with no features, events or drift.
iv::SeedConfig Plain(double level, double dispersion) {
  iv::SeedConfig c;
  c.id = "plain";
  c.domain = "test";
  c.blurb = "Test SKU";
  c.base_level = level;
  c.dispersion = dispersion;
  c.features = {{"weekend", iv::FeatureKind::kWeekend, {}, 0.0}};
  c.retention = 1.0;
  return c;
}

double Mean(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += x[i];
  return s / static_cast<double>(hi - lo);
}

double Variance(const std::vector<double>& x) {
  const double m = Mean(x, 0, x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("invevolve_datagen_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("calendar") {
  CHECK(iv::DateString(0) == "2024-01-01");
  CHECK(iv::DateString(59) == "2024-02-29");
  CHECK(iv::DateString(366) == "2025-01-01");
  CHECK(iv::DateString(iv::kSeedDays - 1) == "2025-12-31");
}

TEST_CASE("degenerate temperature generator is constant") {
  auto c = Plain(5.0, 5.0);
  c.features = {{"temperature", iv::FeatureKind::kTemperature, {}, 0.0}};
  c.temperature.alpha1 = 0.0;
  c.temperature.ar_sd = 0.0;
  c.temperature.shock_prob = 0.0;
  const auto t = iv::GenerateCovariates(c, 3);
  REQUIRE(t.names.size() == 1);
  for (double v : t.columns[0]) CHECK(v == doctest::Approx(c.temperature.alpha0));
}

TEST_CASE("temperature peaks a quarter year after the phase") {
  auto c = Plain(5.0, 5.0);
  c.features = {{"temperature", iv::FeatureKind::kTemperature, {}, 0.0}};
  c.temperature.phi = 0.0;
  c.temperature.ar_sd = 0.0;
  c.temperature.shock_prob = 0.0;
  const auto t = iv::GenerateCovariates(c, 3);
  const auto& col = t.columns[0];
  const auto peak = std::max_element(col.begin(), col.begin() + 365) - col.begin();
  CHECK(peak + 1 == 91);  // day-of-year is 1-based
}

TEST_CASE("retention one keeps the full schema, retention zero keeps one feature") {
  auto c = Plain(5.0, 5.0);
  c.features = {{"temperature", iv::FeatureKind::kTemperature, {}, 0.1},
                {"promo", iv::FeatureKind::kPromotion, {}, 0.2},
                {"month", iv::FeatureKind::kMonth, {}, 0.0},
                {"proxy", iv::FeatureKind::kProxy, {}, -0.1}};
  const auto full = iv::GenerateCovariates(c, 11);
  CHECK(full.names == std::vector<std::string>{"temperature", "promo", "month", "proxy"});
  CHECK(full.dropped.empty());
  c.retention = 0.0;
  const auto one = iv::GenerateCovariates(c, 11);
  CHECK(one.names.size() == 1);
  CHECK(one.dropped.size() == 3);
  // Retained columns do not depend on which others were dropped.
  const auto* kept = one.Column(one.names[0]);
  REQUIRE(kept != nullptr);
  CHECK(*kept == *full.Column(one.names[0]));
}

TEST_CASE("zero-coefficient negative binomial has mean exp(0)") {
  const auto c = Plain(1.0, 5.0);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = iv::GenerateSeed(c, seed);
    const double sigma = std::sqrt((1.0 + 1.0 / c.dispersion) / iv::kSeedDays);
    if (std::abs(Mean(ds.series.demand, 0, iv::kSeedDays) - 1.0) < 3.0 * sigma) ++inside;
    for (double lm : ds.series.diagnostics.log_mu) CHECK(lm == doctest::Approx(0.0));
  }
  CHECK(inside >= 19);
}

TEST_CASE("zero-inflation probability one gives an all-zero series") {
  auto c = Plain(20.0, 5.0);
  c.family = iv::DemandFamily::kZeroInflated;
  c.zero_prob = 1.0;
  const auto ds = iv::GenerateSeed(c, 4);
  CHECK(std::all_of(ds.series.demand.begin(), ds.series.demand.end(),
                    [](double y) { return y == 0.0; }));
}

TEST_CASE("event lifts the log-mean by delta * kappa * omega(0) at onset") {
  auto c = Plain(10.0, 5.0);
  iv::EventType e;
  e.name = "recall";
  e.description = "Supplier recall announced";
  e.rate_per_year = 12.0;
  e.intensity = 1.3;
  e.effect = 0.4;
  e.half_life = 4.0;
  c.events = {e};
  const auto ds = iv::GenerateSeed(c, 8);
  const auto& d = ds.series.diagnostics;
  REQUIRE(!d.events.empty());
  for (const auto& ev : d.events) {
    const double ratio = std::exp(d.log_mu[ev.onset] - d.log_mu_no_event[ev.onset]);
    CHECK(ratio > 1.0);
    CHECK(ratio == doctest::Approx(std::exp(e.effect * e.intensity)).epsilon(1e-12));
  }
}

TEST_CASE("notes mark observed onsets only; event effects persist without notes") {
  const auto catalog = iv::DefaultCatalog(1);
  int persisted = 0;
  for (int k = 0; k < 12; ++k) {
    const auto ds = iv::GenerateSeed(catalog[k], 100 + k);
    const auto& s = ds.series;
    int observed = 0;
    for (const auto& ev : s.diagnostics.events) {
      observed += ev.observed;
      CHECK(s.notes[ev.onset].has_value() == ev.observed);
      for (int r = ev.onset + 1; r < std::min(ev.onset + ev.duration, iv::kSeedDays); ++r) {
        CHECK(s.diagnostics.event_state[ev.type][r] > 0.0);
        if (!s.notes[r]) ++persisted;
      }
    }
    const auto notes = std::count_if(s.notes.begin(), s.notes.end(),
                                     [](const auto& n) { return n.has_value(); });
    CHECK(notes == observed);
  }
  CHECK(persisted > 0);
}

TEST_CASE("without drift the two halves agree; a break at day 366 is detected") {
  auto c = Plain(10.0, 5.0);
  REQUIRE_FALSE(c.drift.Enabled());
  const double var = 10.0 + 100.0 / c.dispersion;
  const double half = iv::kSeedDays / 2;
  const double sigma = std::sqrt(2.0 * var / half);
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = iv::GenerateSeed(c, seed).series.demand;
    const double diff = Mean(y, 366, iv::kSeedDays) - Mean(y, 0, 365);
    if (std::abs(diff) < 3.0 * sigma) ++agree;
  }
  CHECK(agree >= 19);

  c.drift.breaks = {{366, 0.5}};
  REQUIRE(c.drift.Enabled());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto y = iv::GenerateSeed(c, seed).series.demand;
    CHECK(Mean(y, 366, iv::kSeedDays) - Mean(y, 0, 365) > 5.0 * sigma);
  }
}

TEST_CASE("log-mean clamp logs a warning") {
  auto c = Plain(std::exp(20.0), 5.0);
  c.family = iv::DemandFamily::kContinuousPositive;
  const auto ds = iv::GenerateSeed(c, 1);
  CHECK(ds.series.diagnostics.clamped_days == iv::kSeedDays);
  CHECK(ds.series.warnings.size() == 1);
  for (double lm : ds.series.diagnostics.log_mu) CHECK(lm == iv::kLogMeanMax);
}

TEST_CASE("config validation") {
  auto c = Plain(5.0, 5.0);
  c.zero_prob = 1.5;
  CHECK_THROWS_AS(iv::GenerateSeed(c, 1), iv::InputError);
  c = Plain(5.0, -1.0);
  CHECK_THROWS_AS(iv::GenerateSeed(c, 1), iv::InputError);
  CHECK_THROWS_AS(iv::DemandFamilyFromName("poisson_gamma"), iv::InputError);
  CHECK(iv::DemandFamilyFromName("zero_inflated") == iv::DemandFamily::kZeroInflated);
}

TEST_CASE("slice placement") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = iv::SliceStarts(10, iv::kSeedDays, seed);
    REQUIRE(s.size() == 10);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(iv::SlicesSeparated(s, iv::kMinSliceSeparation));
    CHECK(s.front() >= 0);
    CHECK(s.back() + iv::kSliceDays <= iv::kSeedDays);
  }
  const std::vector<int> close = {100, 114};
  CHECK_FALSE(iv::SlicesSeparated(close, iv::kMinSliceSeparation));
  const std::vector<int> apart = {100, 115};
  CHECK(iv::SlicesSeparated(apart, iv::kMinSliceSeparation));

  const auto one = iv::SliceStarts(1, iv::kSeedDays, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0] + iv::kSliceDays <= iv::kSeedDays);

  // 45 starts 15 apart span 660 days, leaving no room for the last slice.
  CHECK_THROWS_AS(iv::SliceStarts(45, iv::kSeedDays, 5), iv::InputError);
  CHECK_THROWS_AS(iv::SliceStarts(1, 100, 5), iv::InputError);
}

TEST_CASE("catalogue yields 470 workspaces over 15 domains") {
  const auto catalog = iv::DefaultCatalog(2024);
  REQUIRE(catalog.size() == static_cast<std::size_t>(iv::kCatalogSize));
  std::set<std::string> domains, ids;
  int workspaces = 0;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    domains.insert(catalog[i].domain);
    ids.insert(catalog[i].id);
    const auto ds = iv::GenerateSeed(catalog[i], i);
    CHECK(ds.series.warnings.empty());
    const auto slices = iv::SliceSeed(ds, iv::kDefaultSlices, i);
    for (const auto& s : slices) {
      CHECK(s.history.size() == static_cast<std::size_t>(iv::kHistoryDays));
      CHECK(s.evaluation.size() == static_cast<std::size_t>(iv::kEvaluationDays));
      CHECK(s.penalty_cost == doctest::Approx(10.0 * s.holding_cost));
      CHECK(s.lead_time == 5);
    }
    workspaces += static_cast<int>(slices.size());
  }
  CHECK(domains.size() == static_cast<std::size_t>(iv::kCatalogDomains));
  CHECK(ids.size() == catalog.size());
  CHECK(workspaces == 470);
}

TEST_CASE("slices are consecutive days of the seed series") {
  const auto ds = iv::GenerateSeed(iv::DefaultCatalog(7)[3], 3);
  const auto s = iv::MakeSlice(ds, 200, 0);
  CHECK(s.history.front().date == iv::DateString(200));
  CHECK(s.evaluation.front().date == iv::DateString(300));
  CHECK(s.evaluation.back().date == iv::DateString(329));
  for (int i = 0; i < iv::kHistoryDays; ++i) CHECK(s.history[i].demand == ds.series.demand[200 + i]);
  CHECK_THROWS_AS(iv::MakeSlice(ds, iv::kSeedDays - 129, 0), iv::InputError);
}

TEST_CASE("stationary samplers") {
  SUBCASE("geometric mean over 100k draws") {
    const auto y = iv::SampleStationary(iv::Stationary::kGeometric, 100000, 1);
    const double sd = std::sqrt((1.0 - 1.0 / 6.0) / (1.0 / 36.0));
    CHECK(std::abs(Mean(y, 0, y.size()) - 5.0) < 3.0 * sd / std::sqrt(1e5));
    CHECK(*std::min_element(y.begin(), y.end()) == 0.0);
  }
  SUBCASE("binomial cv") {
    const auto y = iv::SampleStationary(iv::Stationary::kBinomial, 100000, 2);
    const double m = Mean(y, 0, y.size());
    CHECK(m == doctest::Approx(5.0).epsilon(0.01));
    CHECK(std::sqrt(Variance(y)) / m == doctest::Approx(std::sqrt(2.5) / 5.0).epsilon(0.02));
    CHECK(*std::max_element(y.begin(), y.end()) <= 10.0);
  }
  SUBCASE("uniform") {
    const auto y = iv::SampleStationary(iv::Stationary::kUniform, 100000, 3);
    CHECK(Mean(y, 0, y.size()) == doctest::Approx(5.0).epsilon(0.01));
    CHECK(*std::max_element(y.begin(), y.end()) == 10.0);
  }
  SUBCASE("all means near five, integer support") {
    for (auto d : iv::kAllStationary) {
      const auto y = iv::SampleStationary(d, 50000, 4);
      CHECK(Mean(y, 0, y.size()) == doctest::Approx(5.0).epsilon(0.05));
      for (double v : y) {
        REQUIRE(v >= 0.0);
        REQUIRE(v == std::round(v));
      }
      CHECK(iv::StationaryFromName(iv::StationarySlug(d)) == d);
      CHECK(iv::StationaryFromName(iv::StationaryName(d)) == d);
    }
  }
  CHECK_THROWS_AS(iv::StationaryFromName("pareto"), iv::InputError);
  CHECK(iv::SampleStationary(iv::Stationary::kPoisson, 500, 9) ==
        iv::SampleStationary(iv::Stationary::kPoisson, 500, 9));
}

TEST_CASE("workspace round trip") {
  const auto ds = iv::GenerateSeed(iv::DefaultCatalog(5)[0], 17);
  auto s = iv::SliceSeed(ds, 3, 17)[1];
  iv::TuneBaselines(s, 20, 17);
  REQUIRE(s.baselines.size() == 5);
  const fs::path dir = Scratch("roundtrip");
  iv::EmitWorkspace(s, dir);

  for (const char* f : {"problem_description.md", "config.json", "data/historical_sequence.json",
                        "data/evaluation_sequence.json"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(iv::LoadWorkspace(dir, iv::LoadPurpose::kEvaluation) == s);

  auto epoch = iv::LoadWorkspace(dir, iv::LoadPurpose::kEpoch);
  CHECK(epoch.evaluation.empty());
  epoch.evaluation = s.evaluation;
  CHECK(epoch == s);

  const auto& best = s.BestBaseline();
  for (const auto& b : s.baselines) CHECK(best.tuned_cost <= b.tuned_cost);
  fs::remove_all(dir);
}

TEST_CASE("absent notes are omitted, not empty") {
  iv::SeedConfig c = Plain(8.0, 5.0);
  iv::EventType e;
  e.name = "promo";
  e.description = "Flyer promotion begins";
  e.rate_per_year = 40.0;
  c.events = {e};
  c.observe_prob = 1.0;
  const auto ds = iv::GenerateSeed(c, 2);
  const auto s = iv::MakeSlice(ds, 0, 0);
  const fs::path dir = Scratch("notes");
  iv::EmitWorkspace(s, dir);
  const auto j = nlohmann::json::parse(Slurp(dir / "data" / "historical_sequence.json"));
  int with = 0, without = 0;
  for (const auto& r : j["records"]) {
    if (r.contains("note")) {
      CHECK(!r["note"].get<std::string>().empty());
      ++with;
    } else {
      ++without;
    }
  }
  CHECK(with > 0);
  CHECK(without > 0);
  fs::remove_all(dir);
}

TEST_CASE("evaluation sequence is refused during an epoch") {
  const auto s = iv::MakeSlice(iv::GenerateSeed(Plain(4.0, 5.0), 1), 10, 0);
  const fs::path dir = Scratch("guard");
  iv::EmitWorkspace(s, dir);
  {
    iv::EpochGuard guard;
    CHECK(iv::EpochGuard::Active());
    CHECK_THROWS_AS(iv::LoadEvaluationSequence(dir), iv::ConfigError);
    CHECK_THROWS_AS(iv::LoadWorkspace(dir, iv::LoadPurpose::kEvaluation), iv::ConfigError);
    CHECK(iv::LoadWorkspace(dir, iv::LoadPurpose::kEpoch).history == s.history);
  }
  CHECK_FALSE(iv::EpochGuard::Active());
  CHECK(iv::LoadEvaluationSequence(dir) == s.evaluation);
  fs::remove_all(dir);
}

TEST_CASE("identical config and seed emit byte-identical files") {
  const auto cfg = iv::DefaultCatalog(9)[20];
  const fs::path a = Scratch("det_a"), b = Scratch("det_b");
  for (const auto& dir : {a, b}) {
    auto s = iv::SliceSeed(iv::GenerateSeed(cfg, 31), 2, 31)[0];
    iv::TuneBaselines(s, 15, 31);
    iv::EmitWorkspace(s, dir);
  }
  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    CHECK(Slurp(entry.path()) == Slurp(b / rel));
    ++files;
  }
  CHECK(files == 9);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("workspace loader errors carry the path") {
  const fs::path dir = Scratch("missing");
  try {
    iv::LoadWorkspace(dir, iv::LoadPurpose::kEpoch);
    FAIL("expected IoError");
  } catch (const iv::IoError& e) {
    CHECK(std::string(e.what()).find("config.json") != std::string::npos);
  }
  const auto s = iv::MakeSlice(iv::GenerateSeed(Plain(4.0, 5.0), 1), 10, 0);
  iv::EmitWorkspace(s, dir);
  std::ofstream(dir / "data" / "historical_sequence.json") << "{\"schema_version\": 7}";
  CHECK_THROWS_AS(iv::LoadWorkspace(dir, iv::LoadPurpose::kEpoch), iv::InputError);
  fs::remove_all(dir);
}

TEST_CASE("csv import") {
  const fs::path dir = Scratch("csv");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "series.csv");
    out << "date,demand,note,price\n";
    for (int i = 0; i < 140; ++i) {
      out << iv::DateString(i) << "," << (i % 9) << ",";
      if (i == 105) out << "\"Store remodel, closed aisle\"";
      out << "," << (2.5 + 0.01 * i) << "\n";
    }
  }
  iv::CsvImportOptions o;
  o.start = 5;
  o.holding_cost = 0.5;
  o.penalty_cost = 5.0;
  const auto s = iv::SliceFromCsv(dir / "series.csv", o);
  CHECK(s.history.size() == 100);
  CHECK(s.evaluation.size() == 30);
  CHECK(s.history[0].date == iv::DateString(5));
  CHECK(s.history[0].features.at("price") == doctest::Approx(2.55));
  CHECK(s.history[100 - 1].demand == (104 % 9));
  REQUIRE(s.evaluation[0].note.has_value());
  CHECK(*s.evaluation[0].note == "Store remodel, closed aisle");
  CHECK_FALSE(s.evaluation[1].note.has_value());
  o.start = 20;
  CHECK_THROWS_AS(iv::SliceFromCsv(dir / "series.csv", o), iv::InputError);
  fs::remove_all(dir);
}
