#ifndef INVEVOLVE_BENCH_H_
#define INVEVOLVE_BENCH_H_

// The stationary CBS benchmark: 6 demand distributions x lead times
// {1,2,3,4} x penalty ratios {4,9,19,39} with h = 1. Each scenario samples
// one demand path (or `paths` of them) shared by all seven families, tunes
// each family on it and compares everything to the tuned CBS.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "invevolve/datagen.h"
#include "invevolve/policy.h"

namespace invevolve {

inline constexpr int kBenchLeadTimes[] = {1, 2, 3, 4};
inline constexpr double kBenchRatios[] = {4.0, 9.0, 19.0, 39.0};
inline constexpr int kBenchScenarios = 96;

struct Scenario {
  Stationary distribution = Stationary::kPoisson;
  int lead_time = 1;
  double penalty = 4.0;  // p / h with h = 1
  int horizon = 2000;
  int budget = 50;
  int paths = 1;
  std::uint64_t seed = 0;  // demand paths
  int index = 0;

  std::string Id() const;  // e.g. "poisson_L2_p19"
};

// Distribution-major, then lead time, then ratio.
std::vector<Scenario> ScenarioGrid(std::uint64_t seed, int horizon = 2000, int budget = 50,
                                   int paths = 1);

enum class Verdict { kWin, kTie, kLoss };

// W iff cost < 0.98 cbs, L iff cost > 1.02 cbs, T otherwise.
Verdict Classify(double cost, double cbs_cost);
char VerdictLetter(Verdict v);

struct FamilyOutcome {
  Family family = Family::kBaseStock;
  PolicySpec policy;
  double cost = 0.0;
};

struct ScenarioResult {
  Scenario scenario;
  std::vector<FamilyOutcome> outcomes;  // kAllFamilies order

  const FamilyOutcome& Get(Family family) const;
  double RelativeChange(Family family) const;  // percent vs CBS
};

struct BenchConfig {
  std::uint64_t seed = 2024;
  int horizon = 2000;
  int budget = 50;
  int paths = 1;
  int jobs = 1;
  // Integer S, r, q and s; the demand paths are integer-valued.
  bool integer_quantities = true;

  void Validate() const;
};

ScenarioResult RunScenario(const Scenario& scenario, bool integer_quantities,
                           std::uint64_t tuner_seed);
std::vector<ScenarioResult> RunCbsBench(const BenchConfig& config);

struct WtlCounts {
  int win = 0;
  int tie = 0;
  int loss = 0;
  double mean_change = 0.0;  // percent vs CBS

  int Total() const { return win + tie + loss; }
  double BeatOrTie() const;  // (win + tie) / total
};

struct BenchSummary {
  int scenarios = 0;
  // Scenarios where each baseline attains the lowest baseline cost; tied
  // families are all credited.
  std::map<Family, int> lowest;
  int cbs_lowest = 0;
  std::map<Family, WtlCounts> aggregate;  // Tilted-CBS and Tilted-PIC
  std::map<Family, std::map<Stationary, WtlCounts>> by_distribution;
  std::map<int, double> kp_by_lead_time;   // mean tuned K_p
  std::map<double, double> kp_by_ratio;
  std::map<std::pair<int, double>, double> kp_grid;  // (L, p/h), over distributions
};

BenchSummary Summarize(const std::vector<ScenarioResult>& results);

// Writes scenarios.csv, dominance, wtl, wtl_by_distribution and kp tables as
// CSV and Markdown; with `svg`, also kp_lead_time.svg, kp_ratio.svg and
// kp_heatmap.svg. Returns the written file names.
std::vector<std::string> WriteBenchTables(const std::vector<ScenarioResult>& results,
                                          const BenchSummary& summary,
                                          const std::filesystem::path& dir, bool svg);

// Markdown of the dominance, aggregate W/T/L and per-distribution tables.
std::string BenchMarkdown(const BenchSummary& summary);

}  // namespace invevolve

#endif  // INVEVOLVE_BENCH_H_
