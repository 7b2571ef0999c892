#ifndef INVEVOLVE_WORKSPACE_H_
#define INVEVOLVE_WORKSPACE_H_

// Self-contained problem workspaces: a 100-day history, a 30-day holdout,
// cost parameters and tuned baselines, serialized as
//
//   problem_description.md
//   config.json
//   data/historical_sequence.json
//   data/evaluation_sequence.json
//   baseline_policies/<family>.json
//
// The holdout is never opened while an EpochGuard is alive.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "invevolve/datagen.h"
#include "invevolve/inventory.h"
#include "invevolve/policy.h"

namespace invevolve {

inline constexpr int kWorkspaceSchemaVersion = 1;

struct DayRecord {
  std::string date;
  double demand = 0.0;
  std::map<std::string, double> features;
  std::optional<std::string> note;  // serialized only when present

  bool operator==(const DayRecord&) const = default;
};

struct BaselineEntry {
  PolicySpec policy;
  double tuned_cost = 0.0;  // average cost on the history

  bool operator==(const BaselineEntry&) const = default;
};

struct WorkspaceSlice {
  std::string seed_id;
  std::string domain;
  std::string description;
  std::string demand_family;
  int slice_index = 0;
  int start_index = 0;  // day offset within the seed series
  std::vector<DayRecord> history;
  std::vector<DayRecord> evaluation;  // empty when loaded for an epoch
  double holding_cost = 1.0;
  double penalty_cost = 10.0;
  int lead_time = 5;
  std::vector<BaselineEntry> baselines;

  SystemConfig System() const;
  std::vector<double> HistoryDemand() const;
  std::vector<double> EvaluationDemand() const;
  // Lowest tuned cost; ties go to the first entry. Throws ConfigError when
  // there are no baselines.
  const BaselineEntry& BestBaseline() const;

  bool operator==(const WorkspaceSlice&) const = default;
};

// Days [start, start + kHistoryDays + kEvaluationDays) of a seed dataset.
WorkspaceSlice MakeSlice(const SeedDataset& ds, int start, int slice_index);
// SliceStarts + MakeSlice for n slices.
std::vector<WorkspaceSlice> SliceSeed(const SeedDataset& ds, int n_slices, std::uint64_t seed);

// Tunes every baseline family on the history from an empty system.
void TuneBaselines(WorkspaceSlice& slice, int budget, std::uint64_t seed);

// Writes every file through a temporary name and a rename. Throws IoError.
void EmitWorkspace(const WorkspaceSlice& slice, const std::filesystem::path& dir);

enum class LoadPurpose {
  kEpoch,       // history, config and baselines only
  kEvaluation,  // also the holdout
};

// Throws IoError for unreadable files and InputError for schema violations.
WorkspaceSlice LoadWorkspace(const std::filesystem::path& dir, LoadPurpose purpose);
// Throws ConfigError while an EpochGuard is alive on this thread.
std::vector<DayRecord> LoadEvaluationSequence(const std::filesystem::path& dir);

// Marks the current thread as running tuning or an epoch.
class EpochGuard {
 public:
  EpochGuard();
  ~EpochGuard();
  EpochGuard(const EpochGuard&) = delete;
  EpochGuard& operator=(const EpochGuard&) = delete;
  static bool Active();
};

struct CsvImportOptions {
  std::string id = "csv";
  int start = 0;  // first history row
  double holding_cost = 1.0;
  double penalty_cost = 10.0;
  int lead_time = 5;
};

// Reads a CSV with a header row containing `date` and `demand`, an optional
// `note` column, and numeric feature columns; quoted fields may contain
// commas. Rows [start, start + 130) become one slice.
WorkspaceSlice SliceFromCsv(const std::filesystem::path& csv, const CsvImportOptions& options);

}  // namespace invevolve

#endif  // INVEVOLVE_WORKSPACE_H_
