#ifndef INVEVOLVE_HARNESS_H_
#define INVEVOLVE_HARNESS_H_

// Workspace-level drivers behind the command-line tool: corpus generation,
// one certified epoch on a workspace history, and holdout evaluation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "invevolve/engine.h"
#include "invevolve/workspace.h"
#include "invevolve/xi.h"
#include "json.hpp"

namespace invevolve {

struct GenOptions {
  int seeds = kCatalogSize;  // first n catalogue entries
  int slices = kDefaultSlices;
  int budget = 50;  // baseline tuning trials
  std::uint64_t rng_seed = 2024;
  int jobs = 1;

  void Validate() const;
};

struct GenSummary {
  std::vector<std::string> workspaces;  // relative to the output root, sorted
  std::vector<std::string> warnings;
};

// Writes <out>/<seed id>/slice_<kk>/ workspaces, a per-seed seed.json with
// the generator diagnostics, and <out>/manifest.json.
GenSummary GenerateWorkspaces(const GenOptions& options, const std::filesystem::path& out);

// One slice from a CSV, with tuned baselines, written to `out`.
void ImportCsvWorkspace(const std::filesystem::path& csv, const CsvImportOptions& options,
                        int budget, std::uint64_t seed, const std::filesystem::path& out);

// Calibration data for xi: past replay-vs-deployment discrepancies and
// (shift features, xi) pairs from earlier slices, plus the probe features of
// the current one. Read from JSON with keys "discrepancies", "pairs"
// ([{"shift_features": [...], "xi": x}]), "probe", and optional "alpha",
// "inflation".
struct XiCalibration {
  std::vector<double> discrepancies;
  std::vector<XiCalibrationPair> pairs;
  std::vector<double> probe;
  double alpha = 0.1;
  double inflation = 0.0;

  static XiCalibration FromJson(const nlohmann::json& j);
};

XiBudget ResolveXi(const XiCalibration& calibration, std::uint64_t seed);
// Zero budget flagged as a cold start.
XiBudget ColdStartXi();

struct WorkspaceEpochOptions {
  EpochConfig epoch;
  // Unset: xi is resolved from `xi_calibration`, or is a cold start.
  std::optional<double> xi;
  std::optional<std::filesystem::path> xi_calibration;
  // Re-tune the baselines with this budget instead of using the stored ones.
  std::optional<int> retune_budget;
  // Family of the reference baseline; unset picks the best stored baseline.
  std::optional<Family> reference;
};

struct WorkspaceEpoch {
  WorkspaceSlice slice;  // history only
  std::vector<PolicySpec> baselines;
  PolicySpec reference;
  XiBudget xi;
  EpochResult result;
  // Deploy() on the initial pool, before any proposal.
  PolicySpec fallback;
  std::vector<std::string> warnings;

  // Epoch log with the workspace identity, xi breakdown and fallback.
  nlohmann::json Log() const;
};

// Loads the workspace for an epoch (the holdout stays closed) and runs one
// epoch of `rounds` proposals on the replay of its history.
WorkspaceEpoch RunWorkspaceEpoch(const std::filesystem::path& dir, ProposalSource& proposer,
                                 const WorkspaceEpochOptions& options);

// Average cost over the evaluation window, simulated from an empty system
// with the history as the Newsvendor's prior window.
double HoldoutCost(const WorkspaceSlice& slice, const PolicySpec& policy);

struct HoldoutRow {
  std::string name;
  PolicySpec policy;
  double total = 0.0;
  double average = 0.0;
  double change_pct = 0.0;  // vs the best baseline on the holdout
};

struct HoldoutReport {
  std::string workspace;
  HoldoutRow candidate;
  std::vector<HoldoutRow> baselines;
  int best_baseline = 0;
  bool success = false;  // candidate strictly below the best baseline

  nlohmann::json ToJson() const;
  std::string Markdown() const;
};

// `slice` must be loaded with LoadPurpose::kEvaluation.
HoldoutReport EvaluateHoldout(const WorkspaceSlice& slice, const PolicySpec& policy);

}  // namespace invevolve

#endif  // INVEVOLVE_HARNESS_H_
