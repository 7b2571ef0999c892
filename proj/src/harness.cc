#include "invevolve/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "invevolve/errors.h"
#include "invevolve/io.h"
#include "invevolve/parallel.h"
#include "invevolve/rng.h"

namespace invevolve {

using nlohmann::json;

void GenOptions::Validate() const {
  if (seeds < 1 || seeds > kCatalogSize) {
    throw InputError("seeds must lie in [1, " + std::to_string(kCatalogSize) + "]");
  }
  if (slices < 1) throw InputError("slices must be >= 1");
  if (budget < 1) throw InputError("budget must be >= 1");
  if (jobs < 0) throw InputError("jobs must be >= 0");
}

namespace {

std::string SliceDirName(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%02d", k);
  return buf;
}

json SeedDiagnostics(const SeedDataset& ds, std::span<const WorkspaceSlice> slices) {
  const auto& d = ds.series.diagnostics;
  json events = json::array();
  for (const auto& e : d.events) {
    events.push_back({{"type", ds.config.events.at(e.type).name},
                      {"onset", DateString(e.onset)},
                      {"duration", e.duration},
                      {"observed", e.observed}});
  }
  int note_days = 0;
  for (const auto& n : ds.series.notes) note_days += n.has_value();
  json starts = json::array();
  for (const auto& s : slices) starts.push_back(s.start_index);
  return {{"seed_id", ds.config.id},
          {"domain", ds.config.domain},
          {"demand_family", DemandFamilyName(ds.config.family)},
          {"retained_features", ds.covariates.names},
          {"dropped_features", ds.covariates.dropped},
          {"slice_starts", starts},
          {"note_days", note_days},
          {"events", events},
          {"clamped_days", d.clamped_days},
          {"warnings", ds.series.warnings}};
}

}  // namespace

GenSummary GenerateWorkspaces(const GenOptions& o, const std::filesystem::path& out) {
  o.Validate();
  const auto catalog = DefaultCatalog(o.rng_seed);
  std::vector<std::vector<std::string>> dirs(o.seeds);
  std::vector<std::vector<std::string>> warnings(o.seeds);
  ParallelFor(o.seeds, o.jobs, [&](int i) {
    const auto si = static_cast<std::uint64_t>(i);
    const SeedDataset ds = GenerateSeed(catalog[i], DeriveSeed(o.rng_seed, {si}));
    auto slices = SliceSeed(ds, o.slices, DeriveSeed(o.rng_seed, {si, 1}));
    for (auto& s : slices) {
      TuneBaselines(s, o.budget,
                    DeriveSeed(o.rng_seed, {si, 2, static_cast<std::uint64_t>(s.slice_index)}));
      const std::string rel = ds.config.id + "/" + SliceDirName(s.slice_index);
      EmitWorkspace(s, out / rel);
      dirs[i].push_back(rel);
    }
    WriteFileAtomic(out / ds.config.id / "seed.json",
                    SeedDiagnostics(ds, slices).dump(2) + "\n");
    for (const auto& w : ds.series.warnings) warnings[i].push_back(ds.config.id + ": " + w);
  });
  GenSummary summary;
  for (int i = 0; i < o.seeds; ++i) {
    summary.workspaces.insert(summary.workspaces.end(), dirs[i].begin(), dirs[i].end());
    summary.warnings.insert(summary.warnings.end(), warnings[i].begin(), warnings[i].end());
  }
  std::sort(summary.workspaces.begin(), summary.workspaces.end());
  const json manifest = {{"rng_seed", o.rng_seed},
                         {"seeds", o.seeds},
                         {"slices_per_seed", o.slices},
                         {"baseline_budget", o.budget},
                         {"workspaces", summary.workspaces}};
  WriteFileAtomic(out / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

void ImportCsvWorkspace(const std::filesystem::path& csv, const CsvImportOptions& options,
                        int budget, std::uint64_t seed, const std::filesystem::path& out) {
  auto slice = SliceFromCsv(csv, options);
  TuneBaselines(slice, budget, seed);
  EmitWorkspace(slice, out);
}

XiCalibration XiCalibration::FromJson(const json& j) {
  if (!j.is_object()) throw InputError("xi calibration must be a JSON object");
  XiCalibration c;
  try {
    c.discrepancies = j.value("discrepancies", std::vector<double>{});
    c.probe = j.value("probe", std::vector<double>{});
    c.alpha = j.value("alpha", 0.1);
    c.inflation = j.value("inflation", 0.0);
    for (const auto& p : j.value("pairs", json::array())) {
      c.pairs.push_back({p.at("shift_features").get<std::vector<double>>(),
                         p.at("xi").get<double>()});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed xi calibration: ") + e.what());
  }
  return c;
}

XiBudget ResolveXi(const XiCalibration& c, std::uint64_t seed) {
  const auto hist = XiHistorical(c.discrepancies, c.alpha);
  const auto shift = XiShift(c.pairs, c.probe, c.alpha, c.inflation, seed);
  return CombineXi(hist, shift, c.alpha, static_cast<int>(c.discrepancies.size()),
                   c.inflation);
}

XiBudget ColdStartXi() {
  XiBudget b;
  b.history_periods = 0;
  b.cold_start = true;
  return b;
}

json WorkspaceEpoch::Log() const {
  json log = result.log;
  log["workspace"] = {{"seed_id", slice.seed_id},
                      {"slice_index", slice.slice_index},
                      {"domain", slice.domain}};
  log["reference"] = ToJson(reference);
  log["fallback"] = ToJson(fallback);
  log["xi_budget"] = xi.ToJson();
  log["warnings"] = warnings;
  return log;
}

WorkspaceEpoch RunWorkspaceEpoch(const std::filesystem::path& dir, ProposalSource& proposer,
                                 const WorkspaceEpochOptions& options) {
  EpochGuard guard;
  WorkspaceEpoch w;
  w.slice = LoadWorkspace(dir, LoadPurpose::kEpoch);
  EpochConfig cfg = options.epoch;
  cfg.Validate();

  if (options.retune_budget) {
    TuneBaselines(w.slice, *options.retune_budget, DeriveSeed(cfg.seed, {0xBA5E}));
  } else if (w.slice.baselines.empty()) {
    throw InputError("workspace " + dir.string() + " has no baselines; pass a tuning budget");
  }
  for (const auto& b : w.slice.baselines) w.baselines.push_back(b.policy);

  if (options.reference) {
    const auto it = std::find_if(w.baselines.begin(), w.baselines.end(), [&](const auto& p) {
      return p.family() == *options.reference;
    });
    if (it == w.baselines.end()) {
      throw InputError("no " + std::string(FamilyName(*options.reference)) +
                       " baseline in the workspace");
    }
    w.reference = *it;
  } else {
    w.reference = w.slice.BestBaseline().policy;
  }

  if (options.xi) {
    if (!(*options.xi >= 0.0)) throw InputError("xi must be >= 0");
    w.xi = XiBudget{};
    w.xi.xi = *options.xi;
    w.xi.history_periods = 0;
  } else {
    std::filesystem::path calibration = dir / "xi_calibration.json";
    if (options.xi_calibration) calibration = *options.xi_calibration;
    if (options.xi_calibration || std::filesystem::exists(calibration)) {
      w.xi = ResolveXi(XiCalibration::FromJson(json::parse(ReadFileText(calibration))),
                       DeriveSeed(cfg.seed, {0x71}));
    } else {
      w.xi = ColdStartXi();
    }
    if (w.xi.cold_start) {
      w.warnings.push_back("no xi calibration history: cold start with xi = 0");
    }
  }
  cfg.xi = w.xi.xi;
  cfg.xi_budget = w.xi;

  const auto history = w.slice.HistoryDemand();
  {
    ReplayEvaluator initial(history, w.slice.System());
    const auto st = InitEpoch(w.baselines, std::nullopt, w.reference, initial, cfg);
    w.fallback = Deploy(st, cfg).policy;
  }
  ReplayEvaluator evaluator(history, w.slice.System());
  w.result = RunEpoch(evaluator, w.baselines, std::nullopt, w.reference, proposer, cfg);
  return w;
}

double HoldoutCost(const WorkspaceSlice& slice, const PolicySpec& policy) {
  if (slice.evaluation.empty()) throw InputError("workspace was loaded without its holdout");
  const auto history = slice.HistoryDemand();
  SimOptions opt;
  opt.history_prefix = history;
  return SimulateAverageCost(policy, slice.EvaluationDemand(), slice.System(),
                             InventoryState::Empty(slice.lead_time), opt);
}

namespace {

HoldoutRow MakeRow(const WorkspaceSlice& slice, std::string name, const PolicySpec& policy) {
  const auto history = slice.HistoryDemand();
  const auto demand = slice.EvaluationDemand();
  SimOptions opt;
  opt.history_prefix = history;
  SystemConfig cfg = slice.System();
  cfg.horizon = static_cast<int>(demand.size());
  const auto sim = Simulate(policy, demand, {}, cfg, InventoryState::Empty(slice.lead_time), opt);
  return {std::move(name), policy, sim.total_cost, sim.avg_cost, 0.0};
}

}  // namespace

HoldoutReport EvaluateHoldout(const WorkspaceSlice& slice, const PolicySpec& policy) {
  if (slice.evaluation.empty()) throw InputError("workspace was loaded without its holdout");
  if (slice.baselines.empty()) throw InputError("workspace has no baselines");
  HoldoutReport r;
  r.workspace = slice.seed_id + "/" + SliceDirName(slice.slice_index);
  r.candidate = MakeRow(slice, "candidate", policy);
  for (const auto& b : slice.baselines) {
    r.baselines.push_back(MakeRow(slice, std::string(FamilyName(b.policy.family())), b.policy));
  }
  for (std::size_t i = 1; i < r.baselines.size(); ++i) {
    if (r.baselines[i].average < r.baselines[r.best_baseline].average) {
      r.best_baseline = static_cast<int>(i);
    }
  }
  const double best = r.baselines[r.best_baseline].average;
  auto change = [best](double avg) {
    return best > 0.0 ? 100.0 * (avg / best - 1.0) : (avg > 0.0 ? INFINITY : 0.0);
  };
  r.candidate.change_pct = change(r.candidate.average);
  for (auto& b : r.baselines) b.change_pct = change(b.average);
  r.success = r.candidate.average < best;
  return r;
}

json HoldoutReport::ToJson() const {
  auto row = [](const HoldoutRow& h) {
    return json{{"name", h.name},
                {"policy", invevolve::ToJson(h.policy)},
                {"total_cost", h.total},
                {"average_cost", h.average},
                {"change_vs_best_baseline_pct", h.change_pct}};
  };
  json bs = json::array();
  for (const auto& b : baselines) bs.push_back(row(b));
  return {{"workspace", workspace},
          {"candidate", row(candidate)},
          {"baselines", bs},
          {"best_baseline", baselines.at(best_baseline).name},
          {"success", success}};
}

std::string HoldoutReport::Markdown() const {
  std::ostringstream md;
  auto line = [&](const HoldoutRow& h) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "| %s | %.6f | %.6f | %+.3f%% |\n", h.name.c_str(), h.total,
                  h.average, h.change_pct);
    md << buf;
  };
  md << "| policy | total cost | average cost | vs best baseline |\n|---|---|---|---|\n";
  line(candidate);
  for (const auto& b : baselines) line(b);
  md << "\nSuccess (strictly below " << baselines.at(best_baseline).name
     << "): " << (success ? "yes" : "no") << "\n";
  return md.str();
}

}  // namespace invevolve
