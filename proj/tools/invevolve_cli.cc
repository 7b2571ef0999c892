// invevolve: workspace generation, certified epochs, holdout evaluation, the
// stationary CBS benchmark and the guarantee checks.
//
// Exit codes: 0 success, 1 validation error, 2 guarantee violation, 3 I/O.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "invevolve/bench.h"
#include "invevolve/errors.h"
#include "invevolve/harness.h"
#include "invevolve/io.h"
#include "invevolve/proposal.h"
#include "invevolve/rng.h"
#include "invevolve/theory.h"
#include "json.hpp"

namespace iv = invevolve;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitGuarantee = 2;
constexpr int kExitIo = 3;

struct Global {
  std::uint64_t rng_seed = 2024;
  int jobs = 0;
  fs::path out = "out";
};

json ReadJson(const fs::path& path) {
  const std::string text = iv::ReadFileText(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw iv::InputError(path.string() + ": " + e.what());
  }
}

// A bare policy, or an object holding one under "policy" (baseline files,
// deployed_policy.json).
iv::PolicySpec PolicyFromFile(const fs::path& path) {
  const json j = ReadJson(path);
  return iv::PolicyFromJson(j.contains("policy") ? j.at("policy") : j);
}

// Scripted proposals: a JSON array (or {"sequence": [...]}) of policies, with
// null marking a failed round.
std::vector<std::optional<iv::PolicySpec>> ScriptFromFile(const fs::path& path) {
  json j = ReadJson(path);
  if (j.is_object() && j.contains("sequence")) j = j.at("sequence");
  if (!j.is_array() || j.empty()) {
    throw iv::InputError(path.string() + ": script must be a non-empty array");
  }
  std::vector<std::optional<iv::PolicySpec>> seq;
  for (const auto& e : j) {
    if (e.is_null()) {
      seq.emplace_back(std::nullopt);
    } else {
      seq.emplace_back(iv::PolicyFromJson(e));
    }
  }
  return seq;
}

void Write(const fs::path& path, const std::string& content) { iv::WriteFileAtomic(path, content); }

// --- gen -------------------------------------------------------------------

struct GenArgs {
  iv::GenOptions gen;
  std::optional<fs::path> csv;
  iv::CsvImportOptions csv_options;
};

int RunGen(const Global& g, GenArgs a) {
  if (a.csv) {
    iv::ImportCsvWorkspace(*a.csv, a.csv_options, a.gen.budget, g.rng_seed, g.out);
    std::cout << "wrote workspace " << g.out.string() << "\n";
    return kExitOk;
  }
  a.gen.rng_seed = g.rng_seed;
  a.gen.jobs = g.jobs;
  const auto s = iv::GenerateWorkspaces(a.gen, g.out);
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << s.workspaces.size() << " workspaces under " << g.out.string() << "\n";
  return kExitOk;
}

// --- epoch -----------------------------------------------------------------

struct EpochArgs {
  fs::path workspace;
  std::string proposer = "mutation";
  std::optional<fs::path> script;
  std::string url;
  int rounds = 60;
  double epsilon = 0.05;
  double delta = 0.05;
  std::string xi = "auto";
  std::optional<fs::path> xi_calibration;
  std::string cert = "auto";
  std::optional<int> budget;
  std::optional<std::string> reference;
  bool debug_invert_gate = false;
};

int RunEpochCommand(const Global& g, const EpochArgs& a) {
  if (a.rounds < 1) throw iv::InputError("--J must be >= 1");
  iv::WorkspaceEpochOptions o;
  o.epoch.rounds = a.rounds;
  o.epoch.epsilon = a.epsilon;
  o.epoch.delta = a.delta;
  o.epoch.seed = g.rng_seed;
  o.epoch.debug_invert_gate = a.debug_invert_gate;
  if (a.cert != "auto") {
    o.epoch.method = a.cert == "blockt" ? iv::CertMethod::kBlockwiseT : iv::CertMethod::kHoeffding;
  }
  if (a.xi != "auto") {
    try {
      std::size_t used = 0;
      o.xi = std::stod(a.xi, &used);
      if (used != a.xi.size()) throw std::invalid_argument(a.xi);
    } catch (const std::logic_error&) {
      throw iv::InputError("--xi must be 'auto' or a number, got '" + a.xi + "'");
    }
  }
  o.xi_calibration = a.xi_calibration;
  o.retune_budget = a.budget;
  if (a.reference) o.reference = iv::FamilyFromName(*a.reference);

  std::unique_ptr<iv::ProposalSource> proposer;
  if (a.proposer == "mutation") {
    proposer = std::make_unique<iv::MutationProposer>(
        iv::MutationConfig{.seed = iv::DeriveSeed(g.rng_seed, {0x30})});
  } else if (a.proposer == "scripted") {
    if (!a.script) throw iv::InputError("--proposer scripted needs --script");
    proposer = std::make_unique<iv::ScriptedProposer>(ScriptFromFile(*a.script));
  } else {
    auto cfg = iv::ExternalConfig::FromEnvironment();
    if (!a.url.empty()) cfg.url = a.url;
    if (cfg.url.empty()) {
      throw iv::InputError("--proposer external needs --url or INVEVOLVE_PROPOSER_URL");
    }
    proposer = std::make_unique<iv::ExternalProposer>(cfg);
  }

  const auto w = iv::RunWorkspaceEpoch(a.workspace, *proposer, o);
  for (const auto& msg : w.warnings) std::cerr << "warning: " << msg << "\n";
  Write(g.out / "epoch_log.json", w.Log().dump(2) + "\n");
  Write(g.out / "deployed_policy.json",
        json{{"policy", iv::ToJson(w.result.deployed)}}.dump(2) + "\n");
  int promotions = 0;
  for (const auto& d : w.result.state.decisions) promotions += d.promoted;
  std::cout << "deployed " << iv::CanonicalString(w.result.deployed) << "\n"
            << "promotions " << promotions << " of " << w.result.state.round << " rounds, "
            << w.result.state.evaluations_used << " of " << w.result.state.budget
            << " evaluations\n";
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

int RunEval(const Global& g, const fs::path& workspace, const fs::path& policy_file) {
  const auto policy = PolicyFromFile(policy_file);
  const auto slice = iv::LoadWorkspace(workspace, iv::LoadPurpose::kEvaluation);
  const auto validity = iv::CheckValidity(policy, slice.System());
  if (!validity.valid) {
    std::string msg = "policy fails validity:";
    for (const auto& v : validity.violations) msg += " " + v + ";";
    throw iv::InputError(msg);
  }
  const auto report = iv::EvaluateHoldout(slice, policy);
  Write(g.out / "eval.json", report.ToJson().dump(2) + "\n");
  Write(g.out / "eval.md", report.Markdown());
  std::cout << report.Markdown();
  return kExitOk;
}

// --- cbs-bench -------------------------------------------------------------

int RunBench(const Global& g, iv::BenchConfig c, bool svg) {
  c.seed = g.rng_seed;
  c.jobs = g.jobs;
  const auto results = iv::RunCbsBench(c);
  const auto summary = iv::Summarize(results);
  iv::WriteBenchTables(results, summary, g.out, svg);
  std::cout << iv::BenchMarkdown(summary);
  return kExitOk;
}

// --- theory ----------------------------------------------------------------

struct TheoryArgs {
  int trials = 2000;
  int grid_trials = 10;
  int coverage_reps = 10000;
  bool debug_invert_gate = false;
};

int RunTheory(const Global& g, const TheoryArgs& a) {
  if (a.trials < 1 || a.grid_trials < 1 || a.coverage_reps < 1) {
    throw iv::InputError("trial counts must be >= 1");
  }
  const int jobs = g.jobs;
  std::vector<json> reports;
  reports.push_back(iv::VerifyConcentrationGrid(a.grid_trials, iv::DeriveSeed(g.rng_seed, {1})).ToJson());
  reports.push_back(
      iv::VerifyHoeffdingCoverage(a.coverage_reps, 25, 50, 0.05, iv::DeriveSeed(g.rng_seed, {2}), jobs)
          .ToJson());
  struct Setting {
    double q;
    int rounds;
    double delta;
  };
  std::uint64_t k = 3;
  for (const Setting s : {Setting{0.3, 10, 0.05}, Setting{0.1, 30, 0.02}}) {
    iv::PromotionHarness h;
    h.q = s.q;
    h.rounds = s.rounds;
    h.delta = s.delta;
    h.invert_gate = a.debug_invert_gate;
    reports.push_back(iv::VerifyPromotion(h, a.trials, iv::DeriveSeed(g.rng_seed, {k++}), jobs).ToJson());
  }
  iv::RollingHarness r;
  r.invert_gate = a.debug_invert_gate;
  reports.push_back(iv::VerifyRolling(r, a.trials, iv::DeriveSeed(g.rng_seed, {k++}), jobs).ToJson());

  bool all = true;
  for (const auto& rep : reports) all = all && rep.value("holds", false);
  Write(g.out / "guarantees.json", json{{"reports", reports}, {"all_hold", all}}.dump(2) + "\n");
  const std::string md = iv::GuaranteeMarkdown(reports);
  Write(g.out / "guarantees.md", md);
  std::cout << md;
  if (!all) {
    std::cerr << "guarantee violated\n";
    return kExitGuarantee;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified inventory-policy search: workspaces, epochs, benchmarks, checks"};
  app.require_subcommand(1);
  Global g;
  std::string out = g.out.string();
  app.add_option("--rng-seed", g.rng_seed, "Base seed for every random stream")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads; 0 uses every core")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.fallthrough();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate seed datasets and problem workspaces");
  gen_cmd->add_option("--seeds", gen.gen.seeds, "Catalogue entries to generate")->capture_default_str();
  gen_cmd->add_option("--slices", gen.gen.slices, "Slices per seed")->capture_default_str();
  gen_cmd->add_option("--budget", gen.gen.budget, "Baseline tuning trials")->capture_default_str();
  gen_cmd->add_option("--csv", gen.csv, "Build one workspace from a CSV of date,demand[,note,...]")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--csv-id", gen.csv_options.id, "Seed id for the CSV workspace");
  gen_cmd->add_option("--csv-start", gen.csv_options.start, "First history row of the CSV slice");
  gen_cmd->add_option("--holding-cost", gen.csv_options.holding_cost, "Holding cost (CSV)");
  gen_cmd->add_option("--penalty-cost", gen.csv_options.penalty_cost, "Lost-sales penalty (CSV)");
  gen_cmd->add_option("--lead-time", gen.csv_options.lead_time, "Lead time (CSV)");

  EpochArgs ep;
  auto* epoch_cmd = app.add_subcommand("epoch", "Run one certified search epoch on a workspace");
  epoch_cmd->add_option("workspace", ep.workspace, "Workspace directory")->required();
  epoch_cmd->add_option("--proposer", ep.proposer, "Proposal source")
      ->check(CLI::IsMember({"mutation", "scripted", "external"}))
      ->capture_default_str();
  epoch_cmd->add_option("--script", ep.script, "Policy sequence for the scripted proposer")
      ->check(CLI::ExistingFile);
  epoch_cmd->add_option("--url", ep.url, "Endpoint of the external proposer");
  epoch_cmd->add_option("--J", ep.rounds, "Proposal rounds")->capture_default_str();
  epoch_cmd->add_option("--epsilon", ep.epsilon, "Required certified improvement")->capture_default_str();
  epoch_cmd->add_option("--delta", ep.delta, "Joint failure probability")->capture_default_str();
  epoch_cmd->add_option("--xi", ep.xi, "Replay-to-deployment allowance: auto or a value")
      ->capture_default_str();
  epoch_cmd->add_option("--xi-calibration", ep.xi_calibration, "Calibration JSON for --xi auto")
      ->check(CLI::ExistingFile);
  epoch_cmd->add_option("--cert", ep.cert, "Confidence bounds")
      ->check(CLI::IsMember({"auto", "hoeffding", "blockt"}))
      ->capture_default_str();
  epoch_cmd->add_option("--budget", ep.budget, "Re-tune the baselines with this many trials");
  epoch_cmd->add_option("--reference", ep.reference, "Reference baseline family");
  epoch_cmd->add_flag("--debug-invert-gate", ep.debug_invert_gate)->group("");

  fs::path eval_ws, eval_policy;
  auto* eval_cmd = app.add_subcommand("eval", "Score a policy on a workspace holdout");
  eval_cmd->add_option("workspace", eval_ws, "Workspace directory")->required();
  eval_cmd->add_option("policy", eval_policy, "Policy JSON")->required()->check(CLI::ExistingFile);

  iv::BenchConfig bench;
  bool svg = false;
  bool continuous = false;
  auto* bench_cmd = app.add_subcommand("cbs-bench", "Stationary 96-scenario CBS benchmark");
  bench_cmd->add_option("--paths", bench.paths, "Demand paths per scenario")->capture_default_str();
  bench_cmd->add_option("--horizon", bench.horizon, "Periods per path")->capture_default_str();
  bench_cmd->add_option("--budget", bench.budget, "Tuning trials per family")->capture_default_str();
  bench_cmd->add_flag("--svg", svg, "Also render SVG charts of the K_p summaries");
  bench_cmd->add_flag("--continuous", continuous, "Tune order quantities on a continuous box");

  TheoryArgs th;
  auto* theory_cmd = app.add_subcommand("theory", "Check the search guarantees numerically");
  theory_cmd->add_option("--trials", th.trials, "Trials per promotion and rolling check")
      ->capture_default_str();
  theory_cmd->add_option("--grid-trials", th.grid_trials, "Trials per concentration grid cell")
      ->capture_default_str();
  theory_cmd->add_option("--coverage-reps", th.coverage_reps, "Coverage replications")
      ->capture_default_str();
  theory_cmd->add_flag("--debug-invert-gate", th.debug_invert_gate)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  g.out = out;

  try {
    if (*gen_cmd) return RunGen(g, gen);
    if (*epoch_cmd) return RunEpochCommand(g, ep);
    if (*eval_cmd) return RunEval(g, eval_ws, eval_policy);
    if (*bench_cmd) {
      bench.integer_quantities = !continuous;
      return RunBench(g, bench, svg);
    }
    if (*theory_cmd) return RunTheory(g, th);
  } catch (const iv::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
