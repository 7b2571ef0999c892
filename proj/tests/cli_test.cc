#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void Spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

fs::path Scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("invevolve_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run Cli(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string(INVEVOLVE_CLI_PATH) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

// Relative path -> bytes for every regular file under `root`.
std::map<std::string, std::string> Tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = Slurp(e.path());
  }
  return files;
}

json ReadJson(const fs::path& p) { return json::parse(Slurp(p)); }

// One generated workspace, shared by the epoch and eval cases.
fs::path OneWorkspace(const fs::path& scratch) {
  const auto root = scratch / "ws";
  const auto r = Cli("gen --seeds 1 --slices 1 --out " + root.string(), scratch);
  REQUIRE(r.code == 0);
  const auto m = ReadJson(root / "manifest.json");
  REQUIRE(m["workspaces"].size() == 1);
  return root / m["workspaces"][0].get<std::string>();
}

}  // namespace

TEST_CASE("gen: one seed and slice gives one workspace; reruns are byte-identical") {
  const auto dir = Scratch("gen");
  const auto ws = OneWorkspace(dir);
  for (const char* f : {"config.json", "problem_description.md", "data/historical_sequence.json",
                        "data/evaluation_sequence.json"}) {
    CHECK(fs::exists(ws / f));
  }
  const auto first = Tree(dir / "ws");
  REQUIRE(Cli("gen --seeds 1 --slices 1 --out " + (dir / "again").string(), dir).code == 0);
  CHECK(Tree(dir / "again") == first);
  REQUIRE(Cli("gen --seeds 1 --slices 1 --rng-seed 9 --out " + (dir / "other").string(), dir)
              .code == 0);
  CHECK(Tree(dir / "other") != first);
}

TEST_CASE("gen: validation errors exit 1") {
  const auto dir = Scratch("gen_bad");
  CHECK(Cli("gen --seeds 0 --out " + (dir / "x").string(), dir).code == 1);
  CHECK(Cli("gen --seeds 2 --slices 45 --out " + (dir / "x").string(), dir).code == 1);
  CHECK(Cli("gen --bogus", dir).code == 1);
  CHECK(Cli("", dir).code == 1);
}

TEST_CASE("epoch: J = 0 is rejected; auto xi without calibration is a warned cold start") {
  const auto dir = Scratch("epoch");
  const auto ws = OneWorkspace(dir);
  CHECK(Cli("epoch " + ws.string() + " --J 0 --out " + (dir / "e0").string(), dir).code == 1);

  const auto r = Cli("epoch " + ws.string() + " --J 8 --out " + (dir / "e1").string(), dir);
  REQUIRE(r.code == 0);
  CHECK(r.err.find("cold start") != std::string::npos);
  const auto log = ReadJson(dir / "e1" / "epoch_log.json");
  CHECK(log["xi_budget"]["cold_start"] == true);
  CHECK(log["xi_budget"]["xi"] == 0.0);
  CHECK(log["rounds_played"] == 8);
  CHECK(fs::exists(dir / "e1" / "deployed_policy.json"));

  // Same seed, same bytes.
  REQUIRE(Cli("epoch " + ws.string() + " --J 8 --out " + (dir / "e2").string(), dir).code == 0);
  CHECK(Slurp(dir / "e1" / "epoch_log.json") == Slurp(dir / "e2" / "epoch_log.json"));

  // Calibrated xi: the conservative quantile of past discrepancies.
  Spit(dir / "calib.json", R"({"discrepancies": [0.1, 0.2, 0.3, 0.4, 0.5]})");
  const auto c = Cli("epoch " + ws.string() + " --J 2 --xi-calibration " +
                         (dir / "calib.json").string() + " --out " + (dir / "e3").string(),
                     dir);
  REQUIRE(c.code == 0);
  CHECK(c.err.find("cold start") == std::string::npos);
  CHECK(ReadJson(dir / "e3" / "epoch_log.json")["xi_budget"]["xi"] == doctest::Approx(0.5));

  CHECK(Cli("epoch " + ws.string() + " --xi nope --out " + (dir / "e4").string(), dir).code == 1);
  CHECK(Cli("epoch " + (dir / "missing").string() + " --out " + (dir / "e5").string(), dir).code ==
        3);
}

TEST_CASE("epoch: a scripted planted winner is promoted in round 1 and deployed") {
  const auto dir = Scratch("plant");
  const auto ws = OneWorkspace(dir);
  // The only baseline over-orders every day; the planted winner is the tuned
  // base stock.
  double peak = 0.0;
  for (const auto& r : ReadJson(ws / "data" / "historical_sequence.json")["records"]) {
    peak = std::max(peak, r["demand"].get<double>());
  }
  const auto winner = ReadJson(ws / "baseline_policies" / "base_stock.json")["policy"];
  auto cfg = ReadJson(ws / "config.json");
  cfg["baselines"] = json::array({"constant_order.json"});
  Spit(ws / "config.json", cfg.dump(2));
  Spit(ws / "baseline_policies" / "constant_order.json",
       json{{"policy", {{"family", "ConstantOrder"}, {"params", {{"q", std::ceil(2.0 * peak + 1.0)}}}}},
            {"tuned_cost", 0.0}}
           .dump());
  Spit(dir / "script.json", json::array({winner}).dump());

  const auto r = Cli("epoch " + ws.string() + " --proposer scripted --script " +
                         (dir / "script.json").string() + " --J 5 --out " +
                         (dir / "e").string(),
                     dir);
  REQUIRE(r.code == 0);
  const auto log = ReadJson(dir / "e" / "epoch_log.json");
  CHECK(log["decisions"][0]["promoted"] == true);
  CHECK(ReadJson(dir / "e" / "deployed_policy.json")["policy"] == winner);

  // The inverted gate never promotes the winner.
  const auto inv = Cli("epoch " + ws.string() + " --proposer scripted --script " +
                           (dir / "script.json").string() +
                           " --J 5 --debug-invert-gate --out " + (dir / "inv").string(),
                       dir);
  REQUIRE(inv.code == 0);
  CHECK(ReadJson(dir / "inv" / "epoch_log.json")["decisions"][0]["promoted"] == false);
}

TEST_CASE("eval: best baseline scores zero change and no success; averages are totals / 30") {
  const auto dir = Scratch("eval");
  const auto ws = OneWorkspace(dir);
  const auto r = Cli("eval " + ws.string() + " " + (ws / "baseline_policies" / "base_stock.json").string() +
                         " --out " + (dir / "ev").string(),
                     dir);
  REQUIRE(r.code == 0);
  const auto rep = ReadJson(dir / "ev" / "eval.json");
  for (const auto& row : rep["baselines"]) {
    CHECK(row["average_cost"].get<double>() ==
          doctest::Approx(row["total_cost"].get<double>() / 30.0).epsilon(1e-12));
  }
  // Score the holdout winner itself.
  const std::string best = rep["best_baseline"];
  json best_policy;
  for (const auto& row : rep["baselines"]) {
    if (row["name"] == best) best_policy = row["policy"];
  }
  Spit(dir / "best.json", best_policy.dump());
  REQUIRE(Cli("eval " + ws.string() + " " + (dir / "best.json").string() + " --out " +
                  (dir / "ev2").string(),
              dir)
              .code == 0);
  const auto self = ReadJson(dir / "ev2" / "eval.json");
  CHECK(self["candidate"]["change_vs_best_baseline_pct"].get<double>() == doctest::Approx(0.0));
  CHECK(self["success"] == false);

  Spit(dir / "bad.json", R"({"family": "BaseStock", "params": {"S": -3}})");
  CHECK(Cli("eval " + ws.string() + " " + (dir / "bad.json").string() + " --out " +
                (dir / "ev3").string(),
            dir)
            .code == 1);
  Spit(dir / "broken.json", "{not json");
  CHECK(Cli("eval " + ws.string() + " " + (dir / "broken.json").string() + " --out " +
                (dir / "ev4").string(),
            dir)
            .code == 1);
}

TEST_CASE("cbs-bench: small grid writes every table and ignores the worker count") {
  const auto dir = Scratch("bench");
  const std::string common = "cbs-bench --horizon 150 --budget 6 --svg";
  REQUIRE(Cli(common + " --jobs 1 --out " + (dir / "a").string(), dir).code == 0);
  REQUIRE(Cli(common + " --jobs 3 --out " + (dir / "b").string(), dir).code == 0);
  for (const char* f : {"scenarios.csv", "scenarios.md", "dominance.csv", "wtl.csv",
                        "wtl_by_distribution.csv", "kp_lead_time.csv", "kp_ratio.csv",
                        "kp_heatmap.svg", "summary.md"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  CHECK(Tree(dir / "a") == Tree(dir / "b"));
  // 96 scenario rows after the header.
  const std::string csv = Slurp(dir / "a" / "scenarios.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 97);
}

TEST_CASE("theory: a tiny run passes; the inverted gate exits 2") {
  const auto dir = Scratch("theory");
  const auto ok = Cli("theory --trials 1 --grid-trials 1 --coverage-reps 20 --out " +
                          (dir / "t").string(),
                      dir);
  CHECK(ok.code == 0);
  CHECK(ReadJson(dir / "t" / "guarantees.json")["all_hold"] == true);
  const auto bad = Cli("theory --trials 150 --grid-trials 1 --coverage-reps 20 "
                       "--debug-invert-gate --out " +
                           (dir / "u").string(),
                       dir);
  CHECK(bad.code == 2);
  CHECK(ReadJson(dir / "u" / "guarantees.json")["all_hold"] == false);
}
