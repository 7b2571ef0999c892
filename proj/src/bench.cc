#include "invevolve/bench.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "invevolve/errors.h"
#include "invevolve/io.h"
#include "invevolve/parallel.h"
#include "invevolve/rng.h"
#include "invevolve/tuner.h"

namespace invevolve {

namespace {

constexpr double kTieBand = 0.02;

std::string Fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string RatioLabel(double r) { return Fmt(r, 0); }

}  // namespace

std::string Scenario::Id() const {
  return std::string(StationarySlug(distribution)) + "_L" + std::to_string(lead_time) + "_p" +
         RatioLabel(penalty);
}

std::vector<Scenario> ScenarioGrid(std::uint64_t seed, int horizon, int budget, int paths) {
  std::vector<Scenario> out;
  for (Stationary d : kAllStationary) {
    for (int lead : kBenchLeadTimes) {
      for (double ratio : kBenchRatios) {
        Scenario s;
        s.distribution = d;
        s.lead_time = lead;
        s.penalty = ratio;
        s.horizon = horizon;
        s.budget = budget;
        s.paths = paths;
        s.index = static_cast<int>(out.size());
        s.seed = DeriveSeed(seed, {0xBE7C, static_cast<std::uint64_t>(s.index)});
        out.push_back(s);
      }
    }
  }
  return out;
}

Verdict Classify(double cost, double cbs_cost) {
  if (cost < (1.0 - kTieBand) * cbs_cost) return Verdict::kWin;
  if (cost > (1.0 + kTieBand) * cbs_cost) return Verdict::kLoss;
  return Verdict::kTie;
}

char VerdictLetter(Verdict v) {
  switch (v) {
    case Verdict::kWin: return 'W';
    case Verdict::kTie: return 'T';
    case Verdict::kLoss: return 'L';
  }
  return '?';
}

const FamilyOutcome& ScenarioResult::Get(Family family) const {
  for (const auto& o : outcomes) {
    if (o.family == family) return o;
  }
  throw InputError("scenario " + scenario.Id() + " has no result for " +
                   std::string(FamilyName(family)));
}

double ScenarioResult::RelativeChange(Family family) const {
  const double cbs = Get(Family::kCappedBaseStock).cost;
  return 100.0 * (Get(family).cost / cbs - 1.0);
}

void BenchConfig::Validate() const {
  if (horizon < 1) throw InputError("horizon must be >= 1");
  if (budget < 1) throw InputError("tuner budget must be >= 1");
  if (paths < 1) throw InputError("paths must be >= 1");
  if (jobs < 0) throw InputError("jobs must be >= 0");
}

ScenarioResult RunScenario(const Scenario& s, bool integer_quantities, std::uint64_t tuner_seed) {
  std::vector<std::vector<double>> paths;
  double total = 0.0, count = 0.0;
  for (int k = 0; k < s.paths; ++k) {
    paths.push_back(SampleStationary(s.distribution, s.horizon,
                                     DeriveSeed(s.seed, {static_cast<std::uint64_t>(k)})));
    for (double d : paths.back()) total += d;
    count += static_cast<double>(s.horizon);
  }
  const SystemConfig cfg{s.lead_time, 1.0, s.penalty, s.horizon};
  SpaceOptions opt;
  opt.mean_demand = total / count;
  opt.lead_time = s.lead_time;
  opt.history_length = s.horizon;
  opt.integer_quantities = integer_quantities;

  ScenarioResult out;
  out.scenario = s;
  std::uint64_t k = 0;
  for (Family f : kAllFamilies) {
    const auto r = TuneFamily(f, paths, cfg, opt, s.budget, DeriveSeed(tuner_seed, {k++}));
    out.outcomes.push_back({f, r.policy, r.cost});
  }
  return out;
}

std::vector<ScenarioResult> RunCbsBench(const BenchConfig& c) {
  c.Validate();
  const auto grid = ScenarioGrid(c.seed, c.horizon, c.budget, c.paths);
  std::vector<ScenarioResult> out(grid.size());
  ParallelFor(static_cast<int>(grid.size()), c.jobs, [&](int i) {
    out[i] = RunScenario(grid[i], c.integer_quantities,
                         DeriveSeed(c.seed, {0x7E4E, static_cast<std::uint64_t>(i)}));
  });
  return out;
}

double WtlCounts::BeatOrTie() const {
  return Total() == 0 ? 0.0 : static_cast<double>(win + tie) / Total();
}

namespace {

// Tuned results are not canonicalized, so K_p is always present.
double TunedKp(const FamilyOutcome& pic) { return ParamsOf(pic.policy).at("K_p"); }

void Tally(WtlCounts& w, Verdict v, double change) {
  w.mean_change += change;  // sum until finalized
  switch (v) {
    case Verdict::kWin: ++w.win; break;
    case Verdict::kTie: ++w.tie; break;
    case Verdict::kLoss: ++w.loss; break;
  }
}

void Finalize(WtlCounts& w) {
  if (w.Total() > 0) w.mean_change /= w.Total();
}

}  // namespace

BenchSummary Summarize(const std::vector<ScenarioResult>& results) {
  BenchSummary s;
  s.scenarios = static_cast<int>(results.size());
  for (Family f : kBaselineFamilies) s.lowest[f] = 0;
  std::map<int, std::pair<double, int>> by_lead;
  std::map<double, std::pair<double, int>> by_ratio;
  std::map<std::pair<int, double>, std::pair<double, int>> grid;
  for (const auto& r : results) {
    double best = INFINITY;
    for (Family f : kBaselineFamilies) best = std::min(best, r.Get(f).cost);
    for (Family f : kBaselineFamilies) {
      if (r.Get(f).cost <= best * (1.0 + 1e-12)) ++s.lowest[f];
    }
    const double cbs = r.Get(Family::kCappedBaseStock).cost;
    for (Family f : {Family::kTiltedCbs, Family::kTiltedPic}) {
      const Verdict v = Classify(r.Get(f).cost, cbs);
      const double change = r.RelativeChange(f);
      Tally(s.aggregate[f], v, change);
      Tally(s.by_distribution[f][r.scenario.distribution], v, change);
    }
    const double kp = TunedKp(r.Get(Family::kTiltedPic));
    auto add = [kp](std::pair<double, int>& acc) {
      acc.first += kp;
      ++acc.second;
    };
    add(by_lead[r.scenario.lead_time]);
    add(by_ratio[r.scenario.penalty]);
    add(grid[{r.scenario.lead_time, r.scenario.penalty}]);
  }
  s.cbs_lowest = s.lowest[Family::kCappedBaseStock];
  for (auto& [f, w] : s.aggregate) Finalize(w);
  for (auto& [f, m] : s.by_distribution) {
    for (auto& [d, w] : m) Finalize(w);
  }
  for (const auto& [k, acc] : by_lead) s.kp_by_lead_time[k] = acc.first / acc.second;
  for (const auto& [k, acc] : by_ratio) s.kp_by_ratio[k] = acc.first / acc.second;
  for (const auto& [k, acc] : grid) s.kp_grid[k] = acc.first / acc.second;
  return s;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string Csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }

  std::string Markdown() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      out << "|";
      for (const auto& c : cells) out << " " << c << " |";
      out << "\n";
    };
    line(header);
    out << "|";
    for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& r : rows) line(r);
    return out.str();
  }
};

Table DominanceTable(const BenchSummary& s) {
  Table t{{"baseline", "lowest_cost_scenarios", "share"}, {}};
  for (Family f : kBaselineFamilies) {
    const int n = s.lowest.at(f);
    t.rows.push_back({std::string(FamilyName(f)), std::to_string(n),
                      Fmt(s.scenarios ? 100.0 * n / s.scenarios : 0.0, 1) + "%"});
  }
  return t;
}

Table WtlTable(const BenchSummary& s) {
  Table t{{"policy", "W", "T", "L", "beat_or_tie", "mean_change_pct"}, {}};
  for (const auto& [f, w] : s.aggregate) {
    t.rows.push_back({std::string(FamilyName(f)), std::to_string(w.win), std::to_string(w.tie),
                      std::to_string(w.loss), Fmt(100.0 * w.BeatOrTie(), 1) + "%",
                      Fmt(w.mean_change, 3)});
  }
  return t;
}

Table DistributionTable(const BenchSummary& s) {
  Table t{{"distribution", "policy", "W", "T", "L", "mean_change_pct"}, {}};
  for (Stationary d : kAllStationary) {
    for (const auto& [f, m] : s.by_distribution) {
      const auto it = m.find(d);
      if (it == m.end()) continue;
      const auto& w = it->second;
      t.rows.push_back({std::string(StationaryName(d)), std::string(FamilyName(f)),
                        std::to_string(w.win), std::to_string(w.tie), std::to_string(w.loss),
                        Fmt(w.mean_change, 3)});
    }
  }
  return t;
}

Table ScenarioTable(const std::vector<ScenarioResult>& results) {
  Table t;
  t.header = {"scenario", "distribution", "lead_time", "penalty"};
  for (Family f : kAllFamilies) t.header.push_back(std::string(FamilySlug(f)) + "_cost");
  t.header.insert(t.header.end(), {"tilted_cbs_change_pct", "tilted_cbs_verdict",
                                   "tilted_pic_change_pct", "tilted_pic_verdict", "tilted_pic_kp",
                                   "cbs_policy", "tilted_pic_policy"});
  for (const auto& r : results) {
    std::vector<std::string> row = {r.scenario.Id(), std::string(StationarySlug(r.scenario.distribution)),
                                    std::to_string(r.scenario.lead_time), RatioLabel(r.scenario.penalty)};
    for (Family f : kAllFamilies) row.push_back(Fmt(r.Get(f).cost));
    const double cbs = r.Get(Family::kCappedBaseStock).cost;
    for (Family f : {Family::kTiltedCbs, Family::kTiltedPic}) {
      row.push_back(Fmt(r.RelativeChange(f), 4));
      row.push_back(std::string(1, VerdictLetter(Classify(r.Get(f).cost, cbs))));
    }
    row.push_back(Fmt(TunedKp(r.Get(Family::kTiltedPic)), 4));
    row.push_back("\"" + CanonicalString(r.Get(Family::kCappedBaseStock).policy) + "\"");
    row.push_back("\"" + CanonicalString(r.Get(Family::kTiltedPic).policy) + "\"");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table KpLeadTable(const BenchSummary& s) {
  Table t{{"lead_time", "mean_kp"}, {}};
  for (const auto& [l, kp] : s.kp_by_lead_time) t.rows.push_back({std::to_string(l), Fmt(kp, 4)});
  return t;
}

Table KpRatioTable(const BenchSummary& s) {
  Table t{{"penalty_ratio", "mean_kp"}, {}};
  for (const auto& [r, kp] : s.kp_by_ratio) t.rows.push_back({RatioLabel(r), Fmt(kp, 4)});
  return t;
}

Table KpGridTable(const BenchSummary& s) {
  Table t{{"lead_time", "penalty_ratio", "mean_kp"}, {}};
  for (const auto& [k, kp] : s.kp_grid) {
    t.rows.push_back({std::to_string(k.first), RatioLabel(k.second), Fmt(kp, 4)});
  }
  return t;
}

std::string LineChartSvg(const std::string& title, const std::string& xlabel,
                         const std::vector<std::string>& xs, const std::vector<double>& ys) {
  constexpr int kW = 420, kH = 280, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  double lo = *std::min_element(ys.begin(), ys.end());
  double hi = *std::max_element(ys.begin(), ys.end());
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](std::size_t i) {
    return kLeft + (xs.size() > 1 ? (kW - kLeft - kRight) * static_cast<double>(i) / (xs.size() - 1)
                                  : (kW - kLeft - kRight) / 2.0);
  };
  auto py = [&](double y) { return kTop + (kH - kTop - kBottom) * (hi - y) / (hi - lo); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight
      << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kH - kBottom << "\" stroke=\"black\"/>\n";
  for (double tick : {lo + pad, 0.5 * (lo + hi), hi - pad}) {
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << Fmt(py(tick) + 4, 1)
        << "\" text-anchor=\"end\">" << Fmt(tick, 3) << "</text>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) svg << (i ? " " : "") << Fmt(px(i), 1) << "," << Fmt(py(ys[i]), 1);
  svg << "\"/>\n";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    svg << "<circle cx=\"" << Fmt(px(i), 1) << "\" cy=\"" << Fmt(py(ys[i]), 1)
        << "\" r=\"3\" fill=\"steelblue\"/>\n"
        << "<text x=\"" << Fmt(px(i), 1) << "\" y=\"" << kH - kBottom + 18
        << "\" text-anchor=\"middle\">" << xs[i] << "</text>\n";
  }
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n</svg>\n";
  return svg.str();
}

std::string HeatmapSvg(const BenchSummary& s) {
  constexpr int kCell = 70, kLeft = 70, kTop = 50;
  const int cols = static_cast<int>(std::size(kBenchRatios));
  const int rows = static_cast<int>(std::size(kBenchLeadTimes));
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [k, v] : s.kp_grid) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + cols * kCell + 20
      << "\" height=\"" << kTop + rows * kCell + 40
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<text x=\"" << kLeft << "\" y=\"20\">Tuned K_p by lead time (rows) and p/h (columns)</text>\n";
  for (int j = 0; j < cols; ++j) {
    svg << "<text x=\"" << kLeft + j * kCell + kCell / 2 << "\" y=\"" << kTop - 8
        << "\" text-anchor=\"middle\">p/h=" << RatioLabel(kBenchRatios[j]) << "</text>\n";
  }
  for (int i = 0; i < rows; ++i) {
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << kTop + i * kCell + kCell / 2 + 4
        << "\" text-anchor=\"end\">L=" << kBenchLeadTimes[i] << "</text>\n";
    for (int j = 0; j < cols; ++j) {
      const auto it = s.kp_grid.find({kBenchLeadTimes[i], kBenchRatios[j]});
      if (it == s.kp_grid.end()) continue;
      const double t = hi > lo ? (it->second - lo) / (hi - lo) : 0.5;
      const int shade = static_cast<int>(std::lround(230 - 170 * t));
      svg << "<rect x=\"" << kLeft + j * kCell << "\" y=\"" << kTop + i * kCell << "\" width=\""
          << kCell << "\" height=\"" << kCell << "\" fill=\"rgb(" << shade << "," << shade
          << ",255)\" stroke=\"white\"/>\n"
          << "<text x=\"" << kLeft + j * kCell + kCell / 2 << "\" y=\""
          << kTop + i * kCell + kCell / 2 + 4 << "\" text-anchor=\"middle\">"
          << Fmt(it->second, 3) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::string BenchMarkdown(const BenchSummary& s) {
  std::ostringstream md;
  md << "## Lowest-cost baseline (" << s.scenarios << " scenarios)\n\n"
     << DominanceTable(s).Markdown() << "\n## W/T/L against tuned CBS (band 2%)\n\n"
     << WtlTable(s).Markdown() << "\n## W/T/L by distribution\n\n"
     << DistributionTable(s).Markdown() << "\n## Tuned K_p\n\n"
     << KpLeadTable(s).Markdown() << "\n"
     << KpRatioTable(s).Markdown();
  return md.str();
}

std::vector<std::string> WriteBenchTables(const std::vector<ScenarioResult>& results,
                                          const BenchSummary& s,
                                          const std::filesystem::path& dir, bool svg) {
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    WriteFileAtomic(dir / name, content);
    written.push_back(name);
  };
  const std::pair<const char*, Table> tables[] = {
      {"scenarios", ScenarioTable(results)},   {"dominance", DominanceTable(s)},
      {"wtl", WtlTable(s)},                    {"wtl_by_distribution", DistributionTable(s)},
      {"kp_lead_time", KpLeadTable(s)},        {"kp_ratio", KpRatioTable(s)},
      {"kp_grid", KpGridTable(s)}};
  for (const auto& [name, table] : tables) {
    put(std::string(name) + ".csv", table.Csv());
    put(std::string(name) + ".md", table.Markdown());
  }
  put("summary.md", BenchMarkdown(s));
  if (svg) {
    std::vector<std::string> xs;
    std::vector<double> ys;
    for (const auto& [l, kp] : s.kp_by_lead_time) {
      xs.push_back(std::to_string(l));
      ys.push_back(kp);
    }
    if (!ys.empty()) put("kp_lead_time.svg", LineChartSvg("Mean tuned K_p", "lead time L", xs, ys));
    xs.clear();
    ys.clear();
    for (const auto& [r, kp] : s.kp_by_ratio) {
      xs.push_back(RatioLabel(r));
      ys.push_back(kp);
    }
    if (!ys.empty()) put("kp_ratio.svg", LineChartSvg("Mean tuned K_p", "p/h", xs, ys));
    if (!s.kp_grid.empty()) put("kp_heatmap.svg", HeatmapSvg(s));
  }
  return written;
}

}  // namespace invevolve
