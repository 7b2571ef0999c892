#include "invevolve/workspace.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <boost/tokenizer.hpp>

#include "invevolve/errors.h"
#include "invevolve/io.h"
#include "invevolve/rng.h"
#include "invevolve/tuner.h"
#include "json.hpp"

namespace invevolve {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

thread_local int epoch_depth = 0;

json ReadJson(const fs::path& path) {
  try {
    return json::parse(ReadFileText(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

json RecordsToJson(const std::vector<DayRecord>& days) {
  json arr = json::array();
  for (const auto& d : days) {
    json r = {{"date", d.date}, {"demand", d.demand}, {"features", d.features}};
    if (d.note) r["note"] = *d.note;
    arr.push_back(std::move(r));
  }
  return arr;
}

std::vector<DayRecord> RecordsFromJson(const json& j, const fs::path& path) {
  try {
    if (j.at("schema_version").get<int>() != kWorkspaceSchemaVersion) {
      throw InputError(path.string() + ": unsupported schema version");
    }
    std::vector<DayRecord> out;
    for (const auto& r : j.at("records")) {
      DayRecord d;
      d.date = r.at("date").get<std::string>();
      d.demand = r.at("demand").get<double>();
      d.features = r.at("features").get<std::map<std::string, double>>();
      if (r.contains("note")) d.note = r.at("note").get<std::string>();
      if (!(d.demand >= 0.0)) throw InputError(path.string() + ": negative demand on " + d.date);
      out.push_back(std::move(d));
    }
    return out;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string SequenceDocument(const WorkspaceSlice& s, const std::vector<DayRecord>& days) {
  return json{{"schema_version", kWorkspaceSchemaVersion},
              {"seed_id", s.seed_id},
              {"records", RecordsToJson(days)}}
             .dump(1) +
         "\n";
}

std::string Description(const WorkspaceSlice& s) {
  std::ostringstream md;
  md << "# Inventory workspace " << s.seed_id << " / slice " << s.slice_index << "\n\n"
     << s.description << " (domain: " << s.domain << ").\n\n"
     << "## Cost structure\n\n"
     << "- Holding cost per unit per day: " << s.holding_cost << "\n"
     << "- Lost-sales penalty per unit: " << s.penalty_cost << "\n"
     << "- Lead time: " << s.lead_time << " days\n"
     << "- Unmet demand is lost, not backordered.\n\n"
     << "## Data\n\n"
     << "`data/historical_sequence.json` holds " << s.history.size()
     << " days of demand with date, features and occasional notes";
  if (!s.history.empty()) md << " (" << s.history.front().date << " to " << s.history.back().date << ")";
  md << ". A note marks only the first day of an event; its effect may persist.\n\n"
     << "Features:";
  if (!s.history.empty()) {
    for (const auto& [name, _] : s.history.front().features) md << " `" << name << "`";
  }
  md << "\n\n## Baselines\n\n";
  for (const auto& b : s.baselines) {
    md << "- " << FamilyName(b.policy.family()) << ": `" << CanonicalString(b.policy)
       << "` (history cost " << b.tuned_cost << ")\n";
  }
  return md.str();
}

DayRecord Record(const SeedDataset& ds, int day) {
  DayRecord d;
  d.date = DateString(day);
  d.demand = ds.series.demand[static_cast<std::size_t>(day)];
  for (std::size_t i = 0; i < ds.covariates.names.size(); ++i) {
    d.features[ds.covariates.names[i]] = ds.covariates.columns[i][static_cast<std::size_t>(day)];
  }
  d.note = ds.series.notes[static_cast<std::size_t>(day)];
  return d;
}

}  // namespace

SystemConfig WorkspaceSlice::System() const {
  SystemConfig cfg{lead_time, holding_cost, penalty_cost,
                   std::max(1, static_cast<int>(history.size()))};
  cfg.Validate();
  return cfg;
}

std::vector<double> WorkspaceSlice::HistoryDemand() const {
  std::vector<double> out;
  for (const auto& d : history) out.push_back(d.demand);
  return out;
}

std::vector<double> WorkspaceSlice::EvaluationDemand() const {
  std::vector<double> out;
  for (const auto& d : evaluation) out.push_back(d.demand);
  return out;
}

const BaselineEntry& WorkspaceSlice::BestBaseline() const {
  if (baselines.empty()) throw ConfigError(seed_id + ": workspace has no baselines");
  const BaselineEntry* best = &baselines.front();
  for (const auto& b : baselines) {
    if (b.tuned_cost < best->tuned_cost) best = &b;
  }
  return *best;
}

WorkspaceSlice MakeSlice(const SeedDataset& ds, int start, int slice_index) {
  const int n = static_cast<int>(ds.series.demand.size());
  if (start < 0 || start + kSliceDays > n) {
    throw InputError("slice [" + std::to_string(start) + ", +" + std::to_string(kSliceDays) +
                     ") does not fit in " + std::to_string(n) + " days");
  }
  WorkspaceSlice s;
  s.seed_id = ds.config.id;
  s.domain = ds.config.domain;
  s.description = ds.config.blurb;
  s.demand_family = std::string(DemandFamilyName(ds.config.family));
  s.slice_index = slice_index;
  s.start_index = start;
  for (int r = start; r < start + kHistoryDays; ++r) s.history.push_back(Record(ds, r));
  for (int r = start + kHistoryDays; r < start + kSliceDays; ++r) {
    s.evaluation.push_back(Record(ds, r));
  }
  s.holding_cost = ds.config.holding_cost;
  s.penalty_cost = ds.config.penalty_cost;
  s.lead_time = ds.config.lead_time;
  return s;
}

std::vector<WorkspaceSlice> SliceSeed(const SeedDataset& ds, int n_slices, std::uint64_t seed) {
  std::vector<WorkspaceSlice> out;
  const auto starts =
      SliceStarts(n_slices, static_cast<int>(ds.series.demand.size()), seed);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    out.push_back(MakeSlice(ds, starts[i], static_cast<int>(i)));
  }
  return out;
}

void TuneBaselines(WorkspaceSlice& slice, int budget, std::uint64_t seed) {
  EpochGuard guard;
  const std::vector<std::vector<double>> paths = {slice.HistoryDemand()};
  double mean = 0.0;
  for (double d : paths[0]) mean += d;
  mean /= std::max<std::size_t>(1, paths[0].size());
  SpaceOptions opt;
  opt.mean_demand = mean;
  opt.lead_time = slice.lead_time;
  opt.history_length = static_cast<int>(paths[0].size());
  opt.integer_quantities = slice.demand_family != "continuous_positive";
  slice.baselines.clear();
  int k = 0;
  for (Family f : kBaselineFamilies) {
    const auto r = TuneFamily(f, paths, slice.System(), opt, budget,
                              DeriveSeed(seed, {static_cast<std::uint64_t>(k++)}));
    slice.baselines.push_back({r.policy, r.cost});
  }
}

void EmitWorkspace(const WorkspaceSlice& s, const fs::path& dir) {
  json baselines = json::array();
  for (const auto& b : s.baselines) {
    const std::string file = std::string(FamilySlug(b.policy.family())) + ".json";
    baselines.push_back(file);
    WriteFileAtomic(dir / "baseline_policies" / file,
                json{{"policy", ToJson(b.policy)}, {"tuned_cost", b.tuned_cost}}.dump(2) + "\n");
  }
  const json config = {
      {"schema_version", kWorkspaceSchemaVersion},
      {"seed_id", s.seed_id},
      {"domain", s.domain},
      {"description", s.description},
      {"demand_family", s.demand_family},
      {"slice_index", s.slice_index},
      {"start_index", s.start_index},
      {"history_days", s.history.size()},
      {"evaluation_days", s.evaluation.size()},
      {"holding_cost", s.holding_cost},
      {"penalty_cost", s.penalty_cost},
      {"lead_time", s.lead_time},
      {"baselines", baselines},
  };
  WriteFileAtomic(dir / "config.json", config.dump(2) + "\n");
  WriteFileAtomic(dir / "data" / "historical_sequence.json", SequenceDocument(s, s.history));
  WriteFileAtomic(dir / "data" / "evaluation_sequence.json", SequenceDocument(s, s.evaluation));
  WriteFileAtomic(dir / "problem_description.md", Description(s));
}

WorkspaceSlice LoadWorkspace(const fs::path& dir, LoadPurpose purpose) {
  const fs::path config_path = dir / "config.json";
  const json c = ReadJson(config_path);
  WorkspaceSlice s;
  try {
    if (c.at("schema_version").get<int>() != kWorkspaceSchemaVersion) {
      throw InputError(config_path.string() + ": unsupported schema version");
    }
    s.seed_id = c.at("seed_id").get<std::string>();
    s.domain = c.at("domain").get<std::string>();
    s.description = c.at("description").get<std::string>();
    s.demand_family = c.at("demand_family").get<std::string>();
    s.slice_index = c.at("slice_index").get<int>();
    s.start_index = c.at("start_index").get<int>();
    s.holding_cost = c.at("holding_cost").get<double>();
    s.penalty_cost = c.at("penalty_cost").get<double>();
    s.lead_time = c.at("lead_time").get<int>();
    for (const auto& file : c.at("baselines")) {
      const fs::path p = dir / "baseline_policies" / file.get<std::string>();
      const json b = ReadJson(p);
      try {
        s.baselines.push_back({PolicyFromJson(b.at("policy")), b.at("tuned_cost").get<double>()});
      } catch (const json::exception& e) {
        throw InputError(p.string() + ": " + e.what());
      }
    }
  } catch (const json::exception& e) {
    throw InputError(config_path.string() + ": " + e.what());
  }
  const fs::path hist = dir / "data" / "historical_sequence.json";
  s.history = RecordsFromJson(ReadJson(hist), hist);
  if (s.history.empty()) throw InputError(hist.string() + ": empty history");
  s.System();  // validates costs and lead time
  if (purpose == LoadPurpose::kEvaluation) s.evaluation = LoadEvaluationSequence(dir);
  return s;
}

std::vector<DayRecord> LoadEvaluationSequence(const fs::path& dir) {
  if (EpochGuard::Active()) {
    throw ConfigError("evaluation sequence of " + dir.string() +
                      " is not readable during tuning or epoch runs");
  }
  const fs::path p = dir / "data" / "evaluation_sequence.json";
  return RecordsFromJson(ReadJson(p), p);
}

EpochGuard::EpochGuard() { ++epoch_depth; }
EpochGuard::~EpochGuard() { --epoch_depth; }
bool EpochGuard::Active() { return epoch_depth > 0; }

WorkspaceSlice SliceFromCsv(const fs::path& csv, const CsvImportOptions& o) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::istringstream in(ReadFileText(csv));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tok(line);
      cells.assign(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      throw InputError(csv.string() + ": " + e.what());
    }
    if (header.empty()) {
      header = std::move(cells);
    } else {
      rows.push_back(std::move(cells));
    }
  }
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int date_col = col("date"), demand_col = col("demand"), note_col = col("note");
  if (date_col < 0 || demand_col < 0) {
    throw InputError(csv.string() + ": header needs 'date' and 'demand' columns");
  }
  if (o.start < 0 || o.start + kSliceDays > static_cast<int>(rows.size())) {
    throw InputError(csv.string() + ": need " + std::to_string(kSliceDays) +
                     " rows from row " + std::to_string(o.start) + ", have " +
                     std::to_string(rows.size()));
  }
  WorkspaceSlice s;
  s.seed_id = o.id;
  s.domain = "imported";
  s.description = "Demand series imported from " + csv.filename().string();
  s.demand_family = "imported";
  s.start_index = o.start;
  s.holding_cost = o.holding_cost;
  s.penalty_cost = o.penalty_cost;
  s.lead_time = o.lead_time;
  for (int i = o.start; i < o.start + kSliceDays; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.size() != header.size()) {
      throw InputError(csv.string() + ": row " + std::to_string(i + 2) + " has " +
                       std::to_string(r.size()) + " fields, header has " +
                       std::to_string(header.size()));
    }
    DayRecord d;
    d.date = r[static_cast<std::size_t>(date_col)];
    try {
      d.demand = std::stod(r[static_cast<std::size_t>(demand_col)]);
      for (std::size_t k = 0; k < header.size(); ++k) {
        const int ki = static_cast<int>(k);
        if (ki == date_col || ki == demand_col || ki == note_col || r[k].empty()) continue;
        d.features[header[k]] = std::stod(r[k]);
      }
    } catch (const std::logic_error&) {
      throw InputError(csv.string() + ": non-numeric value on row " + std::to_string(i + 2));
    }
    if (!(d.demand >= 0.0)) throw InputError(csv.string() + ": negative demand on " + d.date);
    if (note_col >= 0 && !r[static_cast<std::size_t>(note_col)].empty()) {
      d.note = r[static_cast<std::size_t>(note_col)];
    }
    (i < o.start + kHistoryDays ? s.history : s.evaluation).push_back(std::move(d));
  }
  s.System();
  return s;
}

}  // namespace invevolve
