#include "invevolve/proposal.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "httplib.h"
#include "invevolve/errors.h"
#include "invevolve/rng.h"

namespace invevolve {

namespace {

double Round4(double v) { return std::round(v * 1e4) / 1e4; }

std::uint64_t RoundSeed(std::uint64_t seed, int epoch, int round) {
  return DeriveSeed(seed, {static_cast<std::uint64_t>(epoch),
                           static_cast<std::uint64_t>(round)});
}

nlohmann::json BoundDigest(const ConfidenceBound& cb) {
  return {{"mean", Round4(cb.mean)},
          {"lcb", Round4(cb.lcb)},
          {"ucb", Round4(cb.ucb)},
          {"radius", Round4(cb.radius)}};
}

SpaceOptions BoxFor(const ProposalContext& ctx) {
  SpaceOptions o;
  o.mean_demand = ctx.summary.value("demand", nlohmann::json::object()).value("mean", 1.0);
  o.lead_time = ctx.summary.value("lead_time", 0);
  o.history_length = ctx.summary.value("history_length", 7);
  return o;
}

}  // namespace

nlohmann::json DemandSummary(std::span<const double> demands) {
  const double n = static_cast<double>(demands.size());
  double mean = 0.0, zeros = 0.0;
  for (double d : demands) {
    mean += d;
    zeros += d == 0.0;
  }
  mean = demands.empty() ? 0.0 : mean / n;
  double ss = 0.0;
  for (double d : demands) ss += (d - mean) * (d - mean);
  const double sd = demands.empty() ? 0.0 : std::sqrt(ss / n);
  const std::size_t k = std::min<std::size_t>(28, demands.size());
  double slope = 0.0;
  if (k >= 2) {
    const auto tail = demands.last(k);
    const double xm = (static_cast<double>(k) - 1.0) / 2.0;
    double ym = 0.0;
    for (double d : tail) ym += d;
    ym /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sxy += (static_cast<double>(i) - xm) * (tail[i] - ym);
      sxx += (static_cast<double>(i) - xm) * (static_cast<double>(i) - xm);
    }
    slope = sxy / sxx;
  }
  return {{"periods", demands.size()},
          {"mean", Round4(mean)},
          {"cv", mean > 0.0 ? Round4(sd / mean) : 0.0},
          {"zero_ratio", demands.empty() ? 0.0 : Round4(zeros / n)},
          {"trend_28", Round4(slope)}};
}

ProposalContext ContextDigest(const EpochState& state,
                              std::span<const double> history,
                              const SystemConfig& system, int epoch) {
  ProposalContext ctx;
  ctx.epoch = epoch;
  ctx.round = state.round + 1;
  ctx.summary = {{"demand", DemandSummary(history)},
                 {"lead_time", system.lead_time},
                 {"holding_cost", system.holding_cost},
                 {"penalty_cost", system.penalty_cost},
                 {"history_length", static_cast<int>(history.size())}};
  ctx.champion = state.champion;
  ctx.reference = state.reference;
  ctx.pool = state.pool;
  ctx.stats = state.stats;
  ctx.decisions = state.decisions;
  return ctx;
}

nlohmann::json ProposalContext::ToJson() const {
  nlohmann::json pool_json = nlohmann::json::array();
  for (const auto& p : pool) pool_json.push_back(invevolve::ToJson(p));
  nlohmann::json stats_json = nlohmann::json::object();
  for (const auto& [key, cb] : stats) stats_json[key] = BoundDigest(cb);
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& d : decisions) {
    gates.push_back({{"round", d.round},
                     {"candidate", d.candidate ? invevolve::ToJson(*d.candidate)
                                               : nlohmann::json(nullptr)},
                     {"valid", d.valid},
                     {"S", Round4(d.s_score)},
                     {"I", Round4(d.i_score)},
                     {"O", Round4(d.o_score)},
                     {"promoted", d.promoted},
                     {"note", d.note}});
  }
  return {{"epoch", epoch},
          {"round", round},
          {"summary", summary},
          {"champion", invevolve::ToJson(champion)},
          {"reference", invevolve::ToJson(reference)},
          {"pool", std::move(pool_json)},
          {"stats", std::move(stats_json)},
          {"decisions", std::move(gates)}};
}

std::string ProposalContext::ToText() const {
  nlohmann::json j = ToJson();
  std::string text = j.dump();
  int omitted_stats = 0, omitted_decisions = 0;
  while (text.size() > kMaxDigestBytes) {
    if (!j["stats"].empty()) {
      j["stats"].erase(j["stats"].begin());
      ++omitted_stats;
    } else if (!j["decisions"].empty()) {
      j["decisions"].erase(j["decisions"].begin());
      ++omitted_decisions;
    } else if (!j["pool"].empty()) {
      j["pool"].erase(j["pool"].begin());
    } else {
      break;
    }
    j["omitted"] = {{"stats", omitted_stats}, {"decisions", omitted_decisions}};
    text = j.dump();
  }
  return text;
}

// ---------------------------------------------------------------------------

void MutationConfig::Validate() const {
  if (!(switch_probability >= 0.0 && switch_probability <= 1.0)) {
    throw InputError("switch probability must lie in [0,1]");
  }
  if (!(scale_fraction >= 0.0)) throw InputError("mutation scale must be >= 0");
}

MutationProposer::MutationProposer(MutationConfig cfg) : cfg_(cfg) {
  cfg_.Validate();
}

Proposal MutationProposer::Propose(const ProposalContext& ctx) {
  boost::random::mt19937_64 rng(RoundSeed(cfg_.seed, ctx.epoch, ctx.round));
  boost::random::uniform_01<double> unif;
  boost::random::normal_distribution<double> normal;
  const PolicySpec& ch = ctx.champion;
  const SpaceOptions box = BoxFor(ctx);
  Proposal out;

  if (unif(rng) < cfg_.switch_probability) {
    out.rationale = "family switch";
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BaseStock>) {
            out.policy = CappedBaseStock{p.S, Round4(p.S / 2.0)};
          } else if constexpr (std::is_same_v<T, CappedBaseStock>) {
            out.policy = TiltedCbs{p.S, p.r, 0.5};
          } else if constexpr (std::is_same_v<T, TiltedCbs>) {
            if (unif(rng) < 0.5) {
              out.policy = TiltedPic{p.S, p.r_base, p.alpha, 0.75};
            } else {
              out.policy = CappedBaseStock{p.S, p.r_base};
            }
          } else if constexpr (std::is_same_v<T, TiltedPic>) {
            out.policy = TiltedCbs{p.S, p.r_base, p.alpha};
          } else if constexpr (std::is_same_v<T, SmallSBigS>) {
            out.policy = BaseStock{p.S};
          } else {
            const auto space = DefaultSpace(Family::kBaseStock, box);
            out.policy = BaseStock{Round4(space.ranges[0].hi / 2.0)};
          }
        },
        ch.params);
    return out;
  }

  out.rationale = "parameter perturbation";
  const Family family = ch.family();
  const ParamSpace space = DefaultSpace(family, box);
  ParamMap params = ParamsOf(ch);
  for (const auto& r : space.ranges) {
    const double old = params.at(r.name);
    double v = old + cfg_.scale_fraction * (r.hi - r.lo) * normal(rng);
    v = std::clamp(v, r.lo, std::max(r.hi, old));
    if (r.integer) v = std::round(v);
    if (r.open_lo) v = std::max(v, r.lo + kParameterGrid);
    params[r.name] = v;
  }
  out.policy = PolicyFromTrial(family, params);
  return out;
}

ScriptedProposer::ScriptedProposer(std::vector<std::optional<PolicySpec>> sequence)
    : sequence_(std::move(sequence)) {
  if (sequence_.empty()) throw InputError("scripted proposer needs a sequence");
}

Proposal ScriptedProposer::Propose(const ProposalContext& ctx) {
  const auto n = static_cast<int>(sequence_.size());
  const int i = ((std::max(ctx.round, 1) - 1) % n + n) % n;
  Proposal out;
  out.policy = sequence_[static_cast<std::size_t>(i)];
  if (!out.policy) out.error = "scripted failure";
  out.rationale = "scripted";
  return out;
}

SampledProposer::SampledProposer(std::vector<PolicySpec> policies,
                                 std::vector<double> weights, std::uint64_t seed)
    : policies_(std::move(policies)), seed_(seed) {
  if (policies_.empty() || policies_.size() != weights.size()) {
    throw InputError("sampled proposer needs one weight per policy");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("weights must be >= 0");
    total += w;
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw InputError("weights must not all be zero");
  for (double& c : cumulative_) c /= total;
}

Proposal SampledProposer::Propose(const ProposalContext& ctx) {
  boost::random::mt19937_64 rng(RoundSeed(seed_, ctx.epoch, ctx.round));
  const double u = boost::random::uniform_01<double>()(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto i = std::min<std::size_t>(
      static_cast<std::size_t>(it - cumulative_.begin()), policies_.size() - 1);
  Proposal out;
  out.policy = policies_[i];
  out.rationale = "sampled";
  return out;
}

Proposal NullProposer::Propose(const ProposalContext&) {
  Proposal out;
  out.error = "null proposer";
  return out;
}

// ---------------------------------------------------------------------------

ExternalConfig ExternalConfig::FromEnvironment() {
  ExternalConfig cfg;
  if (const char* url = std::getenv("INVEVOLVE_PROPOSER_URL")) cfg.url = url;
  if (const char* token = std::getenv("INVEVOLVE_PROPOSER_TOKEN")) cfg.token = token;
  return cfg;
}

ExternalProposer::ExternalProposer(ExternalConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.timeout_seconds < 1) throw InputError("timeout must be >= 1 s");
}

nlohmann::json ExternalProposer::RequestBody(const ProposalContext& ctx) {
  return {{"context", nlohmann::json::parse(ctx.ToText())},
          {"policy_schema", PolicySchema()},
          {"round", ctx.round}};
}

Proposal ExternalProposer::ParseResponse(int status, const std::string& body) {
  Proposal out;
  if (status < 200 || status >= 300) {
    out.error = "proposer returned HTTP " + std::to_string(status);
    return out;
  }
  try {
    const auto j = nlohmann::json::parse(body);
    if (!j.is_object() || !j.contains("policy")) {
      out.error = "response has no 'policy'";
      return out;
    }
    out.policy = PolicyFromJson(j["policy"]);
    if (j.contains("rationale") && j["rationale"].is_string()) {
      out.rationale = j["rationale"].get<std::string>();
    }
  } catch (const std::exception& e) {
    out.policy.reset();
    out.error = std::string("malformed proposer response: ") + e.what();
  }
  return out;
}

Proposal ExternalProposer::Propose(const ProposalContext& ctx) {
  Proposal out;
  static const std::regex kUrl(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.url, m, kUrl)) {
    out.error = "unsupported proposer URL '" + cfg_.url +
                "' (need http[s]://host[:port]/path)";
    return out;
  }
  const std::string path = m[4].matched ? m[4].str() : "/";
  std::string origin = m[1].str() + "://" + m[2].str();
  if (m[3].matched) origin += ":" + m[3].str();
  httplib::Client client(origin);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  client.set_write_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);
  const auto res =
      client.Post(path, headers, RequestBody(ctx).dump(), "application/json");
  if (!res) {
    out.error = "proposer request failed: " + httplib::to_string(res.error());
    return out;
  }
  return ParseResponse(res->status, res->body);
}

}  // namespace invevolve
