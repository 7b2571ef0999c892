#include "invevolve/engine.h"

#include <algorithm>
#include <cmath>

#include "invevolve/errors.h"
#include "invevolve/proposal.h"

namespace invevolve {

namespace {

bool SamePolicy(const PolicySpec& a, const PolicySpec& b) {
  return CanonicalString(a) == CanonicalString(b);
}

nlohmann::json PolicyList(std::span<const PolicySpec> policies) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : policies) out.push_back(ToJson(p));
  return out;
}

std::size_t PoolIndex(const EpochState& state, const PolicySpec& p) {
  for (std::size_t i = 0; i < state.pool.size(); ++i) {
    if (SamePolicy(state.pool[i], p)) return i;
  }
  return state.pool.size();
}

// argmax UCB(.|ref) over `candidates`, ties by pool order then canonical
// string.
PolicySpec SelectByUcb(const EpochState& state,
                       std::span<const PolicySpec> candidates) {
  const PolicySpec* best = nullptr;
  double best_ucb = 0.0;
  std::size_t best_index = 0;
  for (const auto& p : candidates) {
    const double ucb = state.Stat(p, state.reference)->ucb;
    const std::size_t index = PoolIndex(state, p);
    bool better = best == nullptr || ucb > best_ucb;
    if (!better && ucb == best_ucb) {
      better = index < best_index ||
               (index == best_index && CanonicalString(p) < CanonicalString(*best));
    }
    if (better) {
      best = &p;
      best_ucb = ucb;
      best_index = index;
    }
  }
  return *best;
}

bool Feasible(const ConfidenceBound& vs_ref, const EpochConfig& cfg) {
  const bool ok = vs_ref.lcb >= cfg.xi;
  return cfg.debug_invert_gate ? !ok : ok;
}

std::vector<PolicySpec> FeasibleSet(const EpochState& state,
                                    const EpochConfig& cfg) {
  std::vector<PolicySpec> out;
  for (const auto& p : state.pool) {
    if (Feasible(*state.Stat(p, state.reference), cfg)) out.push_back(p);
  }
  return out;
}

bool NeedsEvaluation(const EpochState& state, const PolicySpec& cand,
                     const PolicySpec& cmp) {
  return !SamePolicy(cand, cmp) && state.Stat(cand, cmp) == nullptr;
}

const ConfidenceBound& Evaluate(EpochState& state, const PolicySpec& cand,
                                const PolicySpec& cmp, PairEvaluator& evaluator,
                                const EpochConfig& cfg) {
  const std::string key = PairKey(cand, cmp);
  if (auto it = state.stats.find(key); it != state.stats.end()) return it->second;
  ConfidenceBound cb;
  cb.method = state.method;
  if (!SamePolicy(cand, cmp)) {
    if (state.evaluations_used >= state.budget) {
      throw BudgetError("evaluation budget N_t = " + std::to_string(state.budget) +
                        " exhausted");
    }
    GainSamples g{cand, cmp, evaluator.Gains(cand, cmp), cfg.gain_bound};
    cb = ComputeConfidenceBound(g, state.budget, cfg.delta, state.method,
                                evaluator.system().lead_time);
    ++state.evaluations_used;
  }
  return state.stats.emplace(key, cb).first->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReplayEvaluator

ReplayEvaluator::ReplayEvaluator(std::vector<double> history,
                                 const SystemConfig& system, ReplayOptions options)
    : history_(std::move(history)), system_(system), options_(options) {
  system_.Validate();
  if (history_.empty()) throw InputError("replay history must be non-empty");
  system_.horizon = static_cast<int>(history_.size());
  if (options_.mode == ReplayMode::kSubWindows) {
    if (options_.subwindow_length < 1 || options_.subwindow_count < 1 ||
        options_.subwindow_length > static_cast<int>(history_.size())) {
      throw InputError("sub-windows must fit inside the replay history");
    }
  }
}

const std::vector<double>& ReplayEvaluator::SampleCosts(const PolicySpec& policy) {
  const PolicySpec canonical = Canonicalize(policy);
  const std::string key = CanonicalString(canonical);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::vector<double> costs;
  if (options_.mode == ReplayMode::kDaily) {
    const SimResult r = Simulate(canonical, history_, {}, system_,
                                 InventoryState::Empty(system_.lead_time));
    costs.reserve(r.per_period.size());
    for (const auto& rec : r.per_period) costs.push_back(rec.cost);
  } else {
    const int n = static_cast<int>(history_.size());
    const int len = options_.subwindow_length;
    const int m = options_.subwindow_count;
    const int stride = m > 1 ? (n - len) / (m - 1) : 0;
    const std::span<const double> all(history_);
    for (int i = 0; i < m; ++i) {
      SimOptions opt;
      opt.history_prefix = all.first(static_cast<std::size_t>(i * stride));
      costs.push_back(SimulateAverageCost(
          canonical, all.subspan(static_cast<std::size_t>(i * stride), len),
          system_, InventoryState::Empty(system_.lead_time), opt));
    }
  }
  return cache_.emplace(key, std::move(costs)).first->second;
}

double ReplayEvaluator::AverageCost(const PolicySpec& policy) {
  const auto& c = SampleCosts(policy);
  double total = 0.0;
  for (double v : c) total += v;
  return total / static_cast<double>(c.size());
}

std::vector<double> ReplayEvaluator::Gains(const PolicySpec& candidate,
                                           const PolicySpec& comparator) {
  const std::vector<double> cand = SampleCosts(candidate);
  const std::vector<double>& cmp = SampleCosts(comparator);
  std::vector<double> z(cand.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = cmp[i] - cand[i];
  return z;
}

// ---------------------------------------------------------------------------
// Config and log records

void EpochConfig::Validate() const {
  if (rounds < 1) throw InputError("J must be >= 1");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0,1)");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw InputError("xi must be >= 0");
  if (gain_bound && !(*gain_bound > 0.0)) {
    throw InputError("gain bound must be > 0");
  }
}

nlohmann::json EpochConfig::ToJson() const {
  nlohmann::json j = {{"J", rounds},
                      {"epsilon", epsilon},
                      {"delta", delta},
                      {"xi", xi},
                      {"seed", seed},
                      {"debug_invert_gate", debug_invert_gate}};
  j["method"] = method ? nlohmann::json(std::string(CertMethodName(*method)))
                       : nlohmann::json("default");
  j["gain_bound"] = gain_bound ? nlohmann::json(*gain_bound) : nlohmann::json(nullptr);
  if (xi_budget) j["xi_budget"] = xi_budget->ToJson();
  return j;
}

nlohmann::json GateDecision::ToJson() const {
  return {{"round", round},
          {"candidate", candidate ? invevolve::ToJson(*candidate) : nlohmann::json(nullptr)},
          {"valid", valid},
          {"violations", violations},
          {"S", s_score},
          {"I", i_score},
          {"O", o_score},
          {"safety_pass", safety_pass},
          {"improvement_pass", improvement_pass},
          {"promoted", promoted},
          {"new_evaluations", new_evaluations},
          {"note", note}};
}

std::string PairKey(const PolicySpec& candidate, const PolicySpec& comparator) {
  return CanonicalString(Canonicalize(candidate)) + "|" +
         CanonicalString(Canonicalize(comparator));
}

bool EpochState::InPool(const PolicySpec& canonical) const {
  return PoolIndex(*this, canonical) < pool.size();
}

const ConfidenceBound* EpochState::Stat(const PolicySpec& candidate,
                                        const PolicySpec& comparator) const {
  auto it = stats.find(PairKey(candidate, comparator));
  return it == stats.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Loop

EpochState InitEpoch(std::span<const PolicySpec> baselines,
                     const std::optional<PolicySpec>& incumbent,
                     const PolicySpec& reference, PairEvaluator& evaluator,
                     const EpochConfig& cfg) {
  cfg.Validate();
  EpochState state;
  state.reference = Canonicalize(reference);
  auto admit = [&](const PolicySpec& p, const char* what) {
    const PolicySpec c = Canonicalize(p);
    const auto report = CheckValidity(c, evaluator.system());
    if (!report.valid) {
      throw InputError(std::string(what) + " " + CanonicalString(c) +
                       " is not structurally valid: " + report.violations.front());
    }
    if (!state.InPool(c)) state.pool.push_back(c);
  };
  for (const auto& b : baselines) admit(b, "baseline");
  if (!state.InPool(state.reference)) {
    throw ConfigError("reference policy " + CanonicalString(state.reference) +
                      " is not among the baselines");
  }
  if (incumbent) admit(*incumbent, "incumbent");

  state.budget = EvaluationBudget(static_cast<int>(state.pool.size()), cfg.rounds);
  state.method = cfg.method.value_or(DefaultCertMethod(evaluator.window_days()));
  for (const auto& p : state.pool) {
    Evaluate(state, p, state.reference, evaluator, cfg);
  }
  state.initial_feasible = FeasibleSet(state, cfg);
  std::vector<PolicySpec> contenders = state.initial_feasible;
  if (std::none_of(contenders.begin(), contenders.end(), [&](const PolicySpec& p) {
        return SamePolicy(p, state.reference);
      })) {
    contenders.push_back(state.reference);
  }
  state.champion = SelectByUcb(state, contenders);
  state.champion_trajectory.push_back(state.champion);
  return state;
}

GateDecision RunRound(EpochState& state, const PolicySpec& candidate,
                      PairEvaluator& evaluator, const EpochConfig& cfg) {
  if (state.round >= cfg.rounds) {
    throw InputError("all " + std::to_string(cfg.rounds) + " rounds already played");
  }
  GateDecision d;
  d.round = state.round + 1;
  const PolicySpec c = Canonicalize(candidate);
  d.candidate = c;
  const auto report = CheckValidity(c, evaluator.system());
  if (!report.valid) {
    d.violations = report.violations;
    d.note = "invalid candidate";
    state.round = d.round;
    state.decisions.push_back(d);
    return d;
  }
  d.valid = true;

  int needed = 0;
  needed += NeedsEvaluation(state, c, state.reference);
  if (!SamePolicy(state.champion, state.reference)) {
    needed += NeedsEvaluation(state, c, state.champion);
  }
  if (state.evaluations_used + needed > state.budget) {
    throw BudgetError("round " + std::to_string(d.round) + " needs " +
                      std::to_string(needed) + " evaluations but only " +
                      std::to_string(state.budget - state.evaluations_used) +
                      " remain");
  }
  state.round = d.round;
  if (!state.InPool(c)) state.pool.push_back(c);

  const int before = state.evaluations_used;
  const ConfidenceBound vs_ref = Evaluate(state, c, state.reference, evaluator, cfg);
  const ConfidenceBound vs_ch = Evaluate(state, c, state.champion, evaluator, cfg);
  d.new_evaluations = state.evaluations_used - before;
  d.s_score = vs_ref.lcb;
  d.i_score = vs_ch.lcb;
  d.o_score = vs_ch.ucb;
  d.safety_pass = d.s_score >= cfg.xi;
  d.improvement_pass = d.i_score >= cfg.epsilon + cfg.xi;
  d.promoted = d.safety_pass && d.improvement_pass;
  if (cfg.debug_invert_gate) d.promoted = !d.promoted;
  if (d.promoted) {
    state.champion = c;
    state.champion_trajectory.push_back(c);
  }
  state.decisions.push_back(d);
  return d;
}

GateDecision SkipRound(EpochState& state, const EpochConfig& cfg,
                       const std::string& reason) {
  if (state.round >= cfg.rounds) {
    throw InputError("all " + std::to_string(cfg.rounds) + " rounds already played");
  }
  GateDecision d;
  d.round = ++state.round;
  d.note = "proposal failed: " + reason;
  state.decisions.push_back(d);
  return d;
}

Deployment Deploy(const EpochState& state, const EpochConfig& cfg) {
  Deployment out;
  out.feasible = FeasibleSet(state, cfg);
  if (out.feasible.empty()) {
    out.policy = state.reference;
  } else {
    out.policy = SelectByUcb(state, out.feasible);
    out.from_feasible = true;
  }
  return out;
}

nlohmann::json BuildEpochLog(const EpochState& state, const Deployment& deployment,
                             const EpochConfig& cfg) {
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : state.decisions) decisions.push_back(d.ToJson());
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [key, cb] : state.stats) stats[key] = cb.ToJson();
  return {{"schema_version", kEpochLogSchemaVersion},
          {"config", cfg.ToJson()},
          {"method", std::string(CertMethodName(state.method))},
          {"budget", state.budget},
          {"evaluations_used", state.evaluations_used},
          {"rounds_played", state.round},
          {"reference", ToJson(state.reference)},
          {"pool", PolicyList(state.pool)},
          {"initial_feasible", PolicyList(state.initial_feasible)},
          {"champion_trajectory", PolicyList(state.champion_trajectory)},
          {"decisions", std::move(decisions)},
          {"stats", std::move(stats)},
          {"final_feasible", PolicyList(deployment.feasible)},
          {"deployed", ToJson(deployment.policy)},
          {"deployment_path",
           deployment.from_feasible ? "feasible" : "fallback_reference"}};
}

EpochResult RunEpoch(PairEvaluator& evaluator,
                     std::span<const PolicySpec> baselines,
                     const std::optional<PolicySpec>& incumbent,
                     const PolicySpec& reference, ProposalSource& proposer,
                     const EpochConfig& cfg, int epoch) {
  EpochState state = InitEpoch(baselines, incumbent, reference, evaluator, cfg);
  while (state.round < cfg.rounds) {
    const ProposalContext ctx =
        ContextDigest(state, evaluator.history(), evaluator.system(), epoch);
    Proposal proposal;
    try {
      proposal = proposer.Propose(ctx);
    } catch (const std::exception& e) {
      proposal.policy.reset();
      proposal.error = e.what();
    }
    if (proposal.policy) {
      RunRound(state, *proposal.policy, evaluator, cfg);
    } else {
      SkipRound(state, cfg, proposal.error.empty() ? "no policy" : proposal.error);
    }
  }
  const Deployment deployment = Deploy(state, cfg);
  EpochResult result{deployment.policy, BuildEpochLog(state, deployment, cfg),
                     std::move(state)};
  return result;
}

std::vector<EpochResult> IterateRefinement(PairEvaluator& evaluator,
                                           std::vector<PolicySpec> baselines,
                                           const PolicySpec& reference,
                                           ProposalSource& proposer,
                                           const EpochConfig& cfg, int runs) {
  if (runs < 1) throw InputError("refinement runs must be >= 1");
  std::vector<EpochResult> out;
  for (int r = 0; r < runs; ++r) {
    out.push_back(RunEpoch(evaluator, baselines, std::nullopt, reference, proposer,
                           cfg, r));
    const PolicySpec& winner = out.back().deployed;
    if (std::none_of(baselines.begin(), baselines.end(),
                     [&](const PolicySpec& b) { return SamePolicy(b, winner); })) {
      baselines.push_back(winner);
    }
  }
  return out;
}

}  // namespace invevolve
