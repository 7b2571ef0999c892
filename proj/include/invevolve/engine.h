#ifndef INVEVOLVE_ENGINE_H_
#define INVEVOLVE_ENGINE_H_

// One outer epoch of certified policy search.
//
// The initial pool A_0 is the baselines plus the incumbent. Every member is
// scored against the reference; those with LCB(.|ref) >= xi form the feasible
// set and the champion is the feasible policy (or the reference) with the
// largest UCB(.|ref). Each of the J rounds evaluates one proposal against the
// reference and against the current champion and promotes it when
//   LCB(cand|ref) >= xi  and  LCB(cand|champion) >= epsilon + xi.
// Deployment picks the largest UCB(.|ref) among policies whose
// LCB(.|ref) >= xi, or the reference when there are none. Ties in UCB go to
// the earlier pool member, then to the smaller canonical string.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "invevolve/inventory.h"
#include "invevolve/policy.h"
#include "invevolve/replay.h"
#include "invevolve/xi.h"
#include "json.hpp"

namespace invevolve {

inline constexpr int kEpochLogSchemaVersion = 1;

// Source of replay gains for policy pairs. Implementations must be
// deterministic and use the same sample paths for every pair.
class PairEvaluator {
 public:
  virtual ~PairEvaluator() = default;
  // Z_l = cost(comparator) - cost(candidate) on path l.
  virtual std::vector<double> Gains(const PolicySpec& candidate,
                                    const PolicySpec& comparator) = 0;
  virtual const SystemConfig& system() const = 0;
  // Length of the replay window in periods; selects the default method.
  virtual int window_days() const = 0;
  // Demand history shown to proposers; may be empty.
  virtual std::span<const double> history() const { return {}; }
};

enum class ReplayMode {
  // One trajectory over the window; Z_l is the day-l cost difference.
  kDaily,
  // m overlapping sub-windows, each simulated from an empty system with the
  // preceding demands as Newsvendor history; Z_l is the average cost gap.
  kSubWindows,
};

struct ReplayOptions {
  ReplayMode mode = ReplayMode::kDaily;
  int subwindow_length = 30;
  int subwindow_count = 15;
};

// Replays policies over a fixed historical demand window. Per-policy cost
// paths are cached by canonical string.
class ReplayEvaluator : public PairEvaluator {
 public:
  ReplayEvaluator(std::vector<double> history, const SystemConfig& system,
                  ReplayOptions options = {});

  std::vector<double> Gains(const PolicySpec& candidate,
                            const PolicySpec& comparator) override;
  const SystemConfig& system() const override { return system_; }
  int window_days() const override { return static_cast<int>(history_.size()); }
  std::span<const double> history() const override { return history_; }

  // Per-sample costs of one policy (daily costs or sub-window averages).
  const std::vector<double>& SampleCosts(const PolicySpec& policy);
  double AverageCost(const PolicySpec& policy);

 private:
  std::vector<double> history_;
  SystemConfig system_;
  ReplayOptions options_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

struct EpochConfig {
  int rounds = 60;  // J
  double epsilon = 0.05;
  double delta = 0.05;
  double xi = 0.0;
  // Unset: blockwise-t for windows up to 150 periods, Hoeffding beyond.
  std::optional<CertMethod> method;
  // Almost-sure gain bound; unset infers 1.5 max |Z| per pair.
  std::optional<double> gain_bound;
  std::uint64_t seed = 0;
  // Negative control: inverts both the promotion gate and feasibility.
  bool debug_invert_gate = false;
  // Optional xi breakdown carried into the log.
  std::optional<XiBudget> xi_budget;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct GateDecision {
  int round = 0;
  std::optional<PolicySpec> candidate;  // absent when the proposer failed
  bool valid = false;
  std::vector<std::string> violations;
  double s_score = 0.0;  // LCB(cand | reference)
  double i_score = 0.0;  // LCB(cand | champion before the round)
  double o_score = 0.0;  // UCB(cand | champion before the round)
  bool safety_pass = false;
  bool improvement_pass = false;
  bool promoted = false;
  int new_evaluations = 0;
  std::string note;

  nlohmann::json ToJson() const;
};

struct EpochState {
  PolicySpec reference;
  PolicySpec champion;
  std::vector<PolicySpec> pool;  // canonical, insertion order
  int round = 0;
  int evaluations_used = 0;
  int budget = 0;  // N_t
  CertMethod method = CertMethod::kHoeffding;
  // Keyed by PairKey(candidate, comparator).
  std::map<std::string, ConfidenceBound> stats;
  std::vector<GateDecision> decisions;
  std::vector<PolicySpec> champion_trajectory;
  std::vector<PolicySpec> initial_feasible;

  bool InPool(const PolicySpec& canonical) const;
  const ConfidenceBound* Stat(const PolicySpec& candidate,
                              const PolicySpec& comparator) const;
};

std::string PairKey(const PolicySpec& candidate, const PolicySpec& comparator);

// Throws ConfigError if the reference is not among the baselines and
// InputError if a baseline or the incumbent fails CheckValidity.
EpochState InitEpoch(std::span<const PolicySpec> baselines,
                     const std::optional<PolicySpec>& incumbent,
                     const PolicySpec& reference, PairEvaluator& evaluator,
                     const EpochConfig& cfg);

// One gated round. Invalid candidates consume the round but no evaluations.
// Throws InputError after J rounds and BudgetError if N_t would be exceeded.
GateDecision RunRound(EpochState& state, const PolicySpec& candidate,
                      PairEvaluator& evaluator, const EpochConfig& cfg);

// Records a round whose proposal could not be obtained.
GateDecision SkipRound(EpochState& state, const EpochConfig& cfg,
                       const std::string& reason);

struct Deployment {
  PolicySpec policy;
  bool from_feasible = false;
  std::vector<PolicySpec> feasible;
};

Deployment Deploy(const EpochState& state, const EpochConfig& cfg);

nlohmann::json BuildEpochLog(const EpochState& state, const Deployment& deployment,
                             const EpochConfig& cfg);

class ProposalSource;

struct EpochResult {
  PolicySpec deployed;
  nlohmann::json log;
  EpochState state;
};

// InitEpoch, then J rounds of proposal and gating, then Deploy. `epoch`
// is passed to the proposer so that refinement runs draw fresh proposals.
EpochResult RunEpoch(PairEvaluator& evaluator,
                     std::span<const PolicySpec> baselines,
                     const std::optional<PolicySpec>& incumbent,
                     const PolicySpec& reference, ProposalSource& proposer,
                     const EpochConfig& cfg, int epoch = 0);

// Runs `runs` epochs; each deployed policy joins the baselines of the next.
std::vector<EpochResult> IterateRefinement(PairEvaluator& evaluator,
                                           std::vector<PolicySpec> baselines,
                                           const PolicySpec& reference,
                                           ProposalSource& proposer,
                                           const EpochConfig& cfg, int runs);

}  // namespace invevolve

#endif  // INVEVOLVE_ENGINE_H_
