#ifndef INVEVOLVE_PROPOSAL_H_
#define INVEVOLVE_PROPOSAL_H_

// Candidate generators for the epoch loop: a seeded mutation proposer,
// scripted and sampled fixtures, and an HTTP client for an external model.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invevolve/engine.h"
#include "invevolve/policy.h"
#include "invevolve/tuner.h"
#include "json.hpp"

namespace invevolve {

inline constexpr std::size_t kMaxDigestBytes = 16 * 1024;

// Mean, coefficient of variation (0 for an all-zero series), share of zero
// days, and the least-squares slope over the last 28 periods.
nlohmann::json DemandSummary(std::span<const double> demands);

struct ProposalContext {
  int epoch = 0;
  int round = 0;  // the round about to be played, 1-based
  nlohmann::json summary;
  PolicySpec champion;
  PolicySpec reference;
  std::vector<PolicySpec> pool;
  // Every pair evaluated so far, keyed as in EpochState::stats.
  std::map<std::string, ConfidenceBound> stats;
  std::vector<GateDecision> decisions;

  nlohmann::json ToJson() const;
  // Compact JSON for the wire, at most kMaxDigestBytes. The oldest pair
  // statistics are dropped first when the limit binds.
  std::string ToText() const;
};

ProposalContext ContextDigest(const EpochState& state,
                              std::span<const double> history,
                              const SystemConfig& system, int epoch);

struct Proposal {
  std::optional<PolicySpec> policy;  // absent: failed or malformed
  std::string rationale;
  std::string error;
};

class ProposalSource {
 public:
  virtual ~ProposalSource() = default;
  virtual Proposal Propose(const ProposalContext& ctx) = 0;
};

struct MutationConfig {
  std::uint64_t seed = 0;
  // Gaussian step as a fraction of each parameter's box width.
  double scale_fraction = 0.1;
  double switch_probability = 0.15;

  void Validate() const;
};

// With probability 1 - switch_probability perturbs the champion's parameters
// and clamps them into the tuner box; otherwise moves to an adjacent family:
//   BaseStock -> CBS -> TiltedCBS <-> TiltedPIC, TiltedCBS -> CBS,
//   ConstantOrder / Newsvendor / (s, S) -> BaseStock,
// keeping shared parameters. New ones start mid-range: r = S/2, alpha = 0.5,
// K_p = 0.75, S at half its box. Draws depend only on (seed, epoch, round).
class MutationProposer : public ProposalSource {
 public:
  explicit MutationProposer(MutationConfig cfg);
  Proposal Propose(const ProposalContext& ctx) override;

 private:
  MutationConfig cfg_;
};

// Returns sequence[(round - 1) mod size]; an empty entry is a failed round.
class ScriptedProposer : public ProposalSource {
 public:
  explicit ScriptedProposer(std::vector<std::optional<PolicySpec>> sequence);
  Proposal Propose(const ProposalContext& ctx) override;

 private:
  std::vector<std::optional<PolicySpec>> sequence_;
};

// Draws i.i.d. from a fixed distribution over a finite policy set.
class SampledProposer : public ProposalSource {
 public:
  SampledProposer(std::vector<PolicySpec> policies, std::vector<double> weights,
                  std::uint64_t seed);
  Proposal Propose(const ProposalContext& ctx) override;

 private:
  std::vector<PolicySpec> policies_;
  std::vector<double> cumulative_;
  std::uint64_t seed_;
};

// Always fails; the loop then deploys the best certified fallback.
class NullProposer : public ProposalSource {
 public:
  Proposal Propose(const ProposalContext&) override;
};

struct ExternalConfig {
  std::string url;    // http[s]://host[:port]/path
  std::string token;  // sent as a Bearer credential when non-empty
  int timeout_seconds = 120;

  // Reads INVEVOLVE_PROPOSER_URL and INVEVOLVE_PROPOSER_TOKEN.
  static ExternalConfig FromEnvironment();
};

// POSTs {"context", "policy_schema", "round"} and expects
// {"policy": {...}, "rationale": "..."}. Transport errors, non-2xx replies
// and malformed bodies yield a failed proposal.
class ExternalProposer : public ProposalSource {
 public:
  explicit ExternalProposer(ExternalConfig cfg);
  Proposal Propose(const ProposalContext& ctx) override;

  static nlohmann::json RequestBody(const ProposalContext& ctx);
  static Proposal ParseResponse(int status, const std::string& body);

 private:
  ExternalConfig cfg_;
};

}  // namespace invevolve

#endif  // INVEVOLVE_PROPOSAL_H_
