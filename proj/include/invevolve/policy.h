#ifndef INVEVOLVE_POLICY_H_
#define INVEVOLVE_POLICY_H_

// The white-box policy space: a closed set of parametric ordering rules.
//
// Every rule except ConstantOrder and Newsvendor is driven by the gap
// delta = max(0, S - IP):
//   BaseStock        delta
//   CappedBaseStock  min(delta, r)
//   SmallSBigS       S - IP if IP < s else 0
//   TiltedCBS        min(delta, r_base + alpha * delta)
//   TiltedPIC        max(0, min(round_half_even(K_p * delta),
//                               r_base + alpha * delta))
// Newsvendor orders up to (L + 1) times the empirical critical-ratio
// quantile of the last `window` demands.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "invevolve/inventory.h"
#include "json.hpp"

namespace invevolve {

enum class Family {
  kBaseStock,
  kCappedBaseStock,
  kConstantOrder,
  kNewsvendor,
  kSmallSBigS,
  kTiltedCbs,
  kTiltedPic,
};

inline constexpr Family kAllFamilies[] = {
    Family::kBaseStock,  Family::kCappedBaseStock, Family::kConstantOrder,
    Family::kNewsvendor, Family::kSmallSBigS,      Family::kTiltedCbs,
    Family::kTiltedPic,
};

// The five classical baselines, in workspace order.
inline constexpr Family kBaselineFamilies[] = {
    Family::kBaseStock, Family::kCappedBaseStock, Family::kConstantOrder,
    Family::kNewsvendor, Family::kSmallSBigS,
};

std::string_view FamilyName(Family family);
// Short file-system friendly label, e.g. "capped_base_stock".
std::string_view FamilySlug(Family family);
// Accepts FamilyName spellings; throws InputError otherwise.
Family FamilyFromName(std::string_view name);

struct BaseStock {
  double S = 0.0;
  bool operator==(const BaseStock&) const = default;
};
struct CappedBaseStock {
  double S = 0.0;
  double r = 0.0;
  bool operator==(const CappedBaseStock&) const = default;
};
struct ConstantOrder {
  double q = 0.0;
  bool operator==(const ConstantOrder&) const = default;
};
struct Newsvendor {
  int window = 1;
  std::optional<double> ratio;  // defaults to p / (p + h)
  bool operator==(const Newsvendor&) const = default;
};
struct SmallSBigS {
  double s = 0.0;
  double S = 0.0;
  bool operator==(const SmallSBigS&) const = default;
};
struct TiltedCbs {
  double S = 0.0;
  double r_base = 0.0;
  double alpha = 0.0;
  bool operator==(const TiltedCbs&) const = default;
};
struct TiltedPic {
  double S = 0.0;
  double r_base = 0.0;
  double alpha = 0.0;
  double k_p = 1.0;
  bool operator==(const TiltedPic&) const = default;
};

// A policy value. Plain construction does not check parameter bounds so that
// malformed proposals can be represented and rejected by CheckValidity; use
// MakePolicy for checked construction.
struct PolicySpec {
  using Params = std::variant<BaseStock, CappedBaseStock, ConstantOrder,
                              Newsvendor, SmallSBigS, TiltedCbs, TiltedPic>;
  Params params;

  PolicySpec() : params(BaseStock{}) {}
  template <typename T>
    requires std::is_constructible_v<Params, T>
  PolicySpec(T p) : params(std::move(p)) {}  // NOLINT(runtime/explicit)

  Family family() const;
  bool operator==(const PolicySpec&) const = default;
};

// Violations of the parameter bounds, one message per failed check.
std::vector<std::string> ParameterViolations(const PolicySpec& policy);

// Checked construction: throws InputError listing violated bounds.
PolicySpec MakePolicy(PolicySpec::Params params);

// Order quantity for the post-arrival `state`. `demand_history` holds the
// demands observed so far, oldest first. `features` is accepted for interface
// stability; no family in the closed DSL reads it.
double Decide(const PolicySpec& policy, const InventoryState& state,
              std::span<const double> features,
              std::span<const double> demand_history, const SystemConfig& cfg);

// Same as Decide, given the inventory position directly.
double DecideAtPosition(const PolicySpec& policy, double inventory_position,
                        std::span<const double> demand_history,
                        const SystemConfig& cfg);

// Conservative empirical quantile: the smallest order statistic whose
// empirical CDF is at least `level`. Empty input returns 0.
double EmpiricalQuantile(std::span<const double> values, double level);

inline constexpr double kParameterGrid = 1e-4;

// Rounds to the parameter grid, then applies the reduction rules until a
// fixed point: TiltedPIC(K_p = 1) -> TiltedCBS, TiltedCBS(alpha = 0) -> CBS,
// TiltedCBS(alpha = 1 or r_base >= S) -> BaseStock, CBS(r >= S) -> BaseStock,
// (s, S)(s = S) -> BaseStock. The TiltedPIC rule is exact on integer
// S and IP only.
PolicySpec Canonicalize(const PolicySpec& policy);

struct ValidityReport {
  bool valid = true;
  std::vector<std::string> violations;
};

// g(policy): bounds hold and every probe decision is finite and
// non-negative.
ValidityReport CheckValidity(const PolicySpec& policy, const SystemConfig& cfg,
                             std::span<const InventoryState> probe_states);
// Uses the default probe grid: on-hand stock k for k = 0 .. max(3S, 10).
ValidityReport CheckValidity(const PolicySpec& policy, const SystemConfig& cfg);

// {"family": ..., "params": {...}}
nlohmann::json ToJson(const PolicySpec& policy);
// Throws InputError on unknown families or missing/mistyped fields. Does not
// check parameter bounds.
PolicySpec PolicyFromJson(const nlohmann::json& j);
// Compact JSON with sorted keys; used for canonical equality and tie-breaks.
std::string CanonicalString(const PolicySpec& policy);

// Flat parameter view used by the tuner and the mutation proposer.
using ParamMap = std::map<std::string, double>;
ParamMap ParamsOf(const PolicySpec& policy);
PolicySpec PolicyFromParams(Family family, const ParamMap& params);

// The JSON schema of the policy DSL, sent to external proposers.
nlohmann::json PolicySchema();

}  // namespace invevolve

#endif  // INVEVOLVE_POLICY_H_
