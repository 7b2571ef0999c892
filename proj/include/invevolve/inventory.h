#ifndef INVEVOLVE_INVENTORY_H_
#define INVEVOLVE_INVENTORY_H_

// Period-level lost-sales inventory dynamics with a deterministic lead time.
//
// Event order within a period:
//   1. the pipeline head arrives and joins on-hand stock;
//   2. the order is placed at the pipeline tail (L = 0: it joins on-hand
//      immediately, before demand);
//   3. demand is served from on-hand stock, the excess is lost;
//   4. cost = h * end-of-period on-hand + p * lost.

#include <cstddef>
#include <span>
#include <vector>

namespace invevolve {

struct PolicySpec;

struct SystemConfig {
  int lead_time = 0;
  double holding_cost = 1.0;
  double penalty_cost = 1.0;
  int horizon = 1;

  // Throws InputError when an invariant is violated.
  void Validate() const;
};

struct InventoryState {
  double on_hand = 0.0;
  // pipeline[i] arrives after i + 1 periods.
  std::vector<double> pipeline;

  static InventoryState Empty(int lead_time);
  bool operator==(const InventoryState&) const = default;
};

struct PeriodRecord {
  double order = 0.0;
  double sales = 0.0;
  double lost = 0.0;
  double end_on_hand = 0.0;
  double cost = 0.0;
  bool operator==(const PeriodRecord&) const = default;
};

struct SimResult {
  double total_cost = 0.0;
  double avg_cost = 0.0;
  std::vector<PeriodRecord> per_period;
  InventoryState final_state;
  bool operator==(const SimResult&) const = default;
};

struct StepOutcome {
  InventoryState state;
  double cost = 0.0;
  double sales = 0.0;
  double lost = 0.0;
};

double InventoryPosition(const InventoryState& state);

// Pipeline head joins on-hand; the returned state has L - 1 pipeline entries
// (none when L = 0). This is the state a policy observes when it orders.
InventoryState ReceiveArrival(const InventoryState& state);

StepOutcome Step(const InventoryState& state, double order, double demand,
                 const SystemConfig& cfg);

struct SimOptions {
  // Leading periods simulated but excluded from cost.
  int warmup = 0;
  // Demands observed before the first simulated period (Newsvendor window).
  std::span<const double> history_prefix = {};
};

// Runs `policy` over `demands`. `features`, when non-empty, must be aligned
// with `demands`. Throws PolicyError if the policy emits a negative or
// non-finite order and InputError on malformed inputs.
SimResult Simulate(const PolicySpec& policy, std::span<const double> demands,
                   std::span<const std::vector<double>> features,
                   const SystemConfig& cfg, const InventoryState& init,
                   const SimOptions& options = {});

// Average cost only, without per-period records. The horizon is taken from
// `demands`; cfg.horizon is ignored.
double SimulateAverageCost(const PolicySpec& policy,
                           std::span<const double> demands,
                           const SystemConfig& cfg,
                           const InventoryState& init,
                           const SimOptions& options = {});

}  // namespace invevolve

#endif  // INVEVOLVE_INVENTORY_H_
