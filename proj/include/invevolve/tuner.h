#ifndef INVEVOLVE_TUNER_H_
#define INVEVOLVE_TUNER_H_

// Budget-limited box search over a policy family's parameters.
//
// The first ceil(budget / 3) trials are a randomly rotated Halton sequence;
// the rest perturb a search centre with Gaussian steps whose width shrinks
// linearly with the trial index. Each step moves a random non-empty subset
// of coordinates. The centre starts at the best exploration point and, after
// a run of trials that fail to improve on it, restarts from the next-ranked
// exploration point.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "invevolve/inventory.h"
#include "invevolve/policy.h"

namespace invevolve {

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;
  // Lower end excluded; samples are clamped to lo + kParameterGrid.
  bool open_lo = false;
};

struct ParamSpace {
  Family family = Family::kBaseStock;
  std::vector<ParamRange> ranges;

  // Throws InputError unless lo <= hi everywhere.
  void Validate() const;
};

struct TuneTrial {
  ParamMap params;
  double cost = 0.0;
};

struct TuneResult {
  ParamMap best_params;
  double best_cost = 0.0;
  std::vector<TuneTrial> trials;
  std::uint64_t seed = 0;
};

using Objective = std::function<double(const ParamMap&)>;

// Exactly `budget` objective calls. Non-finite costs are recorded as +inf.
TuneResult Tune(const ParamSpace& space, const Objective& objective, int budget,
                std::uint64_t seed);

struct SpaceOptions {
  double mean_demand = 1.0;
  int lead_time = 0;
  int history_length = 7;
  // Restrict order-quantity parameters (S, r, r_base, q, s) to integers.
  bool integer_quantities = false;
};

// Default boxes: S in [0, 4 mean (L+1)], r and r_base in [0, 2 S_hi],
// q in [0, 3 mean], s in [0, S_hi] (clamped to S when building),
// alpha in [0, 1], K_p in (0, 1.5], window in {7, ..., history length}.
ParamSpace DefaultSpace(Family family, const SpaceOptions& options);

// PolicyFromParams with s clamped to S, so every box point is valid.
PolicySpec PolicyFromTrial(Family family, const ParamMap& params);

struct FamilyTuneResult {
  PolicySpec policy;
  double cost = 0.0;
  TuneResult search;
};

// Tunes `family` on the average cost over `paths`, each simulated from an
// empty system with `prefix` as the Newsvendor's prior demand window.
FamilyTuneResult TuneFamily(Family family,
                            std::span<const std::vector<double>> paths,
                            const SystemConfig& cfg, const SpaceOptions& options,
                            int budget, std::uint64_t seed,
                            std::span<const double> prefix = {});

}  // namespace invevolve

#endif  // INVEVOLVE_TUNER_H_
