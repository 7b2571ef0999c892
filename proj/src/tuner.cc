#include "invevolve/tuner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "invevolve/errors.h"

namespace invevolve {

namespace {

constexpr int kStallTrials = 15;
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double RadicalInverse(int index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

double Snap(const ParamRange& r, double v) {
  v = std::clamp(v, r.lo, r.hi);
  if (r.integer) {
    v = std::clamp(std::round(v), std::ceil(r.lo), std::floor(r.hi));
  }
  if (r.open_lo) v = std::max(v, r.lo + kParameterGrid);
  return v;
}

}  // namespace

void ParamSpace::Validate() const {
  if (ranges.size() > std::size(kPrimes)) {
    throw InputError("too many tuned parameters");
  }
  for (const auto& r : ranges) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw InputError("empty or non-finite range for '" + r.name + "'");
    }
    if (r.integer && std::ceil(r.lo) > std::floor(r.hi)) {
      throw InputError("integer range for '" + r.name + "' has no integers");
    }
  }
}

TuneResult Tune(const ParamSpace& space, const Objective& objective, int budget,
                std::uint64_t seed) {
  if (budget < 1) throw InputError("budget must be >= 1");
  space.Validate();
  const std::size_t dim = space.ranges.size();

  boost::random::mt19937_64 rng(seed);
  boost::random::uniform_01<double> unif;
  boost::random::normal_distribution<double> normal;
  std::vector<double> shift(dim);
  for (auto& s : shift) s = unif(rng);

  TuneResult result;
  result.seed = seed;
  result.best_cost = std::numeric_limits<double>::infinity();
  const int n_explore = (budget + 2) / 3;

  // Local phase state: the search centre restarts from the next-ranked
  // exploration point after kStallTrials trials without improving on it.
  ParamMap center;
  double center_cost = 0.0;
  int stall = 0;
  std::vector<std::size_t> ranked;
  std::size_t next_rank = 1;

  auto evaluate = [&](ParamMap params) {
    double cost = objective(params);
    if (!std::isfinite(cost)) cost = std::numeric_limits<double>::infinity();
    if (static_cast<int>(result.trials.size()) >= n_explore) {
      if (cost < center_cost) {
        center = params;
        center_cost = cost;
        stall = 0;
      } else if (++stall >= kStallTrials && next_rank < ranked.size()) {
        const auto& restart = result.trials[ranked[next_rank++]];
        center = restart.params;
        center_cost = restart.cost;
        stall = 0;
      }
    }
    // The first trial seeds the incumbent even when its cost is +inf.
    if (result.trials.empty() || cost < result.best_cost) {
      result.best_cost = cost;
      result.best_params = params;
    }
    result.trials.push_back({std::move(params), cost});
  };

  for (int t = 0; t < budget; ++t) {
    ParamMap params;
    if (t < n_explore) {
      for (std::size_t i = 0; i < dim; ++i) {
        const auto& r = space.ranges[i];
        const double u =
            std::fmod(RadicalInverse(t + 1, kPrimes[i]) + shift[i], 1.0);
        params[r.name] = Snap(r, r.lo + u * (r.hi - r.lo));
      }
    } else {
      if (t == n_explore) {
        ranked.resize(result.trials.size());
        std::iota(ranked.begin(), ranked.end(), std::size_t{0});
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](std::size_t a, std::size_t b) {
                           return result.trials[a].cost < result.trials[b].cost;
                         });
        center = result.trials[ranked[0]].params;
        center_cost = result.trials[ranked[0]].cost;
      }
      const double progress =
          static_cast<double>(t - n_explore) / std::max(1, budget - n_explore);
      const double width = 0.1 * (1.0 - progress) + 0.01;
      const double p_move = dim > 0 ? std::max(0.5, 1.0 / dim) : 0.0;
      boost::random::bernoulli_distribution<double> move(p_move);
      // Resample a few times when the step rounds back onto the centre.
      for (int attempt = 0; attempt < 8; ++attempt) {
        params = center;
        std::vector<bool> chosen(dim);
        bool any = false;
        for (std::size_t i = 0; i < dim; ++i) any |= (chosen[i] = move(rng));
        if (!any && dim > 0) {
          chosen[static_cast<std::size_t>(unif(rng) * dim) % dim] = true;
        }
        for (std::size_t i = 0; i < dim; ++i) {
          if (!chosen[i]) continue;
          const auto& r = space.ranges[i];
          double step = width * (r.hi - r.lo) * normal(rng);
          if (r.integer && std::fabs(step) < 0.5) step = step < 0 ? -1.0 : 1.0;
          params[r.name] = Snap(r, params[r.name] + step);
        }
        if (params != center) break;
      }
    }
    evaluate(std::move(params));
  }
  return result;
}

ParamSpace DefaultSpace(Family family, const SpaceOptions& o) {
  if (!(o.mean_demand >= 0.0)) throw InputError("mean_demand must be >= 0");
  const double s_hi = std::max(1.0, 4.0 * o.mean_demand * (o.lead_time + 1));
  const double r_hi = 2.0 * s_hi;
  const double q_hi = std::max(1.0, 3.0 * o.mean_demand);
  const bool iq = o.integer_quantities;
  ParamSpace space;
  space.family = family;
  auto& r = space.ranges;
  switch (family) {
    case Family::kBaseStock: r = {{"S", 0, s_hi, iq}}; break;
    case Family::kCappedBaseStock: r = {{"S", 0, s_hi, iq}, {"r", 0, r_hi, iq}}; break;
    case Family::kConstantOrder: r = {{"q", 0, q_hi, iq}}; break;
    case Family::kNewsvendor:
      r = {{"window", 7, static_cast<double>(std::max(7, o.history_length)), true}};
      break;
    case Family::kSmallSBigS: r = {{"s", 0, s_hi, iq}, {"S", 0, s_hi, iq}}; break;
    case Family::kTiltedCbs:
      r = {{"S", 0, s_hi, iq}, {"r_base", 0, r_hi, iq}, {"alpha", 0, 1}};
      break;
    case Family::kTiltedPic:
      r = {{"S", 0, s_hi, iq},
           {"r_base", 0, r_hi, iq},
           {"alpha", 0, 1},
           {"K_p", 0, 1.5, false, true}};
      break;
  }
  return space;
}

PolicySpec PolicyFromTrial(Family family, const ParamMap& params) {
  ParamMap p = params;
  if (family == Family::kSmallSBigS) p["s"] = std::min(p.at("s"), p.at("S"));
  return PolicyFromParams(family, p);
}

FamilyTuneResult TuneFamily(Family family,
                            std::span<const std::vector<double>> paths,
                            const SystemConfig& cfg, const SpaceOptions& options,
                            int budget, std::uint64_t seed,
                            std::span<const double> prefix) {
  if (paths.empty()) throw InputError("need at least one demand path");
  SimOptions sim;
  sim.history_prefix = prefix;
  const InventoryState init = InventoryState::Empty(cfg.lead_time);
  auto cost_of = [&](const PolicySpec& policy) {
    double total = 0.0;
    for (const auto& path : paths) {
      total += SimulateAverageCost(policy, path, cfg, init, sim);
    }
    return total / static_cast<double>(paths.size());
  };
  FamilyTuneResult out;
  out.search = Tune(DefaultSpace(family, options),
                    [&](const ParamMap& p) { return cost_of(PolicyFromTrial(family, p)); },
                    budget, seed);
  out.policy = PolicyFromTrial(family, out.search.best_params);
  out.cost = out.search.best_cost;
  return out;
}

}  // namespace invevolve
