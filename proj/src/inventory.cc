#include "invevolve/inventory.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "invevolve/errors.h"
#include "invevolve/policy.h"

namespace invevolve {

void SystemConfig::Validate() const {
  if (lead_time < 0) throw InputError("lead_time must be >= 0");
  if (!(holding_cost > 0.0)) throw InputError("holding_cost must be > 0");
  if (!(penalty_cost > 0.0)) throw InputError("penalty_cost must be > 0");
  if (horizon < 1) throw InputError("horizon must be >= 1");
}

InventoryState InventoryState::Empty(int lead_time) {
  InventoryState s;
  s.pipeline.assign(static_cast<std::size_t>(std::max(lead_time, 0)), 0.0);
  return s;
}

double InventoryPosition(const InventoryState& state) {
  return std::accumulate(state.pipeline.begin(), state.pipeline.end(),
                         state.on_hand);
}

InventoryState ReceiveArrival(const InventoryState& state) {
  InventoryState next;
  next.on_hand = state.on_hand;
  if (!state.pipeline.empty()) {
    next.on_hand += state.pipeline.front();
    next.pipeline.assign(state.pipeline.begin() + 1, state.pipeline.end());
  }
  return next;
}

namespace {

void CheckOrderAndDemand(double order, double demand) {
  if (!(order >= 0.0) || !std::isfinite(order)) {
    throw InputError("order must be finite and >= 0, got " +
                     std::to_string(order));
  }
  if (!(demand >= 0.0) || !std::isfinite(demand)) {
    throw InputError("demand must be finite and >= 0, got " +
                     std::to_string(demand));
  }
}

// Places `order` on the post-arrival state and serves `demand`.
StepOutcome PlaceAndServe(InventoryState received, double order, double demand,
                          const SystemConfig& cfg) {
  if (cfg.lead_time == 0) {
    received.on_hand += order;
  } else {
    received.pipeline.push_back(order);
  }
  StepOutcome out;
  out.sales = std::min(received.on_hand, demand);
  out.lost = demand - out.sales;
  received.on_hand -= out.sales;
  out.cost = cfg.holding_cost * received.on_hand + cfg.penalty_cost * out.lost;
  out.state = std::move(received);
  return out;
}

void CheckState(const InventoryState& state, const SystemConfig& cfg) {
  if (state.pipeline.size() != static_cast<std::size_t>(cfg.lead_time)) {
    throw InputError("pipeline length " +
                     std::to_string(state.pipeline.size()) +
                     " does not match lead time " +
                     std::to_string(cfg.lead_time));
  }
  if (!(state.on_hand >= 0.0)) throw InputError("on_hand must be >= 0");
  for (double p : state.pipeline) {
    if (!(p >= 0.0)) throw InputError("pipeline entries must be >= 0");
  }
}

double CheckedDecision(const PolicySpec& policy, double ip,
                       std::span<const double> history,
                       const SystemConfig& cfg) {
  const double order = DecideAtPosition(policy, ip, history, cfg);
  if (!std::isfinite(order) || order < 0.0) {
    throw PolicyError("policy " + CanonicalString(policy) +
                      " produced invalid order " + std::to_string(order));
  }
  return order;
}

// Sliding window of recent demands kept sorted, so the Newsvendor quantile
// is an index lookup instead of a selection per period.
class SortedWindow {
 public:
  explicit SortedWindow(std::size_t capacity) : capacity_(capacity) {}

  void Push(double v) {
    recent_.push_back(v);
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), v), v);
    if (recent_.size() > capacity_) {
      const double old = recent_[head_++];
      sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), old));
    }
    if (head_ > 4096 && head_ * 2 > recent_.size()) {
      recent_.erase(recent_.begin(),
                    recent_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  std::span<const double> sorted() const { return sorted_; }

 private:
  std::size_t capacity_;
  std::vector<double> recent_;
  std::size_t head_ = 0;
  std::vector<double> sorted_;
};

double SortedQuantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) return 0.0;
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::ptrdiff_t>(std::ceil(level * n - 1e-9));
  k = std::clamp<std::ptrdiff_t>(k, 1, static_cast<std::ptrdiff_t>(n));
  return sorted[static_cast<std::size_t>(k - 1)];
}

template <typename OnPeriod>
void RunTrajectory(const PolicySpec& policy, std::span<const double> demands,
                   const SystemConfig& cfg, const InventoryState& init,
                   const SimOptions& options, OnPeriod&& on_period) {
  cfg.Validate();
  CheckState(init, cfg);
  for (double d : demands) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw InputError("demands must be finite and >= 0");
    }
  }

  const auto* nv = std::get_if<Newsvendor>(&policy.params);
  std::optional<SortedWindow> window;
  std::vector<double> history;
  if (nv != nullptr) {
    window.emplace(static_cast<std::size_t>(std::max(nv->window, 1)));
    for (double d : options.history_prefix) window->Push(d);
  }

  InventoryState state = init;
  for (std::size_t n = 0; n < demands.size(); ++n) {
    InventoryState received = ReceiveArrival(state);
    const double ip = InventoryPosition(received);
    double order;
    if (nv != nullptr) {
      const double ratio = nv->ratio.value_or(
          cfg.penalty_cost / (cfg.penalty_cost + cfg.holding_cost));
      const double target = SortedQuantile(window->sorted(), ratio) *
                            static_cast<double>(cfg.lead_time + 1);
      order = std::max(0.0, target - ip);
      if (!std::isfinite(order)) {
        throw PolicyError("newsvendor produced a non-finite order");
      }
    } else {
      order = CheckedDecision(policy, ip, {}, cfg);
    }
    const double on_hand_before = received.on_hand;
    StepOutcome out = PlaceAndServe(std::move(received), order, demands[n], cfg);
    on_period(n, order, on_hand_before, out);
    state = std::move(out.state);
    if (nv != nullptr) window->Push(demands[n]);
  }
  on_period(demands.size(), 0.0, 0.0, StepOutcome{state, 0, 0, 0});
}

}  // namespace

StepOutcome Step(const InventoryState& state, double order, double demand,
                 const SystemConfig& cfg) {
  CheckOrderAndDemand(order, demand);
  CheckState(state, cfg);
  return PlaceAndServe(ReceiveArrival(state), order, demand, cfg);
}

SimResult Simulate(const PolicySpec& policy, std::span<const double> demands,
                   std::span<const std::vector<double>> features,
                   const SystemConfig& cfg, const InventoryState& init,
                   const SimOptions& options) {
  if (demands.size() != static_cast<std::size_t>(cfg.horizon)) {
    throw InputError("demands length " + std::to_string(demands.size()) +
                     " differs from horizon " + std::to_string(cfg.horizon));
  }
  if (!features.empty() && features.size() != demands.size()) {
    throw InputError("features must be aligned with demands");
  }
  if (options.warmup < 0 || options.warmup >= cfg.horizon) {
    throw InputError("warmup must lie in [0, horizon)");
  }
  SimResult result;
  result.per_period.reserve(demands.size());
  RunTrajectory(policy, demands, cfg, init, options,
                [&](std::size_t n, double order, double, const StepOutcome& out) {
                  if (n == demands.size()) {
                    result.final_state = out.state;
                    return;
                  }
                  result.per_period.push_back(PeriodRecord{
                      order, out.sales, out.lost, out.state.on_hand, out.cost});
                  if (static_cast<int>(n) >= options.warmup) {
                    result.total_cost += out.cost;
                  }
                });
  result.avg_cost = result.total_cost /
                    static_cast<double>(cfg.horizon - options.warmup);
  return result;
}

double SimulateAverageCost(const PolicySpec& policy,
                           std::span<const double> demands,
                           const SystemConfig& cfg,
                           const InventoryState& init,
                           const SimOptions& options) {
  const auto n_cost = static_cast<int>(demands.size()) - options.warmup;
  if (options.warmup < 0 || n_cost < 1) {
    throw InputError("need at least one costed period");
  }
  double total = 0.0;
  RunTrajectory(policy, demands, cfg, init, options,
                [&](std::size_t n, double, double, const StepOutcome& out) {
                  if (n < demands.size() &&
                      static_cast<int>(n) >= options.warmup) {
                    total += out.cost;
                  }
                });
  return total / static_cast<double>(n_cost);
}

}  // namespace invevolve
