#ifndef INVEVOLVE_XI_H_
#define INVEVOLVE_XI_H_

// Estimators for xi, the allowance for the gap between replay gains and
// gains realised after deployment. Gates subtract xi from certified bounds.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace invevolve {

struct XiEstimate {
  double value = 0.0;
  // Empty pool (historical) or too few pairs (shift, historical fallback).
  bool cold_start = false;
  bool fell_back = false;
};

// Conservative (1 - alpha) empirical quantile of past discrepancies.
XiEstimate XiHistorical(std::span<const double> discrepancies, double alpha);

struct XiCalibrationPair {
  std::vector<double> shift_features;
  double xi = 0.0;
};

inline constexpr int kXiShiftMinPairs = 5;
inline constexpr int kXiShiftIterations = 2000;

// Linear (1 - alpha) quantile regression of xi on shift features, fitted by
// seeded stochastic subgradient descent on the pinball loss over standardized
// variables. One iteration is a shuffled pass over the pairs with step
// 0.01 / sqrt(iteration). Returns max(0, fit(probe) + inflation). Fewer than
// kXiShiftMinPairs pairs falls back to XiHistorical over their xi values.
XiEstimate XiShift(std::span<const XiCalibrationPair> calibration,
                   std::span<const double> probe, double alpha, double inflation,
                   std::uint64_t seed = 0);

// Per-pair |forward - replay|; the max when beta = 0, else the conservative
// (1 - beta) quantile. Keys must match. Retrospective use only.
double XiOracle(const std::map<std::string, double>& replay_gains,
                const std::map<std::string, double>& forward_gains, double beta);

struct XiBudget {
  double xi_hist = 0.0;
  double xi_shift = 0.0;
  double xi = 0.0;
  double alpha = 0.1;
  int history_periods = 8;
  double inflation = 0.0;
  bool cold_start = false;

  nlohmann::json ToJson() const;
};

// xi = max(xi_hist, xi_shift).
XiBudget CombineXi(const XiEstimate& hist, const XiEstimate& shift, double alpha,
                   int history_periods, double inflation);

}  // namespace invevolve

#endif  // INVEVOLVE_XI_H_
