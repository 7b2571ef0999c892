#include "invevolve/xi.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "invevolve/errors.h"
#include "invevolve/policy.h"

namespace invevolve {

namespace {

void CheckLevel(double alpha, const char* name) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError(std::string(name) + " must lie in (0,1)");
  }
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments MomentsOf(std::span<const double> v) {
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

XiEstimate XiHistorical(std::span<const double> discrepancies, double alpha) {
  CheckLevel(alpha, "alpha");
  XiEstimate out;
  if (discrepancies.empty()) {
    out.cold_start = true;
    return out;
  }
  for (double d : discrepancies) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw InputError("discrepancies must be finite and >= 0");
    }
  }
  out.value = EmpiricalQuantile(discrepancies, 1.0 - alpha);
  return out;
}

XiEstimate XiShift(std::span<const XiCalibrationPair> calibration,
                   std::span<const double> probe, double alpha, double inflation,
                   std::uint64_t seed) {
  CheckLevel(alpha, "alpha");
  if (!(inflation >= 0.0)) throw InputError("inflation must be >= 0");
  std::vector<double> ys;
  for (const auto& pair : calibration) ys.push_back(pair.xi);
  if (static_cast<int>(calibration.size()) < kXiShiftMinPairs) {
    XiEstimate out = XiHistorical(ys, alpha);
    out.fell_back = true;
    return out;
  }
  const std::size_t dim = probe.size();
  for (const auto& pair : calibration) {
    if (pair.shift_features.size() != dim) {
      throw InputError("shift feature dimension does not match the probe");
    }
  }

  const Moments ym = MomentsOf(ys);
  XiEstimate out;
  if (ym.sd == 0.0) {
    out.value = std::max(0.0, ym.mean + inflation);
    return out;
  }
  const std::size_t n = calibration.size();
  std::vector<Moments> um(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = calibration[i].shift_features[j];
    um[j] = MomentsOf(col);
  }
  auto standardize = [&](std::span<const double> u, std::size_t j) {
    return um[j].sd > 0.0 ? (u[j] - um[j].mean) / um[j].sd : 0.0;
  };
  std::vector<std::vector<double>> u(n, std::vector<double>(dim));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      u[i][j] = standardize(calibration[i].shift_features, j);
    }
    y[i] = (ys[i] - ym.mean) / ym.sd;
  }

  const double tau = 1.0 - alpha;
  std::vector<double> w(dim, 0.0);
  double c = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  boost::random::mt19937_64 rng(seed);
  for (int iter = 1; iter <= kXiShiftIterations; ++iter) {
    for (std::size_t i = n - 1; i > 0; --i) {
      boost::random::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    const double eta = 0.01 / std::sqrt(static_cast<double>(iter));
    for (std::size_t i : order) {
      double fit = c;
      for (std::size_t j = 0; j < dim; ++j) fit += w[j] * u[i][j];
      const double g = y[i] > fit ? -tau : 1.0 - tau;
      for (std::size_t j = 0; j < dim; ++j) w[j] -= eta * g * u[i][j];
      c -= eta * g;
    }
  }
  double fit = c;
  for (std::size_t j = 0; j < dim; ++j) fit += w[j] * standardize(probe, j);
  out.value = std::max(0.0, ym.mean + ym.sd * fit + inflation);
  return out;
}

double XiOracle(const std::map<std::string, double>& replay_gains,
                const std::map<std::string, double>& forward_gains, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw InputError("beta must lie in [0,1)");
  if (replay_gains.size() != forward_gains.size()) {
    throw InputError("replay and forward gains cover different pairs");
  }
  std::vector<double> gaps;
  for (const auto& [key, replay] : replay_gains) {
    auto it = forward_gains.find(key);
    if (it == forward_gains.end()) {
      throw InputError("pair '" + key + "' has no forward gain");
    }
    gaps.push_back(std::fabs(it->second - replay));
  }
  if (gaps.empty()) return 0.0;
  if (beta == 0.0) return *std::max_element(gaps.begin(), gaps.end());
  return EmpiricalQuantile(gaps, 1.0 - beta);
}

nlohmann::json XiBudget::ToJson() const {
  return {{"xi_hist", xi_hist},     {"xi_shift", xi_shift},
          {"xi", xi},               {"alpha", alpha},
          {"history_periods", history_periods},
          {"inflation", inflation}, {"cold_start", cold_start}};
}

XiBudget CombineXi(const XiEstimate& hist, const XiEstimate& shift, double alpha,
                   int history_periods, double inflation) {
  XiBudget b;
  b.xi_hist = std::max(0.0, hist.value);
  b.xi_shift = std::max(0.0, shift.value);
  b.xi = std::max(b.xi_hist, b.xi_shift);
  b.alpha = alpha;
  b.history_periods = history_periods;
  b.inflation = inflation;
  b.cold_start = hist.cold_start;
  return b;
}

}  // namespace invevolve
