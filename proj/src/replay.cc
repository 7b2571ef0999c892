#include "invevolve/replay.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "invevolve/errors.h"

namespace invevolve {

namespace {

constexpr double kBoundInflation = 1.5;

void CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0,1)");
}

double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

std::string_view CertMethodName(CertMethod method) {
  return method == CertMethod::kHoeffding ? "hoeffding" : "blockwise_t";
}

CertMethod CertMethodFromName(std::string_view name) {
  if (name == "hoeffding") return CertMethod::kHoeffding;
  if (name == "blockwise_t") return CertMethod::kBlockwiseT;
  throw InputError("unknown certification method '" + std::string(name) + "'");
}

CertMethod DefaultCertMethod(int window_days) {
  return window_days <= 150 ? CertMethod::kBlockwiseT : CertMethod::kHoeffding;
}

nlohmann::json ConfidenceBound::ToJson() const {
  return {{"mean", mean},
          {"variance", variance},
          {"radius", radius},
          {"lcb", lcb},
          {"ucb", ucb},
          {"method", std::string(CertMethodName(method))},
          {"fell_back", fell_back},
          {"bound", bound},
          {"bound_inferred", bound_inferred},
          {"samples", samples},
          {"blocks", blocks}};
}

std::pair<double, double> ReplayMeanVar(std::span<const double> z) {
  if (z.empty()) throw InputError("gain samples must be non-empty");
  const double m = static_cast<double>(z.size());
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : z) ss += (v - mean) * (v - mean);
  return {mean, ss / m};
}

double HoeffdingRadius(double bound, int m, int n_pairs, double delta) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw InputError("gain bound must be finite and > 0");
  }
  if (m < 1) throw InputError("sample count must be >= 1");
  if (n_pairs < 1) throw InputError("pair count N must be >= 1");
  CheckDelta(delta);
  return bound * std::sqrt(2.0 * std::log(2.0 * n_pairs / delta) / m);
}

int BlockSize(int lead_time) { return std::max(7, lead_time + 1); }

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw InputError("beta parameters must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("x must lie in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
               a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double TQuantile(double prob, int dof) {
  if (!(prob > 0.0 && prob < 1.0)) throw InputError("prob must lie in (0,1)");
  if (dof < 1) throw InputError("dof must be >= 1");
  if (prob == 0.5) return 0.0;
  // For t > 0, P(T > t) = I_x(nu/2, 1/2) / 2 with x = nu / (nu + t^2).
  // Bisect on log x, which keeps relative precision deep in the tail.
  const double tail = std::min(prob, 1.0 - prob);
  const double nu = dof;
  double lo = -745.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (RegularizedIncompleteBeta(0.5 * nu, 0.5, std::exp(mid)) < 2.0 * tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double x = std::exp(0.5 * (lo + hi));
  const double t = std::sqrt(nu * (1.0 - x) / x);
  return prob > 0.5 ? t : -t;
}

int EvaluationBudget(int initial_pool_size, int rounds) {
  if (initial_pool_size < 1) throw InputError("initial pool must be non-empty");
  if (rounds < 1) throw InputError("J must be >= 1");
  return (initial_pool_size - 1) + 2 * rounds;
}

ConfidenceBound BlockwiseTBound(std::span<const double> z, int lead_time,
                                int n_pairs, double delta,
                                double fallback_bound) {
  if (z.empty()) throw InputError("gain samples must be non-empty");
  if (n_pairs < 1) throw InputError("pair count N must be >= 1");
  CheckDelta(delta);
  const auto [mean, var] = ReplayMeanVar(z);
  ConfidenceBound cb;
  cb.samples = static_cast<int>(z.size());
  cb.variance = var;
  const std::size_t b = static_cast<std::size_t>(BlockSize(lead_time));
  const std::size_t k = z.size() / b;
  if (k < 2) {
    cb.method = CertMethod::kHoeffding;
    cb.fell_back = true;
    cb.mean = mean;
    cb.bound = fallback_bound;
    cb.radius = fallback_bound > 0.0
                    ? HoeffdingRadius(fallback_bound, cb.samples, n_pairs, delta)
                    : 0.0;
  } else {
    std::vector<double> block_means(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t begin = j * b;
      const std::size_t end = j + 1 == k ? z.size() : begin + b;
      block_means[j] = std::accumulate(z.begin() + begin, z.begin() + end, 0.0) /
                       static_cast<double>(end - begin);
    }
    const auto [g_bar, g_var] = ReplayMeanVar(block_means);
    const double kd = static_cast<double>(k);
    const double s = std::sqrt(g_var * kd / (kd - 1.0));
    cb.method = CertMethod::kBlockwiseT;
    cb.blocks = static_cast<int>(k);
    cb.mean = g_bar;
    cb.radius = s == 0.0 ? 0.0
                         : TQuantile(1.0 - delta / (2.0 * n_pairs),
                                     static_cast<int>(k) - 1) *
                               s / std::sqrt(kd);
  }
  cb.lcb = cb.mean - cb.radius;
  cb.ucb = cb.mean + cb.radius;
  return cb;
}

ConfidenceBound ComputeConfidenceBound(const GainSamples& g, int n_pairs,
                                       double delta, CertMethod method,
                                       int lead_time) {
  if (g.z.empty()) throw InputError("gain samples must be non-empty");
  if (n_pairs < 1) throw InputError("pair count N must be >= 1");
  CheckDelta(delta);
  ConfidenceBound cb;
  cb.samples = static_cast<int>(g.z.size());
  if (CanonicalString(Canonicalize(g.candidate)) ==
      CanonicalString(Canonicalize(g.comparator))) {
    cb.method = method;
    return cb;
  }
  double bound = 0.0;
  if (g.bound) {
    bound = *g.bound;
    if (!(bound > 0.0)) throw InputError("gain bound must be > 0");
    for (double v : g.z) {
      if (std::fabs(v) > bound) {
        throw InputError("gain sample exceeds the supplied bound");
      }
    }
  } else {
    for (double v : g.z) bound = std::max(bound, std::fabs(v));
    bound *= kBoundInflation;
  }
  if (method == CertMethod::kBlockwiseT) {
    cb = BlockwiseTBound(g.z, lead_time, n_pairs, delta, bound);
  } else {
    const auto [mean, var] = ReplayMeanVar(g.z);
    cb.mean = mean;
    cb.variance = var;
    cb.method = CertMethod::kHoeffding;
    cb.radius = bound > 0.0
                    ? HoeffdingRadius(bound, cb.samples, n_pairs, delta)
                    : 0.0;
    cb.lcb = cb.mean - cb.radius;
    cb.ucb = cb.mean + cb.radius;
  }
  cb.bound = bound;
  cb.bound_inferred = !g.bound.has_value();
  return cb;
}

}  // namespace invevolve
