#ifndef INVEVOLVE_REPLAY_H_
#define INVEVOLVE_REPLAY_H_

// Replay gain statistics and pairwise confidence bounds.
//
// A gain sample Z is comparator cost minus candidate cost on one replayable
// path, so positive gains favour the candidate. For N pairs evaluated in one
// epoch at joint level delta:
//   Hoeffding     rad = B sqrt(2 ln(2N / delta) / m)
//   blockwise-t   rad = t_{1 - delta / (2N), K - 1} s / sqrt(K)
// where the blockwise variant averages consecutive blocks of
// b = max(7, L + 1) samples (the last block absorbs the remainder), s is the
// sample standard deviation of the K block means and the bound is centred on
// their mean.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "invevolve/policy.h"
#include "json.hpp"

namespace invevolve {

enum class CertMethod { kHoeffding, kBlockwiseT };

std::string_view CertMethodName(CertMethod method);
CertMethod CertMethodFromName(std::string_view name);

// Blockwise-t for replay windows up to 150 days, Hoeffding beyond.
CertMethod DefaultCertMethod(int window_days);

struct GainSamples {
  PolicySpec candidate;
  PolicySpec comparator;
  std::vector<double> z;
  // Almost-sure bound on |Z|; when absent, 1.5 times the observed max |Z|.
  std::optional<double> bound;
};

struct ConfidenceBound {
  double mean = 0.0;
  double variance = 0.0;
  double radius = 0.0;
  double lcb = 0.0;
  double ucb = 0.0;
  CertMethod method = CertMethod::kHoeffding;
  // Blockwise-t was requested but fewer than two blocks were available.
  bool fell_back = false;
  // The gain bound B used (0 when unused).
  double bound = 0.0;
  bool bound_inferred = false;
  int samples = 0;
  int blocks = 0;

  nlohmann::json ToJson() const;
};

// Sample mean and biased variance. Throws InputError on empty input.
std::pair<double, double> ReplayMeanVar(std::span<const double> z);

double HoeffdingRadius(double bound, int m, int n_pairs, double delta);

int BlockSize(int lead_time);

// Falls back to Hoeffding with `fallback_bound` when fewer than two blocks
// fit; the result then has fell_back set.
ConfidenceBound BlockwiseTBound(std::span<const double> z, int lead_time,
                                int n_pairs, double delta,
                                double fallback_bound);

// Student-t inverse CDF, computed by inverting the regularized incomplete
// beta function. Throws InputError unless 0 < prob < 1 and dof >= 1.
double TQuantile(double prob, int dof);

// I_x(a, b), by Lentz's continued fraction.
double RegularizedIncompleteBeta(double a, double b, double x);

// N_t = (|A_0| - 1) + 2J. Throws InputError unless pool >= 1 and J >= 1.
int EvaluationBudget(int initial_pool_size, int rounds);

// Mean, radius and bounds for one pair. Canonically equal candidate and
// comparator yield the all-zero bound regardless of the samples.
ConfidenceBound ComputeConfidenceBound(const GainSamples& g, int n_pairs,
                                       double delta, CertMethod method,
                                       int lead_time);

}  // namespace invevolve

#endif  // INVEVOLVE_REPLAY_H_
