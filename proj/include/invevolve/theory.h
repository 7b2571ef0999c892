#ifndef INVEVOLVE_THEORY_H_
#define INVEVOLVE_THEORY_H_

// Numerical checks of the search guarantees on constructed finite policy
// universes with known ground truth.
//
//   Concentration: the exponential-weights proxy
//       p_{k+1}(pi) ~ p_k(pi) exp(eta * est_k(pi))
//     keeps p_K(bad) / p_K(good) <= rho_K whenever the cumulative estimation
//     error of every policy stays within eps_K, where
//       rho_K = p_0(bad) / p_0(good) * exp(-eta (K gamma - 2 eps_K)).
//   Coverage: a proposal law within total variation tau of p_K hits a set S
//     with p_K(S | good) >= kappa with probability >= (kappa/(1+rho_K) - tau)+.
//   Promotion: with per-round promotable probability >= q, one epoch promotes
//     a truly safe, truly eps-improving policy with probability
//     >= 1 - delta - (1 - q)^J.
//   Rolling deployment: on the joint event G_T of confidence coverage and
//     near-oracle discovery in every period, deployment is safe and the summed
//     oracle-safe gap is <= sum_t (nu + 2 rad(pi~_t) + 2 rad(d_t) + 2 xi).
//
// The promotion and rolling harnesses drive the real engine (InitEpoch,
// RunRound, Deploy) through a synthetic PairEvaluator whose gains are true
// replay differences plus bounded uniform noise, and whose deployment values
// differ from replay values by per-policy shifts in [-xi/2, xi/2].

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "invevolve/replay.h"
#include "json.hpp"

namespace invevolve {

struct ProxyUniverse {
  std::vector<double> success;  // Delta(pi), 0 for invalid policies
  std::vector<bool> valid;      // g(pi)
  double tau_good = 0.5;
  std::vector<double> p0;
  double eta = 1.0;
  double eps_k = 0.0;  // cumulative estimation-error bound

  // Good region: valid with success >= tau_good.
  std::vector<bool> Good() const;
  // tau_good - max success outside the good region (tau_good when empty).
  double Margin() const;
  double InitialRatio() const;  // p_0(bad) / p_0(good)
  double Rho(int k) const;
  // Throws ConfigError unless sizes agree, Delta lies in [0,1], invalid
  // policies have Delta = 0, p0 is a law with p0(good) > 0 and margin > 0.
  void Validate() const;
};

// Universe of n policies with margin exactly gamma: one good policy at
// tau_good, one bad at tau_good - gamma, the rest drawn inside their regions;
// roughly a tenth are invalid. Good policies share p0 mass `good_mass`.
ProxyUniverse MakeProxyUniverse(int n, double gamma, double tau_good, double good_mass,
                                double eta, double eps_k, std::uint64_t seed);

// One exponential-weights step, normalized. Throws InputError on size
// mismatch, estimates outside [0,1] or a non-law input.
std::vector<double> ProxyStep(std::span<const double> p, std::span<const double> estimates,
                              double eta);

enum class NoiseKind {
  kNone,
  // Uniform per-step noise, projected so every cumulative sum stays within
  // eps_K.
  kRandom,
  // Pushes bad policies up and good ones down by eps_K / K per step.
  kAdversarial,
  // Uniform noise without projection; must be rejected by the harness when
  // it breaks the bound.
  kUnprojected,
};

struct ConcentrationReport {
  int k = 0;
  int trials = 0;
  double gamma = 0.0;
  double eta = 0.0;
  double eps_k = 0.0;
  double rho = 0.0;
  double mass_lower = 0.0;       // 1 / (1 + rho)
  double max_ratio = 0.0;        // worst realized p_K(bad) / p_K(good)
  double min_good_mass = 1.0;    // worst realized p_K(good)
  double max_bad_mass = 0.0;
  int failures = 0;  // trials breaking the ratio or a mass bound
  bool holds = false;

  nlohmann::json ToJson() const;
};

// Runs K proxy steps per trial. Throws ConfigError when the noise model
// breaks the cumulative bound.
ConcentrationReport VerifyConcentration(const ProxyUniverse& universe, int k, int trials,
                              NoiseKind noise, double amplitude, std::uint64_t seed);

struct ConcentrationGridReport {
  int cells = 0;
  int trials = 0;  // over all cells and noise kinds
  int failures = 0;
  double min_slack = 0.0;  // min over trials of rho_K - realized ratio
  bool holds = false;

  nlohmann::json ToJson() const;
};

// Universe sizes {10, 100} x gamma {0.05, 0.2, 0.4} x eta {0.5, 2} x
// K {1, 10, 40} x eps_K / (K gamma) {0, 0.25, 0.5}, each under random and
// adversarial noise.
ConcentrationGridReport VerifyConcentrationGrid(int trials_per_cell, std::uint64_t seed);

// Joint coverage of N Hoeffding intervals at level delta. Pair i draws m
// gains B (2 Bernoulli(p_i) - 1) with p_i spread over [0.1, 0.9]; two-point
// laws make Hoeffding's inequality as tight as it gets.
struct HoeffdingCoverageReport {
  int replications = 0;
  int pairs = 0;
  int samples = 0;
  double delta = 0.0;
  double radius = 0.0;
  int covered = 0;
  double frequency = 0.0;
  double sigma = 0.0;
  bool holds = false;  // frequency >= 1 - delta - 3 sigma

  nlohmann::json ToJson() const;
};

HoeffdingCoverageReport VerifyHoeffdingCoverage(int replications, int pairs, int samples,
                                                double delta, std::uint64_t seed, int jobs = 1);

struct ProposalCoverageReport {
  double rho = 0.0;
  double tau = 0.0;
  double kappa = 0.0;
  double kappa_bar = 0.0;
  double q = 0.0;
  double q_bar = 0.0;
  double mass_promotable = 0.0;  // p_K(promotable)
  double mass_safe = 0.0;
  double witnessed_promotable = 0.0;  // Q(promotable) under the adversary
  double witnessed_safe = 0.0;
  double tv_promotable = 0.0;
  double tv_safe = 0.0;
  bool holds = false;

  nlohmann::json ToJson() const;
};

// Law at total variation min(tau, p(S)) from p with the least mass on S: the
// removed mass is spread over the complement in proportion to p, or uniformly
// when the complement has none. Returns p when S covers everything.
std::vector<double> AdversarialLaw(std::span<const double> p, const std::vector<bool>& set,
                                   double tau);
double TotalVariation(std::span<const double> p, std::span<const double> q);

// Throws ConfigError if p_K(good) < 1/(1+rho) or either overlap condition
// p_K(S | good) >= kappa fails.
ProposalCoverageReport VerifyProposalCoverage(std::span<const double> p_k, const std::vector<bool>& good,
                          const std::vector<bool>& promotable, const std::vector<bool>& safe,
                          double tau, double kappa, double kappa_bar, double rho);

struct PromotionHarness {
  double q = 0.3;  // per-round probability of a promotable proposal
  int rounds = 10;
  double delta = 0.05;
  double epsilon = 0.05;
  double xi = 0.02;
  int samples = 1000;    // replay observations per pair
  double noise = 0.25;   // half-width of the uniform gain noise
  int universe = 100;
  int baselines = 3;     // besides the reference, all worse than it
  // Include non-promotable candidates whose replay gain lies between the gate
  // threshold and the promotable threshold.
  bool near_miss = false;
  CertMethod method = CertMethod::kHoeffding;
  bool invert_gate = false;  // negative control

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct PromotionReport {
  PromotionHarness harness;
  int trials = 0;
  int successes = 0;         // promotion event on ground truth
  int promoted_trials = 0;   // any promotion
  int first_round_promotions = 0;
  int unsafe_promotions = 0;  // promoted with V_dep(.|ref) < 0 or < eps gain
  int coverage_failures = 0;  // trials with some pair outside its interval
  double radius = 0.0;        // Hoeffding radius used by the harness
  double bound = 0.0;         // 1 - delta - (1 - q)^J
  double frequency = 0.0;
  double sigma = 0.0;
  bool holds = false;

  nlohmann::json ToJson() const;
};

PromotionReport VerifyPromotion(const PromotionHarness& harness, int trials, std::uint64_t seed,
                              int jobs = 1);

struct RollingHarness {
  int periods = 5;  // T
  double q_bar = 0.3;
  int rounds = 10;
  double delta = 0.05;
  double epsilon = 0.05;
  double xi = 0.02;
  double nu = 0.1;
  int samples = 1000;
  double noise = 0.25;
  int universe = 60;
  int baselines = 3;
  // Blockwise-t is accepted only with noise 0, where every radius is 0.
  CertMethod method = CertMethod::kHoeffding;
  bool invert_gate = false;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct PeriodGap {
  double oracle = 0.0;    // V^{safe,*}
  double deployed = 0.0;  // V_dep(d_t | ref)
  double nu = 0.0;
  double rad_tilde = 0.0;
  double rad_deployed = 0.0;
  double xi = 0.0;
  double Gamma() const { return nu + 2.0 * rad_tilde + 2.0 * rad_deployed + 2.0 * xi; }
};

struct RollingReport {
  RollingHarness harness;
  int trials = 0;
  int g_events = 0;             // trials on which G_T holds
  int safety_violations = 0;    // periods on G_T with V_dep(d_t|ref) < 0
  int gap_violations = 0;       // trials on G_T with sum gap > sum Gamma
  int unsafe_periods_any = 0;   // all trials, for reference
  double max_gap_ratio = 0.0;   // max over G_T trials of sum gap / sum Gamma
  double lower_bound = 0.0;     // 1 - sum_t [delta + (1 - q_bar)^J]
  double frequency = 0.0;
  double sigma = 0.0;
  std::vector<PeriodGap> example;  // periods of the first G_T trial
  bool holds = false;

  nlohmann::json ToJson() const;
};

RollingReport VerifyRolling(const RollingHarness& harness, int trials, std::uint64_t seed,
                              int jobs = 1);

// One row per check: name, parameters, statistic, bound, verdict.
std::string GuaranteeMarkdown(std::span<const nlohmann::json> reports);

// Binomial standard deviation sqrt(p (1 - p) / n) with p clamped to [0,1].
double BinomialSigma(double p, int n);

}  // namespace invevolve

#endif  // INVEVOLVE_THEORY_H_
