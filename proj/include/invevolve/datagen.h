#ifndef INVEVOLVE_DATAGEN_H_
#define INVEVOLVE_DATAGEN_H_

// Synthetic seed datasets: a shared latent environment of covariates, a
// log-linear conditional mean with drifting coefficients, latent regimes and
// decaying event states, and four demand families. Also the stationary
// i.i.d. samplers used by the CBS benchmark and the slicing of a seed series
// into 130-day workspaces.
//
// Every random quantity is drawn from a stream derived from the caller's
// seed, so identical (config, seed) pairs regenerate identical series.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invevolve {

inline constexpr int kSeedDays = 731;  // 2024-01-01 .. 2025-12-31
inline constexpr int kHistoryDays = 100;
inline constexpr int kEvaluationDays = 30;
inline constexpr int kSliceDays = kHistoryDays + kEvaluationDays;
inline constexpr int kMinSliceSeparation = 15;
inline constexpr int kDefaultSlices = 10;
inline constexpr double kLogMeanMin = -10.0;
inline constexpr double kLogMeanMax = 15.0;

// ISO date of day `index`, counting 2024-01-01 as 0.
std::string DateString(int index);

enum class FeatureKind {
  kMonth,
  kDayOfWeek,  // 0 = Monday
  kWeekend,
  kTemperature,
  kHumidity,
  kPrecipitation,
  kUvIndex,
  kPromotion,
  kMacroIndex,
  kProxy,  // seasonal AR(1) domain proxy
};

struct TemperatureSpec {
  double alpha0 = 15.0;
  double alpha1 = 10.0;
  double phi = 110.0;  // peak at day-of-year phi + 365.25 / 4
  double ar_coef = 0.7;
  double ar_sd = 1.5;
  double shock_prob = 0.01;
  double shock_sd = 6.0;
};

struct PromotionSpec {
  double windows_per_year = 8.0;
  int min_length = 3;
  int max_length = 10;
  double half_life = 3.0;
  double shock_prob = 0.02;
};

struct ProxySpec {
  double mean = 50.0;
  double amplitude = 10.0;
  double phase = 0.0;
  double ar_coef = 0.8;
  double ar_sd = 3.0;
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kProxy;
  ProxySpec proxy;
  // Log-mean effect per standard deviation of the feature. Its sign is kept
  // under coefficient drift.
  double coef = 0.0;
};

struct EventType {
  std::string name;
  std::string description;  // note text on observed onsets
  double rate_per_year = 2.0;
  int min_duration = 3;
  int max_duration = 21;
  double intensity = 1.0;  // kappa
  double half_life = 5.0;  // of the exponential decay profile omega
  double effect = 0.5;     // delta, log-mean per unit of e
  // Shrinks the negative-binomial dispersion: kappa_r / (1 + v * e).
  double volatility = 0.5;
};

struct RegimeSpec {
  double p_enter = 0.0;  // 0 disables the latent regime
  double p_exit = 0.1;
  double effect = 0.0;  // gamma
  double dispersion_scale = 0.5;
};

struct BreakSpec {
  int day = 366;
  double jump = 0.0;  // added to the intercept from `day` on
};

struct DriftSpec {
  double baseline_sd = 0.0;     // random-walk sd of intercept knots
  double coefficient_sd = 0.0;  // random-walk sd of coefficient knots
  std::vector<BreakSpec> breaks;
  double mixture_weight_slope = 0.0;  // logit change over the full span
  double covariate_sd = 0.0;          // macro index random-walk sd; 0 = AR(1)

  bool Enabled() const;
};

enum class DemandFamily { kNegBinomial, kZeroInflated, kMixture, kContinuousPositive };

std::string_view DemandFamilyName(DemandFamily family);
DemandFamily DemandFamilyFromName(std::string_view name);

struct MixtureSpec {
  double burst_multiplier = 3.0;
  double burst_dispersion = 1.5;
  double weight_intercept = -2.0;  // logit of the burst weight at day 0
  double regime_loading = 1.0;     // logit shift in latent regime 1
};

struct SeedConfig {
  std::string id;
  std::string domain;
  std::string blurb;
  DemandFamily family = DemandFamily::kNegBinomial;
  double base_level = 10.0;  // exp of the initial intercept
  double dispersion = 5.0;   // negative-binomial kappa
  double zero_prob = 0.0;    // zero-inflation gate
  double log_sd = 0.1;       // continuous family
  MixtureSpec mixture;
  std::vector<FeatureSpec> features;
  double retention = 0.7;  // feature-subset randomization
  TemperatureSpec temperature;
  PromotionSpec promotion;
  double macro_spike_prob = 0.005;
  std::vector<EventType> events;
  double observe_prob = 0.8;
  RegimeSpec regime;
  DriftSpec drift;
  double holding_cost = 1.0;
  double penalty_cost = 10.0;
  int lead_time = 5;

  // Throws InputError.
  void Validate() const;
};

struct CovariateTable {
  std::vector<std::string> names;            // retained, in config order
  std::vector<std::vector<double>> columns;  // kSeedDays values each
  std::vector<std::string> dropped;

  const std::vector<double>* Column(std::string_view name) const;
};

// Generates every configured feature, rounds values to 1e-4 and then keeps
// each with probability cfg.retention (at least one survives).
CovariateTable GenerateCovariates(const SeedConfig& cfg, std::uint64_t seed);

struct EventRecord {
  int type = 0;
  int onset = 0;
  int duration = 0;
  bool observed = false;
};

struct DemandDiagnostics {
  std::vector<double> log_mu;
  std::vector<double> log_mu_no_event;  // same draw with e = 0
  std::vector<int> regime;
  std::vector<std::vector<double>> event_state;  // [type][day]
  std::vector<EventRecord> events;
  std::vector<double> zero_prob;
  std::vector<int> component;  // mixture component, else 0
  std::vector<double> intercept_knots;
  int clamped_days = 0;
};

struct DemandSeries {
  std::vector<double> demand;
  std::vector<std::optional<std::string>> notes;
  DemandDiagnostics diagnostics;
  std::vector<std::string> warnings;
};

DemandSeries GenerateDemand(const SeedConfig& cfg, const CovariateTable& covariates,
                            std::uint64_t seed);

struct SeedDataset {
  SeedConfig config;
  CovariateTable covariates;
  DemandSeries series;
};

SeedDataset GenerateSeed(const SeedConfig& cfg, std::uint64_t seed);

// The shipped catalogue: 47 configurations over 15 domains. Per-seed knobs
// (levels, coefficients, events, drift) are drawn from `rng_seed` within the
// ranges and sign table of each domain archetype.
std::vector<SeedConfig> DefaultCatalog(std::uint64_t rng_seed);
inline constexpr int kCatalogSize = 47;
inline constexpr int kCatalogDomains = 15;

// Sorted slice starts in [0, length - kSliceDays] with pairwise endpoint
// gaps >= min_separation. Throws InputError when rejection sampling exceeds
// its retry cap.
std::vector<int> SliceStarts(int n_slices, int series_length, std::uint64_t seed,
                             int min_separation = kMinSliceSeparation,
                             int slice_length = kSliceDays);
bool SlicesSeparated(std::span<const int> starts, int min_separation);

// Benchmark distributions, each with mean 5 on {0, 1, 2, ...}.
enum class Stationary { kGeometric, kPoisson, kBinomial, kGamma, kHalfNormal, kUniform };
inline constexpr Stationary kAllStationary[] = {
    Stationary::kGeometric, Stationary::kPoisson,    Stationary::kBinomial,
    Stationary::kGamma,     Stationary::kHalfNormal, Stationary::kUniform};

std::string_view StationaryName(Stationary d);  // e.g. "Geometric(1/6)"
std::string_view StationarySlug(Stationary d);  // e.g. "geometric"
// Accepts slugs and display names.
Stationary StationaryFromName(std::string_view name);
std::vector<double> SampleStationary(Stationary d, int horizon, std::uint64_t seed);

}  // namespace invevolve

#endif  // INVEVOLVE_DATAGEN_H_
