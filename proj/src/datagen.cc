#include "invevolve/datagen.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/geometric_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "invevolve/errors.h"
#include "invevolve/rng.h"

namespace invevolve {

namespace {

using Rng = boost::random::mt19937_64;

constexpr double kYear = 365.25;
constexpr int kKnots = 9;  // four per year across the span

double Round4(double v) { return std::round(v * 1e4) / 1e4; }
double Round2(double v) { return std::round(v * 1e2) / 1e2; }

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double Logit(double p) { return std::log(p) - std::log1p(-p); }

double Normal(Rng& rng) { return boost::random::normal_distribution<double>()(rng); }
double Uniform(Rng& rng) { return boost::random::uniform_01<double>()(rng); }
double Uniform(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}
int UniformInt(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

double Poisson(Rng& rng, double mean) {
  if (!(mean > 1e-12)) return 0.0;
  return boost::random::poisson_distribution<long long, double>(mean)(rng);
}

// Gamma-Poisson mixture: mean mu, variance mu + mu^2 / kappa.
double NegBinomial(Rng& rng, double mu, double kappa) {
  if (!(mu > 1e-12)) return 0.0;
  const double lambda = boost::random::gamma_distribution<double>(kappa, mu / kappa)(rng);
  return Poisson(rng, lambda);
}

int DayOfYear(int index) {
  using namespace std::chrono;
  const sys_days day = sys_days{year{2024} / January / 1} + days{index};
  const year_month_day ymd{day};
  return (day - sys_days{ymd.year() / January / 1}).count() + 1;
}

int Month(int index) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{year{2024} / January / 1} + days{index}};
  return static_cast<int>(static_cast<unsigned>(ymd.month()));
}

double Interpolate(const std::vector<double>& knots, int day) {
  const double pos = static_cast<double>(day) * (kKnots - 1) / (kSeedDays - 1);
  const int k = std::min(static_cast<int>(pos), kKnots - 2);
  const double w = pos - k;
  return (1.0 - w) * knots[k] + w * knots[k + 1];
}

// Random-walk knots starting at `start`; a nonzero `sign` keeps that sign.
std::vector<double> Knots(Rng& rng, double start, double sd, int sign) {
  std::vector<double> k(kKnots);
  k[0] = start;
  for (int i = 1; i < kKnots; ++i) {
    k[i] = k[i - 1] + sd * Normal(rng);
    if (sign > 0) k[i] = std::max(k[i], 0.0);
    if (sign < 0) k[i] = std::min(k[i], 0.0);
  }
  return k;
}

struct Environment {
  std::vector<double> temperature, humidity, precipitation, uv, promotion, macro;
};

Environment LatentEnvironment(const SeedConfig& cfg, Rng& rng) {
  Environment env;
  const auto& t = cfg.temperature;
  double u = 0.0, macro = 0.0;
  int promo_start = -1, promo_end = -1;
  double promo_peak = 0.0;
  for (int r = 0; r < kSeedDays; ++r) {
    const double season = std::sin(2.0 * std::numbers::pi * (DayOfYear(r) - t.phi) / kYear);
    u = t.ar_coef * u + t.ar_sd * Normal(rng);
    const double shock = Uniform(rng) < t.shock_prob ? t.shock_sd * Normal(rng) : 0.0;
    const double temp = t.alpha0 + t.alpha1 * season + u + shock;
    env.temperature.push_back(temp);
    env.humidity.push_back(
        std::clamp(65.0 - 1.2 * (temp - t.alpha0) + 5.0 * Normal(rng), 5.0, 100.0));
    const bool wet = Uniform(rng) < 0.3 - 0.1 * season;
    const double rain = boost::random::gamma_distribution<double>(0.8, 6.0)(rng);
    env.precipitation.push_back(wet ? rain : 0.0);
    env.uv.push_back(std::max(0.0, 5.0 + 3.0 * season + 0.8 * Normal(rng)));

    const auto& p = cfg.promotion;
    if (r >= promo_end && Uniform(rng) < p.windows_per_year / kYear) {
      promo_start = r;
      promo_end = r + UniformInt(rng, p.min_length, p.max_length);
      promo_peak = Uniform(rng, 0.5, 1.0);
    }
    double promo = r < promo_end
                       ? promo_peak * std::exp2(-(r - promo_start) / p.half_life)
                       : 0.0;
    if (Uniform(rng) < p.shock_prob) promo += Uniform(rng, 0.2, 0.6);
    env.promotion.push_back(promo);

    if (cfg.drift.covariate_sd > 0.0) {
      macro += cfg.drift.covariate_sd * Normal(rng);
    } else {
      macro = 0.9 * macro + 0.01 * Normal(rng);
    }
    const double spike = Uniform(rng) < cfg.macro_spike_prob ? 0.1 * Normal(rng) : 0.0;
    env.macro.push_back(100.0 * std::exp(macro + spike));
  }
  return env;
}

std::vector<double> FeatureColumn(const FeatureSpec& f, const Environment& env, Rng& rng) {
  std::vector<double> col(kSeedDays);
  double ar = 0.0;
  for (int r = 0; r < kSeedDays; ++r) {
    switch (f.kind) {
      case FeatureKind::kMonth: col[r] = Month(r); break;
      case FeatureKind::kDayOfWeek: col[r] = r % 7; break;  // 2024-01-01 is a Monday
      case FeatureKind::kWeekend: col[r] = r % 7 >= 5 ? 1.0 : 0.0; break;
      case FeatureKind::kTemperature: col[r] = env.temperature[r]; break;
      case FeatureKind::kHumidity: col[r] = env.humidity[r]; break;
      case FeatureKind::kPrecipitation: col[r] = env.precipitation[r]; break;
      case FeatureKind::kUvIndex: col[r] = env.uv[r]; break;
      case FeatureKind::kPromotion: col[r] = env.promotion[r]; break;
      case FeatureKind::kMacroIndex: col[r] = env.macro[r]; break;
      case FeatureKind::kProxy: {
        const auto& p = f.proxy;
        ar = p.ar_coef * ar + p.ar_sd * Normal(rng);
        col[r] = p.mean +
                 p.amplitude * std::sin(2.0 * std::numbers::pi * (DayOfYear(r) - p.phase) / kYear) +
                 ar;
        break;
      }
    }
    col[r] = Round4(col[r]);
  }
  return col;
}

std::vector<double> Standardize(const std::vector<double>& x) {
  double mean = 0.0, ss = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(x.size()));
  std::vector<double> z(x.size(), 0.0);
  if (sd > 1e-12) {
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
  }
  return z;
}

}  // namespace

std::string DateString(int index) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{year{2024} / January / 1} + days{index}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

bool DriftSpec::Enabled() const {
  return baseline_sd > 0.0 || coefficient_sd > 0.0 || !breaks.empty() ||
         mixture_weight_slope != 0.0 || covariate_sd > 0.0;
}

std::string_view DemandFamilyName(DemandFamily family) {
  switch (family) {
    case DemandFamily::kNegBinomial: return "neg_binomial";
    case DemandFamily::kZeroInflated: return "zero_inflated";
    case DemandFamily::kMixture: return "mixture";
    case DemandFamily::kContinuousPositive: return "continuous_positive";
  }
  return "neg_binomial";
}

DemandFamily DemandFamilyFromName(std::string_view name) {
  for (auto f : {DemandFamily::kNegBinomial, DemandFamily::kZeroInflated,
                 DemandFamily::kMixture, DemandFamily::kContinuousPositive}) {
    if (DemandFamilyName(f) == name) return f;
  }
  throw InputError("unknown demand family '" + std::string(name) + "'");
}

void SeedConfig::Validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (id.empty()) throw InputError("seed config needs an id");
  if (!(base_level > 0.0)) throw InputError(id + ": base level must be > 0");
  if (!(dispersion > 0.0)) throw InputError(id + ": dispersion must be > 0");
  if (!prob(zero_prob) || !prob(retention) || !prob(observe_prob) ||
      !prob(regime.p_enter) || !prob(regime.p_exit)) {
    throw InputError(id + ": probabilities must lie in [0,1]");
  }
  if (!(log_sd >= 0.0)) throw InputError(id + ": log sd must be >= 0");
  if (promotion.min_length < 1 || promotion.max_length < promotion.min_length) {
    throw InputError(id + ": promotion lengths must satisfy 1 <= min <= max");
  }
  for (const auto& e : events) {
    if (e.min_duration < 1 || e.max_duration < e.min_duration || !(e.half_life > 0.0) ||
        !(e.rate_per_year >= 0.0) || !(e.volatility >= 0.0)) {
      throw InputError(id + ": malformed event type '" + e.name + "'");
    }
  }
  if (!(holding_cost > 0.0) || !(penalty_cost > 0.0) || lead_time < 0) {
    throw InputError(id + ": cost parameters must be positive and L >= 0");
  }
}

const std::vector<double>* CovariateTable::Column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return &columns[i];
  }
  return nullptr;
}

CovariateTable GenerateCovariates(const SeedConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  Rng rng(DeriveSeed(seed, {1}));
  const Environment env = LatentEnvironment(cfg, rng);
  CovariateTable table;
  std::vector<bool> keep;
  for (const auto& f : cfg.features) {
    table.names.push_back(f.name);
    table.columns.push_back(FeatureColumn(f, env, rng));
  }
  Rng subset(DeriveSeed(seed, {2}));
  for (std::size_t i = 0; i < cfg.features.size(); ++i) {
    keep.push_back(Uniform(subset) < cfg.retention);
  }
  if (!keep.empty() && std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
    keep[UniformInt(subset, 0, static_cast<int>(keep.size()) - 1)] = true;
  }
  CovariateTable out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) {
      out.names.push_back(table.names[i]);
      out.columns.push_back(std::move(table.columns[i]));
    } else {
      out.dropped.push_back(table.names[i]);
    }
  }
  return out;
}

DemandSeries GenerateDemand(const SeedConfig& cfg, const CovariateTable& covariates,
                            std::uint64_t seed) {
  cfg.Validate();
  for (const auto& c : covariates.columns) {
    if (static_cast<int>(c.size()) != kSeedDays) {
      throw InputError(cfg.id + ": covariates must span " + std::to_string(kSeedDays) + " days");
    }
  }
  Rng rng(DeriveSeed(seed, {3}));
  DemandSeries out;
  auto& diag = out.diagnostics;

  diag.intercept_knots = Knots(rng, std::log(cfg.base_level), cfg.drift.baseline_sd, 0);
  struct Term {
    std::vector<double> z, knots;
  };
  std::vector<Term> terms;
  for (std::size_t i = 0; i < covariates.names.size(); ++i) {
    const FeatureSpec* spec = nullptr;
    for (const auto& f : cfg.features) {
      if (f.name == covariates.names[i]) spec = &f;
    }
    const double coef = spec ? spec->coef : 0.0;
    if (coef == 0.0) continue;
    terms.push_back({Standardize(covariates.columns[i]),
                     Knots(rng, coef, cfg.drift.coefficient_sd, coef > 0 ? 1 : -1)});
  }

  const std::size_t n_types = cfg.events.size();
  diag.event_state.assign(n_types, std::vector<double>(kSeedDays, 0.0));
  std::vector<int> active_until(n_types, 0);
  out.notes.assign(kSeedDays, std::nullopt);
  int z = 0;

  for (int r = 0; r < kSeedDays; ++r) {
    if (r > 0) {
      const double u = Uniform(rng);
      z = z == 0 ? (u < cfg.regime.p_enter) : !(u < cfg.regime.p_exit);
    }
    diag.regime.push_back(z);

    bool onset_today = false;
    for (std::size_t l = 0; l < n_types; ++l) {
      const auto& et = cfg.events[l];
      const double u = Uniform(rng);
      if (onset_today || r < active_until[l] || !(u < et.rate_per_year / kYear)) continue;
      EventRecord ev{static_cast<int>(l), r, UniformInt(rng, et.min_duration, et.max_duration),
                     Uniform(rng) < cfg.observe_prob};
      active_until[l] = r + ev.duration;
      for (int s = r; s < std::min(r + ev.duration, kSeedDays); ++s) {
        diag.event_state[l][s] = et.intensity * std::exp2(-(s - r) / et.half_life);
      }
      if (ev.observed) out.notes[r] = et.description;
      diag.events.push_back(ev);
      onset_today = true;
    }

    double log_mu = Interpolate(diag.intercept_knots, r);
    for (const auto& b : cfg.drift.breaks) {
      if (r >= b.day) log_mu += b.jump;
    }
    for (const auto& t : terms) log_mu += Interpolate(t.knots, r) * t.z[r];
    if (z == 1) log_mu += cfg.regime.effect;
    double event_effect = 0.0, volatility = 0.0;
    for (std::size_t l = 0; l < n_types; ++l) {
      event_effect += cfg.events[l].effect * diag.event_state[l][r];
      volatility += cfg.events[l].volatility * diag.event_state[l][r];
    }
    double lm = log_mu + event_effect;
    double lm0 = log_mu;
    if (lm < kLogMeanMin || lm > kLogMeanMax) ++diag.clamped_days;
    lm = std::clamp(lm, kLogMeanMin, kLogMeanMax);
    lm0 = std::clamp(lm0, kLogMeanMin, kLogMeanMax);
    diag.log_mu.push_back(lm);
    diag.log_mu_no_event.push_back(lm0);
    const double mu = std::exp(lm);
    const double kappa =
        cfg.dispersion * (z == 1 ? cfg.regime.dispersion_scale : 1.0) / (1.0 + volatility);

    double y = 0.0, p0 = 0.0;
    int component = 0;
    switch (cfg.family) {
      case DemandFamily::kNegBinomial:
        y = NegBinomial(rng, mu, kappa);
        break;
      case DemandFamily::kZeroInflated:
        p0 = Logistic(Logit(cfg.zero_prob) + (z == 1 ? 1.0 : 0.0));
        y = Uniform(rng) < p0 ? 0.0 : NegBinomial(rng, mu, kappa);
        break;
      case DemandFamily::kMixture: {
        const double w = Logistic(cfg.mixture.weight_intercept +
                                  cfg.drift.mixture_weight_slope * r / (kSeedDays - 1) +
                                  cfg.mixture.regime_loading * z);
        component = Uniform(rng) < w ? 1 : 0;
        y = component == 1
                ? NegBinomial(rng, mu * cfg.mixture.burst_multiplier, cfg.mixture.burst_dispersion)
                : NegBinomial(rng, mu, kappa);
        break;
      }
      case DemandFamily::kContinuousPositive: {
        const double sd = cfg.log_sd * (z == 1 ? 1.5 : 1.0) * (1.0 + volatility);
        y = Round2(mu * std::exp(sd * Normal(rng) - 0.5 * sd * sd));
        break;
      }
    }
    diag.zero_prob.push_back(p0);
    diag.component.push_back(component);
    out.demand.push_back(y);
  }
  if (diag.clamped_days > 0) {
    out.warnings.push_back(cfg.id + ": log-mean clamped to [" + std::to_string(kLogMeanMin) +
                           ", " + std::to_string(kLogMeanMax) + "] on " +
                           std::to_string(diag.clamped_days) + " days");
  }
  return out;
}

SeedDataset GenerateSeed(const SeedConfig& cfg, std::uint64_t seed) {
  SeedDataset ds{cfg, GenerateCovariates(cfg, seed), {}};
  ds.series = GenerateDemand(cfg, ds.covariates, seed);
  return ds;
}

// ---------------------------------------------------------------------------
// Catalogue

namespace {

struct FeatureArchetype {
  const char* name;
  FeatureKind kind;
  int sign;  // +1, -1, or 0 for an observed distractor
};

struct EventArchetype {
  const char* name;
  const char* description;
  int sign;
};

struct DomainArchetype {
  const char* tag;
  const char* blurb;
  int seeds;
  double level_lo, level_hi;
  std::vector<DemandFamily> variants;
  std::vector<FeatureArchetype> features;
  std::vector<EventArchetype> events;
};

using F = FeatureKind;
using D = DemandFamily;

// Sign table per domain. Magnitudes are drawn per seed.
const std::vector<DomainArchetype>& Archetypes() {
  static const std::vector<DomainArchetype> kTable = {
      {"grocery_retail", "Fresh grocery SKU at a regional supermarket chain", 4, 20, 150,
       {D::kNegBinomial, D::kMixture},
       {{"weekend", F::kWeekend, 1}, {"promotion_intensity", F::kPromotion, 1},
        {"precipitation_mm", F::kPrecipitation, -1}, {"temperature_c", F::kTemperature, 0},
        {"price_index", F::kMacroIndex, -1}},
       {{"typhoon", "Typhoon warning issued for the region; shoppers stockpiling", 1},
        {"food_safety_rumor", "Social media rumor about contamination in this category", -1}}},
      {"apparel", "Seasonal apparel item sold online and in stores", 3, 5, 40,
       {D::kNegBinomial, D::kZeroInflated},
       {{"temperature_c", F::kTemperature, -1}, {"promotion_intensity", F::kPromotion, 1},
        {"weekend", F::kWeekend, 1}, {"consumer_confidence", F::kMacroIndex, 1}},
       {{"influencer_post", "Influencer featured the item in a viral post", 1},
        {"heatwave", "Heatwave forecast; cold-weather lines stall", -1}}},
      {"consumer_electronics", "Mid-range consumer electronics accessory", 3, 3, 30,
       {D::kNegBinomial, D::kMixture},
       {{"promotion_intensity", F::kPromotion, 1}, {"weekend", F::kWeekend, 1},
        {"component_cost_index", F::kMacroIndex, -1}},
       {{"product_launch", "Competitor flagship launch announced", 1},
        {"recall", "Safety recall notice for a related model", -1}}},
      {"beverages", "Chilled beverage at convenience stores", 3, 50, 300,
       {D::kNegBinomial, D::kMixture},
       {{"temperature_c", F::kTemperature, 1}, {"uv_index", F::kUvIndex, 1},
        {"weekend", F::kWeekend, 1}, {"promotion_intensity", F::kPromotion, 1},
        {"humidity_pct", F::kHumidity, 0}},
       {{"heatwave", "Extreme heat advisory", 1},
        {"contamination_rumor", "Unverified contamination report circulating", -1}}},
      {"restaurant_ingredients", "Perishable ingredient for a restaurant group", 4, 15, 120,
       {D::kNegBinomial, D::kZeroInflated, D::kMixture},
       {{"weekend", F::kWeekend, 1}, {"precipitation_mm", F::kPrecipitation, -1},
        {"reservations_index", F::kProxy, 1}, {"temperature_c", F::kTemperature, 0}},
       {{"food_safety_rumor", "Food-safety scare reported at a nearby outlet", -1},
        {"local_festival", "City festival week begins", 1}}},
      {"industrial_spare_parts", "Intermittent spare part for plant machinery", 4, 0.2, 3,
       {D::kZeroInflated, D::kNegBinomial},
       {{"utilization_rate", F::kProxy, 1}, {"maintenance_index", F::kProxy, 1},
        {"machine_age_index", F::kProxy, 0}},
       {{"plant_outage", "Unplanned outage on line 2", 1},
        {"strike", "Maintenance crew strike announced", -1}}},
      {"medical_supplies", "Consumable medical supply for a hospital network", 4, 30, 200,
       {D::kNegBinomial, D::kMixture},
       {{"admissions_index", F::kProxy, 1}, {"influenza_index", F::kProxy, 1},
        {"temperature_c", F::kTemperature, -1}},
       {{"pandemic_wave", "Health authority reports a new infection wave", 1},
        {"supplier_recall", "Supplier recalls a production lot", -1}}},
      {"pharmacy", "Over-the-counter remedy at a pharmacy chain", 3, 10, 80,
       {D::kNegBinomial, D::kZeroInflated},
       {{"influenza_index", F::kProxy, 1}, {"weekend", F::kWeekend, -1},
        {"pollen_index", F::kProxy, 1}},
       {{"pandemic_wave", "Seasonal flu outbreak declared", 1},
        {"regulatory_recall", "Regulator pulls a competing product", 1}}},
      {"power_grid", "Regional power-grid load (MWh-equivalent units)", 3, 400, 1000,
       {D::kContinuousPositive},
       {{"cooling_degree_index", F::kProxy, 1}, {"humidity_pct", F::kHumidity, 1},
        {"weekend", F::kWeekend, -1}, {"industrial_activity", F::kMacroIndex, 1}},
       {{"heatwave", "Heatwave pushes air-conditioning load", 1},
        {"grid_outage", "Transmission fault isolates part of the region", -1}}},
      {"cloud_computing", "Compute instance-hours for a cloud region", 3, 100, 600,
       {D::kContinuousPositive, D::kNegBinomial},
       {{"traffic_index", F::kProxy, 1}, {"latency_ms", F::kProxy, -1},
        {"weekend", F::kWeekend, -1}, {"tech_spend_index", F::kMacroIndex, 1}},
       {{"viral_launch", "Customer app goes viral", 1},
        {"datacenter_outage", "Availability-zone outage", -1}}},
      {"ev_battery", "EV battery module for an assembly plant", 3, 20, 120,
       {D::kNegBinomial, D::kMixture},
       {{"ev_sales_index", F::kMacroIndex, 1}, {"lithium_price_index", F::kProxy, -1},
        {"promotion_intensity", F::kPromotion, 1}},
       {{"subsidy_announcement", "Government extends EV purchase subsidy", 1},
        {"supply_disruption", "Cathode supplier halts shipments", -1}}},
      {"construction_materials", "Bagged cement at a building-supply depot", 3, 10, 90,
       {D::kNegBinomial, D::kZeroInflated},
       {{"precipitation_mm", F::kPrecipitation, -1}, {"temperature_c", F::kTemperature, 1},
        {"housing_starts_index", F::kMacroIndex, 1}, {"weekend", F::kWeekend, -1}},
       {{"typhoon", "Typhoon halts outdoor construction", -1},
        {"strike", "Truck drivers strike", -1}}},
      {"automotive_parts", "Aftermarket brake component", 3, 1, 15,
       {D::kZeroInflated, D::kNegBinomial},
       {{"vehicle_miles_index", F::kProxy, 1}, {"temperature_c", F::kTemperature, -1},
        {"month", F::kMonth, 0}},
       {{"recall", "Manufacturer recall campaign", 1},
        {"port_strike", "Port strike delays imports", -1}}},
      {"ecommerce_logistics", "Parcel volume at a fulfilment hub", 2, 80, 400,
       {D::kMixture, D::kNegBinomial},
       {{"promotion_intensity", F::kPromotion, 1}, {"weekend", F::kWeekend, 1},
        {"retail_sales_index", F::kMacroIndex, 1}},
       {{"shopping_festival", "Online shopping festival starts", 1},
        {"courier_strike", "Courier strike announced", -1}}},
      {"agriculture_inputs", "Crop-protection product at a rural co-op", 2, 5, 60,
       {D::kMixture, D::kZeroInflated},
       {{"precipitation_mm", F::kPrecipitation, 1}, {"temperature_c", F::kTemperature, 1},
        {"soil_moisture_index", F::kProxy, -1}},
       {{"drought", "Drought emergency declared", 1},
        {"pest_outbreak", "Pest outbreak reported in the district", 1}}},
  };
  return kTable;
}

SeedConfig DrawSeed(const DomainArchetype& a, int k, std::uint64_t seed) {
  Rng rng(seed);
  SeedConfig c;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%02d", a.tag, k + 1);
  c.id = id;
  c.domain = a.tag;
  c.blurb = a.blurb;
  c.family = a.variants[static_cast<std::size_t>(k) % a.variants.size()];
  c.base_level = std::exp(Uniform(rng, std::log(a.level_lo), std::log(a.level_hi)));
  c.dispersion = Uniform(rng, 4.0, 40.0);
  c.zero_prob = c.family == D::kZeroInflated ? Uniform(rng, 0.2, 0.6) : 0.0;
  c.log_sd = Uniform(rng, 0.04, 0.12);
  c.mixture.burst_multiplier = Uniform(rng, 2.0, 4.0);
  c.mixture.weight_intercept = Uniform(rng, -3.0, -1.5);
  c.retention = 0.7;

  c.features.push_back({"month", F::kMonth, {}, 0.0});
  c.features.push_back({"day_of_week", F::kDayOfWeek, {}, 0.0});
  for (const auto& f : a.features) {
    if (std::string_view(f.name) == "month") continue;
    FeatureSpec spec{f.name, f.kind, {}, f.sign * Uniform(rng, 0.05, 0.25)};
    spec.proxy = {50.0, Uniform(rng, 0.0, 15.0), Uniform(rng, 0.0, kYear),
                  Uniform(rng, 0.6, 0.95), Uniform(rng, 2.0, 5.0)};
    c.features.push_back(spec);
  }

  c.temperature = {Uniform(rng, 5.0, 25.0), Uniform(rng, 5.0, 15.0), Uniform(rng, 95.0, 125.0),
                   0.7, 1.5, 0.01, 6.0};
  c.promotion.windows_per_year = Uniform(rng, 4.0, 12.0);
  for (const auto& e : a.events) {
    EventType et;
    et.name = e.name;
    et.description = e.description;
    et.rate_per_year = Uniform(rng, 1.0, 4.0);
    et.intensity = Uniform(rng, 0.5, 1.5);
    et.half_life = Uniform(rng, 2.0, 10.0);
    et.effect = e.sign * Uniform(rng, 0.3, 0.9);
    et.volatility = Uniform(rng, 0.2, 1.0);
    c.events.push_back(et);
  }
  c.observe_prob = Uniform(rng, 0.6, 0.95);
  c.regime = {Uniform(rng, 0.005, 0.02), Uniform(rng, 0.05, 0.15), Uniform(rng, -0.6, 0.6), 0.5};
  c.drift.baseline_sd = Uniform(rng, 0.05, 0.15);
  c.drift.coefficient_sd = Uniform(rng, 0.02, 0.06);
  if (Uniform(rng) < 0.4) {
    c.drift.breaks.push_back({UniformInt(rng, 120, 610), 0.3 * Normal(rng)});
  }
  c.drift.mixture_weight_slope = c.family == D::kMixture ? Uniform(rng, -1.0, 1.0) : 0.0;
  c.drift.covariate_sd = 0.01;

  c.holding_cost = Round2(Uniform(rng, 0.5, 2.0));
  c.penalty_cost = Round2(10.0 * c.holding_cost);
  c.lead_time = 5;
  return c;
}

}  // namespace

std::vector<SeedConfig> DefaultCatalog(std::uint64_t rng_seed) {
  std::vector<SeedConfig> out;
  for (const auto& a : Archetypes()) {
    for (int k = 0; k < a.seeds; ++k) {
      out.push_back(DrawSeed(a, k, DeriveSeed(rng_seed, {0xCA7A, out.size()})));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slicing

bool SlicesSeparated(std::span<const int> starts, int min_separation) {
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t j = i + 1; j < starts.size(); ++j) {
      if (std::abs(starts[i] - starts[j]) < min_separation) return false;
    }
  }
  return true;
}

std::vector<int> SliceStarts(int n_slices, int series_length, std::uint64_t seed,
                             int min_separation, int slice_length) {
  if (n_slices < 1) throw InputError("need at least one slice");
  if (series_length < slice_length) {
    throw InputError("series of " + std::to_string(series_length) +
                     " days is shorter than one slice");
  }
  constexpr int kMaxDraws = 100000;
  Rng rng(DeriveSeed(seed, {0x511CE}));
  std::vector<int> starts;
  for (int draw = 0; draw < kMaxDraws && static_cast<int>(starts.size()) < n_slices; ++draw) {
    const int s = UniformInt(rng, 0, series_length - slice_length);
    if (std::all_of(starts.begin(), starts.end(),
                    [&](int t) { return std::abs(s - t) >= min_separation; })) {
      starts.push_back(s);
    }
  }
  if (static_cast<int>(starts.size()) < n_slices) {
    throw InputError("could not place " + std::to_string(n_slices) + " slices " +
                     std::to_string(min_separation) + " days apart in " +
                     std::to_string(series_length) + " days");
  }
  std::sort(starts.begin(), starts.end());
  return starts;
}

// ---------------------------------------------------------------------------
// Stationary benchmark samplers

std::string_view StationaryName(Stationary d) {
  switch (d) {
    case Stationary::kGeometric: return "Geometric(1/6)";
    case Stationary::kPoisson: return "Poisson(5)";
    case Stationary::kBinomial: return "Binomial(10,0.5)";
    case Stationary::kGamma: return "Gamma(k=2,mu=5)";
    case Stationary::kHalfNormal: return "HalfNormal(mu=5)";
    case Stationary::kUniform: return "Uniform{0..10}";
  }
  return "";
}

std::string_view StationarySlug(Stationary d) {
  switch (d) {
    case Stationary::kGeometric: return "geometric";
    case Stationary::kPoisson: return "poisson";
    case Stationary::kBinomial: return "binomial";
    case Stationary::kGamma: return "gamma";
    case Stationary::kHalfNormal: return "half_normal";
    case Stationary::kUniform: return "uniform";
  }
  return "";
}

Stationary StationaryFromName(std::string_view name) {
  for (Stationary d : kAllStationary) {
    if (name == StationarySlug(d) || name == StationaryName(d)) return d;
  }
  throw InputError("unknown demand distribution '" + std::string(name) + "'");
}

std::vector<double> SampleStationary(Stationary d, int horizon, std::uint64_t seed) {
  if (horizon < 0) throw InputError("horizon must be >= 0");
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(horizon));
  boost::random::geometric_distribution<int> geometric(1.0 / 6.0);
  boost::random::poisson_distribution<int> poisson(5.0);
  boost::random::binomial_distribution<int> binomial(10, 0.5);
  boost::random::gamma_distribution<double> gamma(2.0, 2.5);
  boost::random::normal_distribution<double> normal(0.0, 5.0 * std::sqrt(std::numbers::pi / 2));
  boost::random::uniform_int_distribution<int> uniform(0, 10);
  for (auto& x : out) {
    switch (d) {
      case Stationary::kGeometric: x = geometric(rng); break;
      case Stationary::kPoisson: x = poisson(rng); break;
      case Stationary::kBinomial: x = binomial(rng); break;
      case Stationary::kGamma: x = std::round(gamma(rng)); break;
      case Stationary::kHalfNormal: x = std::round(std::fabs(normal(rng))); break;
      case Stationary::kUniform: x = uniform(rng); break;
    }
  }
  return out;
}

}  // namespace invevolve
