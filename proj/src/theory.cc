#include "invevolve/theory.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "invevolve/engine.h"
#include "invevolve/errors.h"
#include "invevolve/parallel.h"
#include "invevolve/proposal.h"
#include "invevolve/rng.h"

namespace invevolve {

using nlohmann::json;

namespace {

using Rng = boost::random::mt19937_64;

double U01(Rng& rng) { return boost::random::uniform_01<double>()(rng); }
double Uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * U01(rng); }
int Pick(Rng& rng, int n) { return boost::random::uniform_int_distribution<int>(0, n - 1)(rng); }

double Mass(std::span<const double> p, const std::vector<bool>& set) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (set[i]) m += p[i];
  }
  return m;
}

void RequireLaw(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + " has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError(std::string(what) + " does not sum to 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// Concentration

std::vector<bool> ProxyUniverse::Good() const {
  std::vector<bool> g(success.size());
  for (std::size_t i = 0; i < success.size(); ++i) g[i] = valid[i] && success[i] >= tau_good;
  return g;
}

double ProxyUniverse::Margin() const {
  const auto g = Good();
  double bad = -1.0;
  for (std::size_t i = 0; i < success.size(); ++i) {
    if (!g[i]) bad = std::max(bad, success[i]);
  }
  return bad < 0.0 ? tau_good : tau_good - bad;
}

double ProxyUniverse::InitialRatio() const {
  const auto g = Good();
  std::vector<bool> b(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) b[i] = !g[i];
  return Mass(p0, b) / Mass(p0, g);
}

double ProxyUniverse::Rho(int k) const {
  return InitialRatio() * std::exp(-eta * (k * Margin() - 2.0 * eps_k));
}

void ProxyUniverse::Validate() const {
  const std::size_t n = success.size();
  if (n == 0 || valid.size() != n || p0.size() != n) {
    throw ConfigError("universe needs matching success, validity and p0 vectors");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(success[i] >= 0.0 && success[i] <= 1.0)) throw ConfigError("success must lie in [0,1]");
    if (!valid[i] && success[i] != 0.0) throw ConfigError("invalid policies have zero success");
  }
  if (!(tau_good > 0.0 && tau_good < 1.0)) throw ConfigError("tau_good must lie in (0,1)");
  if (!(eta >= 0.0) || !(eps_k >= 0.0)) throw ConfigError("eta and eps_K must be >= 0");
  try {
    RequireLaw(p0, "p0");
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  if (!(Mass(p0, Good()) > 0.0)) throw ConfigError("p0 must put mass on the good region");
  if (!(Margin() > 0.0)) throw ConfigError("margin gamma must be > 0");
}

ProxyUniverse MakeProxyUniverse(int n, double gamma, double tau_good, double good_mass,
                                double eta, double eps_k, std::uint64_t seed) {
  if (n < 2) throw ConfigError("universe needs at least two policies");
  if (!(gamma > 0.0 && gamma <= tau_good)) throw ConfigError("need 0 < gamma <= tau_good");
  if (!(good_mass > 0.0 && good_mass < 1.0)) throw ConfigError("good mass must lie in (0,1)");
  Rng rng(DeriveSeed(seed, {0x7E0}));
  ProxyUniverse u;
  u.tau_good = tau_good;
  u.eta = eta;
  u.eps_k = eps_k;
  std::vector<bool> good(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    bool ok = true;
    if (i == 0) {
      s = tau_good;
      good[i] = true;
    } else if (i == 1) {
      s = tau_good - gamma;
    } else if (U01(rng) < 0.1) {
      ok = false;
    } else if (U01(rng) < 0.3) {
      s = Uniform(rng, tau_good, 1.0);
      good[i] = true;
    } else {
      s = Uniform(rng, 0.0, tau_good - gamma);
    }
    u.success.push_back(s);
    u.valid.push_back(ok);
  }
  std::vector<double> w(n);
  double wg = 0.0, wb = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = Uniform(rng, 0.5, 1.5);
    (good[i] ? wg : wb) += w[i];
  }
  for (int i = 0; i < n; ++i) {
    u.p0.push_back(good[i] ? good_mass * w[i] / wg : (1.0 - good_mass) * w[i] / wb);
  }
  u.Validate();
  return u;
}

std::vector<double> ProxyStep(std::span<const double> p, std::span<const double> estimates,
                              double eta) {
  if (p.size() != estimates.size() || p.empty()) throw InputError("law and estimates differ in size");
  RequireLaw(p, "law");
  for (double e : estimates) {
    if (!(e >= 0.0 && e <= 1.0)) throw InputError("estimates must lie in [0,1]");
  }
  const double top = *std::max_element(estimates.begin(), estimates.end());
  std::vector<double> out(p.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] * std::exp(eta * (estimates[i] - top));
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

json ConcentrationReport::ToJson() const {
  return {{"check", "concentration"}, {"K", k},          {"trials", trials},
          {"gamma", gamma},           {"eta", eta},      {"eps_K", eps_k},
          {"rho_K", rho},             {"mass_lower", mass_lower},
          {"max_ratio", max_ratio},   {"min_good_mass", min_good_mass},
          {"max_bad_mass", max_bad_mass}, {"failures", failures},
          {"holds", holds}};
}

ConcentrationReport VerifyConcentration(const ProxyUniverse& u, int k, int trials, NoiseKind noise,
                              double amplitude, std::uint64_t seed) {
  u.Validate();
  if (k < 0 || trials < 1) throw ConfigError("need K >= 0 and trials >= 1");
  const auto good = u.Good();
  std::vector<bool> bad(good.size());
  for (std::size_t i = 0; i < good.size(); ++i) bad[i] = !good[i];
  const std::size_t n = u.success.size();

  ConcentrationReport r;
  r.k = k;
  r.trials = trials;
  r.gamma = u.Margin();
  r.eta = u.eta;
  r.eps_k = u.eps_k;
  r.rho = u.Rho(k);
  r.mass_lower = 1.0 / (1.0 + r.rho);

  for (int t = 0; t < trials; ++t) {
    Rng rng(DeriveSeed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<double> p = u.p0, cum(n, 0.0), est(n);
    for (int step = 0; step < k; ++step) {
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        switch (noise) {
          case NoiseKind::kNone: break;
          case NoiseKind::kRandom:
            d = std::clamp(Uniform(rng, -amplitude, amplitude), -u.eps_k - cum[i],
                           u.eps_k - cum[i]);
            break;
          case NoiseKind::kAdversarial: d = (good[i] ? -1.0 : 1.0) * u.eps_k / k; break;
          case NoiseKind::kUnprojected: d = Uniform(rng, -amplitude, amplitude); break;
        }
        est[i] = std::clamp(u.success[i] + d, 0.0, 1.0);
        cum[i] += est[i] - u.success[i];
      }
      p = ProxyStep(p, est, u.eta);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (u.p0[i] > 0.0 && std::abs(cum[i]) > u.eps_k + 1e-12) {
        throw ConfigError("noise breaks the cumulative bound eps_K (|sum| = " +
                          std::to_string(std::abs(cum[i])) + "); invalid experiment");
      }
    }
    const double pg = Mass(p, good), pb = Mass(p, bad);
    const double ratio = pb / pg;
    r.max_ratio = std::max(r.max_ratio, ratio);
    r.min_good_mass = std::min(r.min_good_mass, pg);
    r.max_bad_mass = std::max(r.max_bad_mass, pb);
    // Mass bounds are algebraic consequences of the ratio; the slack only
    // absorbs the rounding of pg + pb = 1.
    const bool ok = ratio <= r.rho && pg >= r.mass_lower - 1e-12 &&
                    pb <= r.rho / (1.0 + r.rho) + 1e-12;
    if (!ok) ++r.failures;
  }
  r.holds = r.failures == 0;
  return r;
}

// ---------------------------------------------------------------------------
// Coverage

double TotalVariation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("laws differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> AdversarialLaw(std::span<const double> p, const std::vector<bool>& set,
                                   double tau) {
  if (set.size() != p.size()) throw InputError("set and law differ in size");
  std::vector<double> q(p.begin(), p.end());
  const double in = Mass(p, set);
  const auto outside = std::count(set.begin(), set.end(), false);
  if (outside == 0 || in <= 0.0 || tau <= 0.0) return q;
  const double moved = std::min(tau, in);
  const double out_mass = 1.0 - in;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (set[i]) {
      q[i] = p[i] * (1.0 - moved / in);
    } else {
      q[i] = out_mass > 0.0 ? p[i] + moved * p[i] / out_mass
                            : p[i] + moved / static_cast<double>(outside);
    }
  }
  return q;
}

json ProposalCoverageReport::ToJson() const {
  return {{"check", "coverage"},
          {"rho_K", rho},
          {"tau", tau},
          {"kappa", kappa},
          {"kappa_bar", kappa_bar},
          {"q", q},
          {"q_bar", q_bar},
          {"mass_promotable", mass_promotable},
          {"mass_safe", mass_safe},
          {"witnessed_promotable", witnessed_promotable},
          {"witnessed_safe", witnessed_safe},
          {"tv_promotable", tv_promotable},
          {"tv_safe", tv_safe},
          {"holds", holds}};
}

ProposalCoverageReport VerifyProposalCoverage(std::span<const double> p, const std::vector<bool>& good,
                          const std::vector<bool>& promotable, const std::vector<bool>& safe,
                          double tau, double kappa, double kappa_bar, double rho) {
  if (good.size() != p.size() || promotable.size() != p.size() || safe.size() != p.size()) {
    throw ConfigError("sets and law differ in size");
  }
  if (!(tau >= 0.0) || !(rho >= 0.0) || !(kappa >= 0.0 && kappa <= 1.0) ||
      !(kappa_bar >= 0.0 && kappa_bar <= 1.0)) {
    throw ConfigError("need tau, rho >= 0 and kappa, kappa_bar in [0,1]");
  }
  RequireLaw(p, "p_K");
  const double pg = Mass(p, good);
  if (pg < 1.0 / (1.0 + rho) - 1e-12) throw ConfigError("p_K(good) is below 1/(1+rho_K)");
  auto conditional = [&](const std::vector<bool>& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (s[i] && good[i]) m += p[i];
    }
    return m / pg;
  };
  if (conditional(promotable) < kappa - 1e-12) throw ConfigError("promotable overlap below kappa");
  if (conditional(safe) < kappa_bar - 1e-12) throw ConfigError("safe overlap below kappa_bar");

  ProposalCoverageReport r;
  r.rho = rho;
  r.tau = tau;
  r.kappa = kappa;
  r.kappa_bar = kappa_bar;
  r.q = std::max(kappa / (1.0 + rho) - tau, 0.0);
  r.q_bar = std::max(kappa_bar / (1.0 + rho) - tau, 0.0);
  r.mass_promotable = Mass(p, promotable);
  r.mass_safe = Mass(p, safe);
  const auto qp = AdversarialLaw(p, promotable, tau);
  const auto qs = AdversarialLaw(p, safe, tau);
  r.witnessed_promotable = Mass(qp, promotable);
  r.witnessed_safe = Mass(qs, safe);
  r.tv_promotable = TotalVariation(p, qp);
  r.tv_safe = TotalVariation(p, qs);
  r.holds = r.q >= 0.0 && r.q <= 1.0 && r.q_bar >= 0.0 && r.q_bar <= 1.0 &&
            r.tv_promotable <= tau + 1e-12 && r.tv_safe <= tau + 1e-12 &&
            r.witnessed_promotable >= r.q - 1e-12 && r.witnessed_safe >= r.q_bar - 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic epochs

namespace {

// Replay values lie in [kValueLo, kValueHi]; the reference has value 0.
constexpr double kValueLo = -0.5;
constexpr double kValueHi = 1.0;

SystemConfig HarnessSystem(int samples) { return {1, 1.0, 10.0, std::max(1, samples)}; }

PolicySpec PolicyAt(int i) { return ConstantOrder{static_cast<double>(i)}; }

// Gains Z = v(c) - v(comp) + U(-a, a), drawn afresh for every pair.
class SyntheticEvaluator : public PairEvaluator {
 public:
  SyntheticEvaluator(const std::vector<double>& values, int samples, double noise,
                     std::uint64_t seed)
      : values_(values), samples_(samples), noise_(noise), system_(HarnessSystem(samples)),
        rng_(seed) {
    for (int i = 0; i < static_cast<int>(values.size()); ++i) {
      index_[CanonicalString(PolicyAt(i))] = i;
    }
  }

  std::vector<double> Gains(const PolicySpec& candidate, const PolicySpec& comparator) override {
    const int c = Index(candidate), k = Index(comparator);
    evaluated_.emplace_back(c, k);
    std::vector<double> z(samples_);
    for (double& v : z) v = values_[c] - values_[k] + noise_ * (2.0 * U01(rng_) - 1.0);
    return z;
  }
  const SystemConfig& system() const override { return system_; }
  int window_days() const override { return samples_; }

  int Index(const PolicySpec& p) const {
    const auto it = index_.find(CanonicalString(p));
    if (it == index_.end()) throw ConfigError("policy outside the harness universe");
    return it->second;
  }
  const std::vector<std::pair<int, int>>& evaluated() const { return evaluated_; }

 private:
  const std::vector<double>& values_;
  int samples_;
  double noise_;
  SystemConfig system_;
  Rng rng_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::pair<int, int>> evaluated_;
};

// Draws from `hit` with probability q, otherwise from `miss`; an empty side
// defers to the other.
class SplitProposer : public ProposalSource {
 public:
  SplitProposer(std::vector<int> hit, std::vector<int> miss, double q, std::uint64_t seed)
      : hit_(std::move(hit)), miss_(std::move(miss)), q_(q), rng_(seed) {}

  Proposal Propose(const ProposalContext&) override {
    const bool from_hit = !hit_.empty() && (miss_.empty() || U01(rng_) < q_);
    const auto& side = from_hit ? hit_ : miss_;
    return {PolicyAt(side[static_cast<std::size_t>(Pick(rng_, static_cast<int>(side.size())))]),
            from_hit ? "hit" : "miss", ""};
  }

 private:
  std::vector<int> hit_, miss_;
  double q_;
  Rng rng_;
};

struct SyntheticEpoch {
  std::vector<double> v;      // replay value relative to the reference
  std::vector<double> shift;  // deployment value = v + shift, |shift| <= xi / 2
  double Dep(int a, int b) const { return v[a] - v[b] + shift[a] - shift[b]; }
};

// Index 0 is the reference and 1..baselines the other baselines.
SyntheticEpoch DrawValues(int n, int baselines, double xi, Rng& rng) {
  SyntheticEpoch e;
  e.v.assign(n, 0.0);
  e.shift.assign(n, 0.0);
  for (int i = 1; i < n; ++i) {
    e.v[i] = i <= baselines ? Uniform(rng, kValueLo, -0.05) : Uniform(rng, kValueLo, kValueHi);
  }
  for (int i = 0; i < n; ++i) e.shift[i] = Uniform(rng, -0.5 * xi, 0.5 * xi);
  return e;
}

double GainBound(double noise) { return (kValueHi - kValueLo) + noise; }

EpochConfig HarnessConfig(int rounds, double epsilon, double delta, double xi, double noise,
                          CertMethod method, bool invert) {
  EpochConfig cfg;
  cfg.rounds = rounds;
  cfg.epsilon = epsilon;
  cfg.delta = delta;
  cfg.xi = xi;
  cfg.method = method;
  cfg.gain_bound = GainBound(noise);
  cfg.debug_invert_gate = invert;
  cfg.Validate();
  return cfg;
}

std::vector<PolicySpec> BaselinePolicies(int baselines) {
  std::vector<PolicySpec> out;
  for (int i = 0; i <= baselines; ++i) out.push_back(PolicyAt(i));
  return out;
}

// True when every evaluated pair's interval contains its replay value.
bool Covered(const EpochState& state, const SyntheticEvaluator& ev, const SyntheticEpoch& e) {
  for (const auto& [c, k] : ev.evaluated()) {
    const ConfidenceBound* b = state.Stat(PolicyAt(c), PolicyAt(k));
    if (b == nullptr) throw ConfigError("evaluated pair missing from the epoch statistics");
    // The slack absorbs summation rounding when the radius is 0.
    if (std::abs(b->mean - (e.v[c] - e.v[k])) > b->radius + 1e-12) return false;
  }
  return true;
}

void ValidateCommon(double q, int rounds, double delta, double epsilon, double xi, int samples,
                    double noise, int universe, int baselines, CertMethod method) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("proposal probability must lie in [0,1]");
  if (rounds < 1) throw ConfigError("J must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (!(epsilon > 0.0) || !(xi >= 0.0)) throw ConfigError("need epsilon > 0 and xi >= 0");
  if (samples < 2 || !(noise >= 0.0)) throw ConfigError("need samples >= 2 and noise >= 0");
  if (baselines < 0 || universe < baselines + 3) {
    throw ConfigError("universe must hold the baselines and at least two candidates");
  }
  if (method == CertMethod::kBlockwiseT && noise != 0.0) {
    throw ConfigError("blockwise-t harness runs require noise 0");
  }
}

double HarnessRadius(CertMethod method, double noise, int samples, int baselines, int rounds,
                     double delta) {
  if (method == CertMethod::kBlockwiseT) return 0.0;
  return HoeffdingRadius(GainBound(noise), samples, EvaluationBudget(baselines + 1, rounds),
                         delta);
}

}  // namespace

double BinomialSigma(double p, int n) {
  const double c = std::clamp(p, 0.0, 1.0);
  return n > 0 ? std::sqrt(c * (1.0 - c) / n) : 0.0;
}

void PromotionHarness::Validate() const {
  ValidateCommon(q, rounds, delta, epsilon, xi, samples, noise, universe, baselines, method);
  const double t = epsilon + xi + 2.0 * HarnessRadius(method, noise, samples, baselines, rounds, delta);
  if (t > kValueHi) {
    throw ConfigError("no promotable policy exists: threshold " + std::to_string(t) +
                      " exceeds the largest value; raise samples");
  }
}

json PromotionHarness::ToJson() const {
  return {{"q", q},         {"J", rounds},         {"delta", delta},
          {"epsilon", epsilon}, {"xi", xi},         {"samples", samples},
          {"noise", noise}, {"universe", universe}, {"baselines", baselines},
          {"near_miss", near_miss}, {"method", CertMethodName(method)},
          {"invert_gate", invert_gate}};
}

json PromotionReport::ToJson() const {
  return {{"check", "promotion"},
          {"harness", harness.ToJson()},
          {"trials", trials},
          {"successes", successes},
          {"promoted_trials", promoted_trials},
          {"first_round_promotions", first_round_promotions},
          {"unsafe_promotions", unsafe_promotions},
          {"coverage_failures", coverage_failures},
          {"radius", radius},
          {"bound", bound},
          {"frequency", frequency},
          {"sigma", sigma},
          {"holds", holds}};
}

PromotionReport VerifyPromotion(const PromotionHarness& h, int trials, std::uint64_t seed,
                              int jobs) {
  h.Validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const double rad = HarnessRadius(h.method, h.noise, h.samples, h.baselines, h.rounds, h.delta);
  const double threshold = h.epsilon + h.xi + 2.0 * rad;
  const EpochConfig cfg =
      HarnessConfig(h.rounds, h.epsilon, h.delta, h.xi, h.noise, h.method, h.invert_gate);
  const auto baselines = BaselinePolicies(h.baselines);

  struct Outcome {
    bool success = false, promoted = false, first = false, covered = true;
    int unsafe = 0;
  };
  std::vector<Outcome> out(trials);
  ParallelFor(trials, jobs, [&](int t) {
    Rng rng(DeriveSeed(seed, {static_cast<std::uint64_t>(t), 0}));
    SyntheticEpoch e = DrawValues(h.universe, h.baselines, h.xi, rng);
    std::vector<int> hit, miss;
    for (int i = h.baselines + 1; i < h.universe; ++i) {
      const bool promotable = i == h.baselines + 1 || (i > h.baselines + 2 && U01(rng) < 0.3);
      e.v[i] = promotable ? Uniform(rng, threshold, kValueHi)
                          : Uniform(rng, kValueLo, h.near_miss ? threshold : 0.0);
      (promotable ? hit : miss).push_back(i);
    }
    SyntheticEvaluator ev(e.v, h.samples, h.noise,
                          DeriveSeed(seed, {static_cast<std::uint64_t>(t), 1}));
    SplitProposer proposer(hit, miss, h.q, DeriveSeed(seed, {static_cast<std::uint64_t>(t), 2}));
    const EpochResult res = RunEpoch(ev, baselines, std::nullopt, PolicyAt(0), proposer, cfg);

    Outcome& o = out[t];
    o.covered = Covered(res.state, ev, e);
    int ch = ev.Index(res.state.champion_trajectory.front());
    for (const auto& d : res.state.decisions) {
      if (!d.promoted) continue;
      const int c = ev.Index(*d.candidate);
      o.promoted = true;
      if (d.round == 1) o.first = true;
      const bool good = e.Dep(c, 0) >= 0.0 && e.Dep(c, ch) >= h.epsilon;
      if (good) {
        o.success = true;
      } else {
        ++o.unsafe;
      }
      ch = c;
    }
  });

  PromotionReport r;
  r.harness = h;
  r.trials = trials;
  r.radius = rad;
  int gate_errors = 0;
  for (const auto& o : out) {
    r.successes += o.success;
    r.promoted_trials += o.promoted;
    r.first_round_promotions += o.first;
    r.unsafe_promotions += o.unsafe;
    r.coverage_failures += !o.covered;
    if (o.covered) gate_errors += o.unsafe;
  }
  r.bound = 1.0 - h.delta - std::pow(1.0 - h.q, h.rounds);
  r.frequency = static_cast<double>(r.successes) / trials;
  r.sigma = BinomialSigma(r.bound, trials);
  // On covered trials every promotion must be truly safe and improving.
  r.holds = r.frequency >= r.bound - 3.0 * r.sigma && gate_errors == 0;
  return r;
}

void RollingHarness::Validate() const {
  ValidateCommon(q_bar, rounds, delta, epsilon, xi, samples, noise, universe, baselines, method);
  if (periods < 1) throw ConfigError("horizon T must be >= 1");
  if (!(nu >= 0.0)) throw ConfigError("nu must be >= 0");
}

json RollingHarness::ToJson() const {
  return {{"T", periods},   {"q_bar", q_bar},       {"J", rounds},
          {"delta", delta}, {"epsilon", epsilon},   {"xi", xi},
          {"nu", nu},       {"samples", samples},   {"noise", noise},
          {"universe", universe}, {"baselines", baselines},
          {"method", CertMethodName(method)},       {"invert_gate", invert_gate}};
}

json RollingReport::ToJson() const {
  json periods = json::array();
  for (const auto& p : example) {
    periods.push_back({{"oracle", p.oracle},
                       {"deployed", p.deployed},
                       {"nu", p.nu},
                       {"rad_tilde", p.rad_tilde},
                       {"rad_deployed", p.rad_deployed},
                       {"xi", p.xi},
                       {"Gamma", p.Gamma()}});
  }
  return {{"check", "rolling"},
          {"harness", harness.ToJson()},
          {"trials", trials},
          {"g_events", g_events},
          {"safety_violations", safety_violations},
          {"gap_violations", gap_violations},
          {"unsafe_periods_any", unsafe_periods_any},
          {"max_gap_ratio", max_gap_ratio},
          {"lower_bound", lower_bound},
          {"frequency", frequency},
          {"sigma", sigma},
          {"example", periods},
          {"holds", holds}};
}

RollingReport VerifyRolling(const RollingHarness& h, int trials, std::uint64_t seed,
                              int jobs) {
  h.Validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const double rad = HarnessRadius(h.method, h.noise, h.samples, h.baselines, h.rounds, h.delta);
  const EpochConfig cfg =
      HarnessConfig(h.rounds, h.epsilon, h.delta, h.xi, h.noise, h.method, h.invert_gate);
  const auto baselines = BaselinePolicies(h.baselines);

  struct Outcome {
    bool g = true;
    int unsafe = 0, unsafe_any = 0;
    double gap = 0.0, gamma = 0.0;
    std::vector<PeriodGap> periods;
  };
  std::vector<Outcome> out(trials);
  ParallelFor(trials, jobs, [&](int t) {
    Outcome& o = out[t];
    for (int period = 0; period < h.periods; ++period) {
      const auto key = [&](std::uint64_t k) {
        return DeriveSeed(seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(period), k});
      };
      Rng rng(key(0));
      SyntheticEpoch e = DrawValues(h.universe, h.baselines, h.xi, rng);
      e.v[h.baselines + 1] = kValueHi;  // keeps the safe class beyond the reference

      // Ground truth: safe class, its oracle value and the nu-near set.
      std::vector<bool> safe(h.universe, false), near(h.universe, false);
      safe[0] = true;
      for (int i = 1; i < h.universe; ++i) safe[i] = e.v[i] - h.xi - 2.0 * rad >= 0.0;
      double oracle = -1e300;
      for (int i = 0; i < h.universe; ++i) {
        if (safe[i]) oracle = std::max(oracle, e.Dep(i, 0));
      }
      std::vector<int> hit, miss;
      for (int i = 0; i < h.universe; ++i) {
        near[i] = safe[i] && oracle - e.Dep(i, 0) <= h.nu;
        if (near[i]) {
          hit.push_back(i);
        } else if (i > h.baselines) {
          miss.push_back(i);
        }
      }

      SyntheticEvaluator ev(e.v, h.samples, h.noise, key(1));
      SplitProposer proposer(hit, miss, h.q_bar, key(2));
      const EpochResult res = RunEpoch(ev, baselines, std::nullopt, PolicyAt(0), proposer, cfg);

      const bool covered = Covered(res.state, ev, e);
      bool discovered = false;
      for (const auto& d : res.state.decisions) {
        if (d.candidate && near[ev.Index(*d.candidate)]) discovered = true;
      }
      o.g = o.g && covered && discovered;

      const int dep = ev.Index(res.deployed);
      auto radius = [&](int i) {
        const ConfidenceBound* b = res.state.Stat(PolicyAt(i), PolicyAt(0));
        return b ? b->radius : 0.0;
      };
      PeriodGap g;
      g.oracle = oracle;
      g.deployed = e.Dep(dep, 0);
      g.nu = h.nu;
      g.xi = h.xi;
      g.rad_deployed = radius(dep);
      // Any selector from the near set within the final pool; take the
      // smallest radius.
      g.rad_tilde = 1e300;
      for (const auto& p : res.state.pool) {
        const int i = ev.Index(p);
        if (near[i]) g.rad_tilde = std::min(g.rad_tilde, radius(i));
      }
      if (g.rad_tilde == 1e300) g.rad_tilde = 0.0;  // only reachable off G_T
      if (g.deployed < 0.0) {
        ++o.unsafe_any;
        ++o.unsafe;
      }
      o.gap += g.oracle - g.deployed;
      o.gamma += g.Gamma();
      o.periods.push_back(g);
    }
  });

  RollingReport r;
  r.harness = h;
  r.trials = trials;
  for (const auto& o : out) {
    r.unsafe_periods_any += o.unsafe_any;
    if (!o.g) continue;
    ++r.g_events;
    r.safety_violations += o.unsafe;
    if (o.gap > o.gamma) ++r.gap_violations;
    if (o.gamma > 0.0) r.max_gap_ratio = std::max(r.max_gap_ratio, o.gap / o.gamma);
    if (r.example.empty()) r.example = o.periods;
  }
  r.lower_bound = 1.0 - h.periods * (h.delta + std::pow(1.0 - h.q_bar, h.rounds));
  r.frequency = static_cast<double>(r.g_events) / trials;
  r.sigma = BinomialSigma(r.lower_bound, trials);
  r.holds = r.safety_violations == 0 && r.gap_violations == 0 &&
            r.frequency >= r.lower_bound - 3.0 * r.sigma;
  return r;
}

// ---------------------------------------------------------------------------
// Reporting

json ConcentrationGridReport::ToJson() const {
  return {{"check", "concentration_grid"}, {"cells", cells},         {"trials", trials},
          {"failures", failures},          {"min_slack", min_slack}, {"holds", holds}};
}

ConcentrationGridReport VerifyConcentrationGrid(int trials_per_cell, std::uint64_t seed) {
  if (trials_per_cell < 1) throw ConfigError("trials per cell must be >= 1");
  ConcentrationGridReport out;
  out.min_slack = INFINITY;
  for (int n : {10, 100}) {
    for (double gamma : {0.05, 0.2, 0.4}) {
      for (double eta : {0.5, 2.0}) {
        for (int k : {1, 10, 40}) {
          for (double frac : {0.0, 0.25, 0.5}) {
            const auto cell = static_cast<std::uint64_t>(out.cells++);
            const auto u = MakeProxyUniverse(n, gamma, 0.5, 0.2, eta, frac * k * gamma,
                                             DeriveSeed(seed, {cell, 0}));
            std::uint64_t kind = 1;
            for (auto noise : {NoiseKind::kRandom, NoiseKind::kAdversarial}) {
              const auto r = VerifyConcentration(u, k, trials_per_cell, noise, 0.3,
                                            DeriveSeed(seed, {cell, kind++}));
              out.trials += r.trials;
              out.failures += r.failures;
              out.min_slack = std::min(out.min_slack, r.rho - r.max_ratio);
            }
          }
        }
      }
    }
  }
  out.holds = out.failures == 0 && out.min_slack >= 0.0;
  return out;
}

json HoeffdingCoverageReport::ToJson() const {
  return {{"check", "confidence_coverage"},
          {"replications", replications},
          {"pairs", pairs},
          {"samples", samples},
          {"delta", delta},
          {"radius", radius},
          {"covered", covered},
          {"frequency", frequency},
          {"sigma", sigma},
          {"holds", holds}};
}

HoeffdingCoverageReport VerifyHoeffdingCoverage(int replications, int pairs, int samples,
                                                double delta, std::uint64_t seed, int jobs) {
  if (replications < 1 || pairs < 1 || samples < 1) {
    throw ConfigError("replications, pairs and samples must be >= 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  constexpr double kBound = 1.0;
  HoeffdingCoverageReport out;
  out.replications = replications;
  out.pairs = pairs;
  out.samples = samples;
  out.delta = delta;
  out.radius = HoeffdingRadius(kBound, samples, pairs, delta);
  std::vector<char> covered(replications, 0);
  ParallelFor(replications, jobs, [&](int rep) {
    Rng rng(DeriveSeed(seed, {static_cast<std::uint64_t>(rep)}));
    boost::random::uniform_01<double> unif;
    bool all = true;
    for (int i = 0; i < pairs; ++i) {
      const double p = pairs == 1 ? 0.5 : 0.1 + 0.8 * i / (pairs - 1);
      double sum = 0.0;
      for (int l = 0; l < samples; ++l) sum += unif(rng) < p ? kBound : -kBound;
      const double truth = kBound * (2.0 * p - 1.0);
      all = all && std::fabs(sum / samples - truth) <= out.radius;
    }
    covered[rep] = all;
  });
  out.covered = static_cast<int>(std::count(covered.begin(), covered.end(), 1));
  out.frequency = static_cast<double>(out.covered) / replications;
  out.sigma = BinomialSigma(1.0 - delta, replications);
  out.holds = out.frequency >= 1.0 - delta - 3.0 * out.sigma;
  return out;
}

std::string GuaranteeMarkdown(std::span<const json> reports) {
  std::ostringstream md;
  md << std::setprecision(6);
  md << "| check | parameters | statistic | bound | holds |\n"
     << "|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const std::string check = r.value("check", "?");
    std::ostringstream params, stat, bound;
    params << std::setprecision(4);
    stat << std::setprecision(6);
    bound << std::setprecision(6);
    if (check == "concentration") {
      params << "K=" << r["K"] << " gamma=" << r["gamma"].get<double>() << " eta=" << r["eta"]
             << " eps_K=" << r["eps_K"].get<double>() << " trials=" << r["trials"];
      stat << "max ratio " << r["max_ratio"].get<double>() << ", failures " << r["failures"];
      bound << "rho_K " << r["rho_K"].get<double>();
    } else if (check == "coverage") {
      params << "tau=" << r["tau"].get<double>() << " kappa=" << r["kappa"].get<double>()
             << " kappa_bar=" << r["kappa_bar"].get<double>();
      stat << "Q(prom) " << r["witnessed_promotable"].get<double>() << ", Q(safe) "
           << r["witnessed_safe"].get<double>();
      bound << "q " << r["q"].get<double>() << ", q_bar " << r["q_bar"].get<double>();
    } else if (check == "promotion") {
      const auto& h = r["harness"];
      params << "q=" << h["q"].get<double>() << " J=" << h["J"] << " delta="
             << h["delta"].get<double>() << " trials=" << r["trials"];
      stat << "frequency " << r["frequency"].get<double>() << " (sigma "
           << r["sigma"].get<double>() << ")";
      bound << r["bound"].get<double>();
    } else if (check == "rolling") {
      const auto& h = r["harness"];
      params << "T=" << h["T"] << " q_bar=" << h["q_bar"].get<double>() << " J=" << h["J"]
             << " trials=" << r["trials"];
      stat << "P(G_T) " << r["frequency"].get<double>() << ", unsafe " << r["safety_violations"]
           << ", gap breaches " << r["gap_violations"];
      bound << r["lower_bound"].get<double>();
    } else if (check == "concentration_grid") {
      params << "cells=" << r["cells"] << " trials=" << r["trials"];
      stat << "failures " << r["failures"] << ", min slack " << r["min_slack"].get<double>();
      bound << "ratio <= rho_K";
    } else if (check == "confidence_coverage") {
      params << "N=" << r["pairs"] << " m=" << r["samples"] << " delta="
             << r["delta"].get<double>() << " reps=" << r["replications"];
      stat << "joint coverage " << r["frequency"].get<double>() << " (sigma "
           << r["sigma"].get<double>() << ")";
      bound << 1.0 - r["delta"].get<double>();
    } else {
      params << "-";
      stat << "-";
      bound << "-";
    }
    md << "| " << check << " | " << params.str() << " | " << stat.str() << " | " << bound.str()
       << " | " << (r.value("holds", false) ? "yes" : "NO") << " |\n";
  }
  return md.str();
}

}  // namespace invevolve
