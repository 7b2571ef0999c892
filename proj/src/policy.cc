#include "invevolve/policy.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invevolve/errors.h"

namespace invevolve {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double Gap(double S, double ip) { return std::max(0.0, S - ip); }

double RoundHalfEven(double x) {
  const double r = std::round(x);
  if (std::fabs(x - std::trunc(x)) == 0.5) return 2.0 * std::round(x / 2.0);
  return r;
}

double ToGrid(double x) { return std::round(x / kParameterGrid) * kParameterGrid; }

bool NonNegative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kBaseStock: return "BaseStock";
    case Family::kCappedBaseStock: return "CappedBaseStock";
    case Family::kConstantOrder: return "ConstantOrder";
    case Family::kNewsvendor: return "Newsvendor";
    case Family::kSmallSBigS: return "SmallSBigS";
    case Family::kTiltedCbs: return "TiltedCBS";
    case Family::kTiltedPic: return "TiltedPIC";
  }
  return "?";
}

std::string_view FamilySlug(Family family) {
  switch (family) {
    case Family::kBaseStock: return "base_stock";
    case Family::kCappedBaseStock: return "capped_base_stock";
    case Family::kConstantOrder: return "constant_order";
    case Family::kNewsvendor: return "newsvendor";
    case Family::kSmallSBigS: return "s_S";
    case Family::kTiltedCbs: return "tilted_cbs";
    case Family::kTiltedPic: return "tilted_pic";
  }
  return "?";
}

Family FamilyFromName(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (FamilyName(f) == name || FamilySlug(f) == name) return f;
  }
  throw InputError("unknown policy family '" + std::string(name) + "'");
}

Family PolicySpec::family() const {
  return static_cast<Family>(params.index());
}

std::vector<std::string> ParameterViolations(const PolicySpec& policy) {
  std::vector<std::string> out;
  auto need = [&out](bool ok, const char* msg) {
    if (!ok) out.emplace_back(msg);
  };
  std::visit(
      Overloaded{
          [&](const BaseStock& p) { need(NonNegative(p.S), "S must be >= 0"); },
          [&](const CappedBaseStock& p) {
            need(NonNegative(p.S), "S must be >= 0");
            need(NonNegative(p.r), "r must be >= 0");
          },
          [&](const ConstantOrder& p) { need(NonNegative(p.q), "q must be >= 0"); },
          [&](const Newsvendor& p) {
            need(p.window >= 1, "window must be >= 1");
            if (p.ratio) {
              need(std::isfinite(*p.ratio) && *p.ratio > 0.0 && *p.ratio < 1.0,
                   "ratio out of (0,1)");
            }
          },
          [&](const SmallSBigS& p) {
            need(NonNegative(p.s), "s must be >= 0");
            need(NonNegative(p.S), "S must be >= 0");
            need(p.s <= p.S, "s must be <= S");
          },
          [&](const TiltedCbs& p) {
            need(NonNegative(p.S), "S must be >= 0");
            need(NonNegative(p.r_base), "r_base must be >= 0");
            need(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha out of [0,1]");
          },
          [&](const TiltedPic& p) {
            need(NonNegative(p.S), "S must be >= 0");
            need(NonNegative(p.r_base), "r_base must be >= 0");
            need(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha out of [0,1]");
            need(p.k_p > 0.0 && p.k_p <= 1.5, "K_p out of (0,1.5]");
          },
      },
      policy.params);
  return out;
}

PolicySpec MakePolicy(PolicySpec::Params params) {
  PolicySpec spec{std::move(params)};
  const auto violations = ParameterViolations(spec);
  if (!violations.empty()) {
    std::string msg = "invalid " + std::string(FamilyName(spec.family())) + ":";
    for (const auto& v : violations) msg += " " + v + ";";
    throw InputError(msg);
  }
  return spec;
}

double EmpiricalQuantile(std::span<const double> values, double level) {
  if (values.empty()) return 0.0;
  std::vector<double> v(values.begin(), values.end());
  const double n = static_cast<double>(v.size());
  auto k = static_cast<std::ptrdiff_t>(std::ceil(level * n - 1e-9));
  k = std::clamp<std::ptrdiff_t>(k, 1, static_cast<std::ptrdiff_t>(v.size()));
  auto nth = v.begin() + (k - 1);
  std::nth_element(v.begin(), nth, v.end());
  return *nth;
}

double DecideAtPosition(const PolicySpec& policy, double ip,
                        std::span<const double> demand_history,
                        const SystemConfig& cfg) {
  return std::visit(
      Overloaded{
          [&](const BaseStock& p) { return Gap(p.S, ip); },
          [&](const CappedBaseStock& p) { return std::min(Gap(p.S, ip), p.r); },
          [&](const ConstantOrder& p) { return p.q; },
          [&](const Newsvendor& p) {
            if (demand_history.empty()) return 0.0;
            const std::size_t w = std::min<std::size_t>(
                static_cast<std::size_t>(std::max(p.window, 1)),
                demand_history.size());
            const double ratio = p.ratio.value_or(
                cfg.penalty_cost / (cfg.penalty_cost + cfg.holding_cost));
            const double q =
                EmpiricalQuantile(demand_history.last(w), ratio) *
                static_cast<double>(cfg.lead_time + 1);
            return std::max(0.0, q - ip);
          },
          [&](const SmallSBigS& p) { return ip < p.s ? p.S - ip : 0.0; },
          [&](const TiltedCbs& p) {
            const double gap = Gap(p.S, ip);
            return std::min(gap, p.r_base + p.alpha * gap);
          },
          [&](const TiltedPic& p) {
            const double gap = Gap(p.S, ip);
            return std::max(0.0, std::min(RoundHalfEven(p.k_p * gap),
                                          p.r_base + p.alpha * gap));
          },
      },
      policy.params);
}

double Decide(const PolicySpec& policy, const InventoryState& state,
              std::span<const double> /*features*/,
              std::span<const double> demand_history, const SystemConfig& cfg) {
  return DecideAtPosition(policy, InventoryPosition(state), demand_history, cfg);
}

PolicySpec Canonicalize(const PolicySpec& policy) {
  PolicySpec p = std::visit(
      Overloaded{
          [](BaseStock v) -> PolicySpec { v.S = ToGrid(v.S); return v; },
          [](CappedBaseStock v) -> PolicySpec {
            v.S = ToGrid(v.S);
            v.r = ToGrid(v.r);
            return v;
          },
          [](ConstantOrder v) -> PolicySpec { v.q = ToGrid(v.q); return v; },
          [](Newsvendor v) -> PolicySpec {
            if (v.ratio) v.ratio = ToGrid(*v.ratio);
            return v;
          },
          [](SmallSBigS v) -> PolicySpec {
            v.s = ToGrid(v.s);
            v.S = ToGrid(v.S);
            return v;
          },
          [](TiltedCbs v) -> PolicySpec {
            v.S = ToGrid(v.S);
            v.r_base = ToGrid(v.r_base);
            v.alpha = ToGrid(v.alpha);
            return v;
          },
          [](TiltedPic v) -> PolicySpec {
            v.S = ToGrid(v.S);
            v.r_base = ToGrid(v.r_base);
            v.alpha = ToGrid(v.alpha);
            v.k_p = ToGrid(v.k_p);
            return v;
          },
      },
      policy.params);

  // Every rule moves strictly down the family chain, so this terminates.
  for (;;) {
    if (const auto* v = std::get_if<TiltedPic>(&p.params); v && v->k_p == 1.0) {
      p = TiltedCbs{v->S, v->r_base, v->alpha};
    } else if (const auto* v = std::get_if<TiltedCbs>(&p.params);
               v && v->alpha == 0.0) {
      p = CappedBaseStock{v->S, v->r_base};
    } else if (const auto* v = std::get_if<TiltedCbs>(&p.params);
               v && (v->alpha == 1.0 || v->r_base >= v->S)) {
      p = BaseStock{v->S};
    } else if (const auto* v = std::get_if<CappedBaseStock>(&p.params);
               v && v->r >= v->S) {
      p = BaseStock{v->S};
    } else if (const auto* v = std::get_if<SmallSBigS>(&p.params);
               v && v->s == v->S) {
      p = BaseStock{v->S};
    } else {
      return p;
    }
  }
}

ValidityReport CheckValidity(const PolicySpec& policy, const SystemConfig& cfg,
                             std::span<const InventoryState> probe_states) {
  ValidityReport report;
  report.violations = ParameterViolations(policy);
  if (report.violations.empty()) {
    std::vector<double> history;
    for (int i = 0; i < 28; ++i) history.push_back(static_cast<double>(i % 10));
    for (const auto& state : probe_states) {
      const double order = Decide(policy, state, {}, history, cfg);
      if (!std::isfinite(order) || order < 0.0) {
        std::ostringstream msg;
        msg << "invalid decision " << order << " at IP="
            << InventoryPosition(state);
        report.violations.push_back(msg.str());
        break;
      }
    }
  }
  report.valid = report.violations.empty();
  return report;
}

ValidityReport CheckValidity(const PolicySpec& policy, const SystemConfig& cfg) {
  double top = 10.0;
  std::visit(Overloaded{
                 [&](const BaseStock& p) { top = std::max(top, 3 * p.S); },
                 [&](const CappedBaseStock& p) { top = std::max(top, 3 * p.S); },
                 [&](const SmallSBigS& p) { top = std::max(top, 3 * p.S); },
                 [&](const TiltedCbs& p) { top = std::max(top, 3 * p.S); },
                 [&](const TiltedPic& p) { top = std::max(top, 3 * p.S); },
                 [](const auto&) {},
             },
             policy.params);
  if (!std::isfinite(top)) top = 10.0;
  constexpr int kMaxProbes = 200;
  const double step = top <= kMaxProbes ? 1.0 : top / kMaxProbes;
  std::vector<InventoryState> probes;
  for (double ip = 0.0; ip <= top + 1e-9; ip += step) {
    InventoryState s = InventoryState::Empty(cfg.lead_time);
    s.on_hand = ip;
    probes.push_back(std::move(s));
  }
  return CheckValidity(policy, cfg, probes);
}

nlohmann::json ToJson(const PolicySpec& policy) {
  nlohmann::json params = nlohmann::json::object();
  std::visit(Overloaded{
                 [&](const BaseStock& p) { params["S"] = p.S; },
                 [&](const CappedBaseStock& p) {
                   params["S"] = p.S;
                   params["r"] = p.r;
                 },
                 [&](const ConstantOrder& p) { params["q"] = p.q; },
                 [&](const Newsvendor& p) {
                   params["window"] = p.window;
                   if (p.ratio) params["ratio"] = *p.ratio;
                 },
                 [&](const SmallSBigS& p) {
                   params["s"] = p.s;
                   params["S"] = p.S;
                 },
                 [&](const TiltedCbs& p) {
                   params["S"] = p.S;
                   params["r_base"] = p.r_base;
                   params["alpha"] = p.alpha;
                 },
                 [&](const TiltedPic& p) {
                   params["S"] = p.S;
                   params["r_base"] = p.r_base;
                   params["alpha"] = p.alpha;
                   params["K_p"] = p.k_p;
                 },
             },
             policy.params);
  return {{"family", std::string(FamilyName(policy.family()))},
          {"params", std::move(params)}};
}

namespace {

double Field(const nlohmann::json& params, const char* key) {
  auto it = params.find(key);
  if (it == params.end() || !it->is_number()) {
    throw InputError(std::string("policy params missing numeric field '") +
                     key + "'");
  }
  return it->get<double>();
}

}  // namespace

PolicySpec PolicyFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    throw InputError("policy JSON must be an object with a string 'family'");
  }
  const Family family = FamilyFromName(j["family"].get<std::string>());
  const nlohmann::json params =
      j.contains("params") ? j["params"] : nlohmann::json::object();
  if (!params.is_object()) throw InputError("policy 'params' must be an object");
  switch (family) {
    case Family::kBaseStock: return BaseStock{Field(params, "S")};
    case Family::kCappedBaseStock:
      return CappedBaseStock{Field(params, "S"), Field(params, "r")};
    case Family::kConstantOrder: return ConstantOrder{Field(params, "q")};
    case Family::kNewsvendor: {
      const double w = Field(params, "window");
      if (w != std::floor(w) || std::fabs(w) > 1e9) {
        throw InputError("newsvendor window must be an integer");
      }
      Newsvendor nv{static_cast<int>(w), std::nullopt};
      if (params.contains("ratio") && !params["ratio"].is_null()) {
        nv.ratio = Field(params, "ratio");
      }
      return nv;
    }
    case Family::kSmallSBigS:
      return SmallSBigS{Field(params, "s"), Field(params, "S")};
    case Family::kTiltedCbs:
      return TiltedCbs{Field(params, "S"), Field(params, "r_base"),
                       Field(params, "alpha")};
    case Family::kTiltedPic:
      return TiltedPic{Field(params, "S"), Field(params, "r_base"),
                       Field(params, "alpha"), Field(params, "K_p")};
  }
  throw InputError("unreachable family");
}

std::string CanonicalString(const PolicySpec& policy) {
  return ToJson(policy).dump();
}

ParamMap ParamsOf(const PolicySpec& policy) {
  ParamMap out;
  const nlohmann::json j = ToJson(policy);
  for (const auto& [k, v] : j["params"].items()) {
    out[k] = v.get<double>();
  }
  return out;
}

PolicySpec PolicyFromParams(Family family, const ParamMap& params) {
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : params) p[k] = v;
  if (family == Family::kNewsvendor && p.contains("window")) {
    p["window"] = std::round(p["window"].get<double>());
  }
  return PolicyFromJson({{"family", std::string(FamilyName(family))},
                         {"params", std::move(p)}});
}

nlohmann::json PolicySchema() {
  using nlohmann::json;
  auto num = [](double lo, std::optional<double> hi = std::nullopt,
                bool exclusive_lo = false) {
    json j = {{"type", "number"}};
    j[exclusive_lo ? "exclusiveMinimum" : "minimum"] = lo;
    if (hi) j["maximum"] = *hi;
    return j;
  };
  json variants = json::array();
  auto add = [&](Family f, json props) {
    json required = json::array();
    for (auto& [k, _] : props.items()) {
      if (!(f == Family::kNewsvendor && k == "ratio")) required.push_back(k);
    }
    variants.push_back(
        {{"properties",
          {{"family", {{"const", std::string(FamilyName(f))}}},
           {"params",
            {{"type", "object"},
             {"properties", std::move(props)},
             {"required", std::move(required)}}}}}});
  };
  add(Family::kBaseStock, {{"S", num(0)}});
  add(Family::kCappedBaseStock, {{"S", num(0)}, {"r", num(0)}});
  add(Family::kConstantOrder, {{"q", num(0)}});
  add(Family::kNewsvendor,
      {{"window", {{"type", "integer"}, {"minimum", 1}}},
       {"ratio", {{"type", "number"}, {"exclusiveMinimum", 0},
                  {"exclusiveMaximum", 1}}}});
  add(Family::kSmallSBigS, {{"s", num(0)}, {"S", num(0)}});
  add(Family::kTiltedCbs,
      {{"S", num(0)}, {"r_base", num(0)}, {"alpha", num(0, 1.0)}});
  add(Family::kTiltedPic, {{"S", num(0)},
                           {"r_base", num(0)},
                           {"alpha", num(0, 1.0)},
                           {"K_p", num(0, 1.5, true)}});
  return {{"type", "object"},
          {"required", {"family", "params"}},
          {"oneOf", std::move(variants)}};
}

}  // namespace invevolve
