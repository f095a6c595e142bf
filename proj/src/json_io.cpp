#include "mfi/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

#include "mfi/error.hpp"

namespace mfi::io {

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::Schema, msg); }

void check_object(const Json& j, const char* what, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) schema(std::string(what) + ": expected an object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!j.contains(k)) schema(std::string(what) + ": missing field '" + k + "'");
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) schema(std::string(what) + ": unknown field '" + k + "'");
  }
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) schema(what + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) schema(what + ": expected a finite number");
  return x;
}

std::vector<double> numbers(const Json& j, const std::string& what) {
  if (!j.is_array()) schema(what + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> matrix(const Json& j, const std::string& what) {
  if (!j.is_array()) schema(what + ": expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

bool boolean(const Json& j, const std::string& what) {
  if (!j.is_boolean()) schema(what + ": expected a boolean");
  return j.get<bool>();
}

std::string text(const Json& j, const std::string& what) {
  if (!j.is_string()) schema(what + ": expected a string");
  return j.get<std::string>();
}

// Library validation failures while reading count as schema errors.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    schema(std::string(what) + ": " + e.what());
  }
}

Json real(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

Json reals(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(real(x));
  return a;
}

Json indices(const std::vector<std::size_t>& xs) {
  Json a = Json::array();
  for (auto x : xs) a.push_back(x);
  return a;
}

template <class T>
Json maybe(const std::optional<T>& x) {
  if (!x) return nullptr;
  return to_json(*x);
}

Json maybe(const std::optional<double>& x) { return x ? real(*x) : Json(nullptr); }

const char* mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::AlwaysLower: return "lower";
    case SelectionMode::AlwaysUpper: return "upper";
    case SelectionMode::PerComponent: return "per_component";
  }
  return "lower";
}

const Json& at(const Json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) schema(where + ": missing field '" + key + "'");
  return doc.at(key);
}

}  // namespace

PiecewiseCdf read_cdf(const Json& j) {
  check_object(j, "cdf", {"kind", "grid", "values"}, {"left_limits"});
  const auto kind_name = text(j["kind"], "cdf.kind");
  Kind kind;
  if (kind_name == "step") {
    kind = Kind::Step;
  } else if (kind_name == "piecewise_linear") {
    kind = Kind::PiecewiseLinear;
  } else {
    schema("cdf.kind: expected \"step\" or \"piecewise_linear\"");
  }
  auto grid = numbers(j["grid"], "cdf.grid");
  auto values = numbers(j["values"], "cdf.values");
  std::optional<std::vector<double>> left;
  if (j.contains("left_limits") && !j["left_limits"].is_null()) left = numbers(j["left_limits"], "cdf.left_limits");
  return guarded("cdf", [&] { return PiecewiseCdf(std::move(grid), std::move(values), kind, std::move(left)); });
}

Json to_json(const PiecewiseCdf& f) {
  Json j;
  j["kind"] = f.kind() == Kind::Step ? "step" : "piecewise_linear";
  j["grid"] = reals(f.grid());
  j["values"] = reals(f.values());
  j["left_limits"] = f.left_limits() ? reals(*f.left_limits()) : Json(nullptr);
  return j;
}

MonotoneInterval read_interval(const Json& j) {
  check_object(j, "interval", {"lower", "upper"});
  std::optional<PiecewiseCdf> lo, hi;
  if (!j["lower"].is_null()) lo = read_cdf(j["lower"]);
  if (!j["upper"].is_null()) hi = read_cdf(j["upper"]);
  return guarded("interval", [&] { return MonotoneInterval(lo, hi); });
}

Json to_json(const MonotoneInterval& iv) {
  Json j;
  j["lower"] = maybe(iv.lower);
  j["upper"] = maybe(iv.upper);
  return j;
}

FiniteSignal read_signal(const Json& j) {
  check_object(j, "signal", {"prior", "components"});
  FiniteSignal s;
  s.prior = read_cdf(j["prior"]);
  if (!j["components"].is_array() || j["components"].empty()) schema("signal.components: expected a nonempty array");
  long double total = 0.0L;
  for (const auto& c : j["components"]) {
    check_object(c, "signal.components[]", {"weight", "posterior"});
    const double w = number(c["weight"], "signal.components[].weight");
    if (w < 0.0) schema("signal.components[].weight: must be nonnegative");
    total += w;
    s.components.emplace_back(w, read_cdf(c["posterior"]));
  }
  if (std::abs(static_cast<double>(total) - 1.0) > 1e-12) schema("signal.components: weights must sum to 1");
  return s;
}

Json to_json(const FiniteSignal& s) {
  Json j;
  j["prior"] = to_json(s.prior);
  Json comps = Json::array();
  for (const auto& [w, f] : s.components) {
    Json c;
    c["weight"] = w;
    c["posterior"] = to_json(f);
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  return j;
}

SelectionRule read_rule(const Json& j) {
  check_object(j, "rule", {"mode"}, {"points"});
  SelectionRule r;
  const auto m = text(j["mode"], "rule.mode");
  if (m == "lower") {
    r.mode = SelectionMode::AlwaysLower;
  } else if (m == "upper") {
    r.mode = SelectionMode::AlwaysUpper;
  } else if (m == "per_component") {
    r.mode = SelectionMode::PerComponent;
    if (!j.contains("points") || j["points"].is_null()) schema("rule.points: required for per_component");
  } else {
    schema("rule.mode: expected \"lower\", \"upper\" or \"per_component\"");
  }
  if (j.contains("points") && !j["points"].is_null()) r.points = numbers(j["points"], "rule.points");
  return r;
}

Json to_json(const SelectionRule& r) {
  Json j;
  j["mode"] = mode_name(r.mode);
  j["points"] = r.mode == SelectionMode::PerComponent ? reals(r.points) : Json(nullptr);
  return j;
}

SenderPayoff read_payoff(const Json& j) {
  check_object(j, "payoff", {"grid", "v"}, {"shape_hint", "peak"});
  SenderPayoff p;
  p.v.grid = numbers(j["grid"], "payoff.grid");
  p.v.values = numbers(j["v"], "payoff.v");
  if (p.v.grid.empty() || p.v.grid.size() != p.v.values.size()) schema("payoff: grid and v must have equal nonzero length");
  for (std::size_t i = 1; i < p.v.grid.size(); ++i) {
    if (!(p.v.grid[i] > p.v.grid[i - 1])) schema("payoff.grid: must be strictly increasing");
  }
  if (j.contains("shape_hint") && !j["shape_hint"].is_null()) {
    const auto s = text(j["shape_hint"], "payoff.shape_hint");
    if (s == "quasi_concave") {
      p.shape = ShapeHint::QuasiConcave;
    } else if (s == "strictly_quasi_convex") {
      p.shape = ShapeHint::StrictlyQuasiConvex;
    } else if (s == "general") {
      p.shape = ShapeHint::General;
    } else {
      schema("payoff.shape_hint: unknown value '" + s + "'");
    }
  }
  if (j.contains("peak") && !j["peak"].is_null()) p.peak = number(j["peak"], "payoff.peak");
  return p;
}

Json to_json(const SenderPayoff& p) {
  Json j;
  j["grid"] = reals(p.v.grid);
  j["v"] = reals(p.v.values);
  j["shape_hint"] = to_string(p.shape);
  j["peak"] = maybe(p.peak);
  return j;
}

PredictionDataset read_dataset(const Json& j) {
  check_object(j, "dataset", {"partition", "shares"});
  PredictionDataset d{numbers(j["partition"], "dataset.partition"), numbers(j["shares"], "dataset.shares")};
  guarded("dataset", [&] {
    d.validate();
    return 0;
  });
  return d;
}

Json to_json(const PredictionDataset& d) {
  Json j;
  j["partition"] = reals(d.partition);
  j["shares"] = reals(d.shares);
  return j;
}

MoralHazardModel read_moral_hazard(const Json& j) {
  check_object(j, "moral_hazard", {"states", "efforts", "densities", "cost", "investment", "risk_free"},
               {"cost_slope", "mode"});
  MoralHazardModel m;
  m.states = numbers(j["states"], "moral_hazard.states");
  m.efforts = numbers(j["efforts"], "moral_hazard.efforts");
  m.densities = matrix(j["densities"], "moral_hazard.densities");
  m.cost = numbers(j["cost"], "moral_hazard.cost");
  if (j.contains("cost_slope") && !j["cost_slope"].is_null()) m.cost_slope = numbers(j["cost_slope"], "moral_hazard.cost_slope");
  m.investment = number(j["investment"], "moral_hazard.investment");
  m.risk_free = number(j["risk_free"], "moral_hazard.risk_free");
  if (j.contains("mode") && !j["mode"].is_null()) {
    const auto s = text(j["mode"], "moral_hazard.mode");
    if (s == "finite_efforts") {
      m.mode = EffortMode::FiniteEfforts;
    } else if (s == "first_order") {
      m.mode = EffortMode::FirstOrder;
    } else {
      schema("moral_hazard.mode: expected \"finite_efforts\" or \"first_order\"");
    }
  }
  guarded("moral_hazard", [&] {
    m.validate();
    return 0;
  });
  return m;
}

Json to_json(const MoralHazardModel& m) {
  Json j;
  j["states"] = reals(m.states);
  j["efforts"] = reals(m.efforts);
  Json d = Json::array();
  for (const auto& row : m.densities) d.push_back(reals(row));
  j["densities"] = std::move(d);
  j["cost"] = reals(m.cost);
  j["cost_slope"] = m.cost_slope.empty() ? Json(nullptr) : reals(m.cost_slope);
  j["investment"] = m.investment;
  j["risk_free"] = m.risk_free;
  j["mode"] = m.mode == EffortMode::FiniteEfforts ? "finite_efforts" : "first_order";
  return j;
}

AdverseSelectionModel read_adverse_selection(const Json& j) {
  check_object(j, "adverse_selection", {"states", "signal_weights", "conditionals", "worst_signal", "discount"});
  AdverseSelectionModel m;
  m.states = numbers(j["states"], "adverse_selection.states");
  m.signal_weights = numbers(j["signal_weights"], "adverse_selection.signal_weights");
  m.conditionals = matrix(j["conditionals"], "adverse_selection.conditionals");
  if (!j["worst_signal"].is_number_unsigned()) schema("adverse_selection.worst_signal: expected a nonnegative integer");
  m.worst_signal = j["worst_signal"].get<std::size_t>();
  m.discount = number(j["discount"], "adverse_selection.discount");
  guarded("adverse_selection", [&] {
    m.validate();
    return 0;
  });
  return m;
}

Json to_json(const AdverseSelectionModel& m) {
  Json j;
  j["states"] = reals(m.states);
  j["signal_weights"] = reals(m.signal_weights);
  Json c = Json::array();
  for (const auto& row : m.conditionals) c.push_back(reals(row));
  j["conditionals"] = std::move(c);
  j["worst_signal"] = m.worst_signal;
  j["discount"] = m.discount;
  return j;
}

Json to_json(const ExtremeVerdict& v) {
  Json j;
  j["is_extreme"] = v.is_extreme;
  Json segs = Json::array();
  for (const auto& s : v.flat_segments) {
    segs.push_back({{"x_lo", real(s.x_lo)}, {"x_hi", real(s.x_hi)}, {"level", s.level}, {"touch", to_string(s.touch)}});
  }
  j["flat_segments"] = std::move(segs);
  Json viol = Json::array();
  for (const auto& s : v.violations) {
    viol.push_back({{"x_lo", real(s.x_lo)}, {"x_hi", real(s.x_hi)}, {"reason", to_string(s.reason)}});
  }
  j["violations"] = std::move(viol);
  return j;
}

Json to_json(const ConstructionPlan& p) {
  auto pooled = [](const std::vector<PooledPosterior>& ps) {
    Json a = Json::array();
    for (const auto& q : ps) a.push_back({{"component", q.component}, {"point", q.point}, {"weight", q.weight}});
    return a;
  };
  Json j;
  j["weight"] = p.weight;
  j["target"] = to_json(p.target);
  j["eta"] = p.eta;
  j["x_low"] = real(p.x_low);
  j["x_high"] = real(p.x_high);
  j["x_hat"] = maybe(p.x_hat);
  j["y_low"] = maybe(p.y_low);
  j["y_high"] = maybe(p.y_high);
  j["F_hat"] = maybe(p.F_hat);
  j["F_tilde"] = maybe(p.F_tilde);
  j["alpha"] = p.alpha;
  j["pooled_left"] = pooled(p.pooled_left);
  j["pooled_right"] = pooled(p.pooled_right);
  j["left_aggregate"] = maybe(p.left_aggregate);
  j["right_aggregate"] = maybe(p.right_aggregate);
  return j;
}

Json to_json(const UniquenessReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  Json comps = Json::array();
  for (const auto& c : r.components) comps.push_back({{"lower", c.lower}, {"upper", c.upper}, {"unique", c.unique}});
  j["components"] = std::move(comps);
  j["all_unique"] = r.all_unique;
  j["min_side_density"] = r.min_side_density;
  j["corner_obstruction"] = r.corner_obstruction;
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["weight_sum"] = r.weight_sum;
  j["weights_valid"] = r.weights_valid;
  j["bayes_gap"] = r.bayes_gap;
  j["quantile_gap_lower"] = r.quantile_gap_lower;
  j["quantile_gap_upper"] = r.quantile_gap_upper;
  j["quantile_gap_rule"] = maybe(r.quantile_gap_rule);
  j["quantile_gap"] = r.quantile_gap();
  if (r.monte_carlo) {
    const auto& m = *r.monte_carlo;
    j["monte_carlo"] = {{"draws", m.draws},
                        {"seed", m.seed},
                        {"quantile_gap", m.quantile_gap},
                        {"state_gap", m.state_gap},
                        {"dkw_epsilon", m.dkw_epsilon},
                        {"quantile_within_band", m.quantile_within_band},
                        {"state_within_band", m.state_within_band}};
  } else {
    j["monte_carlo"] = nullptr;
  }
  return j;
}

Json to_json(const ClosedFormCandidate& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["h"] = to_json(c.h);
  j["value"] = c.value;
  j["a"] = c.a;
  j["a_low"] = c.a_low;
  j["a_high"] = c.a_high;
  j["eta"] = c.eta;
  return j;
}

Json to_json(const PersuasionResult& r) {
  Json j;
  j["h"] = to_json(r.h);
  j["value"] = r.value;
  j["structure"] = to_json(r.structure);
  j["duality_gap"] = r.duality_gap;
  j["closed_form"] = maybe(r.closed_form);
  j["concordance_gap"] = r.concordance_gap;
  j["concordant"] = r.concordant;
  return j;
}

Json to_json(const InequalityCheck& c) {
  return {{"k", c.k}, {"family", to_string(c.family)}, {"lhs", c.lhs}, {"rhs", c.rhs},
          {"holds", c.holds}, {"borderline", c.borderline}};
}

Json to_json(const RationalizabilityReport& r) {
  Json j;
  j["verdict"] = r.verdict;
  j["borderline"] = r.borderline;
  Json checks = Json::array(), fails = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  for (const auto& c : r.failures) fails.push_back(to_json(c));
  j["checks"] = std::move(checks);
  j["failures"] = std::move(fails);
  j["target"] = maybe(r.target);
  if (r.witness) {
    j["witness"] = {{"signal", to_json(r.witness->signal)},
                    {"rule", to_json(r.witness->rule)},
                    {"uniqueness", to_json(r.witness->report)}};
  } else {
    j["witness"] = nullptr;
  }
  j["epsilon"] = r.epsilon;
  j["midpoint_placement"] = r.midpoint_placement;
  j["witness_shares"] = reals(r.witness_shares);
  j["witness_verified"] = r.witness_verified;
  return j;
}

Json to_json(const ContingentDebt& d) {
  Json j;
  Json segs = Json::array();
  for (const auto& s : d.segments) {
    segs.push_back({{"x_lo", s.x_lo}, {"x_hi", real(s.x_hi)}, {"face", s.face}, {"non_defaultable", s.non_defaultable}});
  }
  j["segments"] = std::move(segs);
  Json diag = Json::array();
  for (const auto& [a, b] : d.residual_diagonal) diag.push_back(Json::array({a, real(b)}));
  j["residual_diagonal"] = std::move(diag);
  j["face_values"] = d.face_values();
  j["non_defaultable_count"] = d.non_defaultable_count();
  j["standard_debt"] = d.is_standard_debt();
  return j;
}

Json to_json(const PeakCount& p) { return {{"peaks", p.peaks}, {"degenerate", p.degenerate}}; }

Json to_json(const MoralHazardResult& r) {
  Json j;
  j["security"] = to_json(r.security);
  j["payments"] = reals(r.payments);
  j["debt"] = to_json(r.debt);
  j["effort_index"] = r.effort_index;
  j["effort"] = r.effort;
  j["value"] = r.value;
  j["ir_slack"] = r.ir_slack;
  j["ic_slack"] = reals(r.ic_slack);
  j["foc_residual"] = r.foc_residual;
  j["interior"] = r.interior;
  j["infeasible_efforts"] = indices(r.infeasible_efforts);
  j["likelihood_ratio"] = reals(r.likelihood_ratio);
  j["peaks"] = to_json(r.peaks);
  j["active_constraints"] = indices(r.active_constraints);
  return j;
}

Json to_json(const AdverseSelectionResult& r) {
  Json j;
  j["security"] = to_json(r.security);
  j["payments"] = reals(r.payments);
  j["debt"] = to_json(r.debt);
  j["z_low"] = r.z_low;
  j["value"] = r.value;
  j["vertices_checked"] = r.vertices_checked;
  return j;
}

void validate_output(const std::string& sub, const Json& doc) {
  const std::string w = sub + " output";
  if (!doc.is_object()) schema(w + ": expected an object");
  auto num = [&](const Json& d, const char* k) { number(at(d, k, w), w + "." + k); };
  auto flag = [&](const Json& d, const char* k) { boolean(at(d, k, w), w + "." + k); };
  auto cdf = [&](const Json& d, const char* k) { read_cdf(at(d, k, w)); };
  auto interval = [&](const Json& d, const char* k) { read_interval(at(d, k, w)); };
  auto verdict = [&](const Json& d, const char* k) {
    const auto& v = at(d, k, w);
    flag(v, "is_extreme");
    if (!at(v, "flat_segments", w).is_array() || !at(v, "violations", w).is_array()) schema(w + ": malformed verdict");
  };
  auto verification = [&](const Json& d, const char* k) {
    const auto& v = at(d, k, w);
    for (const char* f : {"weight_sum", "bayes_gap", "quantile_gap_lower", "quantile_gap_upper", "quantile_gap"}) num(v, f);
    flag(v, "weights_valid");
  };
  auto debt = [&](const Json& d) {
    const auto& v = at(d, "debt", w);
    if (!at(v, "segments", w).is_array()) schema(w + ": malformed debt");
    num(v, "face_values");
    num(v, "non_defaultable_count");
    flag(v, "standard_debt");
  };
  if (sub == "bounds") {
    num(doc, "tau");
    num(doc, "epsilon");
    interval(doc, "interval");
  } else if (sub == "check-extreme") {
    verdict(doc, "verdict");
  } else if (sub == "feasible") {
    num(doc, "tau");
    flag(doc, "feasible");
    interval(doc, "interval");
  } else if (sub == "construct-signal") {
    num(doc, "tau");
    num(doc, "epsilon");
    cdf(doc, "target");
    read_signal(at(doc, "signal", w));
    read_rule(at(doc, "rule", w));
    verification(doc, "verification");
  } else if (sub == "verify-signal") {
    num(doc, "tau");
    verification(doc, "report");
  } else if (sub == "iterated-range") {
    for (const char* k : {"tau", "q", "lower", "upper"}) num(doc, k);
  } else if (sub == "persuade") {
    num(doc, "tau");
    const auto& r = at(doc, "result", w);
    cdf(r, "h");
    num(r, "value");
    verdict(r, "structure");
    flag(r, "concordant");
  } else if (sub == "gerrymander") {
    flag(doc, "feasible");
    const auto& range = at(doc, "legislation_range", w);
    if (!range.is_array() || range.size() != 2) schema(w + ".legislation_range: expected a pair");
    numbers(range, w + ".legislation_range");
    interval(doc, "interval");
  } else if (sub == "identify") {
    interval(doc, "bounds");
  } else if (sub == "misconfidence") {
    num(doc, "tau");
    const auto& r = at(doc, "report", w);
    flag(r, "verdict");
    if (!at(r, "checks", w).is_array()) schema(w + ".report.checks: expected an array");
    const auto& wit = at(r, "witness", w);
    if (!wit.is_null()) {
      read_signal(at(wit, "signal", w));
      read_rule(at(wit, "rule", w));
    }
  } else if (sub == "security-mh" || sub == "security-as") {
    const auto& r = at(doc, "result", w);
    cdf(r, "security");
    num(r, "value");
    debt(r);
  } else if (sub == "count-peaks") {
    num(doc, "peaks");
    flag(doc, "degenerate");
  } else {
    schema("unknown subcommand '" + sub + "'");
  }
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    schema("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace mfi::io
