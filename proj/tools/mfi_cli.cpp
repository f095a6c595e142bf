// Command-line front end for the monotone function interval library.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfi/cdf.hpp"
#include "mfi/error.hpp"
#include "mfi/interval.hpp"
#include "mfi/json_io.hpp"
#include "mfi/persuasion.hpp"
#include "mfi/political.hpp"
#include "mfi/posterior.hpp"
#include "mfi/security.hpp"

namespace {

using mfi::PiecewiseCdf;
using mfi::io::Json;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kVerdict = 2;

struct Options {
  std::string input;
  std::string output;
  std::string csv;
  std::optional<double> tau;
  double epsilon = 0.0;
  double q = 0.5;
  std::uint64_t seed = 42;
  std::size_t mc_draws = 0;
  std::size_t grid = 201;
  std::size_t z_grid = 64;
  std::optional<double> tolerance;
  unsigned threads = 1;
};

struct Outcome {
  Json doc;
  bool verdict_ok = true;
  std::string diagnostic;  // printed to stderr when the verdict is negative
};

double need_tau(const Options& o) {
  if (!o.tau) throw mfi::Error(mfi::ErrorCode::InvalidArgument, "missing required option --tau");
  return *o.tau;
}

double resolve_tolerance(const Options& o) {
  if (o.tolerance) return *o.tolerance;
  if (const char* env = std::getenv("MFI_TOLERANCE")) {
    char* end = nullptr;
    const double t = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(t > 0.0)) {
      throw mfi::Error(mfi::ErrorCode::InvalidArgument, "MFI_TOLERANCE must be a positive number");
    }
    return t;
  }
  return mfi::kDefaultTol;
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw mfi::Error(mfi::ErrorCode::Schema, std::string("input: missing field '") + key + "'");
  }
  return doc.at(key);
}

void only_fields(const Json& doc, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : doc.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end()) {
      throw mfi::Error(mfi::ErrorCode::Schema, "input: unknown field '" + k + "'");
    }
  }
}

PiecewiseCdf identity_on(const std::vector<double>& states) {
  return PiecewiseCdf(states, states, mfi::Kind::PiecewiseLinear);
}

PiecewiseCdf zero_on(const std::vector<double>& states) {
  return PiecewiseCdf(states, std::vector<double>(states.size(), 0.0), mfi::Kind::Step);
}

// Columns x, lower_bound, upper_bound, solution. Jumps get two rows: the
// left limit first, then the value.
void write_csv(const std::string& path, std::size_t samples, const std::optional<PiecewiseCdf>& lower,
               const std::optional<PiecewiseCdf>& upper, const std::optional<PiecewiseCdf>& solution) {
  if (path.empty()) return;
  std::vector<const PiecewiseCdf*> fs;
  for (const auto* f : {&lower, &upper, &solution}) {
    if (*f) fs.push_back(&**f);
  }
  auto xs = mfi::merge_grids(fs);
  if (xs.empty()) return;
  const double a = xs.front(), b = xs.back();
  if (samples >= 2 && b > a) {
    for (std::size_t i = 0; i < samples; ++i) {
      xs.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(samples - 1));
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::ofstream out(path);
  if (!out) throw mfi::Error(mfi::ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << "x,lower_bound,upper_bound,solution\n";
  auto cell = [&](const std::optional<PiecewiseCdf>& f, double x, mfi::Side side) {
    return f ? mfi::io::format_number(mfi::evaluate(*f, x, side)) : std::string();
  };
  auto row = [&](double x, mfi::Side side) {
    out << mfi::io::format_number(x) << ',' << cell(lower, x, side) << ',' << cell(upper, x, side) << ','
        << cell(solution, x, side) << '\n';
  };
  for (double x : xs) {
    bool jump = false;
    for (const auto* f : fs) jump = jump || mfi::evaluate(*f, x, mfi::Side::Left) != mfi::evaluate(*f, x);
    if (jump) row(x, mfi::Side::Left);
    row(x, mfi::Side::Right);
  }
}

Outcome run_bounds(const Options& o, const Json& in) {
  const double tau = need_tau(o);
  const auto prior = mfi::io::read_cdf(in);
  const auto iv = mfi::quantile_interval(prior, tau, o.epsilon);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, prior);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["epsilon"] = o.epsilon;
  r.doc["interval"] = mfi::io::to_json(iv);
  return r;
}

Outcome run_check_extreme(const Options& o, const Json& in) {
  only_fields(in, {"interval", "h"});
  const auto iv = mfi::io::read_interval(field(in, "interval"));
  const auto h = mfi::io::read_cdf(field(in, "h"));
  const auto v = mfi::is_extreme_point(iv, h, resolve_tolerance(o));
  write_csv(o.csv, o.grid, iv.lower, iv.upper, h);
  Outcome r;
  r.doc["verdict"] = mfi::io::to_json(v);
  r.verdict_ok = v.is_extreme;
  if (!v.is_extreme) r.diagnostic = "not an extreme point: " + std::to_string(v.violations.size()) + " violation(s)";
  return r;
}

Outcome run_feasible(const Options& o, const Json& in) {
  only_fields(in, {"prior", "target"});
  const double tau = need_tau(o);
  const auto prior = mfi::io::read_cdf(field(in, "prior"));
  const auto h = mfi::io::read_cdf(field(in, "target"));
  const bool ok = mfi::feasible(h, prior, tau, resolve_tolerance(o));
  const auto iv = mfi::quantile_interval(prior, tau);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, h);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["feasible"] = ok;
  r.doc["interval"] = mfi::io::to_json(iv);
  r.verdict_ok = ok;
  if (!ok) r.diagnostic = "target is not a feasible quantile distribution";
  return r;
}

Outcome run_construct(const Options& o, const Json& in) {
  only_fields(in, {"prior", "target"});
  const double tau = need_tau(o);
  const double tol = resolve_tolerance(o);
  const auto prior = mfi::io::read_cdf(field(in, "prior"));
  const auto h = mfi::io::read_cdf(field(in, "target"));
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["epsilon"] = o.epsilon;
  r.doc["target"] = mfi::io::to_json(h);
  mfi::FiniteSignal signal;
  mfi::SelectionRule rule;
  if (o.epsilon > 0.0) {
    auto c = mfi::construct_signal_unique(h, prior, tau, o.epsilon, tol);
    signal = std::move(c.signal);
    rule = c.rule;
    r.doc["uniqueness"] = mfi::io::to_json(c.report);
  } else {
    auto c = mfi::construct_signal(h, prior, tau, tol);
    signal = std::move(c.signal);
    rule = c.rule;
    Json plans = Json::array();
    for (const auto& p : c.plans) plans.push_back(mfi::io::to_json(p));
    r.doc["plans"] = std::move(plans);
  }
  const auto report = mfi::verify_signal(signal, prior, tau, h, o.mc_draws, o.seed, rule, o.threads);
  r.doc["signal"] = mfi::io::to_json(signal);
  r.doc["rule"] = mfi::io::to_json(rule);
  r.doc["verification"] = mfi::io::to_json(report);
  const auto iv = mfi::quantile_interval(prior, tau, o.epsilon);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, h);
  return r;
}

Outcome run_verify(const Options& o, const Json& in) {
  only_fields(in, {"signal", "target", "rule", "tau", "epsilon", "uniqueness", "plans", "verification"});
  const double tau = o.tau ? *o.tau : in.contains("tau") ? in.at("tau").get<double>() : need_tau(o);
  const auto signal = mfi::io::read_signal(field(in, "signal"));
  const auto target = mfi::io::read_cdf(field(in, "target"));
  std::optional<mfi::SelectionRule> rule;
  if (in.contains("rule") && !in.at("rule").is_null()) rule = mfi::io::read_rule(in.at("rule"));
  const auto rep = mfi::verify_signal(signal, signal.prior, tau, target, o.mc_draws, o.seed, rule, o.threads);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["report"] = mfi::io::to_json(rep);
  bool pass = rep.weights_valid && rep.bayes_gap <= 1e-9 && rep.quantile_gap() <= 1e-6;
  if (rep.monte_carlo) pass = pass && rep.monte_carlo->quantile_within_band;
  r.doc["passed"] = pass;
  r.verdict_ok = pass;
  if (!pass) r.diagnostic = "signal does not reproduce the prior and target within thresholds";
  return r;
}

Outcome run_iterated(const Options& o, const Json& in) {
  const double tau = need_tau(o);
  const auto prior = mfi::io::read_cdf(in);
  const auto [lo, hi] = mfi::iterated_quantile_range(prior, tau, o.q);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["q"] = o.q;
  r.doc["lower"] = lo;
  r.doc["upper"] = hi;
  return r;
}

Outcome run_persuade(const Options& o, const Json& in) {
  only_fields(in, {"prior", "payoff"});
  const double tau = need_tau(o);
  const auto prior = mfi::io::read_cdf(field(in, "prior"));
  const auto payoff = mfi::io::read_payoff(field(in, "payoff"));
  const auto res = mfi::solve_persuasion(prior, tau, payoff);
  const auto iv = mfi::quantile_interval(prior, tau);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, res.h);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["result"] = mfi::io::to_json(res);
  return r;
}

Outcome run_gerrymander(const Options& o, const Json& in) {
  only_fields(in, {"prior", "legislature"});
  const auto prior = mfi::io::read_cdf(field(in, "prior"));
  const auto h = mfi::io::read_cdf(field(in, "legislature"));
  const bool ok = mfi::legislature_feasible(h, prior, resolve_tolerance(o));
  const auto [lo, hi] = mfi::legislation_range(prior);
  const auto iv = mfi::quantile_interval(prior, 0.5);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, h);
  Outcome r;
  r.doc["feasible"] = ok;
  r.doc["legislation_range"] = Json::array({lo, hi});
  r.doc["interval"] = mfi::io::to_json(iv);
  r.verdict_ok = ok;
  if (!ok) r.diagnostic = "no district map produces this distribution of district medians";
  return r;
}

Outcome run_identify(const Options& o, const Json& in) {
  only_fields(in, {"medians"});
  const auto h = mfi::io::read_cdf(field(in, "medians"));
  const auto iv = mfi::identification_bounds(h);
  write_csv(o.csv, o.grid, iv.lower, iv.upper, h);
  Outcome r;
  r.doc["bounds"] = mfi::io::to_json(iv);
  return r;
}

Outcome run_misconfidence(const Options& o, const Json& in) {
  only_fields(in, {"prior", "dataset"});
  const double tau = need_tau(o);
  const auto prior = mfi::io::read_cdf(field(in, "prior"));
  const auto data = mfi::io::read_dataset(field(in, "dataset"));
  const auto rep = mfi::rationalizable(data, prior, tau);
  Outcome r;
  r.doc["tau"] = tau;
  r.doc["report"] = mfi::io::to_json(rep);
  r.verdict_ok = rep.verdict;
  if (!rep.verdict) {
    std::ostringstream msg;
    msg << "not rationalizable; failing inequalities:";
    for (const auto& f : rep.failures) msg << " k=" << f.k << " (" << mfi::to_string(f.family) << ")";
    r.diagnostic = msg.str();
  }
  if (rep.target) {
    const auto iv = mfi::quantile_interval(prior, tau, rep.epsilon);
    write_csv(o.csv, o.grid, iv.lower, iv.upper, rep.target);
  } else {
    const auto iv = mfi::quantile_interval(prior, tau);
    write_csv(o.csv, o.grid, iv.lower, iv.upper, std::nullopt);
  }
  return r;
}

Outcome run_security_mh(const Options& o, const Json& in) {
  const auto model = mfi::io::read_moral_hazard(in);
  const auto res = mfi::solve_moral_hazard(model);
  write_csv(o.csv, o.grid, zero_on(model.states), identity_on(model.states), res.security);
  Outcome r;
  r.doc["result"] = mfi::io::to_json(res);
  if (res.peaks.degenerate) r.doc["warnings"] = Json::array({"likelihood ratio has no increasing run"});
  if (model.mode == mfi::EffortMode::FirstOrder && !res.interior) {
    r.doc["warnings"] = Json::array({"funding level is not interior to the incentive-feasible range"});
  }
  return r;
}

Outcome run_security_as(const Options& o, const Json& in) {
  const auto model = mfi::io::read_adverse_selection(in);
  const auto res = mfi::solve_adverse_selection(model, o.z_grid);
  write_csv(o.csv, o.grid, zero_on(model.states), identity_on(model.states), res.security);
  Outcome r;
  r.doc["result"] = mfi::io::to_json(res);
  return r;
}

Outcome run_count_peaks(const Options&, const Json& in) {
  only_fields(in, {"ratio"});
  const auto& a = field(in, "ratio");
  if (!a.is_array()) throw mfi::Error(mfi::ErrorCode::Schema, "input.ratio: expected an array of numbers");
  std::vector<double> ratio;
  for (const auto& x : a) {
    if (!x.is_number()) throw mfi::Error(mfi::ErrorCode::Schema, "input.ratio: expected an array of numbers");
    ratio.push_back(x.get<double>());
  }
  const auto p = mfi::count_peaks(ratio);
  Outcome r;
  r.doc = mfi::io::to_json(p);
  if (p.degenerate) r.doc["warnings"] = Json::array({"no increasing run; reported as a single peak"});
  return r;
}

using Runner = Outcome (*)(const Options&, const Json&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone function intervals: posterior quantiles, persuasion, political economy, security design"};
  app.require_subcommand(1);
  Options opt;

  struct Entry {
    const char* name;
    const char* help;
    Runner run;
  };
  const std::vector<Entry> entries = {
      {"bounds", "truncation bounds of a prior (input: cdf)", run_bounds},
      {"check-extreme", "extreme-point test (input: {interval, h})", run_check_extreme},
      {"feasible", "quantile-distribution feasibility (input: {prior, target})", run_feasible},
      {"construct-signal", "signal with a given quantile distribution (input: {prior, target})", run_construct},
      {"verify-signal", "independent check of a signal (input: {signal, target, rule?})", run_verify},
      {"iterated-range", "feasible quantiles of posterior quantiles (input: cdf)", run_iterated},
      {"persuade", "sender-optimal quantile distribution (input: {prior, payoff})", run_persuade},
      {"gerrymander", "district-median feasibility (input: {prior, legislature})", run_gerrymander},
      {"identify", "populations consistent with district medians (input: {medians})", run_identify},
      {"misconfidence", "self-ranking rationalizability (input: {prior, dataset})", run_misconfidence},
      {"security-mh", "moral-hazard security design (input: model)", run_security_mh},
      {"security-as", "adverse-selection security design (input: model)", run_security_as},
      {"count-peaks", "peaks of a tabulated ratio (input: {ratio})", run_count_peaks},
  };
  std::vector<std::pair<CLI::App*, Runner>> subs;
  for (const auto& e : entries) {
    auto* s = app.add_subcommand(e.name, e.help);
    s->add_option("input", opt.input, "input JSON file")->required();
    s->add_option("-o,--output", opt.output, "result JSON file (default: stdout)");
    s->add_option("--csv", opt.csv, "plot data CSV file");
    s->add_option("--tau", opt.tau, "quantile level in (0,1)");
    s->add_option("--epsilon", opt.epsilon, "uniqueness margin");
    s->add_option("--q", opt.q, "posterior quantile level for iterated-range");
    s->add_option("--seed", opt.seed, "Monte Carlo seed");
    s->add_option("--mc-draws", opt.mc_draws, "Monte Carlo draws (0 skips)");
    s->add_option("--grid", opt.grid, "CSV sample points");
    s->add_option("--z-grid", opt.z_grid, "grid for the adverse-selection outer search");
    s->add_option("--tolerance", opt.tolerance, "comparison tolerance (default: MFI_TOLERANCE or 1e-9)");
    s->add_option("--threads", opt.threads, "worker threads for Monte Carlo")->check(CLI::PositiveNumber);
    subs.emplace_back(s, e.run);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFailure;
  }

  for (const auto& [s, run] : subs) {
    if (!s->parsed()) continue;
    const std::string name = s->get_name();
    try {
      const Json in = mfi::io::read_file(opt.input);
      Outcome out = run(opt, in);
      mfi::io::validate_output(name, out.doc);
      const std::string text = out.doc.dump(2) + "\n";
      if (opt.output.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(opt.output);
        if (!f) throw mfi::Error(mfi::ErrorCode::InvalidArgument, "cannot write '" + opt.output + "'");
        f << text;
      }
      if (!out.verdict_ok) {
        std::cerr << "verdict: " << out.diagnostic << "\n";
        return kVerdict;
      }
      return kOk;
    } catch (const mfi::Error& e) {
      switch (e.code()) {
        case mfi::ErrorCode::Infeasible:
        case mfi::ErrorCode::InfeasibleTarget:
          std::cerr << "verdict: " << e.what() << "\n";
          return kVerdict;
        case mfi::ErrorCode::Schema:
          std::cerr << "schema error: " << e.what() << "\n";
          return kFailure;
        case mfi::ErrorCode::InvalidArgument:
          std::cerr << "invalid argument: " << e.what() << "\n";
          return kFailure;
        default:
          std::cerr << "error: " << e.what() << "\n";
          return kFailure;
      }
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "schema error: " << e.what() << "\n";
      return kFailure;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kFailure;
    }
  }
  return kFailure;
}
