#include "stochchain/cli.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "stochchain/errors.hpp"
#include "stochchain/estimators.hpp"
#include "stochchain/gaussian_mean.hpp"
#include "stochchain/phase_retrieval.hpp"
#include "stochchain/report_json.hpp"
#include "stochchain/vc_chain.hpp"

namespace stochchain::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<int, 7> kTable1Denominators{20, 30, 40, 50, 100, 200, 400};

json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig12(v);
}

json to_json(const est::McEstimate& e) {
  json j;
  j["value"] = real(e.value);
  j["std_error"] = real(e.std_error);
  j["trials"] = e.trials;
  j["seed"] = e.seed;
  return j;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw PreconditionError("cannot write " + out_path);
  file << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --- gaussian ---------------------------------------------------------------

struct GaussianArgs {
  double sigma = 1.0;
  int n = 0;
  double mu = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::string run_gaussian(const GaussianArgs& a) {
  const gaussian::GaussianParams params{a.mu, a.sigma, a.n};
  json j;
  j["example"] = "gaussian";
  j["params"] = {{"mu", real(a.mu)}, {"sigma", real(a.sigma)}, {"n", a.n}};
  j["thm1"] = to_json(gaussian::bound_thm1(params));
  j["thm2"] = a.n >= 2 ? to_json(gaussian::bound_thm2(params)) : json(nullptr);
  j["true_value"] = real(gaussian::true_generalization(params));
  if (a.trials > 0) {
    j["mc"] = to_json(est::mc_generalization(est::GaussianMeanProcess{a.mu, a.sigma, a.n},
                                             a.trials, a.seed));
  }
  j["seed"] = a.seed;
  return dump(j);
}

// --- phase ------------------------------------------------------------------

struct PhaseArgs {
  std::optional<double> epsilon;
  std::optional<double> gamma;
  bool optimize = false;
  std::vector<double> bracket{1.5, 10.0};
  bool baseline = false;
  bool true_value = false;
  bool chord = false;
  bool table1 = false;
  std::uint64_t trials = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::string run_phase(const PhaseArgs& a) {
  if (a.table1) return table1_csv();
  if (!a.epsilon) throw PreconditionError("phase: --epsilon is required unless --table1");
  const double eps = *a.epsilon;
  json j;
  j["example"] = "phase";
  j["epsilon"] = real(eps);
  if (a.optimize) {
    if (a.bracket.size() != 2) throw PreconditionError("phase: --bracket takes LO,HI");
    const auto opt = phase::optimize_gamma(eps, {a.bracket[0], a.bracket[1]});
    j["optimum"] = {{"gamma_star", real(opt.gamma_star)},
                    {"bound_at_star", real(opt.bound_at_star)}};
  }
  if (a.gamma || !a.optimize) {
    const double gamma = a.gamma.value_or(3.75);
    j["gamma"] = real(gamma);
    const auto kind = a.chord ? phase::LinkLength::chord : phase::LinkLength::arc;
    j["bound"] = to_json(phase::bound({eps, gamma}, kind));
  }
  if (a.baseline) j["baseline"] = to_json(phase::baseline_report(eps));
  if (a.true_value) j["true_value"] = real(phase::true_value(eps));
  if (a.trials > 0) {
    j["mc"] = to_json(est::mc_generalization(
        est::PhaseRetrievalProcess{eps, a.gamma.value_or(3.75)}, a.trials, a.seed));
    j["seed"] = a.seed;
  }
  return dump(j);
}

// --- vc ---------------------------------------------------------------------

struct VcArgs {
  std::string cls = "thresholds";
  std::vector<int> n;
  int domain = 128;
  double noise = 0.1;
  std::uint64_t trials = 200;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::string run_vc(const VcArgs& a) {
  std::ostringstream csv;
  csv << "# seed=" << a.seed << "\n";
  csv << "n,covering_bound_over_sqrt_n,mc_gen_estimate,mc_std_error\n";
  for (int n : a.n) {
    vc::FiniteClass cls;
    if (a.cls == "thresholds") {
      cls = vc::threshold_class(a.domain, n, a.noise);
    } else if (a.cls == "intervals") {
      cls = vc::interval_class(a.domain, n, a.noise);
    } else if (a.cls.rfind("custom:", 0) == 0) {
      cls = vc::load_class(a.cls.substr(7), n);
    } else {
      throw PreconditionError("vc: unknown class " + a.cls);
    }
    const auto row = vc::simulate_scaling(cls, a.trials, a.seed);
    csv << n << ',' << format_real(row.covering_bound_over_sqrt_n) << ','
        << format_real(row.mc_gen.value) << ',' << format_real(row.mc_gen.std_error) << '\n';
  }
  return csv.str();
}

// --- validate ---------------------------------------------------------------

json mgf_json(const std::vector<est::MgfCheck>& checks, double w, double v, bool& pass) {
  json arr = json::array();
  for (const auto& c : checks) {
    pass = pass && c.status != est::CheckStatus::fail;
    arr.push_back({{"w", real(w)},
                   {"v", real(v)},
                   {"lambda", real(c.lambda)},
                   {"empirical", real(c.empirical)},
                   {"std_error", real(c.std_error)},
                   {"ceiling", real(c.ceiling)},
                   {"status", std::string(est::to_string(c.status))}});
  }
  return arr;
}

}  // namespace

std::string table1_csv() {
  std::ostringstream csv;
  csv << "epsilon,baseline,stochastic_375,true_value\n";
  for (int denom : kTable1Denominators) {
    const double eps = 1.0 / denom;
    csv << format_real(eps) << ',' << format_real(phase::baseline_bound(eps)) << ','
        << format_real(phase::bound({eps, 3.75}).total) << ','
        << format_real(phase::true_value(eps)) << '\n';
  }
  return csv.str();
}

json validate_suite(const std::string& suite, const std::string& example, std::uint64_t trials,
                    std::uint64_t seed) {
  const bool gaussian_example = example == "gaussian";
  if (!gaussian_example && example != "phase") {
    throw PreconditionError("validate: unknown example " + example);
  }
  json j;
  j["suite"] = suite;
  j["example"] = example;
  j["trials"] = trials;
  j["seed"] = seed;
  bool pass = true;
  json checks = json::array();

  if (suite == "gen") {
    const est::ProcessSampler sampler =
        gaussian_example ? est::ProcessSampler{est::GaussianMeanProcess{0.0, 1.0, 50}}
                         : est::ProcessSampler{est::PhaseRetrievalProcess{0.05, 3.75}};
    const double expected = gaussian_example ? gaussian::true_generalization({0.0, 1.0, 50})
                                             : phase::true_value(0.05);
    const auto mc = est::mc_generalization(sampler, trials, seed);
    const bool ok = std::abs(mc.value - expected) <= 3.0 * mc.std_error;
    pass = ok;
    checks.push_back({{"process", est::describe(sampler)},
                      {"expected", real(expected)},
                      {"mc", to_json(mc)},
                      {"pass", ok}});
  } else if (suite == "mgf") {
    if (trials < 10000) throw PreconditionError("validate mgf: needs --trials >= 10000");
    const std::vector<double> lambdas{0.0, 0.5, 1.0, 2.0};
    if (gaussian_example) {
      const est::ProcessSampler sampler = est::GaussianMeanProcess{0.0, 1.0, 10};
      checks = mgf_json(est::mgf_subgaussian_check(sampler, {1.0, 0.0}, lambdas, trials, seed),
                        1.0, 0.0, pass);
    } else {
      const est::ProcessSampler sampler = est::PhaseRetrievalProcess{0.05, 3.75};
      const double quarter = std::numbers::pi / 2.0;
      checks = mgf_json(
          est::mgf_subgaussian_check(sampler, {quarter, 0.0}, lambdas, trials, seed), quarter,
          0.0, pass);
    }
  } else if (suite == "dv") {
    const est::ProcessSampler sampler =
        gaussian_example ? est::ProcessSampler{est::GaussianMeanProcess{0.0, 1.0, 10}}
                         : est::ProcessSampler{est::PhaseRetrievalProcess{0.05, 3.75}};
    const std::vector<int> levels = gaussian_example ? std::vector<int>{-2, 0, 2}
                                                     : std::vector<int>{0, 1, 2};
    for (int k : levels) {
      const auto r = est::dv_direction_check(sampler, k, trials, seed);
      pass = pass && r.pass;
      checks.push_back({{"k", k},
                        {"mean_increment", to_json(r.increment)},
                        {"link_dist_sq", real(r.link_dist_sq)},
                        {"mi", real(r.mi)},
                        {"rhs", real(r.rhs)},
                        {"pass", r.pass}});
    }
  } else if (suite == "mi") {
    const est::ProcessSampler sampler =
        gaussian_example ? est::ProcessSampler{est::GaussianMeanProcess{0.0, 1.0, 5}}
                         : est::ProcessSampler{est::PhaseRetrievalProcess{0.05, 3.75}};
    const std::vector<int> levels = gaussian_example ? std::vector<int>{-2, 0, 2}
                                                     : std::vector<int>{0, 1, 2};
    for (int k : levels) {
      const double closed = gaussian_example ? gaussian::mi_level(k)
                                             : phase::mi_level_upper({0.05, 3.75}, k);
      const double estimate =
          est::level_mi_estimate(sampler, k, est::MiPair::data_vs_level, trials, seed);
      const bool ok = estimate <= closed + 0.02;
      pass = pass && ok;
      checks.push_back({{"k", k},
                        {"histogram_mi", real(estimate)},
                        {"closed_form", real(closed)},
                        {"pass", ok}});
    }
  } else {
    throw PreconditionError("validate: unknown suite " + suite);
  }
  j["checks"] = std::move(checks);
  j["pass"] = pass;
  return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic-chaining generalization bounds"};
  app.require_subcommand(1);

  GaussianArgs g;
  auto* gaussian_cmd = app.add_subcommand("gaussian", "Gaussian mean estimation bounds");
  gaussian_cmd->add_option("--sigma", g.sigma, "noise standard deviation")->required();
  gaussian_cmd->add_option("--n", g.n, "sample count")->required();
  gaussian_cmd->add_option("--mu", g.mu, "true mean");
  gaussian_cmd->add_option("--trials", g.trials, "Monte Carlo trials (0 disables)");
  gaussian_cmd->add_option("--seed", g.seed, "master seed");
  gaussian_cmd->add_option("--out", g.out, "output path");

  PhaseArgs p;
  auto* phase_cmd = app.add_subcommand("phase", "Phase retrieval bounds");
  phase_cmd->add_option("--epsilon", p.epsilon, "atom mass of zeta at 0");
  auto* gamma_opt = phase_cmd->add_option("--gamma", p.gamma, "chain decay ratio");
  auto* optimize_flag = phase_cmd->add_flag("--optimize", p.optimize, "optimize gamma");
  phase_cmd->add_option("--bracket", p.bracket, "gamma search bracket LO,HI")
      ->delimiter(',')
      ->expected(2);
  gamma_opt->excludes(optimize_flag);
  phase_cmd->add_flag("--baseline", p.baseline, "include the 6 sqrt(2), gamma = 2 baseline");
  phase_cmd->add_flag("--true", p.true_value, "include the exact value");
  phase_cmd->add_flag("--chord", p.chord, "bound links by the chord instead of the arc");
  phase_cmd->add_flag("--table1", p.table1, "emit the bound comparison table as CSV");
  phase_cmd->add_option("--trials", p.trials, "Monte Carlo trials (0 disables)");
  phase_cmd->add_option("--seed", p.seed, "master seed");
  phase_cmd->add_option("--out", p.out, "output path");

  std::string table_out;
  auto* table_cmd = app.add_subcommand("table1", "Same as phase --table1");
  table_cmd->add_option("--out", table_out, "output path");

  VcArgs v;
  auto* vc_cmd = app.add_subcommand("vc", "Covering-number chain on a finite class");
  vc_cmd->add_option("--class", v.cls, "thresholds | intervals | custom:PATH");
  vc_cmd->add_option("--n", v.n, "sample size (repeatable)")->required();
  vc_cmd->add_option("--domain", v.domain, "instance domain size");
  vc_cmd->add_option("--noise", v.noise, "label noise probability");
  vc_cmd->add_option("--trials", v.trials, "Monte Carlo trials per n");
  vc_cmd->add_option("--seed", v.seed, "master seed");
  vc_cmd->add_option("--out", v.out, "output path");

  std::string suite;
  std::string example;
  std::uint64_t validate_trials = 100000;
  std::uint64_t validate_seed = kDefaultSeed;
  std::string validate_out;
  auto* validate_cmd = app.add_subcommand("validate", "Monte Carlo validation suites");
  validate_cmd->add_option("--suite", suite, "mgf | dv | mi | gen")
      ->required()
      ->check(CLI::IsMember({"mgf", "dv", "mi", "gen"}));
  validate_cmd->add_option("--example", example, "gaussian | phase")
      ->required()
      ->check(CLI::IsMember({"gaussian", "phase"}));
  auto* trials_opt = validate_cmd->add_option(
      "--trials", validate_trials, "samples per check (default 10^5, 10^7 for mi)");
  validate_cmd->add_option("--seed", validate_seed, "master seed");
  validate_cmd->add_option("--out", validate_out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kArgumentError;
  }

  try {
    if (gaussian_cmd->parsed()) {
      emit(run_gaussian(g), g.out, out);
    } else if (phase_cmd->parsed()) {
      emit(run_phase(p), p.out, out);
    } else if (table_cmd->parsed()) {
      emit(table1_csv(), table_out, out);
    } else if (vc_cmd->parsed()) {
      emit(run_vc(v), v.out, out);
    } else if (validate_cmd->parsed()) {
      // Plug-in histogram bias is about 0.02 nat at 10^5 samples on a 64 x 64 grid.
      if (suite == "mi" && trials_opt->count() == 0) validate_trials = 10000000;
      const auto report = validate_suite(suite, example, validate_trials, validate_seed);
      emit(dump(report), validate_out, out);
      if (!report["pass"].get<bool>()) return kNumericalFailure;
    }
  } catch (const PreconditionError& e) {
    err << "argument error: " << e.what() << "\n";
    return kArgumentError;
  } catch (const InvariantViolation& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

}  // namespace stochchain::cli
