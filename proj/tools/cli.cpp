#include "cli.hpp"

#include "srtest/config.hpp"
#include "srtest/csv.hpp"
#include "srtest/errors.hpp"
#include "srtest/harness.hpp"
#include "srtest/signs.hpp"
#include "srtest/sr_test.hpp"
#include "srtest/theory.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>

namespace srtest::cli {

namespace {

int env_threads(int fallback) {
  const char* v = std::getenv("SRTEST_THREADS");
  if (!v || !*v) return fallback;
  try {
    const int t = std::stoi(v);
    if (t >= 0) return t;
  } catch (const std::exception&) {
  }
  throw InvalidInput(std::string("SRTEST_THREADS must be a non-negative integer, got '") + v + "'");
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

struct TestArgs {
  std::string x1, x2;
  double alpha = 0.05;
  std::string mode = "fast";
  std::string method = "sr";
  std::optional<int> threads;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  const SampleMatrix x1 = read_csv_matrix(a.x1);
  const SampleMatrix x2 = read_csv_matrix(a.x2);
  const Method method = parse_method(a.method);
  TestResult r;
  if (method == Method::sr) {
    SrOptions opt;
    opt.mode = parse_mode(a.mode);
    opt.threads = a.threads ? *a.threads : env_threads(1);
    r = sr_test(x1, x2, a.alpha, opt);
  } else {
    r = tr_test_q2(x1, x2, a.alpha);
  }

  auto line = [&](const char* key, const std::string& value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-18s", key);
    out << buf << value << '\n';
  };
  line("method", std::string(to_string(r.method)));
  if (r.method == Method::sr) line("mode", std::string(to_string(r.mode)));
  line("n1, n2, p", std::to_string(x1.n()) + ", " + std::to_string(x2.n()) + ", " +
                        std::to_string(x1.p()));
  line("statistic", num(r.statistic, 10));
  if (r.variance_est) line("variance_est", num(*r.variance_est, 10));
  if (r.method == Method::sr) line("z_score", num(r.z_score, 10));
  line("p_value", num(r.p_value, 10));
  line("alpha", num(r.alpha));
  line("reject", r.reject ? "yes" : "no");
  if (r.trace_estimates) {
    const auto& t = *r.trace_estimates;
    line("trace_estimates", num(t[0]) + ", " + num(t[1]) + ", " + num(t[2]));
  }
  if (r.standardization_iterations)
    line("std_iterations", std::to_string(*r.standardization_iterations));

  nlohmann::json rec;
  rec["method"] = to_string(r.method);
  rec["mode"] = to_string(r.mode);
  rec["n1"] = x1.n();
  rec["n2"] = x2.n();
  rec["p"] = x1.p();
  rec["statistic"] = r.statistic;
  rec["variance_est"] = r.variance_est ? nlohmann::json(*r.variance_est) : nlohmann::json(nullptr);
  rec["z_score"] = r.z_score;
  rec["p_value"] = r.p_value;
  rec["alpha"] = r.alpha;
  rec["reject"] = r.reject;
  if (r.trace_estimates) rec["trace_estimates"] = *r.trace_estimates;
  if (r.standardization_iterations) rec["standardization_iterations"] = *r.standardization_iterations;
  out << rec.dump() << '\n';
  return r.reject ? kReject : kOk;
}

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  SimulationPlan plan = load_plan(a.config);
  if (a.reps)
    for (auto& c : plan.cells) c.replications = *a.reps;
  if (a.seed) plan.master_seed = *a.seed;
  plan.threads = a.threads ? *a.threads : env_threads(plan.threads);
  validate_plan(plan);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + a.out_dir + "': " + ec.message());

  const auto results = run_plan(plan, a.quiet ? nullptr : &err);
  auto open = [&](const char* name) {
    const fs::path path = fs::path(a.out_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
    return f;
  };
  {
    auto f = open("cells.csv");
    write_cells_csv(f, plan, results);
  }
  {
    auto f = open("diagnostics.csv");
    write_diagnostics_csv(f, results);
  }
  {
    auto f = open("table.txt");
    render_table(f, plan, results);
  }
  render_table(out, plan, results);
  return kOk;
}

struct FamilyArgs {
  std::string family = "normal";
  double nu = 3.0;
  double rho = 0.0;
  Index p = 100;
};

ScenarioSpec family_spec(const FamilyArgs& f) {
  Family family;
  if (f.family == "normal") family = NormalFamily{};
  else if (f.family == "t") family = StudentTFamily{f.nu};
  else if (f.family == "mixture") family = MixtureNormalFamily{};
  else throw InvalidInput("unknown family '" + f.family + "' (expected normal|t|mixture)");
  const CorrelationSpec corr =
      f.rho == 0.0 ? CorrelationSpec::identity(f.p) : CorrelationSpec::ar1(f.rho, f.p);
  return ScenarioSpec::elliptical_spec(family, corr);
}

struct TheoryArgs {
  std::string check;
  FamilyArgs family;
  std::optional<std::size_t> reps;
  std::size_t inner = 1000;
  std::uint64_t seed = 1;
  std::optional<int> threads;
};

void report(std::ostream& out, const std::string& label, double estimate, double se,
            std::optional<double> reference = std::nullopt) {
  out << label << ": " << num(estimate) << " ± " << num(se, 3);
  if (reference) out << "   (reference " << num(*reference) << ")";
  out << '\n';
}

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
  const int threads = a.threads ? *a.threads : env_threads(1);
  const bool normal_iid = a.family.family == "normal" && a.family.rho == 0.0;
  const Index p = a.family.p;
  if (a.check == "c0") {
    const ScenarioSampler s(family_spec(a.family));
    const auto e = estimate_c0(s, a.reps.value_or(100000), a.seed, threads);
    std::optional<double> ref;
    if (normal_iid && p >= 2)
      ref = std::exp(std::lgamma((p - 1) / 2.0) - std::lgamma(p / 2.0)) / 2.0;
    report(out, "c0", e.mean, e.std_error, ref);
  } else if (a.check == "are") {
    const ScenarioSampler s(family_spec(a.family));
    const auto e = estimate_are(s, a.reps.value_or(100000), a.seed, threads);
    report(out, "c0", e.c0, 0.0);
    report(out, "E||eps||^2", e.eps_norm2, 0.0);
    report(out, "ARE(SR, PA)", e.are, e.std_error,
           normal_iid ? std::optional<double>(1.0) : std::nullopt);
  } else if (a.check == "tau") {
    const ScenarioSampler s(family_spec(a.family));
    const auto e = estimate_tau_f(s, a.reps.value_or(2000), a.inner, a.seed, threads);
    std::optional<double> ref;
    if (a.family.family == "normal" && p == 1) ref = 1.0 / 3.0;
    else if (p >= 100) ref = 0.5;
    report(out, "tau_F", e.mean, e.std_error, ref);
  } else if (a.check == "moments") {
    Engine eng = make_engine(a.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(p, p);
    for (Index j = 0; j < p; ++j)
      for (Index k = 0; k <= j; ++k) m(j, k) = m(k, j) = normal(eng);
    const std::size_t draws = a.reps.value_or(1000000);
    const auto q = sphere_quadform_moment2_mc(m, draws, derive_seed(a.seed, {1}), threads);
    const auto b = sphere_bilinear_moment4_mc(m, draws, derive_seed(a.seed, {2}), threads);
    report(out, "E(u'Mu)^2", q.mean, q.std_error, sphere_quadform_moment2(m));
    report(out, "E(u1'Mu2)^4", b.mean, b.std_error, sphere_bilinear_moment4(m));
  } else {
    throw InvalidInput("unknown check '" + a.check + "' (expected are|tau|moments|c0)");
  }
  return kOk;
}

struct PowerArgs {
  Index n1 = 20, n2 = 20;
  FamilyArgs family{"normal", 3.0, 0.5, 100};
  double eta = 0.5;
  double sparsity = 0.5;
  double alpha = 0.05;
  std::size_t reps = 20000;
  std::uint64_t seed = 1;
  std::optional<int> threads;
};

int cmd_power(const PowerArgs& a, std::ostream& out) {
  const ScenarioSpec spec = family_spec(a.family);
  ShiftSpec shift;
  shift.sparsity = a.sparsity;
  shift.eta = a.eta;
  const Eigen::VectorXd delta = build_shift(shift, spec.p(), spec.variance_scales,
                                            trace_r2_exact(scenario_shape(spec)));
  const auto r = scenario_power(spec, a.n1, a.n2, delta, a.alpha, a.reps, a.seed,
                                a.threads ? *a.threads : env_threads(1));
  report(out, "c0", r.c0.mean, r.c0.std_error);
  report(out, "E||eps||^2", r.eps_norm2.mean, r.eps_norm2.std_error);
  out << "delta_quad: " << num(r.params.delta_quad) << "\ntrace_r2: " << num(r.params.trace_r2)
      << "\nbeta_SR: " << num(r.beta_sr) << "\nbeta_PA: " << num(r.beta_pa) << '\n';
  return kOk;
}

void add_family_options(CLI::App* cmd, FamilyArgs& f) {
  cmd->add_option("--family", f.family, "normal | t | mixture")->capture_default_str();
  cmd->add_option("--nu", f.nu, "degrees of freedom for --family t")->capture_default_str();
  cmd->add_option("--rho", f.rho, "AR(1) correlation (0 = identity)")->capture_default_str();
  cmd->add_option("--p", f.p, "dimension")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-dimensional spatial-rank two-sample location test", "srtest"};
  app.require_subcommand(1);

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Run the SR or TR test on two CSV samples");
  test->add_option("--x1", test_args.x1, "first sample (CSV)")->required();
  test->add_option("--x2", test_args.x2, "second sample (CSV)")->required();
  test->add_option("--alpha", test_args.alpha, "significance level")->capture_default_str();
  test->add_option("--mode", test_args.mode, "fast | exact | shared")->capture_default_str();
  test->add_option("--method", test_args.method, "sr | tr")->capture_default_str();
  test->add_option("--threads", test_args.threads, "inner worker threads (0 = all cores)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation plan");
  simulate->add_option("--config", sim_args.config, "plan file (JSON)")->required();
  simulate->add_option("--out", sim_args.out_dir, "output directory")->required();
  simulate->add_option("--reps", sim_args.reps, "override replications of every cell");
  simulate->add_option("--seed", sim_args.seed, "override master seed");
  simulate->add_option("--threads", sim_args.threads, "worker threads (0 = all cores)");
  simulate->add_flag("--quiet", sim_args.quiet, "no progress output");

  TheoryArgs theory_args;
  auto* theory = app.add_subcommand("theory", "Monte Carlo checks of the theory quantities");
  theory->add_option("--check", theory_args.check, "are | tau | moments | c0")->required();
  add_family_options(theory, theory_args.family);
  theory->add_option("--reps", theory_args.reps, "Monte Carlo draws (outer draws for tau)");
  theory->add_option("--inner", theory_args.inner, "inner draws for tau")->capture_default_str();
  theory->add_option("--seed", theory_args.seed, "seed")->capture_default_str();
  theory->add_option("--threads", theory_args.threads, "worker threads (0 = all cores)");

  PowerArgs power_args;
  auto* power = app.add_subcommand("power", "Asymptotic power of SR and PA");
  power->add_option("--n1", power_args.n1)->capture_default_str();
  power->add_option("--n2", power_args.n2)->capture_default_str();
  add_family_options(power, power_args.family);
  power->add_option("--eta", power_args.eta, "effect size")->capture_default_str();
  power->add_option("--sparsity", power_args.sparsity, "fraction of unshifted coordinates")
      ->capture_default_str();
  power->add_option("--alpha", power_args.alpha)->capture_default_str();
  power->add_option("--reps", power_args.reps, "Monte Carlo draws for c0 and E||eps||^2")
      ->capture_default_str();
  power->add_option("--seed", power_args.seed)->capture_default_str();
  power->add_option("--threads", power_args.threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (test->parsed()) return cmd_test(test_args, out);
    if (simulate->parsed()) return cmd_simulate(sim_args, out, err);
    if (theory->parsed()) return cmd_theory(theory_args, out);
    if (power->parsed()) return cmd_power(power_args, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kDataError;
  } catch (const PlanValidationError& e) {
    err << e.what() << '\n';
    return kDataError;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const UnsupportedRegime& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const GeneratorError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericError;
  }
  return kUsage;
}

}  // namespace srtest::cli
