#include "srtest/harness.hpp"

#include "srtest/errors.hpp"
#include "srtest/parallel.hpp"
#include "srtest/rng.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <utility>

namespace srtest {

namespace {

constexpr std::array<std::string_view, 9> kScenarioNames{"I", "II", "III", "IV", "V",
                                                         "VI", "VII", "VIII", "IX"};

// Substream tags for per-plan frozen draws.
constexpr std::uint64_t kScaleTag = 0x5343414c45ULL;  // variance scales of scenario IV
constexpr std::uint64_t kMaTag = 0x4d41434f4546ULL;   // moving-average coefficients

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Index min_sample_size(Method test, Mode mode) {
  if (test == Method::tr) return 2;
  switch (mode) {
    case Mode::exact: return 7;
    case Mode::fast: return 5;
    case Mode::shared: return 4;
  }
  return 5;
}

std::string scenario_label(const CellSpec& cell) {
  std::string s(to_string(cell.scenario));
  if (cell.unequal_scatter) s += "-unequal";
  return s;
}

}  // namespace

std::string_view to_string(Scenario s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

Scenario parse_scenario(std::string_view text) {
  for (std::size_t k = 0; k < kScenarioNames.size(); ++k)
    if (kScenarioNames[k] == text) return static_cast<Scenario>(k);
  throw InvalidInput("unknown scenario '" + std::string(text) + "' (expected I..IX)");
}

bool is_moving_average(Scenario s) { return s >= Scenario::VI; }

std::string_view to_string(ShiftKind k) {
  switch (k) {
    case ShiftKind::none: return "none";
    case ShiftKind::dense: return "dense";
    case ShiftKind::sparse: return "sparse";
    case ShiftKind::custom: return "custom";
  }
  return "none";
}

void validate_plan(const SimulationPlan& plan) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    const CellSpec& cell = plan.cells[c];
    const std::string name = cell.id.empty() ? "cell #" + std::to_string(c) : "cell '" + cell.id + "'";
    auto bad = [&](const std::string& what) { problems.push_back(name + ": " + what); };

    if (cell.id.empty()) bad("id is empty");
    else if (!ids.insert(cell.id).second) bad("duplicate id");
    if (cell.p < 1) bad("p must be positive");
    if (!(cell.alpha > 0.0 && cell.alpha < 1.0)) bad("alpha must lie in (0,1)");
    if (cell.replications < 1) bad("replications must be at least 1");
    if (cell.tests.empty()) bad("no tests requested");
    if (cell.unequal_scatter && is_moving_average(cell.scenario))
      bad("unequal_scatter applies to scenarios I-V only");
    for (Method t : cell.tests) {
      const Index need = min_sample_size(t, cell.mode);
      if (cell.n1 < need || cell.n2 < need)
        bad(std::string(to_string(t)) + " in " + std::string(to_string(cell.mode)) +
            " mode needs n1, n2 >= " + std::to_string(need));
      if (t == Method::tr && cell.p >= cell.n1 + cell.n2)
        bad("TR requires p < n1 + n2 (p = " + std::to_string(cell.p) +
            ", n1 + n2 = " + std::to_string(cell.n1 + cell.n2) + ")");
    }
    if (cell.shift_kind != ShiftKind::none) {
      const ShiftSpec& s = cell.shift;
      if (!(s.sparsity >= 0.0 && s.sparsity <= 1.0)) bad("shift sparsity must lie in [0,1]");
      else if (cell.p >= 1 && cell.p - std::lround(s.sparsity * static_cast<double>(cell.p)) < 1)
        bad("shift leaves no nonzero coordinate");
      if (!(s.eta >= 0.0) || !std::isfinite(s.eta)) bad("eta must be non-negative");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid simulation plan:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw PlanValidationError(msg, std::move(problems));
  }
}

CellScenarios build_cell_scenarios(const CellSpec& cell, std::uint64_t master_seed) {
  const Index p = cell.p;
  CellScenarios out;
  ShiftSpec shift = cell.shift;
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(p);
  double trace_term = 0.0;

  if (is_moving_average(cell.scenario)) {
    Innovation innovation = Innovation::normal;
    switch (cell.scenario) {
      case Scenario::VII: innovation = Innovation::gamma_half; break;
      case Scenario::VIII: innovation = Innovation::t3; break;
      case Scenario::IX: innovation = Innovation::normal_mixture; break;
      default: break;
    }
    const auto p64 = static_cast<std::uint64_t>(p);
    out.first = ScenarioSpec::moving_average(
        innovation, draw_ma_coefficients(p, derive_seed(master_seed, {kMaTag, 1, p64})), p);
    out.second = ScenarioSpec::moving_average(
        innovation, draw_ma_coefficients(3, derive_seed(master_seed, {kMaTag, 2, p64})), p);
    if (cell.shift_kind != ShiftKind::none)
      trace_term = trace_r2_exact(scenario_covariance(out.first)) +
                   trace_r2_exact(scenario_covariance(out.second));
    shift.normalization = ShiftSpec::Normalization::raw;
  } else {
    Family family = NormalFamily{};
    if (cell.scenario == Scenario::III || cell.scenario == Scenario::IV)
      family = StudentTFamily{3.0};
    else if (cell.scenario == Scenario::V)
      family = MixtureNormalFamily{0.8, 9.0};
    if (cell.scenario == Scenario::II)
      scales = make_variance_scales(ScaleKind::half_3_half_1, p);
    else if (cell.scenario == Scenario::IV)
      scales = make_variance_scales(ScaleKind::chi2_2_random, p,
                                    derive_seed(master_seed, {kScaleTag, static_cast<std::uint64_t>(p)}));
    const CorrelationSpec ar1 = CorrelationSpec::ar1(0.5, p);
    out.first = ScenarioSpec::elliptical_spec(family, ar1);
    out.first.variance_scales = scales;
    out.second = out.first;
    if (cell.unequal_scatter) out.second.correlation = CorrelationSpec::identity(p);
    if (cell.shift_kind != ShiftKind::none) trace_term = trace_r2_exact(build_correlation(ar1));
    shift.normalization = ShiftSpec::Normalization::scaled;
  }

  out.delta = cell.shift_kind == ShiftKind::none ? Eigen::VectorXd::Zero(p)
                                                 : build_shift(shift, p, scales, trace_term);
  out.second.mean = out.delta;
  return out;
}

std::uint64_t replication_seed(std::uint64_t master_seed, const std::string& cell_id,
                               std::size_t replication) {
  return derive_seed(master_seed, {fnv1a(cell_id), static_cast<std::uint64_t>(replication)});
}

namespace {

struct TestOutcome {
  bool ok = false;
  bool reject = false;
  double statistic = 0.0;
  double sigma_hat = 0.0;
};

struct PreparedCell {
  const CellSpec* cell = nullptr;
  std::unique_ptr<ScenarioSampler> first;
  std::unique_ptr<ScenarioSampler> second;
  std::vector<std::vector<TestOutcome>> outcomes;  // [replication][test]
  std::vector<double> rep_ms;
  std::atomic<std::size_t> done{0};
};

using RootCache = std::map<std::pair<double, Index>, std::shared_ptr<const Eigen::MatrixXd>>;

std::unique_ptr<ScenarioSampler> make_sampler(const ScenarioSpec& spec, RootCache& cache) {
  if (!spec.elliptical() || spec.correlation.kind == CorrelationSpec::Kind::identity)
    return std::make_unique<ScenarioSampler>(spec);
  auto& root = cache[{spec.correlation.rho, spec.correlation.p}];
  if (!root) root = correlation_root(spec.correlation);
  return std::make_unique<ScenarioSampler>(spec, root);
}

void run_replication(PreparedCell& pc, std::uint64_t master_seed, std::size_t r) {
  const CellSpec& cell = *pc.cell;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = replication_seed(master_seed, cell.id, r);
  const SampleMatrix x1 = pc.first->sample(cell.n1, derive_seed(seed, {1}));
  const SampleMatrix x2 = pc.second->sample(cell.n2, derive_seed(seed, {2}));
  auto& row = pc.outcomes[r];
  row.assign(cell.tests.size(), {});
  for (std::size_t t = 0; t < cell.tests.size(); ++t) {
    try {
      TestResult res;
      if (cell.tests[t] == Method::sr) {
        SrOptions opt;
        opt.mode = cell.mode;
        res = sr_test(x1, x2, cell.alpha, opt);
      } else {
        res = tr_test_q2(x1, x2, cell.alpha);
      }
      row[t] = {true, res.reject, res.statistic,
                res.variance_est ? std::sqrt(*res.variance_est)
                                 : std::numeric_limits<double>::quiet_NaN()};
    } catch (const Error&) {
      row[t] = {};
    }
  }
  pc.rep_ms[r] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<CellResult> aggregate(const PreparedCell& pc) {
  const CellSpec& cell = *pc.cell;
  std::vector<CellResult> results;
  double total_ms = 0.0;
  for (double ms : pc.rep_ms) total_ms += ms;
  for (std::size_t t = 0; t < cell.tests.size(); ++t) {
    CellResult res;
    res.cell_id = cell.id;
    res.test = cell.tests[t];
    res.replications = cell.replications;
    double stat_sum = 0.0;
    double sigma_sum = 0.0;
    for (const auto& row : pc.outcomes) {
      const TestOutcome& o = row[t];
      if (!o.ok) {
        ++res.failures;
        continue;
      }
      res.rejections += o.reject ? 1 : 0;
      stat_sum += o.statistic;
      sigma_sum += o.sigma_hat;
    }
    const std::size_t ok = res.replications - res.failures;
    if (ok == 0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      res.rejection_rate = res.standard_error = res.mean_statistic = res.mean_sigma_hat = nan;
    } else {
      const double m = static_cast<double>(ok);
      res.rejection_rate = static_cast<double>(res.rejections) / m;
      res.standard_error = std::sqrt(res.rejection_rate * (1.0 - res.rejection_rate) / m);
      res.mean_statistic = stat_sum / m;
      res.mean_sigma_hat = sigma_sum / m;
    }
    res.wall_ms = total_ms;
    results.push_back(res);
  }
  return results;
}

std::vector<CellResult> execute(const std::vector<const CellSpec*>& cells,
                                std::uint64_t master_seed, int threads, std::ostream* progress) {
  RootCache cache;
  std::vector<PreparedCell> prepared(cells.size());
  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellScenarios sc = build_cell_scenarios(*cells[c], master_seed);
    PreparedCell& pc = prepared[c];
    pc.cell = cells[c];
    pc.first = make_sampler(sc.first, cache);
    pc.second = make_sampler(sc.second, cache);
    pc.outcomes.resize(cells[c]->replications);
    pc.rep_ms.assign(cells[c]->replications, 0.0);
    for (std::size_t r = 0; r < cells[c]->replications; ++r) units.emplace_back(c, r);
  }

  std::mutex progress_mutex;
  std::size_t finished_cells = 0;
  parallel_for(units.size(), threads, [&](std::size_t u) {
    const auto [c, r] = units[u];
    PreparedCell& pc = prepared[c];
    run_replication(pc, master_seed, r);
    if (pc.done.fetch_add(1) + 1 == pc.cell->replications && progress) {
      std::lock_guard lock(progress_mutex);
      *progress << "[" << ++finished_cells << "/" << cells.size() << "] " << pc.cell->id
                << " done\n";
      progress->flush();
    }
  });

  std::vector<CellResult> results;
  for (const PreparedCell& pc : prepared) {
    auto part = aggregate(pc);
    results.insert(results.end(), part.begin(), part.end());
  }
  return results;
}

}  // namespace

std::vector<CellResult> run_cell(const CellSpec& cell, std::uint64_t master_seed, int threads) {
  SimulationPlan plan;
  plan.master_seed = master_seed;
  plan.cells.push_back(cell);
  validate_plan(plan);
  return execute({&cell}, master_seed, threads, nullptr);
}

std::vector<CellResult> run_plan(const SimulationPlan& plan, std::ostream* progress) {
  validate_plan(plan);
  std::vector<const CellSpec*> cells;
  for (const auto& c : plan.cells) cells.push_back(&c);
  return execute(cells, plan.master_seed, plan.threads, progress);
}

namespace {

const CellSpec& find_cell(const SimulationPlan& plan, const std::string& id) {
  for (const auto& c : plan.cells)
    if (c.id == id) return c;
  throw InvalidInput("result refers to unknown cell '" + id + "'");
}

}  // namespace

void write_cells_csv(std::ostream& out, const SimulationPlan& plan,
                     const std::vector<CellResult>& results) {
  out << "id,scenario,n1,n2,p,shift,eta,test,mode,alpha,reps,rejections,rate,se,failures\n";
  for (const CellResult& r : results) {
    const CellSpec& c = find_cell(plan, r.cell_id);
    const double eta = c.shift_kind == ShiftKind::none ? 0.0 : c.shift.eta;
    out << c.id << ',' << scenario_label(c) << ',' << c.n1 << ',' << c.n2 << ',' << c.p << ','
        << to_string(c.shift_kind) << ',' << fmt6(eta) << ',' << to_string(r.test) << ','
        << to_string(c.mode) << ',' << fmt6(c.alpha) << ',' << r.replications << ','
        << r.rejections << ',' << fmt6(r.rejection_rate) << ',' << fmt6(r.standard_error) << ','
        << r.failures << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "id,test,mean_statistic,mean_sigma_hat,wall_ms\n";
  for (const CellResult& r : results)
    out << r.cell_id << ',' << to_string(r.test) << ',' << fmt6(r.mean_statistic) << ','
        << fmt6(r.mean_sigma_hat) << ',' << fmt6(r.wall_ms) << '\n';
}

void render_table(std::ostream& out, const SimulationPlan& plan,
                  const std::vector<CellResult>& results) {
  using RowKey = std::tuple<std::string, Index, Index, Index>;
  std::vector<RowKey> rows;
  std::vector<Method> tests;
  std::set<ShiftKind> kinds;
  std::map<std::tuple<RowKey, Method, ShiftKind>, double> entries;
  for (const CellResult& r : results) {
    const CellSpec& c = find_cell(plan, r.cell_id);
    const RowKey key{scenario_label(c), c.n1, c.n2, c.p};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
    if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) tests.push_back(r.test);
    kinds.insert(c.shift_kind);
    entries[{key, r.test, c.shift_kind}] = r.rejection_rate;
  }
  if (rows.empty()) {
    out << "(no cells)\n";
    return;
  }

  auto kind_label = [](ShiftKind k) {
    return k == ShiftKind::none ? std::string("size") : std::string(to_string(k));
  };
  std::vector<std::pair<Method, ShiftKind>> columns;
  for (ShiftKind k : kinds)
    for (Method t : tests) columns.emplace_back(t, k);

  char buf[64];
  std::snprintf(buf, sizeof buf, "%-22s", "scenario (n1,n2,p)");
  out << buf;
  for (const auto& [t, k] : columns) {
    std::snprintf(buf, sizeof buf, "%10s", (std::string(to_string(t)) + " " + kind_label(k)).c_str());
    out << buf;
  }
  out << '\n';
  for (const RowKey& key : rows) {
    const std::string label = std::get<0>(key) + " (" + std::to_string(std::get<1>(key)) + "," +
                              std::to_string(std::get<2>(key)) + "," +
                              std::to_string(std::get<3>(key)) + ")";
    std::snprintf(buf, sizeof buf, "%-22s", label.c_str());
    out << buf;
    for (const auto& [t, k] : columns) {
      const auto it = entries.find({key, t, k});
      if (it == entries.end()) std::snprintf(buf, sizeof buf, "%10s", "-");
      else if (std::isnan(it->second)) std::snprintf(buf, sizeof buf, "%10s", "NA");
      else std::snprintf(buf, sizeof buf, "%10.1f", 100.0 * it->second);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace srtest
