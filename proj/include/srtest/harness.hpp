#pragma once

#include "srtest/scenario.hpp"
#include "srtest/sr_test.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace srtest {

/// Preset scenarios I-V (elliptical, AR(0.5) correlation) and VI-IX (moving average
/// with T1 = p, T2 = 3).
enum class Scenario { I, II, III, IV, V, VI, VII, VIII, IX };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);
bool is_moving_average(Scenario s);

enum class ShiftKind { none, dense, sparse, custom };
std::string_view to_string(ShiftKind k);

struct CellSpec {
  std::string id;
  Scenario scenario = Scenario::I;
  bool unequal_scatter = false;  // R1 = AR(0.5), R2 = I (scenarios I-V)
  Index n1 = 20;
  Index n2 = 20;
  Index p = 100;
  ShiftKind shift_kind = ShiftKind::none;
  ShiftSpec shift{};             // ignored when shift_kind == none
  double alpha = 0.05;
  std::size_t replications = 1000;
  Mode mode = Mode::fast;
  std::vector<Method> tests{Method::sr};
};

struct SimulationPlan {
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::vector<CellSpec> cells;
};

struct CellResult {
  std::string cell_id;
  Method test = Method::sr;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  std::size_t failures = 0;
  double rejection_rate = 0.0;  // NaN when every replication failed
  double standard_error = 0.0;  // sqrt(r(1-r)/succeeded)
  double mean_statistic = 0.0;
  double mean_sigma_hat = 0.0;  // SR only, NaN for TR
  double wall_ms = 0.0;         // summed replication time
};

/// Throws PlanValidationError listing every invalid cell.
void validate_plan(const SimulationPlan& plan);

/// The two population specs of a cell, group 2 carrying the mean shift.
struct CellScenarios {
  ScenarioSpec first;
  ScenarioSpec second;
  Eigen::VectorXd delta;
};
CellScenarios build_cell_scenarios(const CellSpec& cell, std::uint64_t master_seed);

/// Substream seed of one replication; keyed by the cell id, not its position.
std::uint64_t replication_seed(std::uint64_t master_seed, const std::string& cell_id,
                               std::size_t replication);

/// One result per requested test, in the cell's test order.
std::vector<CellResult> run_cell(const CellSpec& cell, std::uint64_t master_seed,
                                 int threads = 1);

/// Runs all (cell, replication) units on a shared worker pool. Results are
/// grouped by cell in plan order and do not depend on the worker count.
/// `progress`, if given, receives one line per finished cell.
std::vector<CellResult> run_plan(const SimulationPlan& plan, std::ostream* progress = nullptr);

/// Fixed-column CSV (no timing column, so output is byte-reproducible).
void write_cells_csv(std::ostream& out, const SimulationPlan& plan,
                     const std::vector<CellResult>& results);
/// Timing and mean statistics per cell and test.
void write_diagnostics_csv(std::ostream& out, const std::vector<CellResult>& results);
/// Rows scenario x size, columns test x {size, dense, sparse}; entries are percent
/// rejection rates.
void render_table(std::ostream& out, const SimulationPlan& plan,
                  const std::vector<CellResult>& results);

}  // namespace srtest
