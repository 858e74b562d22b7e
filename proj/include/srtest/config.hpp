#pragma once

#include "srtest/harness.hpp"

#include <istream>
#include <string>

namespace srtest {

/// Parses a JSON simulation plan. Schema (all keys optional unless noted):
///
///   master_seed    integer
///   threads        integer, 0 = hardware concurrency
///   replications, alpha, mode, tests   plan-wide defaults for every cell
///   cells          list of cell objects
///   grids          list of grid objects; each expands to the cross product of
///                  scenarios x sizes x shifts, other keys as in a cell
///
/// Cell keys: id, scenario (required, "I".."IX"), n1 and n2 or n, p (required),
/// shift (null | "none" | "dense" | "sparse" | {"sparsity": s}), eta, alpha,
/// replications, mode ("fast" | "exact" | "shared"), tests (["SR", "TR"]), unequal_scatter.
/// Grid sizes are [n, p] or [n1, n2, p]. Default eta is 0.5 for scenarios I-V and
/// 0.1 for VI-IX. Unknown keys and wrong types throw ConfigError with a field path.
SimulationPlan parse_plan(std::istream& in);
SimulationPlan parse_plan_text(const std::string& text);
SimulationPlan load_plan(const std::string& path);

/// Cell id used when a cell has none: "<scenario>[u]-<n1>x<n2>-p<p>-<shift>".
std::string default_cell_id(const CellSpec& cell);

}  // namespace srtest
