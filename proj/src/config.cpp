#include "srtest/config.hpp"

#include "srtest/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace srtest {

namespace {

using nlohmann::json;

// Plan-wide defaults that cells inherit.
struct Defaults {
  std::optional<std::size_t> replications;
  std::optional<double> alpha;
  std::optional<Mode> mode;
  std::optional<std::vector<Method>> tests;
};

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(path + "." + key, "unknown key");
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

std::int64_t get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::size_t get_count(const json& v, const std::string& path) {
  const auto x = get_integer(v, path);
  if (x < 0) throw ConfigError(path, "must be non-negative");
  return static_cast<std::size_t>(x);
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

template <class F>
auto convert(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<Method> get_tests(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected a list such as [\"SR\", \"TR\"]");
  std::vector<Method> tests;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string item = path + "[" + std::to_string(k) + "]";
    tests.push_back(convert(item, [&] { return parse_method(get_string(v[k], item)); }));
  }
  return tests;
}

Mode get_mode(const json& v, const std::string& path) {
  return convert(path, [&] { return parse_mode(get_string(v, path)); });
}

void read_defaults(const json& obj, const std::string& path, Defaults& d) {
  if (obj.contains("replications"))
    d.replications = get_count(obj["replications"], path + ".replications");
  if (obj.contains("alpha")) d.alpha = get_number(obj["alpha"], path + ".alpha");
  if (obj.contains("mode")) d.mode = get_mode(obj["mode"], path + ".mode");
  if (obj.contains("tests")) d.tests = get_tests(obj["tests"], path + ".tests");
}

void apply_shift(const json& v, const std::string& path, CellSpec& cell) {
  if (v.is_null()) {
    cell.shift_kind = ShiftKind::none;
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "none") cell.shift_kind = ShiftKind::none;
    else if (s == "dense") {
      cell.shift_kind = ShiftKind::dense;
      cell.shift.sparsity = 0.5;
    } else if (s == "sparse") {
      cell.shift_kind = ShiftKind::sparse;
      cell.shift.sparsity = 0.95;
    } else {
      throw ConfigError(path, "expected null, \"none\", \"dense\", \"sparse\" or an object");
    }
  } else if (v.is_object()) {
    check_keys(v, path, {"sparsity"});
    if (!v.contains("sparsity")) throw ConfigError(path + ".sparsity", "required");
    cell.shift_kind = ShiftKind::custom;
    cell.shift.sparsity = get_number(v["sparsity"], path + ".sparsity");
  } else {
    throw ConfigError(path, "expected null, a string or an object");
  }
}

const std::set<std::string> kCellKeys{"id",   "scenario", "n1",    "n2",    "n",
                                      "p",    "shift",    "eta",   "alpha", "replications",
                                      "mode", "tests",    "unequal_scatter"};

// Fills every field of `cell` from `obj` except scenario, sizes and shift, which
// the caller provides.
void read_cell_common(const json& obj, const std::string& path, const Defaults& defaults,
                      CellSpec& cell) {
  Defaults local = defaults;
  read_defaults(obj, path, local);
  cell.replications = local.replications.value_or(1000);
  cell.alpha = local.alpha.value_or(0.05);
  cell.mode = local.mode.value_or(Mode::fast);
  cell.tests = local.tests.value_or(std::vector<Method>{Method::sr});
  if (obj.contains("unequal_scatter")) {
    if (!obj["unequal_scatter"].is_boolean())
      throw ConfigError(path + ".unequal_scatter", "expected true or false");
    cell.unequal_scatter = obj["unequal_scatter"].get<bool>();
  }
}

void finish_cell(const json& obj, const std::string& path, CellSpec& cell) {
  const double default_eta = is_moving_average(cell.scenario) ? 0.1 : 0.5;
  cell.shift.eta = obj.contains("eta") ? get_number(obj["eta"], path + ".eta") : default_eta;
  if (obj.contains("id")) cell.id = get_string(obj["id"], path + ".id");
  else cell.id = default_cell_id(cell);
}

Scenario get_scenario(const json& v, const std::string& path) {
  return convert(path, [&] { return parse_scenario(get_string(v, path)); });
}

Index get_dim(const json& v, const std::string& path) {
  const auto x = get_integer(v, path);
  if (x < 1) throw ConfigError(path, "must be positive");
  return static_cast<Index>(x);
}

CellSpec read_cell(const json& obj, const std::string& path, const Defaults& defaults) {
  check_keys(obj, path, kCellKeys);
  CellSpec cell;
  if (!obj.contains("scenario")) throw ConfigError(path + ".scenario", "required");
  cell.scenario = get_scenario(obj["scenario"], path + ".scenario");
  if (!obj.contains("p")) throw ConfigError(path + ".p", "required");
  cell.p = get_dim(obj["p"], path + ".p");
  if (obj.contains("n")) {
    if (obj.contains("n1") || obj.contains("n2"))
      throw ConfigError(path + ".n", "give either n or n1/n2");
    cell.n1 = cell.n2 = get_dim(obj["n"], path + ".n");
  } else {
    if (!obj.contains("n1")) throw ConfigError(path + ".n1", "required");
    if (!obj.contains("n2")) throw ConfigError(path + ".n2", "required");
    cell.n1 = get_dim(obj["n1"], path + ".n1");
    cell.n2 = get_dim(obj["n2"], path + ".n2");
  }
  if (obj.contains("shift")) apply_shift(obj["shift"], path + ".shift", cell);
  read_cell_common(obj, path, defaults, cell);
  finish_cell(obj, path, cell);
  return cell;
}

std::vector<CellSpec> expand_grid(const json& obj, const std::string& path,
                                  const Defaults& defaults) {
  check_keys(obj, path,
             {"scenarios", "sizes", "shifts", "eta", "alpha", "replications", "mode", "tests",
              "unequal_scatter"});
  for (const char* key : {"scenarios", "sizes"}) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "required");
    if (!obj[key].is_array()) throw ConfigError(path + "." + key, "expected a list");
  }
  const json shifts = obj.contains("shifts") ? obj["shifts"] : json::array({nullptr});
  if (!shifts.is_array()) throw ConfigError(path + ".shifts", "expected a list");

  std::vector<CellSpec> cells;
  const json& scenarios = obj["scenarios"];
  const json& sizes = obj["sizes"];
  for (std::size_t a = 0; a < scenarios.size(); ++a) {
    const Scenario scenario =
        get_scenario(scenarios[a], path + ".scenarios[" + std::to_string(a) + "]");
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      const std::string size_path = path + ".sizes[" + std::to_string(b) + "]";
      const json& size = sizes[b];
      if (!size.is_array() || (size.size() != 2 && size.size() != 3))
        throw ConfigError(size_path, "expected [n, p] or [n1, n2, p]");
      for (std::size_t s = 0; s < shifts.size(); ++s) {
        CellSpec cell;
        cell.scenario = scenario;
        cell.n1 = get_dim(size[0], size_path + "[0]");
        cell.n2 = get_dim(size[size.size() == 3 ? 1 : 0], size_path);
        cell.p = get_dim(size[size.size() - 1], size_path + "[" + std::to_string(size.size() - 1) + "]");
        apply_shift(shifts[s], path + ".shifts[" + std::to_string(s) + "]", cell);
        read_cell_common(obj, path, defaults, cell);
        finish_cell(obj, path, cell);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace

std::string default_cell_id(const CellSpec& cell) {
  std::string id(to_string(cell.scenario));
  if (cell.unequal_scatter) id += "u";
  id += "-" + std::to_string(cell.n1) + "x" + std::to_string(cell.n2) + "-p" + std::to_string(cell.p);
  id += "-" + std::string(to_string(cell.shift_kind));
  char buf[48];
  if (cell.shift_kind == ShiftKind::custom) {
    std::snprintf(buf, sizeof buf, "%g", cell.shift.sparsity);
    id += buf;
  }
  const double default_eta = is_moving_average(cell.scenario) ? 0.1 : 0.5;
  if (cell.shift_kind != ShiftKind::none && cell.shift.eta != default_eta) {
    std::snprintf(buf, sizeof buf, "-eta%g", cell.shift.eta);
    id += buf;
  }
  if (cell.mode != Mode::fast) id += "-" + std::string(to_string(cell.mode));
  return id;
}

SimulationPlan parse_plan_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  check_keys(root, "<root>",
             {"master_seed", "threads", "replications", "alpha", "mode", "tests", "cells",
              "grids", "description"});
  SimulationPlan plan;
  if (root.contains("master_seed")) {
    const auto& v = root["master_seed"];
    if (!v.is_number_integer()) throw ConfigError("master_seed", "expected an integer");
    plan.master_seed = v.is_number_unsigned() ? v.get<std::uint64_t>()
                                              : static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (root.contains("threads")) {
    const auto t = get_integer(root["threads"], "threads");
    if (t < 0) throw ConfigError("threads", "must be non-negative");
    plan.threads = static_cast<int>(t);
  }
  Defaults defaults;
  read_defaults(root, "<root>", defaults);
  for (const char* key : {"cells", "grids"})
    if (root.contains(key) && !root[key].is_array())
      throw ConfigError(key, "expected a list");
  if (root.contains("cells"))
    for (std::size_t k = 0; k < root["cells"].size(); ++k)
      plan.cells.push_back(
          read_cell(root["cells"][k], "cells[" + std::to_string(k) + "]", defaults));
  if (root.contains("grids"))
    for (std::size_t k = 0; k < root["grids"].size(); ++k) {
      auto cells = expand_grid(root["grids"][k], "grids[" + std::to_string(k) + "]", defaults);
      plan.cells.insert(plan.cells.end(), cells.begin(), cells.end());
    }
  return plan;
}

SimulationPlan parse_plan(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan_text(ss.str());
}

SimulationPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  return parse_plan(in);
}

}  // namespace srtest
