#include "srtest/csv.hpp"

#include "srtest/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string_view>
#include <vector>

namespace srtest {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_number(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

}  // namespace

SampleMatrix read_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;

    const auto fields = split_fields(view);
    std::vector<double> values;
    values.reserve(fields.size());
    std::optional<std::size_t> bad;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto v = parse_number(fields[k]);
      if (!v) {
        bad = k;
        break;
      }
      values.push_back(*v);
    }
    if (first_content) {
      first_content = false;
      if (bad) {
        width = fields.size();
        continue;  // header
      }
    }
    if (bad)
      throw ParseError("field " + std::to_string(*bad + 1) + " is not a number: '" +
                           std::string(fields[*bad]) + "'",
                       line_no);
    for (std::size_t k = 0; k < values.size(); ++k)
      if (!std::isfinite(values[k]))
        throw ParseError("field " + std::to_string(k + 1) + " is not finite", line_no);
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(values.size()),
                       line_no);
    rows.push_back(std::move(values));
  }
  if (rows.size() < 2)
    throw ParseError("need at least 2 observations, found " + std::to_string(rows.size()),
                     std::max<std::size_t>(line_no, 1));
  return SampleMatrix::from_rows(rows);
}

SampleMatrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv_matrix(in);
}

}  // namespace srtest
