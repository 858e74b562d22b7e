#pragma once

#include "srtest/sample.hpp"

#include <istream>
#include <string>

namespace srtest {

/// Reads one observation per line, comma-separated decimals. A first line with
/// any non-numeric field is taken as a header. Blank lines, a UTF-8 BOM and CRLF
/// endings are tolerated. Ragged or non-numeric rows throw ParseError with the
/// 1-based line number.
SampleMatrix read_csv_matrix(std::istream& in);
SampleMatrix read_csv_matrix(const std::string& path);

}  // namespace srtest
