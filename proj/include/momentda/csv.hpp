#pragma once

#include "momentda/common.hpp"

#include <string>
#include <vector>

namespace momentda {

/// Reads a comma-separated matrix of floats. A first line containing any
/// non-numeric field is treated as a header and skipped. Blank lines are ignored.
Matrix read_csv(const std::string& path);
Matrix parse_csv(const std::string& text, const std::string& origin = "<string>");

/// Writes with 17 significant digits so values round-trip exactly.
void write_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});

std::string format_double(double v);

}  // namespace momentda
