#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lace/matrix.hpp"

namespace lace {

// Shortest text that parses back to the same double.
std::string format_double(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Minimal CSV reader: comma separated, no quoting, first line is header.
Table parse_csv(std::string_view text);

// Numeric table whose first column is a cell id.
struct IdMatrix {
  std::vector<std::int64_t> ids;
  std::vector<std::string> column_names;
  Matrix values;
};
IdMatrix parse_id_matrix_csv(std::string_view text);
std::string id_matrix_to_csv(const std::vector<std::int64_t>& ids,
                             const std::vector<std::string>& column_names,
                             const Matrix& values, std::string_view id_name = "cell_id");

}  // namespace lace
