#include "lace/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "lace/error.hpp"

namespace lace {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Table parse_csv(std::string_view text) {
  Table table;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw ParseError("csv: line " + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw ParseError("csv: empty input");
  return table;
}

IdMatrix parse_id_matrix_csv(std::string_view text) {
  Table table = parse_csv(text);
  IdMatrix out;
  out.column_names.assign(table.header.begin() + 1, table.header.end());
  out.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                    static_cast<Eigen::Index>(out.column_names.size()));
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::int64_t id = 0;
    auto res = std::from_chars(row[0].data(), row[0].data() + row[0].size(), id);
    if (res.ec != std::errc() || res.ptr != row[0].data() + row[0].size()) {
      throw ParseError("csv: bad id '" + row[0] + "' on data row " + std::to_string(r + 1));
    }
    out.ids.push_back(id);
    for (size_t c = 1; c < row.size(); ++c) {
      double v = 0.0;
      auto rv = std::from_chars(row[c].data(), row[c].data() + row[c].size(), v);
      if (rv.ec != std::errc() || rv.ptr != row[c].data() + row[c].size()) {
        throw ParseError("csv: bad number '" + row[c] + "' on data row " +
                         std::to_string(r + 1));
      }
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = v;
    }
  }
  return out;
}

std::string id_matrix_to_csv(const std::vector<std::int64_t>& ids,
                             const std::vector<std::string>& column_names,
                             const Matrix& values, std::string_view id_name) {
  std::string out(id_name);
  for (const auto& name : column_names) out += "," + name;
  out += "\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out += std::to_string(ids[static_cast<size_t>(r)]);
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out += ",";
      out += format_double(values(r, c));
    }
    out += "\n";
  }
  return out;
}

}  // namespace lace
