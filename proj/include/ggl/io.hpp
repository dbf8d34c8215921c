// Low-level CSV matrix I/O. Schemas (manifest, trace, metrics) live with the
// modules that own them.
#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ggl/common.hpp"
#include "ggl/ensemble.hpp"

namespace ggl {

// Dense comma-separated matrix; when skip_header is set the first line is
// discarded (observation files carry one header line).
inline Matrix read_csv_matrix(const std::string& path, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_header && lineno == 1) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        throw IoError("malformed CSV value '" + cell + "' at " + path + ":" +
                      std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged CSV row at " + path + ":" + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty CSV file: " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m,
                             const std::string& header = "") {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << std::setprecision(17);
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace ggl
