#include "rosguard/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rosguard/errors.hpp"

namespace rosguard {

using Eigen::MatrixXd;

MatrixXd read_matrix(std::istream& in) {
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw IoError("matrix header: expected \"M N\"");
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw IoError("matrix body: short read at row " + std::to_string(i));
  return m;
}

MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  return read_matrix(in);
}

std::string format_double(double v) {
  // Try increasing precision until the value round-trips.
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_matrix(std::ostream& out, const MatrixXd& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  write_matrix(out, m);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  write_csv(out, table);
}

void write_long_format(
    std::ostream& out,
    const std::vector<std::pair<std::string, CsvTable>>& tables) {
  out << "table,series,value\n";
  for (const auto& [name, table] : tables) {
    for (const auto& row : table.rows) {
      for (size_t j = 0; j < row.size() && j < table.header.size(); ++j) {
        out << name << ',' << table.header[j] << ','
            << format_double(row[j]) << '\n';
      }
    }
  }
}

}  // namespace rosguard
