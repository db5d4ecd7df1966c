#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace rosguard {

/// Matrix file format: first line "M N", then M rows of N
/// whitespace-separated decimals.
Eigen::MatrixXd read_matrix(std::istream& in);
Eigen::MatrixXd read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m);

/// Shortest round-trip-exact decimal rendering of a double ("%.17g" fallback).
std::string format_double(double v);

/// A plot-ready CSV table: fixed header, rows of doubles. Writers are
/// deterministic (no timestamps, value formatting via format_double).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

/// Concatenates tables into one long-format file with a leading table-name
/// column. Used for plot-ready dumps.
void write_long_format(std::ostream& out,
                       const std::vector<std::pair<std::string, CsvTable>>& tables);

}  // namespace rosguard
