#pragma once

#include <string>
#include <vector>

namespace fslab {

// Shortest round-trip decimal form; stable across runs.
std::string num(double v);

std::string sha256_hex(const std::string &bytes);
std::string read_file(const std::string &path);
// Writes bytes and returns their sha256.
std::string write_file(const std::string &path, const std::string &bytes);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string str() const;
};

} // namespace fslab
