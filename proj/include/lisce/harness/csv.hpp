#pragma once

// CSV emission and ingestion for experiment outputs. Cells never contain
// commas or quotes, so no escaping layer exists.

#include <string>
#include <vector>

namespace lisce::harness {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
  void add_row(std::vector<std::string> cells);     // arity-checked
};

// Deterministic numeric cell formats shared by all writers.
std::string csv_num(double v);  // %.12g
std::string csv_num(int v);
std::string csv_num(std::uint64_t v);

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace lisce::harness
