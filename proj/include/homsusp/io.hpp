#pragma once

#include <string>
#include <vector>

namespace homsusp {

inline constexpr int kCsvSchemaVersion = 1;

/// Writes through a sibling temporary file and renames it into place.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// CSV table with a leading "# schema_version=N" comment line.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns, std::string kind = "");
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& values);
  std::string str() const;
  void write(const std::string& path) const { write_text_atomic(path, str()); }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::string kind_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_double(double v);

}  // namespace homsusp
