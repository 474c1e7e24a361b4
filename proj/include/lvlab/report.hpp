#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lvlab {

// Shortest decimal that round-trips; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

// In-memory CSV with a mandatory header and "\n" line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes the whole text, creating parent directories. Throws Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lvlab
