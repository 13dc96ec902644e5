#pragma once

#include <string>
#include <vector>

namespace mcimplicit {

// RFC-4180 CSV writer: CRLF line endings, '.' decimal separator, doubles in
// scientific notation with 17 significant digits so values round-trip exactly.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void begin_row();
  void add(double value);       // NaN renders as an empty field
  void add(long value);
  void add(const std::string& value);
  void end_row();

  const std::string& str() const { return out_; }
  std::size_t rows() const { return rows_; }
  void write_file(const std::string& path) const;

  static std::string format_double(double value);

 private:
  void sep();
  std::string out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
  bool row_open_ = false;
  std::size_t rows_ = 0;
};

// Minimal CSV reader for the library's own artifacts (no embedded quotes in
// numeric tables; quoted fields supported for names).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace mcimplicit
