#include "mcimplicit/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mcimplicit {

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  begin_row();
  for (const std::string& h : header) add(h);
  end_row();
  rows_ = 0;  // header row not counted
}

void CsvWriter::begin_row() {
  if (row_open_) throw std::logic_error("CsvWriter: row already open");
  row_open_ = true;
  in_row_ = 0;
}

void CsvWriter::sep() {
  if (in_row_ > 0) out_ += ',';
  ++in_row_;
}

void CsvWriter::add(double value) {
  sep();
  if (!std::isnan(value)) out_ += format_double(value);
}

void CsvWriter::add(long value) {
  sep();
  out_ += std::to_string(value);
}

void CsvWriter::add(const std::string& value) {
  sep();
  const bool needs_quotes =
      value.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) {
    out_ += value;
    return;
  }
  out_ += '"';
  for (char c : value) {
    if (c == '"') out_ += '"';
    out_ += c;
  }
  out_ += '"';
}

void CsvWriter::end_row() {
  if (!row_open_) throw std::logic_error("CsvWriter: no open row");
  if (in_row_ != columns_)
    throw std::logic_error("CsvWriter: wrong field count in row");
  out_ += "\r\n";
  row_open_ = false;
  ++rows_;
}

void CsvWriter::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << out_;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string CsvWriter::format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return buf;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  auto flush_field = [&] {
    row.push_back(field);
    field.clear();
  };
  auto flush_row = [&] {
    flush_field();
    rows.push_back(row);
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      flush_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      flush_row();
      ++i;
    } else if (c == '\n') {
      flush_row();
    } else {
      field += c;
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) flush_row();
  return rows;
}

}  // namespace mcimplicit
