#pragma once

// File I/O glue: deterministic CSV reading/writing (full-precision doubles,
// comment-aware parsing) and a small content hash used to tie cached results
// to their input fixtures.

#include <string>
#include <vector>

namespace gpmh {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

// FNV-1a 64-bit hash of a byte string, rendered as 16 hex digits.
std::string fnv1a64_hex(const std::string& bytes);

// Shortest round-trip decimal form of a double ("%.17g"); identical inputs
// give identical bytes, which keeps output files reproducible.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> comments;  // leading '#' lines, verbatim
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int column(const std::string& name) const;  // -1 when absent
};

// Parses a comma-separated file with one header row; lines starting with '#'
// are collected as comments. All cells below the header must be numeric.
CsvTable read_csv(const std::string& path);

// Streams rows to a CSV file with format_double cells.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const std::vector<std::string>& comments = {});
  void row(const std::vector<double>& cells);
  void close();
  std::string str() const;  // content written so far

 private:
  std::string path_;
  std::string buf_;
  std::size_t n_cols_;
  bool open_ = true;
};

}  // namespace gpmh
