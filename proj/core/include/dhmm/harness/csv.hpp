#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

namespace dhmm::harness {

/// Shortest round-trip decimal form of x ("inf", "-inf", "nan" for non-finite).
std::string format_number(double x);

/// Minimal CSV writer: fields are numbers or bare identifiers, so no quoting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  CsvWriter(const std::filesystem::path& path, const std::string& header_line);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(std::size_t x);
  CsvWriter& operator<<(std::string_view s);
  /// Appends a pre-formatted block of complete lines.
  void raw(const std::string& lines);
  void end_row();

 private:
  void separator();
  std::ofstream out_;
  bool row_started_ = false;
};

}  // namespace dhmm::harness
