#include "dhmm/harness/csv.hpp"

#include <charconv>
#include <cmath>

#include "dhmm/errors.hpp"

namespace dhmm::harness {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary) {
  if (!out_) throw Error("csv: cannot write " + path.string());
  for (auto h : header) *this << h;
  end_row();
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& header_line)
    : out_(path, std::ios::binary) {
  if (!out_) throw Error("csv: cannot write " + path.string());
  out_ << header_line << '\n';
}

void CsvWriter::separator() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double x) {
  separator();
  out_ << format_number(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
  separator();
  out_ << s;
  return *this;
}

void CsvWriter::raw(const std::string& lines) { out_ << lines; }

void CsvWriter::end_row() {
  out_ << '\n';
  row_started_ = false;
}

}  // namespace dhmm::harness
