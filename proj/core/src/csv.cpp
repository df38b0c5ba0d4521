#include "safexfer/csv.hpp"

#include <cstdio>

namespace safexfer {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Fault("cannot write " + path.string());
  for (const auto& h : header) add(h);
  end_row();
}

CsvWriter& CsvWriter::add(const std::string& v) {
  if (!first_) out_ << ',';
  out_ << v;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::add(double v) { return add(format_real(v)); }

CsvWriter& CsvWriter::add(long long v) { return add(std::to_string(v)); }

CsvWriter& CsvWriter::add(const Vec& v) {
  for (int i = 0; i < v.size(); ++i) add(v[i]);
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
  if (!out_) throw Fault("CSV write failed");
}

}  // namespace safexfer
