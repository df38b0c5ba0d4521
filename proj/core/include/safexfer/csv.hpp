#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "safexfer/types.hpp"

namespace safexfer {

// Shortest form that round-trips is not needed; 17 significant digits keep the
// output byte-stable and lossless for binary64.
std::string format_real(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& add(double v);
  CsvWriter& add(long long v);
  CsvWriter& add(const std::string& v);
  CsvWriter& add(const Vec& v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace safexfer
