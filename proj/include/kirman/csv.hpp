#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace kirman::csv {

/// Comma separated output with a fixed header.  Numbers use the
/// shortest round-trip representation so equal values give equal bytes.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::initializer_list<std::string> header);

  Writer& cell(double v);
  Writer& cell(long v);
  Writer& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
  std::string path_;
};

struct Series {
  std::vector<double> t;
  std::vector<double> value;
};

/// Reads a `t,value` table.  Throws Config (schema problems) naming the file
/// and line.
Series read_series(const std::filesystem::path& path);

}  // namespace kirman::csv
