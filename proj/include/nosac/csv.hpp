#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nosac {

/// Shortest decimal string that parses back to the same double.
std::string format_number(double value);

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  template <typename... Args>
  void row(const Args&... args) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(args), first = false), ...);
    out_ << '\n';
  }

  void row(const std::vector<double>& values);

private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <typename N>
  static std::string cell(N n) {
    if constexpr (std::is_floating_point_v<N>) {
      return format_number(static_cast<double>(n));
    } else {
      return std::to_string(n);
    }
  }

  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

} // namespace nosac
