#pragma once

#include "lmor/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lmor {

/// Binary matrix file: "LMOR", uint32 version, int64 rows, int64 cols,
/// column-major doubles (little endian host order).
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex(std::uint64_t value);

/// Small CSV table with a fixed header; numbers are formatted by the caller.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  static CsvTable read(const std::filesystem::path& path);
};

std::string format_double(double v);

}  // namespace lmor
