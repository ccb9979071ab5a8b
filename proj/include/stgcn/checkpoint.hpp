#pragma once

#include <string>
#include <vector>

namespace stgcn {

/// One entry of the checkpoint container: a named n-dimensional array of
/// doubles in row-major order.
struct NamedArray {
  std::string name;
  std::vector<long> shape;
  std::vector<double> data;
};

/// Flat binary container, version 1:
///   magic "STGNCKP1" | u32 version | u32 count |
///   per array: u32 name_len | name bytes | u32 ndim | i64 dims | f64 data
/// Little-endian, no padding. Stable across runs given identical content.
void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> load_checkpoint(const std::string& path);

}  // namespace stgcn
