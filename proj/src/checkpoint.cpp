#include "stgcn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'G', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    write_pod(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    write_pod(out, static_cast<std::uint32_t>(a.shape.size()));
    std::size_t expect = 1;
    for (long d : a.shape) {
      write_pod(out, static_cast<std::int64_t>(d));
      expect *= static_cast<std::size_t>(d);
    }
    if (expect != a.data.size())
      throw ShapeError("checkpoint array '" + a.name + "': shape/data size mismatch");
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(sizeof(double) * a.data.size()));
  }
  if (!out) throw IoError("short write on checkpoint: " + path);
}

std::vector<NamedArray> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("bad checkpoint magic: " + path);
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  const auto count = read_pod<std::uint32_t>(in, path);
  std::vector<NamedArray> arrays(count);
  for (auto& a : arrays) {
    const auto name_len = read_pod<std::uint32_t>(in, path);
    a.name.resize(name_len);
    in.read(a.name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(in, path);
    a.shape.resize(ndim);
    std::size_t total = 1;
    for (auto& d : a.shape) {
      d = static_cast<long>(read_pod<std::int64_t>(in, path));
      total *= static_cast<std::size_t>(d);
    }
    a.data.resize(total);
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(sizeof(double) * total));
    if (!in) throw IoError("checkpoint truncated: " + path);
  }
  return arrays;
}

}  // namespace stgcn
