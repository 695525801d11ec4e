#include "fisherq/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace fisherq {

namespace {

constexpr char kMagic[4] = {'F', 'Q', 'F', '1'};

void put_u32(char* p, uint32_t v) {
  p[0] = static_cast<char>(v & 0xff);
  p[1] = static_cast<char>((v >> 8) & 0xff);
  p[2] = static_cast<char>((v >> 16) & 0xff);
  p[3] = static_cast<char>((v >> 24) & 0xff);
}

uint32_t get_u32(const char* p) {
  return static_cast<uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

void write_header(std::ofstream& out, const Grid& g, uint8_t kind) {
  char hdr[32] = {0};
  std::memcpy(hdr, kMagic, 4);
  put_u32(hdr + 4, static_cast<uint32_t>(g.ndim));
  for (int a = 0; a < g.ndim; ++a)
    put_u32(hdr + 8 + 4 * a, static_cast<uint32_t>(g.npts[a]));
  hdr[20] = static_cast<char>(kind);
  out.write(hdr, 32);
}

void write_doubles(std::ofstream& out, const double* data, size_t n) {
  // IEEE-754 little-endian host assumed (checked at build configuration)
  out.write(reinterpret_cast<const char*>(data), n * sizeof(double));
}

void write_complex_block(std::ofstream& out, const ArrayXc& v) {
  static_assert(sizeof(cplx) == 2 * sizeof(double));
  write_doubles(out, reinterpret_cast<const double*>(v.data()), 2 * v.size());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("snapshot: cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_snapshot(const std::string& path, const RealField& f) {
  auto out = open_out(path);
  write_header(out, f.grid, 0);
  write_doubles(out, f.values.data(), f.values.size());
}

void write_snapshot(const std::string& path, const ComplexField& f) {
  auto out = open_out(path);
  write_header(out, f.grid, 1);
  write_complex_block(out, f.values);
}

void write_snapshot(const std::string& path, const SpinorField& f) {
  auto out = open_out(path);
  write_header(out, f.grid(), 2);
  write_complex_block(out, f.c1.values);
  write_complex_block(out, f.c2.values);
}

SnapshotField read_snapshot(const std::string& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("snapshot: cannot open: " + path);
  char hdr[32];
  in.read(hdr, 32);
  if (in.gcount() != 32 || std::memcmp(hdr, kMagic, 4) != 0)
    throw ConfigError("snapshot: bad magic in " + path);
  const uint32_t ndim = get_u32(hdr + 4);
  if (ndim != static_cast<uint32_t>(grid.ndim))
    throw ConfigError("snapshot: ndim mismatch in " + path);
  for (int a = 0; a < grid.ndim; ++a) {
    if (get_u32(hdr + 8 + 4 * a) != static_cast<uint32_t>(grid.npts[a]))
      throw ConfigError("snapshot: axis point count mismatch in " + path);
  }
  const uint8_t kind = static_cast<uint8_t>(hdr[20]);
  const int n = grid.size();
  auto read_doubles = [&](double* dst, size_t count) {
    in.read(reinterpret_cast<char*>(dst), count * sizeof(double));
    if (static_cast<size_t>(in.gcount()) != count * sizeof(double))
      throw ConfigError("snapshot: truncated payload in " + path);
  };
  if (kind == 0) {
    RealField f(grid);
    read_doubles(f.values.data(), n);
    return f;
  }
  if (kind == 1) {
    ComplexField f(grid);
    read_doubles(reinterpret_cast<double*>(f.values.data()), 2 * size_t(n));
    return f;
  }
  if (kind == 2) {
    SpinorField f(grid);
    read_doubles(reinterpret_cast<double*>(f.c1.values.data()), 2 * size_t(n));
    read_doubles(reinterpret_cast<double*>(f.c2.values.data()), 2 * size_t(n));
    return f;
  }
  throw ConfigError("snapshot: unknown scalar kind in " + path);
}

}  // namespace fisherq
