#pragma once

#include <string>
#include <variant>

#include "fisherq/field.hpp"

namespace fisherq {

// Binary field snapshots, format "FQF1":
//   bytes  0..3   magic "FQF1"
//   bytes  4..7   u32 ndim (little endian)
//   bytes  8..19  u32 points per axis (3 slots, unused axes = 0)
//   byte   20     scalar kind: 0 real, 1 complex, 2 spinor
//   bytes 21..31  zero padding (header is exactly 32 bytes)
// followed by row-major (axis 0 slowest) little-endian float64 payload;
// complex values interleave re,im; spinors store component 1 then component 2.

using SnapshotField = std::variant<RealField, ComplexField, SpinorField>;

void write_snapshot(const std::string& path, const RealField& f);
void write_snapshot(const std::string& path, const ComplexField& f);
void write_snapshot(const std::string& path, const SpinorField& f);

// Grid lengths/origins are not stored in the file; the caller supplies the
// geometry the samples live on (point counts are validated against the file).
SnapshotField read_snapshot(const std::string& path, const Grid& grid);

}  // namespace fisherq
