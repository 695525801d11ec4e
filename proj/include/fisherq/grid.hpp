#pragma once

#include <array>
#include <cstdint>

#include "fisherq/common.hpp"

namespace fisherq {

enum class Boundary { periodic, absorbing };

// Uniform rectangular grid in 1..3 dimensions. Values attached to a grid are
// stored row-major with axis 0 slowest; this single layout convention is also
// the one used by binary snapshots.
struct Grid {
  int ndim = 1;
  std::array<int, 3> npts{1, 1, 1};
  std::array<double, 3> length{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  Boundary boundary = Boundary::periodic;
  // width of the cos^2 absorber layer at each edge (absorbing grids only)
  double absorb_width = 0.0;

  int size() const {
    int n = 1;
    for (int a = 0; a < ndim; ++a) n *= npts[a];
    return n;
  }

  double spacing(int axis) const { return length[axis] / npts[axis]; }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim; ++a) v *= spacing(a);
    return v;
  }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < ndim; ++a) v *= length[a];
    return v;
  }

  double coord(int axis, int index) const {
    return origin[axis] + index * spacing(axis);
  }

  // stride of an axis in the flat value array (axis 0 slowest)
  int stride(int axis) const {
    int s = 1;
    for (int a = axis + 1; a < ndim; ++a) s *= npts[a];
    return s;
  }

  int flat_index(const std::array<int, 3>& idx) const {
    int f = 0;
    for (int a = 0; a < ndim; ++a) f = f * npts[a] + idx[a];
    return f;
  }

  std::array<int, 3> unflatten(int flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = ndim - 1; a >= 0; --a) {
      idx[a] = flat % npts[a];
      flat /= npts[a];
    }
    return idx;
  }

  bool contains(const Vec3& x) const {
    for (int a = 0; a < ndim; ++a) {
      if (x[a] < origin[a] - 1e-12 || x[a] > origin[a] + length[a] + 1e-12)
        return false;
    }
    return true;
  }

  bool operator==(const Grid& o) const {
    return ndim == o.ndim && npts == o.npts && length == o.length &&
           origin == o.origin && boundary == o.boundary &&
           absorb_width == o.absorb_width;
  }
};

struct GridSpec {
  int ndim = 1;
  std::array<int, 3> npts{0, 0, 0};
  std::array<double, 3> length{0.0, 0.0, 0.0};
  // default origin centers each axis on zero
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  bool centered = true;
  Boundary boundary = Boundary::periodic;
  double absorb_width = 0.0;
};

Grid make_grid(const GridSpec& spec);

}  // namespace fisherq
