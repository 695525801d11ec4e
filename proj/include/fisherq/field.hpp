#pragma once

#include <array>
#include <functional>
#include <utility>

#include "fisherq/grid.hpp"

namespace fisherq {

// Sampled field on a grid; value-semantic, scalar type double or cplx.
template <class T>
struct Field {
  Grid grid;
  Eigen::Array<T, Eigen::Dynamic, 1> values;

  Field() = default;
  explicit Field(const Grid& g)
      : grid(g),
        values(Eigen::Array<T, Eigen::Dynamic, 1>::Zero(g.size())) {}
  Field(const Grid& g, Eigen::Array<T, Eigen::Dynamic, 1> v)
      : grid(g), values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

// Two-component spinor state; both components share one grid.
struct SpinorField {
  ComplexField c1, c2;

  SpinorField() = default;
  explicit SpinorField(const Grid& g) : c1(g), c2(g) {}
  SpinorField(ComplexField a, ComplexField b)
      : c1(std::move(a)), c2(std::move(b)) {
    if (!(c1.grid == c2.grid))
      throw ConfigError("spinor components must share one grid");
  }
  const Grid& grid() const { return c1.grid; }
};

template <class T>
Field<T> make_field(const Grid& g,
                    const std::function<T(double, double, double)>& fn) {
  Field<T> f(g);
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    auto idx = g.unflatten(i);
    double x = g.coord(0, idx[0]);
    double y = g.ndim > 1 ? g.coord(1, idx[1]) : 0.0;
    double z = g.ndim > 2 ? g.coord(2, idx[2]) : 0.0;
    f.values[i] = fn(x, y, z);
  }
  return f;
}

// Riemann/trapezoid quadrature (the two coincide on periodic grids).
inline double integrate(const RealField& f) {
  return f.values.sum() * f.grid.cell_volume();
}
inline cplx integrate(const ComplexField& f) {
  return f.values.sum() * f.grid.cell_volume();
}

// L2 inner product <a|b> with the grid measure.
inline cplx dot(const ComplexField& a, const ComplexField& b) {
  return (a.values.conjugate() * b.values).sum() * a.grid.cell_volume();
}
inline cplx dot(const SpinorField& a, const SpinorField& b) {
  return dot(a.c1, b.c1) + dot(a.c2, b.c2);
}

inline double squared_norm(const ComplexField& f) {
  return f.values.abs2().sum() * f.grid.cell_volume();
}
inline double squared_norm(const SpinorField& f) {
  return squared_norm(f.c1) + squared_norm(f.c2);
}

inline double l2_norm(const RealField& f) {
  return std::sqrt(f.values.square().sum() * f.grid.cell_volume());
}

inline RealField density(const ComplexField& psi) {
  return RealField(psi.grid, psi.values.abs2());
}
inline RealField density(const SpinorField& psi) {
  return RealField(psi.grid(), psi.c1.values.abs2() + psi.c2.values.abs2());
}

template <class F>
F normalized(const F& psi) {
  F out = psi;
  double n = std::sqrt(squared_norm(psi));
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero state");
  if constexpr (std::is_same_v<F, SpinorField>) {
    out.c1.values /= n;
    out.c2.values /= n;
  } else {
    out.values /= n;
  }
  return out;
}

inline bool all_finite(const RealField& f) { return f.values.isFinite().all(); }
inline bool all_finite(const ComplexField& f) {
  return f.values.real().isFinite().all() && f.values.imag().isFinite().all();
}

}  // namespace fisherq
