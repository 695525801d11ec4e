#pragma once

#include "fisherq/field.hpp"

namespace fisherq {

enum class DerivScheme { spectral, central4 };

inline DerivScheme default_scheme(const Grid& g) {
  return g.boundary == Boundary::periodic ? DerivScheme::spectral
                                          : DerivScheme::central4;
}

// Partial derivative of order 1 or 2 along one axis. The spectral scheme
// requires a periodic grid; central4 zero-extends on absorbing grids.
RealField differentiate(const RealField& f, int axis, int order,
                        DerivScheme scheme);
ComplexField differentiate(const ComplexField& f, int axis, int order,
                           DerivScheme scheme);

RealField differentiate(const RealField& f, int axis, int order);
ComplexField differentiate(const ComplexField& f, int axis, int order);

template <class T>
Field<T> laplacian(const Field<T>& f, DerivScheme scheme) {
  Field<T> out = differentiate(f, 0, 2, scheme);
  for (int a = 1; a < f.grid.ndim; ++a)
    out.values += differentiate(f, a, 2, scheme).values;
  return out;
}
template <class T>
Field<T> laplacian(const Field<T>& f) {
  return laplacian(f, default_scheme(f.grid));
}

// Sum of |f_k|^2 over spectral modes times the grid measure; used to pin the
// FFT normalization convention against Parseval.
double spectral_energy(const ComplexField& f);

}  // namespace fisherq
