#include "fisherq/deriv.hpp"

#include <unsupported/Eigen/FFT>

namespace fisherq {

namespace {

// Applies op to every 1-d line of the flat array along `axis`; op works in
// place on a contiguous copy of the line.
template <class T, class Op>
void for_each_line(const Grid& g, Eigen::Array<T, Eigen::Dynamic, 1>& vals,
                   int axis, Op&& op) {
  const int n = g.npts[axis];
  const int inner = g.stride(axis);
  const int outer = g.size() / (n * inner);
  Eigen::Array<T, Eigen::Dynamic, 1> line(n);
  for (int o = 0; o < outer; ++o) {
    for (int in = 0; in < inner; ++in) {
      const int base = o * n * inner + in;
      for (int i = 0; i < n; ++i) line[i] = vals[base + i * inner];
      op(line);
      for (int i = 0; i < n; ++i) vals[base + i * inner] = line[i];
    }
  }
}

void spectral_line_derivative(Eigen::FFT<double>& fft, ArrayXc& line,
                              double length, int order) {
  const int n = static_cast<int>(line.size());
  Eigen::VectorXcd in = line.matrix(), freq(n);
  fft.fwd(freq, in);
  const double dk = 2.0 * kPi / length;
  for (int j = 0; j < n; ++j) {
    const int m = (j <= n / 2) ? j : j - n;
    const double k = dk * m;
    if (order == 1) {
      // odd derivative: the unpaired Nyquist mode is projected out
      if (2 * j == n)
        freq[j] = 0.0;
      else
        freq[j] *= cplx(0.0, k);
    } else {
      freq[j] *= -k * k;
    }
  }
  Eigen::VectorXcd out(n);
  fft.inv(out, freq);
  line = out.array();
}

// 4th-order centered stencils; `get` resolves out-of-range neighbours.
template <class T, class Get>
void central4_line(Eigen::Array<T, Eigen::Dynamic, 1>& line, double h,
                   int order, Get&& get) {
  const int n = static_cast<int>(line.size());
  Eigen::Array<T, Eigen::Dynamic, 1> out(n);
  if (order == 1) {
    const double c = 1.0 / (12.0 * h);
    for (int i = 0; i < n; ++i)
      out[i] = c * (get(line, i - 2) - 8.0 * get(line, i - 1) +
                    8.0 * get(line, i + 1) - get(line, i + 2));
  } else {
    const double c = 1.0 / (12.0 * h * h);
    for (int i = 0; i < n; ++i)
      out[i] = c * (-get(line, i - 2) + 16.0 * get(line, i - 1) -
                    30.0 * line[i] + 16.0 * get(line, i + 1) -
                    get(line, i + 2));
  }
  line = out;
}

template <class T>
Field<T> differentiate_impl(const Field<T>& f, int axis, int order,
                            DerivScheme scheme) {
  const Grid& g = f.grid;
  if (axis < 0 || axis >= g.ndim)
    throw ConfigError("differentiate: axis out of range");
  if (order != 1 && order != 2)
    throw ConfigError("differentiate: order must be 1 or 2");
  if (scheme == DerivScheme::spectral && g.boundary != Boundary::periodic)
    throw ConfigError("differentiate: spectral scheme requires periodic grid");

  Field<T> out = f;
  if (scheme == DerivScheme::spectral) {
    Eigen::FFT<double> fft;
    const double len = g.length[axis];
    if constexpr (std::is_same_v<T, double>) {
      // real field: run the complex transform and keep the real part
      ArrayXc tmp = f.values.template cast<cplx>();
      Field<cplx> cf(g, std::move(tmp));
      for_each_line<cplx>(g, cf.values, axis, [&](ArrayXc& line) {
        spectral_line_derivative(fft, line, len, order);
      });
      out.values = cf.values.real();
    } else {
      for_each_line<cplx>(g, out.values, axis, [&](ArrayXc& line) {
        spectral_line_derivative(fft, line, len, order);
      });
    }
  } else {
    const double h = g.spacing(axis);
    const bool periodic = g.boundary == Boundary::periodic;
    auto get = [periodic](const Eigen::Array<T, Eigen::Dynamic, 1>& line,
                          int i) -> T {
      const int n = static_cast<int>(line.size());
      if (i >= 0 && i < n) return line[i];
      if (periodic) return line[(i % n + n) % n];
      return T(0);  // absorbing grids: fields vanish in the pad
    };
    for_each_line<T>(g, out.values, axis,
                     [&](Eigen::Array<T, Eigen::Dynamic, 1>& line) {
                       central4_line(line, h, order, get);
                     });
  }
  return out;
}

}  // namespace

RealField differentiate(const RealField& f, int axis, int order,
                        DerivScheme scheme) {
  return differentiate_impl(f, axis, order, scheme);
}
ComplexField differentiate(const ComplexField& f, int axis, int order,
                           DerivScheme scheme) {
  return differentiate_impl(f, axis, order, scheme);
}
RealField differentiate(const RealField& f, int axis, int order) {
  return differentiate_impl(f, axis, order, default_scheme(f.grid));
}
ComplexField differentiate(const ComplexField& f, int axis, int order) {
  return differentiate_impl(f, axis, order, default_scheme(f.grid));
}

double spectral_energy(const ComplexField& f) {
  const Grid& g = f.grid;
  if (g.boundary != Boundary::periodic)
    throw ConfigError("spectral_energy requires a periodic grid");
  Eigen::FFT<double> fft;
  ComplexField work = f;
  double scale = 1.0;
  for (int a = 0; a < g.ndim; ++a) {
    const int n = g.npts[a];
    scale /= n;
    for_each_line<cplx>(g, work.values, a, [&](ArrayXc& line) {
      Eigen::VectorXcd in = line.matrix(), freq(n);
      fft.fwd(freq, in);
      line = freq.array();
    });
  }
  // unitary-normalized Parseval: sum|f|^2 * dV == sum|F|^2 / N * dV
  return work.values.abs2().sum() * scale * g.cell_volume();
}

}  // namespace fisherq
