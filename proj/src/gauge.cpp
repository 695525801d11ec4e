#include "fisherq/gauge.hpp"

#include <cmath>

namespace fisherq {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

// integral of f over [a,b] with an n-point Gauss rule
template <class F>
double gauss_segment(const F& f, double a, double b, int n) {
  std::vector<double> xs, ws;
  gauss_legendre(n, xs, ws);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += ws[i] * f(mid + half * xs[i]);
  return acc * half;
}

double eval3(const Expr& e, const Vec3& x, double t) {
  return e.eval(x[0], x[1], x[2], t);
}

}  // namespace

std::array<Expr, 3> curl_expressions(const GaugePotential& g) {
  const char* names[3] = {"x", "y", "z"};
  std::array<Expr, 3> b;
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    b[k] = g.a[j].derivative(names[i]) - g.a[i].derivative(names[j]);
  }
  return b;
}

EMField field_strengths(const GaugePotential& g, const Grid& grid, double t,
                        const PhysicalConstants& consts) {
  EMField out;
  const char* names[3] = {"x", "y", "z"};
  std::array<Expr, 3> b_expr = curl_expressions(g);
  for (int k = 0; k < 3; ++k) {
    Expr ek = Expr::constant(-1.0 / consts.c) * g.a[k].derivative("t") -
              g.phi.derivative(names[k]);
    out.e_field[k] = sample(ek, grid, t);
    out.b_field[k] = sample(b_expr[k], grid, t);
  }
  RealField div_b = divergence_fd(b_expr, grid, t);
  out.div_b_max = div_b.values.abs().maxCoeff();
  return out;
}

GaugeTransformResult gauge_transform(const GaugePotential& g,
                                     const RealField& s,
                                     const GaugeFunction& chi, double t,
                                     const PhysicalConstants& consts) {
  GaugeTransformResult out;
  out.potential.phi =
      g.phi - Expr::constant(1.0 / consts.c) * chi.chi.derivative("t");
  const char* names[3] = {"x", "y", "z"};
  for (int k = 0; k < 3; ++k)
    out.potential.a[k] = g.a[k] + chi.chi.derivative(names[k]);
  out.s = s;
  RealField phase_g = sample(chi.chi, s.grid, t);
  out.s.values += (consts.e / consts.c) * phase_g.values;
  return out;
}

ComplexField gauge_phase_apply(const ComplexField& psi,
                               const GaugeFunction& chi, double t,
                               const PhysicalConstants& consts) {
  RealField phase = sample(chi.chi, psi.grid, t);
  ComplexField out = psi;
  const double k = consts.e / (consts.hbar * consts.c);
  out.values *= (cplx(0, 1) * k * phase.values.cast<cplx>()).exp();
  return out;
}

SpinorField gauge_phase_apply(const SpinorField& psi, const GaugeFunction& chi,
                              double t, const PhysicalConstants& consts) {
  return SpinorField(gauge_phase_apply(psi.c1, chi, t, consts),
                     gauge_phase_apply(psi.c2, chi, t, consts));
}

double phase_line_integral(const GaugePotential& g, const Grid& grid,
                           const Path& path, const PhysicalConstants& consts,
                           int points_per_segment) {
  if (path.size() < 2)
    throw DomainError("phase_line_integral: path needs at least two vertices");
  for (const auto& v : path) {
    if (!grid.contains(v.x))
      throw DomainError("phase_line_integral: path vertex outside grid");
  }
  double acc = 0.0;
  for (size_t s = 0; s + 1 < path.size(); ++s) {
    const Vec3 dx = path[s + 1].x - path[s].x;
    const double dt = path[s + 1].t - path[s].t;
    auto integrand = [&](double u) {
      Vec3 x = path[s].x + u * dx;
      double tt = path[s].t + u * dt;
      double val = 0.0;
      for (int k = 0; k < 3; ++k)
        val += eval3(g.a[k], x, tt) * dx[k];
      val -= consts.c * eval3(g.phi, x, tt) * dt;
      return val;
    };
    acc += gauss_segment(integrand, 0.0, 1.0, points_per_segment);
  }
  return consts.e / (consts.hbar * consts.c) * acc;
}

RealField staircase_phase(const GaugePotential& g, const Grid& grid,
                          const Vec3& reference_point, double t,
                          const PhysicalConstants& consts) {
  if (!grid.contains(reference_point))
    throw DomainError("staircase_phase: reference point outside grid");
  const int nq = 8;
  const double pref = consts.e / (consts.hbar * consts.c);

  // Leg integrals are accumulated axis by axis so every grid point gets the
  // phase of its own axis-ordered staircase path from the reference point.
  RealField phase(grid);
  const int ndim = grid.ndim;
  // coordinates of the fixed tail for each axis: reference for axes > a
  auto a_component = [&](int axis, double coord, const std::array<double, 3>& base) {
    Vec3 x(base[0], base[1], base[2]);
    x[axis] = coord;
    return eval3(g.a[axis], x, t);
  };

  // running[a] caches the cumulative integral along axis a given the already
  // fixed coordinates of axes < a.
  std::vector<double> cum0(grid.npts[0]);
  {
    std::array<double, 3> base{reference_point[0], reference_point[1],
                               reference_point[2]};
    for (int i = 0; i < grid.npts[0]; ++i) {
      auto f = [&](double s) { return a_component(0, s, base); };
      cum0[i] = gauss_segment(f, reference_point[0], grid.coord(0, i), nq);
    }
  }
  if (ndim == 1) {
    for (int i = 0; i < grid.npts[0]; ++i) phase.values[i] = pref * cum0[i];
    return phase;
  }

  const int n0 = grid.npts[0], n1 = grid.npts[1];
  const int n2 = ndim > 2 ? grid.npts[2] : 1;
  for (int i0 = 0; i0 < n0; ++i0) {
    std::array<double, 3> base1{grid.coord(0, i0), reference_point[1],
                                reference_point[2]};
    for (int i1 = 0; i1 < n1; ++i1) {
      auto f1 = [&](double s) { return a_component(1, s, base1); };
      double cum1 = gauss_segment(f1, reference_point[1], grid.coord(1, i1), nq);
      if (ndim == 2) {
        phase.values[i0 * n1 + i1] = pref * (cum0[i0] + cum1);
        continue;
      }
      std::array<double, 3> base2{grid.coord(0, i0), grid.coord(1, i1), 0.0};
      for (int i2 = 0; i2 < n2; ++i2) {
        auto f2 = [&](double s) { return a_component(2, s, base2); };
        double cum2 =
            gauss_segment(f2, reference_point[2], grid.coord(2, i2), nq);
        phase.values[(i0 * n1 + i1) * n2 + i2] = pref * (cum0[i0] + cum1 + cum2);
      }
    }
  }
  return phase;
}

SpinorField arunsalam_gould_dress(const SpinorField& psi,
                                  const GaugePotential& g,
                                  const Vec3& reference_point, double t,
                                  const PhysicalConstants& consts,
                                  bool inverse) {
  RealField phase = staircase_phase(g, psi.grid(), reference_point, t, consts);
  const double sign = inverse ? 1.0 : -1.0;  // dress applies Gamma^{-1}
  ArrayXc factor = (cplx(0, 1) * sign * phase.values.cast<cplx>()).exp();
  SpinorField out = psi;
  out.c1.values *= factor;
  out.c2.values *= factor;
  return out;
}

RealField divergence_fd(const std::array<Expr, 3>& field, const Grid& grid,
                        double t) {
  RealField out(grid);
  const int axes = grid.ndim;
  const int n = grid.size();
  for (int i = 0; i < n; ++i) {
    auto idx = grid.unflatten(i);
    double acc = 0.0;
    for (int a = 0; a < axes; ++a) {
      const double h = grid.spacing(a);
      double q[3] = {0, 0, 0};
      for (int b = 0; b < grid.ndim; ++b) q[b] = grid.coord(b, idx[b]);
      auto at = [&](int off) {
        double qa = q[a] + off * h;
        double p[3] = {q[0], q[1], q[2]};
        p[a] = qa;
        return field[a].eval(p[0], p[1], p[2], t);
      };
      acc += (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
    }
    out.values[i] = acc;
  }
  return out;
}

std::array<RealField, 3> curl_fd(const std::array<Expr, 3>& field,
                                 const Grid& grid, double t) {
  auto partial = [&](const Expr& f, int axis, const std::array<int, 3>& idx) {
    double q[3] = {0, 0, 0};
    for (int b = 0; b < grid.ndim; ++b) q[b] = grid.coord(b, idx[b]);
    if (axis >= grid.ndim) return 0.0;  // no variation along absent axes
    const double h = grid.spacing(axis);
    auto at = [&](int off) {
      double p[3] = {q[0], q[1], q[2]};
      p[axis] += off * h;
      return f.eval(p[0], p[1], p[2], t);
    };
    return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
  };
  std::array<RealField, 3> out{RealField(grid), RealField(grid),
                               RealField(grid)};
  const int n = grid.size();
  for (int i = 0; i < n; ++i) {
    auto idx = grid.unflatten(i);
    for (int k = 0; k < 3; ++k) {
      const int a = (k + 1) % 3, b = (k + 2) % 3;
      out[k].values[i] = partial(field[b], a, idx) - partial(field[a], b, idx);
    }
  }
  return out;
}

}  // namespace fisherq
