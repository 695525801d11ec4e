#pragma once

#include <array>
#include <optional>
#include <vector>

#include "fisherq/expression.hpp"

namespace fisherq {

// Scalar and vector potentials as closed-form expressions of (x,t).
// Keeping them symbolic makes field strengths and gauge transformations
// exact; sampling happens only where a grid quantity is required.
struct GaugePotential {
  Expr phi;
  std::array<Expr, 3> a{};

  bool is_zero() const {
    return phi.is_zero() && a[0].is_zero() && a[1].is_zero() && a[2].is_zero();
  }
  bool time_dependent() const {
    return phi.depends_on("t") || a[0].depends_on("t") ||
           a[1].depends_on("t") || a[2].depends_on("t");
  }
};

struct EMField {
  std::array<RealField, 3> e_field;
  std::array<RealField, 3> b_field;
  double div_b_max = 0.0;  // numerical stencil residual of div B
};

// Single-valued gauge function chi(x,t); the action shift is (e/c)*chi.
struct GaugeFunction {
  Expr chi;
};

// E_k = -(1/c) dA_k/dt - dPhi/dx_k,  B = curl A (symbolic, sampled on grid).
EMField field_strengths(const GaugePotential& g, const Grid& grid, double t,
                        const PhysicalConstants& consts);

// The three B-component expressions of curl A.
std::array<Expr, 3> curl_expressions(const GaugePotential& g);

struct GaugeTransformResult {
  GaugePotential potential;
  RealField s;  // transformed action sample
};

// Gauge transformation of the second kind:
//   S' = S + (e/c) chi,  Phi' = Phi - (1/c) d(chi)/dt,  A' = A + grad chi.
GaugeTransformResult gauge_transform(const GaugePotential& g,
                                     const RealField& s,
                                     const GaugeFunction& chi, double t,
                                     const PhysicalConstants& consts);

// State-side transformation psi -> psi * exp(i e chi / (hbar c)).
ComplexField gauge_phase_apply(const ComplexField& psi,
                               const GaugeFunction& chi, double t,
                               const PhysicalConstants& consts);
SpinorField gauge_phase_apply(const SpinorField& psi, const GaugeFunction& chi,
                              double t, const PhysicalConstants& consts);

struct PathVertex {
  Vec3 x;
  double t = 0.0;
};
using Path = std::vector<PathVertex>;

// (e / hbar c) * integral over the path of [A . dx - c Phi dt], evaluated by
// fixed-order Gauss-Legendre quadrature on each straight segment.
double phase_line_integral(const GaugePotential& g, const Grid& grid,
                           const Path& path, const PhysicalConstants& consts,
                           int points_per_segment = 16);

// Multiplies the spinor by the inverse of the multi-valued phase matrix
// accumulated along axis-ordered staircase paths from reference_point at
// fixed time t (set inverse=true to undo a dressing).
SpinorField arunsalam_gould_dress(const SpinorField& psi,
                                  const GaugePotential& g,
                                  const Vec3& reference_point, double t,
                                  const PhysicalConstants& consts,
                                  bool inverse = false);

// The accumulated staircase phase field used by the dressing.
RealField staircase_phase(const GaugePotential& g, const Grid& grid,
                          const Vec3& reference_point, double t,
                          const PhysicalConstants& consts);

// Numerical divergence of a symbolic vector field with 4th-order stencils;
// off-grid stencil legs evaluate the expression directly, so the diagnostic
// is seam-free even for non-periodic potentials.
RealField divergence_fd(const std::array<Expr, 3>& field, const Grid& grid,
                        double t);
std::array<RealField, 3> curl_fd(const std::array<Expr, 3>& field,
                                 const Grid& grid, double t);

}  // namespace fisherq
