#pragma once

#include "fisherq/madelung.hpp"

namespace fisherq {

// rho^(1) = rho sin^2(th/2) cos^2(ph/2), rho^(2) = rho sin^2(th/2) sin^2(ph/2),
// rho^(3) = rho cos^2(th/2); the pointwise sum reproduces rho exactly.
std::array<RealField, 3> rho_j_decomposition(const SpinHydroState& shs);

struct FisherReport {
  double lhs = 0.0;  // integral of -rho L0
  double rhs = 0.0;  // (hbar^2/8m) sum_j int (1/rho_j) |grad rho_j|^2
  std::array<double, 3> rhs_per_j{0.0, 0.0, 0.0};
  double relative_gap = 0.0;
  double coverage = 1.0;
  bool degraded = false;  // coverage below 99%
};

FisherReport fisher_identity_check(const SpinHydroState& shs, double mass,
                                   double hbar,
                                   DerivScheme scheme = DerivScheme::spectral,
                                   const MadelungOptions& opt = {});

struct ELEquationResidual {
  std::string name;
  RealField residual;
  double l2 = 0.0;
  double linf = 0.0;
  double scale = 0.0;     // largest masked L2 among the equation's terms
  double relative = 0.0;
};

struct ELResidualReport {
  std::vector<ELEquationResidual> equations;
  double mask_coverage = 1.0;

  double worst_relative() const {
    double w = 0.0;
    for (const auto& e : equations) w = std::max(w, e.relative);
    return w;
  }
};

struct ELOptions {
  // scalar negative control: adds eps * (grad rho)^2 / rho^2 to L0
  double l0_perturbation = 0.0;
  // spin negative control: evaluates the phi equation with G3 deleted
  bool zero_g3 = false;
  // evaluate the divergence term by differentiating the sampled ratio field
  // instead of reusing the log-density primitives; the residual then shows
  // the pure discretization error (used by the grid-refinement study)
  bool independent_routes = false;
  MadelungOptions madelung;
};

// Split Euler-Lagrange system for beta = rho L0 in the scalar theory: the
// pure second-derivative equation and the remaining first-order equation,
// both evaluated spectrally (identities up to discretization error).
ELResidualReport el_residual_scalar(const RealField& rho, double mass,
                                    double hbar, const ELOptions& opt = {});

// The rho-, theta- and phi-variation equations of the spin theory with
// L0, G1..G3 taken from quantum_terms.
ELResidualReport el_residual_spin(const SpinHydroState& shs, double mass,
                                  double hbar, const ELOptions& opt = {});

// Normalized gap of int (d rho/dx_k) L0 = 0 (largest axis), the zero-mean
// constraint of the scalar solution.
double zero_mean_constraint_gap(const RealField& rho, double mass,
                                double hbar);

}  // namespace fisherq
