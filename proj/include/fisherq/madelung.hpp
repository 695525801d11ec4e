#pragma once

#include "fisherq/deriv.hpp"
#include "fisherq/hamiltonian.hpp"

namespace fisherq {

// Hydrodynamic variables of the scalar theory: probability density and the
// single-valued action field S.
struct HydroState {
  RealField rho;
  RealField s;
};

// Spin-hydrodynamic (Takabayasi) variables (rho, S, theta, phi).
struct SpinHydroState {
  RealField rho;
  RealField s;
  RealField theta;
  RealField phi_angle;
};

struct VortexCell {
  int corner_flat = 0;    // lower corner of the plaquette
  int axis_a = 0, axis_b = 1;
  double circulation = 0.0;  // phase circulation, a multiple of 2 pi
};

struct UnwrapReport {
  bool low_rho_warning = false;
  RealField tainted;  // 1 where the staircase path crossed rho < floor
  int vortex_count = 0;
  std::vector<VortexCell> vortices;
  bool degenerate = false;  // spinor branch with one component ~ 0
};

struct MadelungOptions {
  double rho_floor_rel = 1e-12;  // division floor, relative to max rho
  double mask_rel = 1e-6;        // residual evaluation mask level
  double sin_theta_floor = 0.05; // spin-evolution mask level
};

ComplexField hydro_to_psi(const HydroState& hs, double hbar);

// rho = |psi|^2 and S = hbar * unwrapped phase, unwrapped along axis-ordered
// staircase paths from the grid point of maximal rho. Plaquettes with a
// nonzero winding (phase circulation 2*pi*n) are reported as vortices.
std::pair<HydroState, UnwrapReport> psi_to_hydro(
    const ComplexField& psi, double hbar, const MadelungOptions& opt = {});

std::pair<SpinHydroState, UnwrapReport> takabayasi_split(
    const SpinorField& psi, double hbar, const MadelungOptions& opt = {});

// psi_hat = sqrt(rho) e^{iS/hbar} (cos(theta/2) e^{i phi/2},
//                                  i sin(theta/2) e^{-i phi/2})
SpinorField takabayasi_join(const SpinHydroState& shs, double hbar);

struct SpinVectorField {
  std::array<RealField, 3> s;
};

// s = (hbar/2)(sin th sin ph, sin th cos ph, cos th); |s| = hbar/2 pointwise.
SpinVectorField spin_vector(const SpinHydroState& shs, double hbar);

struct InternalPotentials {
  std::array<RealField, 3> a_s;
  RealField phi_s;
  bool degenerate = false;
  RealField degenerate_mask;  // 1 where sin(theta) ~ 0
};

// A_l^(s) = -(hbar c / 2e) cos(theta) d(phi)/dx_l; the time slice overload
// also fills phi^(s) = (hbar/2e) cos(theta) d(phi)/dt.
InternalPotentials internal_potentials(const SpinHydroState& shs,
                                       const PhysicalConstants& consts,
                                       DerivScheme scheme);
InternalPotentials internal_potentials(const SpinHydroState& prev,
                                       const SpinHydroState& cur,
                                       const SpinHydroState& next, double dt,
                                       const PhysicalConstants& consts,
                                       DerivScheme scheme);

struct QuantumTerms {
  RealField l0;
  RealField g1, g2, g3;
  RealField mask;       // rho above the evaluation level
  double coverage = 1.0;
};

// Density log-derivatives d_a(rho)/rho and d_a^2 log(rho). With the central4
// scheme these come from stencils on log rho, which keeps the error uniform
// over the masked support (log of a Gaussian is a polynomial); the spectral
// scheme differentiates rho directly and divides.
struct LogRhoDerivs {
  std::array<ArrayXr, 3> d1;
  std::array<ArrayXr, 3> d2_pure;
};
LogRhoDerivs log_rho_derivs(const RealField& rho, double floor_abs,
                            DerivScheme scheme);

// Minimal-Fisher-information quantum terms:
//   L0 = (hbar^2/2m) [ lap(sqrt rho)/sqrt(rho) - (1/4) sin^2 th (grad ph)^2
//                      - (1/4)(grad th)^2 ]
//   G3 = -(hbar/2m) (1/rho) div(rho sin^2 th grad ph)
//   G1, G2 the zero-mean, spin-orthogonal companions.
QuantumTerms quantum_terms(const SpinHydroState& shs, double mass, double hbar,
                           DerivScheme scheme, const MadelungOptions& opt = {});

// Branch alignment between consecutive unwrapped slices: shifts the redundant
// constants (2 pi hbar in S; jointly 2 pi in phi with pi hbar in S) so central
// time differences are meaningful. The shift is fixed at ref's max-rho point.
void align_slices(const HydroState& ref, HydroState& other, double hbar);
void align_slices_spin(const SpinHydroState& ref, SpinHydroState& other,
                       double hbar);

struct ResidualReport {
  RealField residual;  // pointwise, zero outside the mask
  RealField mask;
  double l2 = 0.0;        // masked L2 of the residual
  double scale = 0.0;     // largest masked L2 among the equation's terms
  double relative = 0.0;  // l2 / scale
  double mask_fraction = 0.0;
};

// The residual evaluators differentiate the unwrapped fields with local
// centered stencils (global spectral differentiation of solver output is
// polluted by tail raggedness, while stencil errors stay confined to the
// masked tails) and read time derivatives of the phase variables from
// state-function products, which cancels the slice branch constants.

// Continuity: d(rho)/dt + sum_a d_a[ rho/m_a (d_a S - (e_a/c) A_a) ] with
// per-axis masses/charges from spec (N-particle form). Time derivatives are
// centered over the supplied slices; phase branches are handled by reading
// phase differences from state-function products, so no explicit slice
// alignment is required.
ResidualReport continuity_residual(const HydroState& prev,
                                   const HydroState& cur,
                                   const HydroState& next, double dt,
                                   const HamiltonianSpec& spec, double t,
                                   const MadelungOptions& opt = {});

// Hamilton-Jacobi: dS/dt + e Phi + sum_a (1/2m_a)(d_a S - (e_a/c) A_a)^2 + V
//                  - sum_a (hbar^2/2m_a) d_a^2 sqrt(rho)/sqrt(rho)
ResidualReport hj_residual(const HydroState& prev, const HydroState& cur,
                           const HydroState& next, double dt,
                           const HamiltonianSpec& spec, double t,
                           const MadelungOptions& opt = {});

// Spin forms with hatted potentials (external + internal), the Zeeman term
// mu.B and the quantum terms L0, G1..G3 from the same slices.
ResidualReport continuity_residual_spin(const SpinHydroState& prev,
                                        const SpinHydroState& cur,
                                        const SpinHydroState& next, double dt,
                                        const HamiltonianSpec& spec, double t,
                                        const MadelungOptions& opt = {});

ResidualReport hj_residual_spin(const SpinHydroState& prev,
                                const SpinHydroState& cur,
                                const SpinHydroState& next, double dt,
                                const HamiltonianSpec& spec, double t,
                                const MadelungOptions& opt = {});

struct SpinEvolutionReport {
  ResidualReport theta;
  ResidualReport phi;
};

// Evolution equations for the angles, including the magnetic torque and the
// G-terms; evaluated on the joint rho/sin(theta) mask.
SpinEvolutionReport spin_evolution_residual(const SpinHydroState& prev,
                                            const SpinHydroState& cur,
                                            const SpinHydroState& next,
                                            double dt,
                                            const HamiltonianSpec& spec,
                                            double t,
                                            const MadelungOptions& opt = {});

}  // namespace fisherq
