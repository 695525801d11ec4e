#pragma once

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "fisherq/gauge.hpp"

namespace fisherq {

// Generic multi-component state on a grid; column s holds spin component s.
// Scalar states have one column, a single spin-1/2 particle two, N spinful
// particles 2^N. The flattened solver vector stacks the columns, so spinor
// snapshots (component 1 block, component 2 block) map onto it directly.
struct StateFunction {
  Grid grid;
  Eigen::MatrixXcd comps;

  StateFunction() = default;
  StateFunction(const Grid& g, int nspin)
      : grid(g), comps(Eigen::MatrixXcd::Zero(g.size(), nspin)) {}

  int nspin() const { return static_cast<int>(comps.cols()); }
};

StateFunction to_state(const ComplexField& f);
StateFunction to_state(const SpinorField& f);
ComplexField to_complex_field(const StateFunction& s);
SpinorField to_spinor_field(const StateFunction& s);

double squared_norm(const StateFunction& s);
StateFunction normalized(const StateFunction& s);

struct ParticleSpec {
  double m = 1.0;
  double e = 1.0;
};

// Hamilton operator of the gauge-coupled N-particle problem:
//   H = sum_I (1/2m_I) sum_k [ (hbar/i) d/dx_{I,k} - (e_I/c) A_k(x_I,t) ]^2
//     + sum_I e_I Phi(x_I,t) + V(Q,t) + sum_I mu_B^I sigma_k^I B_k(x_I,t)
// with mu_B^I = -hbar e_I / (2 m_I c). The grid carries N*d axes.
struct HamiltonianSpec {
  Grid grid;
  PhysicalConstants consts;
  std::vector<ParticleSpec> particles{ParticleSpec{}};
  int dims_per_particle = 0;  // 0: deduce as grid.ndim / particles.size()
  GaugePotential gauge;
  Expr v;
  bool zeeman = false;
  // Explicit Zeeman-model field; when absent B = curl A. Needed for reduced
  // geometries (e.g. a z-line with B_z = B0 + b z) where A cannot source B.
  std::optional<std::array<Expr, 3>> zeeman_b;

  int nparticles() const { return static_cast<int>(particles.size()); }
  int particle_dims() const {
    return dims_per_particle > 0 ? dims_per_particle
                                 : grid.ndim / nparticles();
  }
  int spin_components() const { return zeeman ? (1 << nparticles()) : 1; }
  bool time_dependent() const {
    return gauge.time_dependent() || v.depends_on("t") ||
           (zeeman_b && (zeeman_b->at(0).depends_on("t") ||
                         zeeman_b->at(1).depends_on("t") ||
                         zeeman_b->at(2).depends_on("t")));
  }
  void validate(int nspin) const;

  // mass and charge per grid axis (axis -> owning particle)
  double axis_mass(int axis) const {
    return particles[axis / particle_dims()].m;
  }
  double axis_charge(int axis) const {
    return particles[axis / particle_dims()].e;
  }
};

using SparseOp = Eigen::SparseMatrix<cplx>;

// Assembles H at time t as a sparse operator on size()*nspin unknowns,
// exactly Hermitian by construction (symmetrized minimal coupling with
// centered 4th-order stencils).
SparseOp assemble_hamiltonian(const HamiltonianSpec& spec, double t, int nspin);

StateFunction apply_hamiltonian(const StateFunction& psi,
                                const HamiltonianSpec& spec, double t);
ComplexField apply_hamiltonian(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t);
SpinorField apply_hamiltonian(const SpinorField& psi,
                              const HamiltonianSpec& spec, double t);

// Rayleigh quotient <psi|H|psi>/<psi|psi>.
double energy_expectation(const StateFunction& psi, const HamiltonianSpec& spec,
                          double t);

// sigma_0..sigma_3 exactly as stored 2x2 matrices.
const std::array<Eigen::Matrix2cd, 4>& pauli_matrices();

// Zeeman-model magnetic field: explicit override if present, else curl A.
std::array<Expr, 3> magnetic_field_expressions(const HamiltonianSpec& spec);

}  // namespace fisherq
