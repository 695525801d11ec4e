#pragma once

#include "fisherq/madelung.hpp"

namespace fisherq {

// Expectation values of one snapshot: positions, kinetic momenta
// (grid quadrature of the gauge-invariant current), spin, Rayleigh-quotient
// energy and the force expectations entering the statistical conditions.
struct EnsembleReport {
  double t = 0.0;
  double norm = 0.0;
  Vec3 mean_x = Vec3::Zero();
  Vec3 mean_p = Vec3::Zero();  // kinetic momentum per grid axis
  Vec3 mean_s = Vec3::Zero();
  double energy = 0.0;
  Vec3 force_lorentz = Vec3::Zero();
  Vec3 force_dipole = Vec3::Zero();
  Vec3 force_mechanical = Vec3::Zero();
  Vec3 torque = Vec3::Zero();  // -(e/mc) <B x s>
};

EnsembleReport ensemble_report(const StateFunction& psi,
                               const HamiltonianSpec& spec, double t);
EnsembleReport ensemble_report(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t);
EnsembleReport ensemble_report(const SpinorField& psi,
                               const HamiltonianSpec& spec, double t);

// Ehrenfest-type statistical conditions checked by centered differences of
// the report series against the force/torque expectations of each snapshot.
struct EhrenfestSeries {
  std::vector<double> t;                // interior snapshot times
  std::vector<Vec3> residual_x;         // d<x>/dt - <p>/m
  std::vector<Vec3> residual_p;         // d<p>/dt - <F>
  std::vector<Vec3> residual_s;         // d<s>/dt - torque
  double max_x = 0.0, max_p = 0.0, max_s = 0.0;
};

// torque_scale multiplies the torque reference (diagnostic knob for
// negative-control scenarios; physical value 1).
EhrenfestSeries ehrenfest_check(const std::vector<EnsembleReport>& series,
                                const HamiltonianSpec& spec,
                                double torque_scale = 1.0);

// per-component acceptance threshold at snapshot spacing dt
inline double ehrenfest_tolerance(double dt) {
  return std::max(1e-5, dt * dt);
}

}  // namespace fisherq
