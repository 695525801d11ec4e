#pragma once

#include <limits>

#include "fisherq/madelung.hpp"

namespace fisherq {

// One characteristic of the classical (hbar = 0) continuity/Hamilton-Jacobi
// system: position, kinetic momentum and statistical weight.
struct TrajectorySample {
  Vec3 x = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double weight = 0.0;
};

struct CharacteristicEnsemble {
  std::vector<TrajectorySample> samples;
  double t = 0.0;
  int dim = 1;
  bool caustic = false;
  double caustic_time = std::numeric_limits<double>::quiet_NaN();
};

struct ClassicalConfig {
  int n_samples = 100000;
  double dt = 1e-3;
  uint64_t seed = 12345;
  bool caustic_guard = true;
  int threads = 1;
};

// Draws positions from rho0 (inverse CDF in 1D, rejection in 2D/3D) with a
// deterministic per-sample random stream; momenta are grad S - (e/c) A at the
// start point.
CharacteristicEnsemble sample_ensemble(const HydroState& hs0,
                                       const HamiltonianSpec& spec, double t0,
                                       int n_samples, uint64_t seed);

// Integrates dx/dt = p/m, dp/dt = e E + (e/c) v x B - grad V with RK4.
// The caustic guard integrates the tangent map of each characteristic and
// truncates the run when det(dx/dx0) changes sign.
CharacteristicEnsemble evolve_characteristics(const HydroState& hs0,
                                              const HamiltonianSpec& spec,
                                              double t0, double t_final,
                                              const ClassicalConfig& cfg);

// Continues a previously sampled ensemble (used for trajectory time series).
void advance_ensemble(CharacteristicEnsemble& ce, const HamiltonianSpec& spec,
                      double t_final, const ClassicalConfig& cfg);

struct PhaseSpaceDensity {
  RealField rho;
  std::array<RealField, 3> p_map;
  bool has_momentum = true;
  std::array<double, 3> bandwidth{0.0, 0.0, 0.0};
  double max_scatter = 0.0;     // worst kernel-window momentum variance
  double scatter_bound = 0.0;   // bandwidth-consistent bound on the above
  bool delta_form_certified = false;
};

// Kernel density estimate of w(x,p,t) = rho(x,t) delta^3(p - p~(x,t)),
// stored as the (rho, p~) pair. Refuses the momentum map after a caustic.
PhaseSpaceDensity reconstruct_fields(const CharacteristicEnsemble& ce,
                                     const Grid& grid, double bandwidth = 0.0);

// Deterministic density transport along characteristics launched from every
// grid node (1D, pre-caustic): rho(x_i(t)) = rho0(x_i) / |det M|, resampled
// onto the original grid. Used by the hbar convergence study.
RealField classical_density_transport_1d(const HydroState& hs0,
                                         const HamiltonianSpec& spec,
                                         double t0, double t_final, double dt);

Vec3 ensemble_mean_x(const CharacteristicEnsemble& ce);
Vec3 ensemble_mean_p(const CharacteristicEnsemble& ce);

}  // namespace fisherq
