#pragma once

#include <string>
#include <vector>

#include "fisherq/scenario.hpp"
#include "fisherq/variational.hpp"

namespace fisherq {

struct CheckRow {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<std::string> verify_suite_names();
std::vector<CheckRow> verify_suite(const std::string& name);
std::vector<CheckRow> verify_all();
void write_verify_report(const std::string& path,
                         const std::vector<CheckRow>& rows);

// ---- fixed verification corpus (v1) -------------------------------------

Grid corpus_grid_1d(int npoints);
// named smooth densities: gaussian, double gaussian, modulated gaussian
std::vector<std::pair<std::string, RealField>> density_corpus(const Grid& g);
// five smooth spin-hydro states; the last lives on its own 2-d grid
std::vector<std::pair<std::string, SpinHydroState>> spin_corpus(int npoints_1d);
// five smooth states with uniform azimuth (the sector on which the
// Fisher-functional identity is exact); rho and theta vary freely
std::vector<std::pair<std::string, SpinHydroState>> fisher_corpus(
    int npoints_1d);

// ---- reusable experiment drivers ----------------------------------------

struct ScalarEquivalenceResult {
  double worst_continuity = 0.0;
  double worst_hj = 0.0;
  double runtime_s = 0.0;
};
// coherent state of the unit harmonic well; worst masked relative residuals
ScalarEquivalenceResult harmonic_equivalence_experiment(int npoints, double dt,
                                                        int steps);

struct PauliEquivalenceResult {
  double worst_continuity = 0.0, worst_hj = 0.0;
  double worst_theta = 0.0, worst_phi = 0.0;
  double runtime_s = 0.0;
};
// Gaussian packet in a uniform B_z with a spatially tipped spinor
PauliEquivalenceResult pauli_equivalence_experiment(int npoints, double dt,
                                                    int steps);

// relative error of the extracted precession frequency vs e B0 / m c
double larmor_frequency_relative_error(double b0, double dt, int steps);

struct SpreadingResult {
  double relative_error = 0.0;  // sigma(t)^2 law at t = 2 m sigma0^2 / hbar
};
SpreadingResult free_spreading_experiment(int npoints, double length,
                                          double sigma0, double dt);

struct SternGerlachResult {
  double dpz_dt_up = 0.0;
  double dpz_dt_down = 0.0;
  double expected = 0.0;  // |mu_B b|
};
SternGerlachResult stern_gerlach_experiment(double b0, double gradient,
                                            double dt, int steps);

struct GaugeInvarianceResult {
  double max_report_change = 0.0;    // over all EnsembleReport fields
  double max_residual_change = 0.0;  // over residual norms
  double max_eb_change = 0.0;        // E,B fields under the transformation
  double covariance_error = 0.0;     // evolve-then-transform vs transform-then-evolve
};
GaugeInvarianceResult gauge_invariance_experiment(int n_gauge_functions);

struct AharonovBohmResult {
  double slope = 0.0;          // fitted fringe-phase slope vs flux
  double expected_slope = 0.0; // e / (hbar c)
  double relative_error = 0.0;
  double max_b_on_support = 0.0;
  double runtime_s = 0.0;
};
AharonovBohmResult aharonov_bohm_experiment(int npoints, int steps_override = 0);

struct EhrenfestExperimentResult {
  double free_worst = 0.0;
  double harmonic_worst = 0.0;
  double magnetic_worst = 0.0;
  double torque_worst = 0.0;
};
EhrenfestExperimentResult ehrenfest_experiments();

struct ClassicalOracleResult {
  double harmonic_deterministic = 0.0;  // worst per-sample trajectory error
  double harmonic_mean_sigmas = 0.0;    // |<x> - analytic| in MC sigma units
  double cyclotron_deterministic = 0.0;
  double cyclotron_mean_sigmas = 0.0;
  bool hbar_bitwise_identical = false;
  bool order_preserved_1d = false;
};
ClassicalOracleResult classical_oracle_experiment(int n_samples);

struct TwoParticleResult {
  double schmidt_truncation_error = 0.0;
};
TwoParticleResult two_particle_experiment(int npoints, double dt, int steps);

// worst relative gap over round trips: Madelung, Takabayasi (global phase
// quotiented), dress/undress
double round_trip_worst_error();

}  // namespace fisherq
