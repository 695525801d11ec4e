#pragma once

#include <memory>

#include "fisherq/hamiltonian.hpp"

namespace fisherq {

enum class Scheme { crank_nicolson, split_step_spectral };

struct PropagatorConfig {
  double dt = 1e-2;
  Scheme scheme = Scheme::crank_nicolson;
  double tol = 1e-13;    // linear-solve tolerance (relative)
  int max_iter = 4000;

  void validate() const {
    if (dt < 0.0) throw ConfigError("propagator: dt must be >= 0");
    if (!(tol > 0.0)) throw ConfigError("propagator: tol must be > 0");
    if (max_iter <= 0) throw ConfigError("propagator: max_iter must be > 0");
  }
};

// Owns the assembled Crank-Nicolson system so repeated steps with a
// time-independent Hamiltonian factor/assemble only once.
class Propagator {
 public:
  Propagator(HamiltonianSpec spec, PropagatorConfig cfg, int nspin);
  ~Propagator();
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  // advances psi from t to t+dt
  StateFunction step(const StateFunction& psi, double t);

  const HamiltonianSpec& spec() const;
  const PropagatorConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StateFunction step(const StateFunction& psi, const HamiltonianSpec& spec,
                   const PropagatorConfig& cfg, double t);
ComplexField step(const ComplexField& psi, const HamiltonianSpec& spec,
                  const PropagatorConfig& cfg, double t);
SpinorField step(const SpinorField& psi, const HamiltonianSpec& spec,
                 const PropagatorConfig& cfg, double t);

struct GroundStateConfig {
  double dtau = 0.5;
  double tol = 1e-12;   // relative energy stationarity
  int max_iter = 50000;
};

// Imaginary-time projection onto the lowest state of the assembled H
// (backward Euler steps with renormalization; Rayleigh-quotient energy).
std::pair<StateFunction, double> ground_state(const HamiltonianSpec& spec,
                                              int nspin,
                                              const GroundStateConfig& cfg = {});
std::pair<ComplexField, double> ground_state_scalar(
    const HamiltonianSpec& spec, const GroundStateConfig& cfg = {});
std::pair<SpinorField, double> ground_state_spinor(
    const HamiltonianSpec& spec, const GroundStateConfig& cfg = {});

}  // namespace fisherq
