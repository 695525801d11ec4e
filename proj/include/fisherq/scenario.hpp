#pragma once

#include <string>
#include <vector>

#include "fisherq/classical.hpp"
#include "fisherq/observables.hpp"
#include "fisherq/propagate.hpp"

namespace fisherq {

// Scenario description parsed from flat key-value config text
// (dotted sections, '#' comments, UTF-8, unknown keys rejected).
struct ScenarioConfig {
  enum class Mode { quantum, classical };

  std::string name = "unnamed";
  Mode mode = Mode::quantum;

  GridSpec grid;
  PhysicalConstants consts;
  int particles_count = 1;
  int particles_dim = 0;  // 0: deduced
  std::vector<double> particle_masses, particle_charges;

  GaugePotential gauge;
  bool zeeman = false;
  std::optional<std::array<Expr, 3>> zeeman_b;
  Expr v;

  struct InitialState {
    std::string kind = "gaussian";  // gaussian|plane_wave|gaussian_pair|ground|snapshot
    std::array<double, 3> center{0, 0, 0}, center2{0, 0, 0};
    std::array<double, 3> sigma{1, 1, 1};
    std::array<double, 3> momentum{0, 0, 0}, momentum2{0, 0, 0};
    double rel_phase = 0.0;
    bool spinor = false;
    double spin_theta = 0.0, spin_phi = 0.0;
    double spin_theta_mod = 0.0;  // spatial tip along axis 0
    std::string file;
    Expr s0;  // classical-mode initial action
  } state;

  PropagatorConfig evolve;
  int steps = 100;
  int output_every = 1;
  bool write_snapshots = false;

  struct Verify {
    bool ehrenfest = false;
    bool residuals = false;
    bool norm = true;
    double torque_scale = 1.0;  // diagnostic scale for negative controls
  } verify;

  struct Classical {
    int samples = 20000;
    double dt = 1e-3;
    double t_final = 1.0;
    double bandwidth = 0.0;
    std::vector<double> hbar_study;  // optional hbar sequence
  } classical;

  std::string raw_text;

  Grid make_run_grid() const { return make_grid(grid); }
  HamiltonianSpec hamiltonian() const;
  StateFunction initial_state_function() const;
  HydroState initial_hydro_state() const;  // classical mode
};

ScenarioConfig parse_scenario(const std::string& text);

// Resolves a path, a bundled name, or a file in FISHERQ_SCENARIO_DIR.
ScenarioConfig load_scenario(const std::string& path_or_name);

std::vector<std::string> bundled_scenario_names();
const char* bundled_scenario_text(const std::string& name);
// bundled names plus *.cfg stems found in FISHERQ_SCENARIO_DIR
std::vector<std::string> list_scenarios();

struct RunOptions {
  std::string out_dir = ".";
  uint64_t seed = 1;
  int threads = 1;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 verification failures
  std::vector<std::string> failed_checks;
};

// Executes a scenario: propagates, writes report.csv / residuals.csv /
// manifest.txt (and snapshots when enabled), evaluates the enabled
// verifications. Throws ConfigError / PropagationError for exit codes 2/3.
RunResult run_scenario(const ScenarioConfig& sc, const RunOptions& opt);

struct HbarStudyRow {
  double hbar = 0.0;
  double l1_distance = 0.0;
  double runtime_s = 0.0;
};

// Quantum-vs-classical L1(rho) distance at the scenario's classical.t_final
// for each hbar; the classical run is hbar-independent by construction.
std::vector<HbarStudyRow> hbar_convergence_study(
    const ScenarioConfig& sc, const std::vector<double>& hbars);

}  // namespace fisherq
