#include "fisherq/scenario.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fisherq/io_util.hpp"
#include "fisherq/snapshot.hpp"
#include "fisherq/version.hpp"

namespace fisherq {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double r = 0;
  try {
    r = std::stod(v, &used);
  } catch (...) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
  if (trim(v.substr(used)) != "")
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  return r;
}

int to_int(const std::string& key, const std::string& v) {
  double d = to_double(key, v);
  int i = static_cast<int>(std::llround(d));
  if (std::abs(d - i) > 1e-9)
    throw ConfigError("config: expected integer for " + key);
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: expected boolean for " + key);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

template <size_t N>
void fill_array(const std::string& key, const std::string& v,
                std::array<double, N>& dst) {
  auto vals = to_doubles(key, v);
  if (vals.size() == 1) {
    dst.fill(vals[0]);
    return;
  }
  if (vals.size() > N)
    throw ConfigError("config: too many values for " + key);
  for (size_t i = 0; i < vals.size(); ++i) dst[i] = vals[i];
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig sc;
  sc.raw_text = text;
  sc.grid.npts = {0, 0, 0};
  sc.grid.length = {0, 0, 0};
  bool spin_requested = false;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (val.empty())
      throw ConfigError("config: empty value for " + key);

    if (key == "scenario.name") {
      sc.name = val;
    } else if (key == "scenario.mode") {
      if (val == "quantum")
        sc.mode = ScenarioConfig::Mode::quantum;
      else if (val == "classical")
        sc.mode = ScenarioConfig::Mode::classical;
      else
        throw ConfigError("config: scenario.mode must be quantum|classical");
    } else if (key == "grid.ndim") {
      sc.grid.ndim = to_int(key, val);
    } else if (key == "grid.points") {
      auto vals = to_doubles(key, val);
      for (size_t i = 0; i < vals.size() && i < 3; ++i)
        sc.grid.npts[i] = static_cast<int>(vals[i]);
      if (vals.size() == 1)
        sc.grid.npts[1] = sc.grid.npts[2] = sc.grid.npts[0];
    } else if (key == "grid.lengths") {
      fill_array(key, val, sc.grid.length);
    } else if (key == "grid.origin") {
      if (val == "centered") {
        sc.grid.centered = true;
      } else {
        sc.grid.centered = false;
        fill_array(key, val, sc.grid.origin);
      }
    } else if (key == "grid.boundary") {
      if (val == "periodic")
        sc.grid.boundary = Boundary::periodic;
      else if (val == "absorbing")
        sc.grid.boundary = Boundary::absorbing;
      else
        throw ConfigError("config: grid.boundary must be periodic|absorbing");
    } else if (key == "grid.absorb_width") {
      sc.grid.absorb_width = to_double(key, val);
    } else if (key == "constants.hbar") {
      sc.consts.hbar = to_double(key, val);
    } else if (key == "constants.m") {
      sc.consts.m = to_double(key, val);
    } else if (key == "constants.e") {
      sc.consts.e = to_double(key, val);
    } else if (key == "constants.c") {
      sc.consts.c = to_double(key, val);
    } else if (key == "particles.count") {
      sc.particles_count = to_int(key, val);
    } else if (key == "particles.dim") {
      sc.particles_dim = to_int(key, val);
    } else if (key == "particles.m") {
      sc.particle_masses = to_doubles(key, val);
    } else if (key == "particles.e") {
      sc.particle_charges = to_doubles(key, val);
    } else if (key == "gauge.phi") {
      sc.gauge.phi = Expr::parse(val);
    } else if (key == "gauge.ax") {
      sc.gauge.a[0] = Expr::parse(val);
    } else if (key == "gauge.ay") {
      sc.gauge.a[1] = Expr::parse(val);
    } else if (key == "gauge.az") {
      sc.gauge.a[2] = Expr::parse(val);
    } else if (key == "zeeman.enabled") {
      sc.zeeman = to_bool(key, val);
    } else if (key == "zeeman.bx" || key == "zeeman.by" || key == "zeeman.bz") {
      if (!sc.zeeman_b)
        sc.zeeman_b = std::array<Expr, 3>{Expr(), Expr(), Expr()};
      (*sc.zeeman_b)[key == "zeeman.bx" ? 0 : (key == "zeeman.by" ? 1 : 2)] =
          Expr::parse(val);
    } else if (key == "potential.v") {
      sc.v = Expr::parse(val);
    } else if (key == "state.kind") {
      sc.state.kind = val;
    } else if (key == "state.center") {
      fill_array(key, val, sc.state.center);
    } else if (key == "state.center2") {
      fill_array(key, val, sc.state.center2);
    } else if (key == "state.sigma") {
      fill_array(key, val, sc.state.sigma);
    } else if (key == "state.momentum") {
      fill_array(key, val, sc.state.momentum);
    } else if (key == "state.momentum2") {
      fill_array(key, val, sc.state.momentum2);
    } else if (key == "state.rel_phase") {
      sc.state.rel_phase = to_double(key, val);
    } else if (key == "state.spin_theta") {
      sc.state.spin_theta = to_double(key, val);
      spin_requested = true;
    } else if (key == "state.spin_phi") {
      sc.state.spin_phi = to_double(key, val);
      spin_requested = true;
    } else if (key == "state.spin_theta_mod") {
      sc.state.spin_theta_mod = to_double(key, val);
      spin_requested = true;
    } else if (key == "state.file") {
      sc.state.file = val;
    } else if (key == "state.s0") {
      sc.state.s0 = Expr::parse(val);
    } else if (key == "evolve.dt") {
      sc.evolve.dt = to_double(key, val);
    } else if (key == "evolve.steps") {
      sc.steps = to_int(key, val);
    } else if (key == "evolve.scheme") {
      if (val == "crank-nicolson")
        sc.evolve.scheme = Scheme::crank_nicolson;
      else if (val == "split-step-spectral")
        sc.evolve.scheme = Scheme::split_step_spectral;
      else
        throw ConfigError(
            "config: evolve.scheme must be crank-nicolson|split-step-spectral");
    } else if (key == "evolve.tol") {
      sc.evolve.tol = to_double(key, val);
    } else if (key == "evolve.max_iter") {
      sc.evolve.max_iter = to_int(key, val);
    } else if (key == "output.every") {
      sc.output_every = to_int(key, val);
    } else if (key == "output.snapshots") {
      sc.write_snapshots = to_bool(key, val);
    } else if (key == "verify.ehrenfest") {
      sc.verify.ehrenfest = to_bool(key, val);
    } else if (key == "verify.residuals") {
      sc.verify.residuals = to_bool(key, val);
    } else if (key == "verify.norm") {
      sc.verify.norm = to_bool(key, val);
    } else if (key == "verify.torque_scale") {
      sc.verify.torque_scale = to_double(key, val);
    } else if (key == "classical.samples") {
      sc.classical.samples = to_int(key, val);
    } else if (key == "classical.dt") {
      sc.classical.dt = to_double(key, val);
    } else if (key == "classical.t_final") {
      sc.classical.t_final = to_double(key, val);
    } else if (key == "classical.bandwidth") {
      sc.classical.bandwidth = to_double(key, val);
    } else if (key == "classical.hbar_study") {
      sc.classical.hbar_study = to_doubles(key, val);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  if (sc.zeeman || spin_requested) sc.state.spinor = true;
  if (sc.grid.npts[0] <= 0)
    throw ConfigError("config: grid.points is required");
  if (!(sc.grid.length[0] > 0.0))
    throw ConfigError("config: grid.lengths is required");
  if (sc.mode == ScenarioConfig::Mode::quantum) {
    if (!(sc.evolve.dt > 0.0))
      throw ConfigError("config: evolve.dt must be > 0");
    if (sc.steps < 1) throw ConfigError("config: evolve.steps must be >= 1");
    if (sc.output_every < 1)
      throw ConfigError("config: output.every must be >= 1");
  }
  if (sc.particles_count < 1)
    throw ConfigError("config: particles.count must be >= 1");
  return sc;
}

HamiltonianSpec ScenarioConfig::hamiltonian() const {
  HamiltonianSpec spec;
  spec.grid = make_run_grid();
  spec.consts = consts;
  spec.particles.clear();
  for (int i = 0; i < particles_count; ++i) {
    ParticleSpec p;
    p.m = i < static_cast<int>(particle_masses.size()) ? particle_masses[i]
                                                       : consts.m;
    p.e = i < static_cast<int>(particle_charges.size()) ? particle_charges[i]
                                                        : consts.e;
    spec.particles.push_back(p);
  }
  spec.dims_per_particle = particles_dim;
  spec.gauge = gauge;
  spec.v = v;
  spec.zeeman = zeeman;
  spec.zeeman_b = zeeman_b;
  return spec;
}

namespace {

ComplexField gaussian_envelope(const Grid& g, const std::array<double, 3>& c,
                               const std::array<double, 3>& sigma,
                               const std::array<double, 3>& p, double hbar) {
  ComplexField psi(g);
  for (int i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    double arg = 0.0, phase = 0.0;
    for (int a = 0; a < g.ndim; ++a) {
      const double dx = g.coord(a, idx[a]) - c[a];
      arg += dx * dx / (4.0 * sigma[a] * sigma[a]);
      phase += p[a] * g.coord(a, idx[a]) / hbar;
    }
    psi.values[i] = std::exp(cplx(-arg, phase));
  }
  return psi;
}

}  // namespace

StateFunction ScenarioConfig::initial_state_function() const {
  const Grid g = make_run_grid();
  HamiltonianSpec spec = hamiltonian();
  const int nspin = state.spinor ? 2 : 1;
  if (state.spinor && particles_count != 1)
    throw ConfigError("config: spinor initial states need a single particle");

  ComplexField envelope(g);
  if (state.kind == "gaussian") {
    envelope = gaussian_envelope(g, state.center, state.sigma, state.momentum,
                                 consts.hbar);
  } else if (state.kind == "plane_wave") {
    // snap to grid-commensurate momentum
    std::array<double, 3> p{0, 0, 0};
    for (int a = 0; a < g.ndim; ++a) {
      const double mode =
          std::round(state.momentum[a] * g.length[a] / (2.0 * kPi * consts.hbar));
      p[a] = 2.0 * kPi * consts.hbar * mode / g.length[a];
    }
    for (int i = 0; i < g.size(); ++i) {
      auto idx = g.unflatten(i);
      double phase = 0.0;
      for (int a = 0; a < g.ndim; ++a)
        phase += p[a] * g.coord(a, idx[a]) / consts.hbar;
      envelope.values[i] = std::exp(cplx(0.0, phase));
    }
  } else if (state.kind == "gaussian_pair") {
    ComplexField g1 = gaussian_envelope(g, state.center, state.sigma,
                                        state.momentum, consts.hbar);
    ComplexField g2 = gaussian_envelope(g, state.center2, state.sigma,
                                        state.momentum2, consts.hbar);
    envelope.values =
        g1.values + std::exp(cplx(0.0, state.rel_phase)) * g2.values;
  } else if (state.kind == "ground") {
    auto [gs, e] = ground_state(spec, nspin);
    (void)e;
    return gs;
  } else if (state.kind == "snapshot") {
    auto snap = read_snapshot(state.file, g);
    if (std::holds_alternative<ComplexField>(snap))
      return to_state(std::get<ComplexField>(snap));
    if (std::holds_alternative<SpinorField>(snap))
      return to_state(std::get<SpinorField>(snap));
    throw ConfigError("config: snapshot initial state must be complex/spinor");
  } else {
    throw ConfigError("config: unknown state.kind '" + state.kind + "'");
  }

  if (!state.spinor) {
    StateFunction s = to_state(envelope);
    Eigen::Map<Eigen::VectorXcd> vec(s.comps.data(), s.comps.size());
    vec /= std::sqrt(squared_norm(s));
    return s;
  }

  // Takabayasi-convention spinor orientation, optionally tipped along axis 0
  SpinorField sp(g);
  for (int i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    const double x0 = g.coord(0, idx[0]);
    const double th =
        state.spin_theta +
        state.spin_theta_mod * std::cos(2.0 * kPi * x0 / g.length[0]);
    const cplx up = std::cos(0.5 * th) *
                    std::exp(cplx(0.0, 0.5 * state.spin_phi));
    const cplx dn = cplx(0.0, 1.0) * std::sin(0.5 * th) *
                    std::exp(cplx(0.0, -0.5 * state.spin_phi));
    sp.c1.values[i] = envelope.values[i] * up;
    sp.c2.values[i] = envelope.values[i] * dn;
  }
  StateFunction s = to_state(sp);
  Eigen::Map<Eigen::VectorXcd> vec(s.comps.data(), s.comps.size());
  vec /= std::sqrt(squared_norm(s));
  return s;
}

HydroState ScenarioConfig::initial_hydro_state() const {
  const Grid g = make_run_grid();
  HydroState hs{RealField(g), RealField(g)};
  for (int i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    double arg = 0.0;
    for (int a = 0; a < g.ndim; ++a) {
      const double dx = g.coord(a, idx[a]) - state.center[a];
      arg += dx * dx / (2.0 * state.sigma[a] * state.sigma[a]);
    }
    hs.rho.values[i] = std::exp(-arg);
  }
  hs.rho.values /= hs.rho.values.sum() * g.cell_volume();
  hs.s = sample(state.s0, g, 0.0);
  if (!state.s0.depends_on("x") && !state.s0.depends_on("y") &&
      !state.s0.depends_on("z")) {
    // fall back to the momentum parameters when no action expression given
    for (int i = 0; i < g.size(); ++i) {
      auto idx = g.unflatten(i);
      for (int a = 0; a < g.ndim; ++a)
        hs.s.values[i] += state.momentum[a] * g.coord(a, idx[a]);
    }
  }
  return hs;
}

namespace {

class Csv {
 public:
  Csv(const std::string& path, const std::vector<std::string>& cols)
      : out_(path, std::ios::trunc) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
    for (size_t i = 0; i < cols.size(); ++i)
      out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }
  void row(const std::vector<double>& vals) {
    for (size_t i = 0; i < vals.size(); ++i)
      out_ << (i ? "," : "") << format_double(vals[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

void write_manifest(const ScenarioConfig& sc, const RunOptions& opt,
                    const RunResult& result) {
  std::ofstream out(std::filesystem::path(opt.out_dir) / "manifest.txt",
                    std::ios::trunc);
  out << "scenario=" << sc.name << "\n";
  out << "config_fnv1a=" << hex64(fnv1a(sc.raw_text)) << "\n";
  out << "seed=" << opt.seed << "\n";
  out << "threads=" << opt.threads << "\n";
  out << "version=" << kVersion << "\n";
  out << "grid=";
  for (int a = 0; a < sc.grid.ndim; ++a)
    out << (a ? "x" : "") << sc.grid.npts[a];
  out << "\n";
  out << "exit=" << result.exit_code << "\n";
  for (const auto& f : result.failed_checks) out << "failed=" << f << "\n";
}

struct ResidualRow {
  double t;
  double continuity, hj, theta, phi, mask_fraction;
};

RunResult run_quantum(const ScenarioConfig& sc, const RunOptions& opt) {
  namespace fs = std::filesystem;
  const Grid g = sc.make_run_grid();
  HamiltonianSpec spec = sc.hamiltonian();
  StateFunction psi = sc.initial_state_function();
  spec.validate(psi.nspin());
  Propagator prop(spec, sc.evolve, psi.nspin());
  const double dt = sc.evolve.dt;
  const bool spin = psi.nspin() == 2;
  const double hbar = sc.consts.hbar;

  std::vector<EnsembleReport> reports;
  std::vector<ResidualRow> residual_rows;

  // ring of the last three states for centered time derivatives
  std::vector<StateFunction> ring;
  ring.reserve(3);
  ring.push_back(psi);

  auto maybe_snapshot = [&](const StateFunction& s, int k) {
    if (!sc.write_snapshots) return;
    char name[64];
    std::snprintf(name, sizeof(name), "state_%06d.fqf", k);
    if (s.nspin() == 1)
      write_snapshot((fs::path(opt.out_dir) / name).string(),
                     to_complex_field(s));
    else
      write_snapshot((fs::path(opt.out_dir) / name).string(),
                     to_spinor_field(s));
  };

  reports.push_back(ensemble_report(psi, spec, 0.0));
  maybe_snapshot(psi, 0);

  MadelungOptions mopt;
  for (int k = 1; k <= sc.steps; ++k) {
    StateFunction next = prop.step(ring.back(), (k - 1) * dt);
    ring.push_back(next);
    if (ring.size() > 3) ring.erase(ring.begin());

    const double t_mid = (k - 1) * dt;
    if (sc.verify.residuals && ring.size() == 3 &&
        (k - 1) % sc.output_every == 0 && k >= 2) {
      ResidualRow row{};
      row.t = t_mid;
      if (!spin) {
        auto [h0, r0] = psi_to_hydro(to_complex_field(ring[0]), hbar, mopt);
        auto [h1, r1] = psi_to_hydro(to_complex_field(ring[1]), hbar, mopt);
        auto [h2, r2] = psi_to_hydro(to_complex_field(ring[2]), hbar, mopt);
        auto rc = continuity_residual(h0, h1, h2, dt, spec, t_mid, mopt);
        auto rh = hj_residual(h0, h1, h2, dt, spec, t_mid, mopt);
        row.continuity = rc.relative;
        row.hj = rh.relative;
        row.theta = row.phi = std::numeric_limits<double>::quiet_NaN();
        row.mask_fraction = rc.mask_fraction;
      } else {
        auto [s0, r0] = takabayasi_split(to_spinor_field(ring[0]), hbar, mopt);
        auto [s1, r1] = takabayasi_split(to_spinor_field(ring[1]), hbar, mopt);
        auto [s2, r2] = takabayasi_split(to_spinor_field(ring[2]), hbar, mopt);
        auto rc =
            continuity_residual_spin(s0, s1, s2, dt, spec, t_mid, mopt);
        auto rh = hj_residual_spin(s0, s1, s2, dt, spec, t_mid, mopt);
        auto rev =
            spin_evolution_residual(s0, s1, s2, dt, spec, t_mid, mopt);
        row.continuity = rc.relative;
        row.hj = rh.relative;
        row.theta = rev.theta.relative;
        row.phi = rev.phi.relative;
        row.mask_fraction = rc.mask_fraction;
      }
      residual_rows.push_back(row);
    }
    if (k % sc.output_every == 0) {
      reports.push_back(ensemble_report(next, spec, k * dt));
      maybe_snapshot(next, k);
    }
  }

  // Ehrenfest residual columns aligned with the report series
  std::vector<Vec3> ehr_x(reports.size(), Vec3::Zero()),
      ehr_p(reports.size(), Vec3::Zero()), ehr_s(reports.size(), Vec3::Zero());
  std::vector<bool> ehr_valid(reports.size(), false);
  EhrenfestSeries ehr;
  if (reports.size() >= 3) {
    ehr = ehrenfest_check(reports, spec, sc.verify.torque_scale);
    for (size_t i = 1; i + 1 < reports.size(); ++i) {
      ehr_x[i] = ehr.residual_x[i - 1];
      ehr_p[i] = ehr.residual_p[i - 1];
      ehr_s[i] = ehr.residual_s[i - 1];
      ehr_valid[i] = true;
    }
  }

  {
    Csv csv((fs::path(opt.out_dir) / "report.csv").string(),
            {"t", "norm", "x0", "x1", "x2", "p0", "p1", "p2", "s0", "s1", "s2",
             "energy", "flor0", "flor1", "flor2", "fdip0", "fdip1", "fdip2",
             "fmech0", "fmech1", "fmech2", "ehr_x", "ehr_p", "ehr_s"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      csv.row({r.t, r.norm, r.mean_x[0], r.mean_x[1], r.mean_x[2], r.mean_p[0],
               r.mean_p[1], r.mean_p[2], r.mean_s[0], r.mean_s[1], r.mean_s[2],
               r.energy, r.force_lorentz[0], r.force_lorentz[1],
               r.force_lorentz[2], r.force_dipole[0], r.force_dipole[1],
               r.force_dipole[2], r.force_mechanical[0], r.force_mechanical[1],
               r.force_mechanical[2],
               ehr_valid[i] ? ehr_x[i].cwiseAbs().maxCoeff() : nan,
               ehr_valid[i] ? ehr_p[i].cwiseAbs().maxCoeff() : nan,
               ehr_valid[i] ? ehr_s[i].cwiseAbs().maxCoeff() : nan});
    }
  }
  if (sc.verify.residuals) {
    Csv csv((fs::path(opt.out_dir) / "residuals.csv").string(),
            {"t", "residual_continuity", "residual_hj", "residual_theta",
             "residual_phi", "mask_fraction"});
    for (const auto& r : residual_rows)
      csv.row({r.t, r.continuity, r.hj, r.theta, r.phi, r.mask_fraction});
  }

  RunResult result;
  if (sc.verify.norm && g.boundary == Boundary::periodic) {
    const double tol = 1e-8 * std::max(1.0, sc.steps / 1000.0);
    if (std::abs(reports.back().norm - 1.0) > tol)
      result.failed_checks.push_back("norm_conservation");
  }
  if (sc.verify.residuals) {
    double worst_scalar = 0.0, worst_spin = 0.0;
    for (const auto& r : residual_rows) {
      worst_scalar = std::max({worst_scalar, r.continuity, r.hj});
      if (spin) worst_spin = std::max({worst_spin, r.theta, r.phi});
    }
    if (!spin && worst_scalar > 1e-5)
      result.failed_checks.push_back("madelung_residuals");
    if (spin && std::max(worst_scalar, worst_spin) > 1e-4)
      result.failed_checks.push_back("pauli_residuals");
  }
  if (sc.verify.ehrenfest && reports.size() >= 3) {
    const double tol = ehrenfest_tolerance(sc.output_every * dt);
    if (ehr.max_x > tol) result.failed_checks.push_back("ehrenfest_position");
    if (ehr.max_p > tol) result.failed_checks.push_back("ehrenfest_momentum");
    if (spin && ehr.max_s > tol)
      result.failed_checks.push_back("ehrenfest_spin_torque");
  }
  result.exit_code = result.failed_checks.empty() ? 0 : 1;
  write_manifest(sc, opt, result);
  return result;
}

RunResult run_classical(const ScenarioConfig& sc, const RunOptions& opt) {
  namespace fs = std::filesystem;
  HamiltonianSpec spec = sc.hamiltonian();
  HydroState hs0 = sc.initial_hydro_state();

  ClassicalConfig cfg;
  cfg.n_samples = sc.classical.samples;
  cfg.dt = sc.classical.dt;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;

  // full-guard run to the final time
  CharacteristicEnsemble ce =
      evolve_characteristics(hs0, spec, 0.0, sc.classical.t_final, cfg);

  // trajectory mean series for the report (guard-free re-run)
  {
    CharacteristicEnsemble walker =
        sample_ensemble(hs0, spec, 0.0, cfg.n_samples, cfg.seed);
    const int rows = 50;
    Csv csv((fs::path(opt.out_dir) / "trajectory.csv").string(),
            {"t", "x0", "x1", "x2", "p0", "p1", "p2"});
    Vec3 mx = ensemble_mean_x(walker), mp = ensemble_mean_p(walker);
    csv.row({0.0, mx[0], mx[1], mx[2], mp[0], mp[1], mp[2]});
    for (int r = 1; r <= rows; ++r) {
      const double tt = sc.classical.t_final * r / rows;
      advance_ensemble(walker, spec, tt, cfg);
      mx = ensemble_mean_x(walker);
      mp = ensemble_mean_p(walker);
      csv.row({tt, mx[0], mx[1], mx[2], mp[0], mp[1], mp[2]});
    }
  }

  {
    Csv csv((fs::path(opt.out_dir) / "ensemble.csv").string(),
            {"id", "x0", "x1", "x2", "p0", "p1", "p2", "weight"});
    for (size_t i = 0; i < ce.samples.size(); ++i) {
      const auto& s = ce.samples[i];
      csv.row({static_cast<double>(i), s.x[0], s.x[1], s.x[2], s.p[0], s.p[1],
               s.p[2], s.weight});
    }
  }

  RunResult result;
  if (!ce.caustic) {
    PhaseSpaceDensity psd =
        reconstruct_fields(ce, spec.grid, sc.classical.bandwidth);
    write_snapshot((fs::path(opt.out_dir) / "classical_rho.fqf").string(),
                   psd.rho);
    for (int a = 0; a < spec.grid.ndim; ++a) {
      char nm[32];
      std::snprintf(nm, sizeof(nm), "classical_p%d.fqf", a);
      write_snapshot((fs::path(opt.out_dir) / nm).string(), psd.p_map[a]);
    }
  } else {
    result.failed_checks.push_back("caustic_before_t_final");
  }

  if (!sc.classical.hbar_study.empty()) {
    auto rows = hbar_convergence_study(sc, sc.classical.hbar_study);
    Csv csv((fs::path(opt.out_dir) / "hbar_study.csv").string(),
            {"hbar", "l1_distance", "runtime_s"});
    for (const auto& r : rows) csv.row({r.hbar, r.l1_distance, r.runtime_s});
    for (size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].l1_distance < rows[i - 1].l1_distance))
        result.failed_checks.push_back("hbar_distance_not_decreasing");
  }

  result.exit_code = result.failed_checks.empty() ? 0 : 1;
  write_manifest(sc, opt, result);
  return result;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& sc, const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  if (sc.mode == ScenarioConfig::Mode::classical)
    return run_classical(sc, opt);
  return run_quantum(sc, opt);
}

std::vector<HbarStudyRow> hbar_convergence_study(
    const ScenarioConfig& sc, const std::vector<double>& hbars) {
  std::vector<HbarStudyRow> rows;
  HamiltonianSpec spec0 = sc.hamiltonian();
  if (spec0.grid.ndim != 1)
    throw ConfigError("hbar_convergence_study supports 1-d scenarios");
  HydroState hs0 = sc.initial_hydro_state();
  RealField rho_cl = classical_density_transport_1d(
      hs0, spec0, 0.0, sc.classical.t_final, sc.classical.dt);

  for (double hbar : hbars) {
    const auto wall0 = std::chrono::steady_clock::now();
    ScenarioConfig sq = sc;
    sq.consts.hbar = hbar;
    HamiltonianSpec spec = sq.hamiltonian();
    ComplexField psi = hydro_to_psi(hs0, hbar);
    psi = normalized(psi);
    PropagatorConfig pcfg = sc.evolve;
    const int nsteps = std::max(
        1, static_cast<int>(std::ceil(sc.classical.t_final / pcfg.dt - 1e-12)));
    pcfg.dt = sc.classical.t_final / nsteps;
    Propagator prop(spec, pcfg, 1);
    StateFunction s = to_state(psi);
    for (int k = 0; k < nsteps; ++k) s = prop.step(s, k * pcfg.dt);
    RealField rho_q = density(to_complex_field(s));
    const double l1 =
        (rho_q.values - rho_cl.values).abs().sum() * spec.grid.cell_volume();
    const auto wall1 = std::chrono::steady_clock::now();
    rows.push_back(
        {hbar, l1,
         std::chrono::duration<double>(wall1 - wall0).count()});
  }
  return rows;
}

ScenarioConfig load_scenario(const std::string& path_or_name) {
  namespace fs = std::filesystem;
  if (fs::exists(path_or_name) && fs::is_regular_file(path_or_name)) {
    std::ifstream in(path_or_name);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
  }
  if (const char* text = bundled_scenario_text(path_or_name))
    return parse_scenario(text);
  if (const char* dir = std::getenv("FISHERQ_SCENARIO_DIR")) {
    fs::path p = fs::path(dir) / (path_or_name + ".cfg");
    if (fs::exists(p)) {
      std::ifstream in(p);
      std::stringstream ss;
      ss << in.rdbuf();
      return parse_scenario(ss.str());
    }
  }
  throw ConfigError("scenario not found: " + path_or_name);
}

std::vector<std::string> list_scenarios() {
  namespace fs = std::filesystem;
  std::set<std::string> names;
  for (const auto& n : bundled_scenario_names()) names.insert(n);
  if (const char* dir = std::getenv("FISHERQ_SCENARIO_DIR")) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (entry.path().extension() == ".cfg")
        names.insert(entry.path().stem().string());
    }
  }
  return {names.begin(), names.end()};
}

}  // namespace fisherq
