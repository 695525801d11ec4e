#include "fisherq/propagate.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/FFT>

namespace fisherq {

namespace {

constexpr int kDirectSolveLimit = 40000;  // unknowns; above this use BiCGSTAB

SparseOp identity_like(Eigen::Index n) {
  SparseOp id(n, n);
  id.setIdentity();
  return id;
}

void apply_absorber(StateFunction& psi) {
  const Grid& g = psi.grid;
  if (g.boundary != Boundary::absorbing) return;
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    auto idx = g.unflatten(i);
    double mask = 1.0;
    for (int a = 0; a < g.ndim; ++a) {
      const double w =
          g.absorb_width > 0.0 ? g.absorb_width : 0.1 * g.length[a];
      const double x = g.coord(a, idx[a]);
      const double d_lo = x - g.origin[a];
      const double d_hi = g.origin[a] + g.length[a] - g.spacing(a) - x;
      const double d = std::min(d_lo, d_hi);
      if (d < w) {
        const double c = std::cos(0.5 * kPi * (1.0 - std::max(d, 0.0) / w));
        mask *= c * c;
      }
    }
    if (mask != 1.0) psi.comps.row(i) *= mask;
  }
}

// split-step kinetic phase: exp(-i dt hbar k^2 / 2m) per axis, per mass
void kinetic_phase_inplace(const HamiltonianSpec& spec, double dt,
                           Eigen::MatrixXcd& comps) {
  const Grid& g = spec.grid;
  Eigen::FFT<double> fft;
  const double hbar = spec.consts.hbar;
  for (int s = 0; s < comps.cols(); ++s) {
    ArrayXc work = comps.col(s).array();
    // forward transform along every axis
    for (int a = 0; a < g.ndim; ++a) {
      const int n = g.npts[a];
      const int inner = g.stride(a);
      const int outer = g.size() / (n * inner);
      Eigen::VectorXcd line(n), freq(n);
      for (int o = 0; o < outer; ++o)
        for (int in = 0; in < inner; ++in) {
          const int base = o * n * inner + in;
          for (int i = 0; i < n; ++i) line[i] = work[base + i * inner];
          fft.fwd(freq, line);
          for (int i = 0; i < n; ++i) work[base + i * inner] = freq[i];
        }
    }
    // multiply by the dispersion phase
    const int total = g.size();
    for (int idx = 0; idx < total; ++idx) {
      auto mi = g.unflatten(idx);
      double omega = 0.0;
      for (int a = 0; a < g.ndim; ++a) {
        const int n = g.npts[a];
        const int m = (mi[a] <= n / 2) ? mi[a] : mi[a] - n;
        const double k = 2.0 * kPi * m / g.length[a];
        omega += hbar * k * k / (2.0 * spec.axis_mass(a));
      }
      work[idx] *= std::exp(cplx(0, -omega * dt));
    }
    // inverse transforms
    for (int a = 0; a < g.ndim; ++a) {
      const int n = g.npts[a];
      const int inner = g.stride(a);
      const int outer = g.size() / (n * inner);
      Eigen::VectorXcd line(n), freq(n);
      for (int o = 0; o < outer; ++o)
        for (int in = 0; in < inner; ++in) {
          const int base = o * n * inner + in;
          for (int i = 0; i < n; ++i) freq[i] = work[base + i * inner];
          fft.inv(line, freq);
          for (int i = 0; i < n; ++i) work[base + i * inner] = line[i];
        }
    }
    comps.col(s) = work.matrix();
  }
}

// pointwise potential (and Zeeman) half step for the split scheme
void potential_phase_inplace(const HamiltonianSpec& spec, double t, double dt,
                             Eigen::MatrixXcd& comps) {
  const Grid& g = spec.grid;
  const int n = g.size();
  const int nspin = static_cast<int>(comps.cols());
  ArrayXr diag = ArrayXr::Zero(n);
  if (!spec.v.is_zero()) diag += sample(spec.v, g, t).values;
  const int d = spec.particle_dims();
  for (int I = 0; I < spec.nparticles(); ++I) {
    if (!spec.gauge.phi.is_zero())
      diag += spec.particles[I].e *
              sample_mapped(spec.gauge.phi, g, t, I * d, d).values;
    for (int k = 0; k < 3; ++k)
      if (!spec.gauge.a[k].is_zero()) {
        ArrayXr ak = sample_mapped(spec.gauge.a[k], g, t, I * d, d).values;
        diag += (spec.particles[I].e * spec.particles[I].e /
                 (2.0 * spec.particles[I].m * spec.consts.c * spec.consts.c)) *
                ak.square();
      }
  }
  const double hbar = spec.consts.hbar;
  for (int s = 0; s < nspin; ++s)
    comps.col(s).array() *= (cplx(0, -dt / hbar) * diag.cast<cplx>()).exp();

  if (!spec.zeeman) return;
  // exact pointwise rotation exp(-i dt mu sigma.B / hbar) per particle
  auto b_expr = magnetic_field_expressions(spec);
  for (int I = 0; I < spec.nparticles(); ++I) {
    const double mu = -hbar * spec.particles[I].e /
                      (2.0 * spec.particles[I].m * spec.consts.c);
    std::array<ArrayXr, 3> b;
    for (int k = 0; k < 3; ++k)
      b[k] = sample_mapped(b_expr[k], g, t, I * d, d).values;
    const int bit = I;
    for (int i = 0; i < n; ++i) {
      const double bx = b[0][i], by = b[1][i], bz = b[2][i];
      const double bmag = std::sqrt(bx * bx + by * by + bz * bz);
      if (bmag == 0.0) continue;
      const double theta = mu * bmag * dt / hbar;
      const cplx ct = std::cos(theta), st = cplx(0, -std::sin(theta));
      const double nx = bx / bmag, ny = by / bmag, nz = bz / bmag;
      // U = cos(theta) - i sin(theta) (n . sigma)
      const cplx u00 = ct + st * nz;
      const cplx u01 = st * (nx - cplx(0, 1) * ny);
      const cplx u10 = st * (nx + cplx(0, 1) * ny);
      const cplx u11 = ct - st * nz;
      for (int s = 0; s < nspin; ++s) {
        if ((s >> bit) & 1) continue;  // handle each pair once via its 0-branch
        const int s1 = s | (1 << bit);
        const cplx a = comps(i, s), c = comps(i, s1);
        comps(i, s) = u00 * a + u01 * c;
        comps(i, s1) = u10 * a + u11 * c;
      }
    }
  }
}

}  // namespace

struct Propagator::Impl {
  HamiltonianSpec spec;
  PropagatorConfig cfg;
  int nspin = 1;
  bool time_dep = false;
  bool assembled = false;
  double assembled_t = 0.0;
  SparseOp m_plus;   // 1 + i dt H / (2 hbar)
  Eigen::SparseLU<SparseOp> lu;
  Eigen::BiCGSTAB<SparseOp, Eigen::DiagonalPreconditioner<cplx>> krylov;
  bool use_direct = true;

  void ensure_assembled(double t_mid) {
    if (assembled && (!time_dep || assembled_t == t_mid)) return;
    SparseOp h = assemble_hamiltonian(spec, t_mid, nspin);
    const cplx factor(0.0, cfg.dt / (2.0 * spec.consts.hbar));
    m_plus = identity_like(h.rows());
    m_plus += (h * factor).eval();
    m_plus.makeCompressed();
    use_direct = m_plus.rows() <= kDirectSolveLimit;
    if (use_direct) {
      lu.compute(m_plus);
      if (lu.info() != Eigen::Success)
        throw PropagationError("Crank-Nicolson LU factorization failed");
    } else {
      krylov.setTolerance(cfg.tol);
      krylov.setMaxIterations(cfg.max_iter);
      krylov.compute(m_plus);
    }
    assembled = true;
    assembled_t = t_mid;
  }
};

Propagator::Propagator(HamiltonianSpec spec, PropagatorConfig cfg, int nspin)
    : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  spec.validate(nspin);
  if (cfg.scheme == Scheme::split_step_spectral) {
    if (spec.grid.boundary != Boundary::periodic)
      throw ConfigError("split-step scheme requires a periodic grid");
    for (int k = 0; k < spec.particle_dims(); ++k)
      if (!spec.gauge.a[k].is_zero())
        throw ConfigError("split-step scheme is valid only for A = 0");
  }
  impl_->spec = std::move(spec);
  impl_->cfg = cfg;
  impl_->nspin = nspin;
  impl_->time_dep = impl_->spec.time_dependent();
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

const HamiltonianSpec& Propagator::spec() const { return impl_->spec; }
const PropagatorConfig& Propagator::config() const { return impl_->cfg; }

StateFunction Propagator::step(const StateFunction& psi, double t) {
  const PropagatorConfig& cfg = impl_->cfg;
  if (psi.nspin() != impl_->nspin)
    throw ConfigError("propagator: state spin dimension changed");
  if (cfg.dt == 0.0) return psi;

  StateFunction out = psi;
  if (cfg.scheme == Scheme::split_step_spectral) {
    potential_phase_inplace(impl_->spec, t + 0.5 * cfg.dt, 0.5 * cfg.dt,
                            out.comps);
    kinetic_phase_inplace(impl_->spec, cfg.dt, out.comps);
    potential_phase_inplace(impl_->spec, t + 0.5 * cfg.dt, 0.5 * cfg.dt,
                            out.comps);
    apply_absorber(out);
    return out;
  }

  impl_->ensure_assembled(t + 0.5 * cfg.dt);
  Eigen::Map<const Eigen::VectorXcd> v(psi.comps.data(), psi.comps.size());
  // rhs = (1 - i dt H / 2hbar) psi = 2 psi - M_plus psi
  Eigen::VectorXcd rhs = 2.0 * v - impl_->m_plus * v;
  Eigen::VectorXcd sol;
  if (impl_->use_direct) {
    sol = impl_->lu.solve(rhs);
    if (impl_->lu.info() != Eigen::Success)
      throw PropagationError("Crank-Nicolson direct solve failed");
  } else {
    sol = impl_->krylov.solveWithGuess(rhs, v);
    if (impl_->krylov.info() != Eigen::Success) {
      throw PropagationError(
          "Crank-Nicolson iteration did not converge, residual " +
          std::to_string(impl_->krylov.error()));
    }
  }
  Eigen::Map<Eigen::VectorXcd>(out.comps.data(), out.comps.size()) = sol;
  apply_absorber(out);
  return out;
}

StateFunction step(const StateFunction& psi, const HamiltonianSpec& spec,
                   const PropagatorConfig& cfg, double t) {
  Propagator p(spec, cfg, psi.nspin());
  return p.step(psi, t);
}
ComplexField step(const ComplexField& psi, const HamiltonianSpec& spec,
                  const PropagatorConfig& cfg, double t) {
  return to_complex_field(step(to_state(psi), spec, cfg, t));
}
SpinorField step(const SpinorField& psi, const HamiltonianSpec& spec,
                 const PropagatorConfig& cfg, double t) {
  return to_spinor_field(step(to_state(psi), spec, cfg, t));
}

std::pair<StateFunction, double> ground_state(const HamiltonianSpec& spec,
                                              int nspin,
                                              const GroundStateConfig& cfg) {
  spec.validate(nspin);
  if (spec.time_dependent())
    throw ConfigError("ground_state: Hamiltonian must be time-independent");
  const Grid& g = spec.grid;
  SparseOp h = assemble_hamiltonian(spec, 0.0, nspin);

  // smooth positive start: Gaussian bump in every spin component
  StateFunction psi(g, nspin);
  for (int i = 0; i < g.size(); ++i) {
    auto idx = g.unflatten(i);
    double arg = 0.0;
    for (int a = 0; a < g.ndim; ++a) {
      const double xc = g.origin[a] + 0.5 * g.length[a];
      const double w = g.length[a] / 8.0;
      const double dx = g.coord(a, idx[a]) - xc;
      arg += dx * dx / (2.0 * w * w);
    }
    for (int s = 0; s < nspin; ++s) psi.comps(i, s) = std::exp(-arg);
  }
  psi = normalized(psi);

  double dtau = cfg.dtau;
  SparseOp m = identity_like(h.rows());
  m += (h * cplx(dtau / spec.consts.hbar, 0.0)).eval();
  m.makeCompressed();
  Eigen::SparseLU<SparseOp> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success)
    throw PropagationError("ground_state: factorization failed");

  auto rayleigh = [&](const StateFunction& s) {
    Eigen::Map<const Eigen::VectorXcd> v(s.comps.data(), s.comps.size());
    Eigen::VectorXcd hv = h * v;
    return (v.dot(hv)).real() / v.squaredNorm();
  };

  double e_prev = rayleigh(psi);
  int stable = 0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::Map<const Eigen::VectorXcd> v(psi.comps.data(), psi.comps.size());
    Eigen::VectorXcd next = lu.solve(v);
    if (lu.info() != Eigen::Success || !next.allFinite())
      throw PropagationError("ground_state: imaginary-time step diverged");
    StateFunction cand(g, nspin);
    Eigen::Map<Eigen::VectorXcd>(cand.comps.data(), cand.comps.size()) = next;
    psi = normalized(cand);
    const double e = rayleigh(psi);
    if (!std::isfinite(e))
      throw PropagationError("ground_state: energy diverged");
    if (std::abs(e - e_prev) <= cfg.tol * std::max(1.0, std::abs(e)))
      ++stable;
    else
      stable = 0;
    e_prev = e;
    if (stable >= 3) break;
  }
  return {psi, e_prev};
}

std::pair<ComplexField, double> ground_state_scalar(
    const HamiltonianSpec& spec, const GroundStateConfig& cfg) {
  auto [s, e] = ground_state(spec, 1, cfg);
  return {to_complex_field(s), e};
}

std::pair<SpinorField, double> ground_state_spinor(
    const HamiltonianSpec& spec, const GroundStateConfig& cfg) {
  auto [s, e] = ground_state(spec, 2, cfg);
  return {to_spinor_field(s), e};
}

}  // namespace fisherq
