#include "fisherq/hamiltonian.hpp"

namespace fisherq {

StateFunction to_state(const ComplexField& f) {
  StateFunction s(f.grid, 1);
  s.comps.col(0) = f.values.matrix();
  return s;
}

StateFunction to_state(const SpinorField& f) {
  StateFunction s(f.grid(), 2);
  s.comps.col(0) = f.c1.values.matrix();
  s.comps.col(1) = f.c2.values.matrix();
  return s;
}

ComplexField to_complex_field(const StateFunction& s) {
  if (s.nspin() != 1)
    throw ConfigError("state is not a scalar field");
  return ComplexField(s.grid, s.comps.col(0).array());
}

SpinorField to_spinor_field(const StateFunction& s) {
  if (s.nspin() != 2)
    throw ConfigError("state is not a two-component spinor");
  return SpinorField(ComplexField(s.grid, s.comps.col(0).array()),
                     ComplexField(s.grid, s.comps.col(1).array()));
}

double squared_norm(const StateFunction& s) {
  return s.comps.array().abs2().sum() * s.grid.cell_volume();
}

StateFunction normalized(const StateFunction& s) {
  StateFunction out = s;
  double n = std::sqrt(squared_norm(s));
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero state");
  out.comps /= n;
  return out;
}

void HamiltonianSpec::validate(int nspin) const {
  if (particles.empty()) throw ConfigError("hamiltonian: needs >= 1 particle");
  const int n = nparticles();
  const int d = particle_dims();
  if (d < 1 || n * d != grid.ndim)
    throw ConfigError(
        "hamiltonian: grid dimensionality inconsistent with N*d");
  if (zeeman && nspin != (1 << n))
    throw ConfigError("hamiltonian: Zeeman coupling needs 2^N spin components");
  if (nspin != 1 && nspin != (1 << n))
    throw ConfigError("hamiltonian: state has unsupported spin dimension");
  for (const auto& p : particles)
    if (!(p.m > 0.0)) throw ConfigError("hamiltonian: particle mass must be > 0");
}

const std::array<Eigen::Matrix2cd, 4>& pauli_matrices() {
  static const std::array<Eigen::Matrix2cd, 4> sigma = [] {
    std::array<Eigen::Matrix2cd, 4> s;
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, cplx(0, -1), cplx(0, 1), 0;
    s[3] << 1, 0, 0, -1;
    return s;
  }();
  return sigma;
}

std::array<Expr, 3> magnetic_field_expressions(const HamiltonianSpec& spec) {
  if (spec.zeeman_b) return *spec.zeeman_b;
  return curl_expressions(spec.gauge);
}

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

// neighbour index along one axis, honoring the boundary rule
inline int shifted_flat(const Grid& g, int flat, int axis, int off,
                        bool& valid) {
  auto idx = g.unflatten(flat);
  int i = idx[axis] + off;
  const int n = g.npts[axis];
  if (g.boundary == Boundary::periodic) {
    i = (i % n + n) % n;
  } else if (i < 0 || i >= n) {
    valid = false;  // zero extension: fields vanish in the pad
    return 0;
  }
  valid = true;
  idx[axis] = i;
  return g.flat_index(idx);
}

// adds c * D1 along `axis` acting on spin block s (D1: centered 4th order)
void add_d1(Triplets& trip, const Grid& g, int axis, int s, cplx c,
            const ArrayXr* left_diag /*may be null*/) {
  const int n = g.size();
  const double h = g.spacing(axis);
  const double w[4] = {1.0 / (12 * h), -8.0 / (12 * h), 8.0 / (12 * h),
                       -1.0 / (12 * h)};
  const int offs[4] = {-2, -1, 1, 2};
  for (int i = 0; i < n; ++i) {
    const cplx row_c = left_diag ? c * (*left_diag)[i] : c;
    for (int k = 0; k < 4; ++k) {
      bool ok = true;
      int j = shifted_flat(g, i, axis, offs[k], ok);
      if (!ok) continue;
      trip.emplace_back(s * n + i, s * n + j, row_c * w[k]);
    }
  }
}

// adds c * D1 * diag(a) along axis (stencil applied to a*psi)
void add_d1_diag(Triplets& trip, const Grid& g, int axis, int s, cplx c,
                 const ArrayXr& diag) {
  const int n = g.size();
  const double h = g.spacing(axis);
  const double w[4] = {1.0 / (12 * h), -8.0 / (12 * h), 8.0 / (12 * h),
                       -1.0 / (12 * h)};
  const int offs[4] = {-2, -1, 1, 2};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) {
      bool ok = true;
      int j = shifted_flat(g, i, axis, offs[k], ok);
      if (!ok) continue;
      trip.emplace_back(s * n + i, s * n + j, c * w[k] * diag[j]);
    }
  }
}

void add_d2(Triplets& trip, const Grid& g, int axis, int s, cplx c) {
  const int n = g.size();
  const double h = g.spacing(axis);
  const double w[5] = {-1.0 / (12 * h * h), 16.0 / (12 * h * h),
                       -30.0 / (12 * h * h), 16.0 / (12 * h * h),
                       -1.0 / (12 * h * h)};
  const int offs[5] = {-2, -1, 0, 1, 2};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 5; ++k) {
      bool ok = true;
      int j = shifted_flat(g, i, axis, offs[k], ok);
      if (!ok) continue;
      trip.emplace_back(s * n + i, s * n + j, c * w[k]);
    }
  }
}

}  // namespace

SparseOp assemble_hamiltonian(const HamiltonianSpec& spec, double t,
                              int nspin) {
  spec.validate(nspin);
  const Grid& g = spec.grid;
  const int n = g.size();
  const int npart = spec.nparticles();
  const int d = spec.particle_dims();
  const double hbar = spec.consts.hbar, c_light = spec.consts.c;

  Triplets trip;
  trip.reserve(static_cast<size_t>(n) * nspin * (5 * g.ndim + 4));

  ArrayXr diag = ArrayXr::Zero(n);  // spin-independent local potential
  if (!spec.v.is_zero()) diag += sample(spec.v, g, t).values;

  for (int I = 0; I < npart; ++I) {
    const double mI = spec.particles[I].m;
    const double eI = spec.particles[I].e;
    const int axis0 = I * d;

    if (!spec.gauge.phi.is_zero())
      diag += eI * sample_mapped(spec.gauge.phi, g, t, axis0, d).values;

    for (int k = 0; k < 3; ++k) {
      if (spec.gauge.a[k].is_zero()) continue;
      ArrayXr ak = sample_mapped(spec.gauge.a[k], g, t, axis0, d).values;
      // diamagnetic term for every component; derivative coupling only for
      // components that correspond to a grid axis of this particle
      diag += (eI * eI / (2.0 * mI * c_light * c_light)) * ak.square();
      if (k < d) {
        const int axis = axis0 + k;
        const cplx cc = cplx(0, 1) * hbar * eI / (2.0 * mI * c_light);
        for (int s = 0; s < nspin; ++s) {
          add_d1(trip, g, axis, s, cc, &ak);       // diag(a) * D1
          add_d1_diag(trip, g, axis, s, cc, ak);   // D1 * diag(a)
        }
      }
    }
    for (int k = 0; k < d; ++k) {
      const int axis = axis0 + k;
      const cplx ckin = -hbar * hbar / (2.0 * mI);
      for (int s = 0; s < nspin; ++s) add_d2(trip, g, axis, s, ckin);
    }
  }

  for (int s = 0; s < nspin; ++s)
    for (int i = 0; i < n; ++i)
      if (diag[i] != 0.0) trip.emplace_back(s * n + i, s * n + i, diag[i]);

  if (spec.zeeman) {
    const auto& sigma = pauli_matrices();
    auto b_expr = magnetic_field_expressions(spec);
    for (int I = 0; I < npart; ++I) {
      const double mu = -hbar * spec.particles[I].e /
                        (2.0 * spec.particles[I].m * c_light);
      std::array<ArrayXr, 3> b;
      for (int k = 0; k < 3; ++k)
        b[k] = sample_mapped(b_expr[k], g, t, I * d, d).values;
      const int bit = I;
      for (int s = 0; s < nspin; ++s) {
        // component index: bit value 0 selects spinor component 1 (spin up)
        const int row_spin = (s >> bit) & 1;
        for (int k = 1; k <= 3; ++k) {
          for (int col_spin = 0; col_spin < 2; ++col_spin) {
            const cplx m_elem = sigma[k](row_spin, col_spin);
            if (m_elem == cplx(0, 0)) continue;
            const int s_col = (s & ~(1 << bit)) | (col_spin << bit);
            for (int i = 0; i < n; ++i) {
              if (b[k - 1][i] == 0.0) continue;
              trip.emplace_back(s * n + i, s_col * n + i,
                                mu * m_elem * b[k - 1][i]);
            }
          }
        }
      }
    }
  }

  SparseOp h(static_cast<Eigen::Index>(n) * nspin,
             static_cast<Eigen::Index>(n) * nspin);
  h.setFromTriplets(trip.begin(), trip.end());
  h.makeCompressed();
  return h;
}

StateFunction apply_hamiltonian(const StateFunction& psi,
                                const HamiltonianSpec& spec, double t) {
  SparseOp h = assemble_hamiltonian(spec, t, psi.nspin());
  StateFunction out = psi;
  Eigen::Map<const Eigen::VectorXcd> v(psi.comps.data(), psi.comps.size());
  Eigen::Map<Eigen::VectorXcd> r(out.comps.data(), out.comps.size());
  r = h * v;
  return out;
}

ComplexField apply_hamiltonian(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t) {
  return to_complex_field(apply_hamiltonian(to_state(psi), spec, t));
}

SpinorField apply_hamiltonian(const SpinorField& psi,
                              const HamiltonianSpec& spec, double t) {
  return to_spinor_field(apply_hamiltonian(to_state(psi), spec, t));
}

double energy_expectation(const StateFunction& psi, const HamiltonianSpec& spec,
                          double t) {
  StateFunction h_psi = apply_hamiltonian(psi, spec, t);
  cplx num = (psi.comps.conjugate().array() * h_psi.comps.array()).sum();
  double den = psi.comps.array().abs2().sum();
  return num.real() / den;
}

}  // namespace fisherq
