#include "fisherq/madelung.hpp"

#include <cmath>

namespace fisherq {

namespace {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

double principal(double d) {
  d = std::fmod(d, 2.0 * kPi);
  if (d <= -kPi) d += 2.0 * kPi;
  if (d > kPi) d -= 2.0 * kPi;
  return d;
}

int argmax(const ArrayXr& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

// Axis-ordered staircase unwrap from `root_flat`; every point's branch is
// accumulated along its own path (axis 0 leg, then axis 1, then axis 2), so
// the result is single-valued by construction.
void unwrap_staircase(const Grid& g, const ArrayXr& raw, const ArrayXr& rho,
                      double floor_abs, int root_flat, ArrayXr& out,
                      BoolArray& taint) {
  out.resize(g.size());
  taint.resize(g.size());
  const auto root = g.unflatten(root_flat);
  const int n0 = g.npts[0];
  const int n1 = g.ndim > 1 ? g.npts[1] : 1;
  const int n2 = g.ndim > 2 ? g.npts[2] : 1;

  auto flat = [&](int i, int j, int k) { return (i * n1 + j) * n2 + k; };
  auto link = [&](int to, int from) {
    out[to] = out[from] + principal(raw[to] - raw[from]);
    taint[to] = taint[from] || rho[to] < floor_abs;
  };

  out[root_flat] = raw[root_flat];
  taint[root_flat] = rho[root_flat] < floor_abs;

  const int r0 = root[0], r1 = root[1], r2 = root[2];
  for (int i = r0 + 1; i < n0; ++i) link(flat(i, r1, r2), flat(i - 1, r1, r2));
  for (int i = r0 - 1; i >= 0; --i) link(flat(i, r1, r2), flat(i + 1, r1, r2));
  if (g.ndim >= 2) {
    for (int i = 0; i < n0; ++i) {
      for (int j = r1 + 1; j < n1; ++j) link(flat(i, j, r2), flat(i, j - 1, r2));
      for (int j = r1 - 1; j >= 0; --j) link(flat(i, j, r2), flat(i, j + 1, r2));
    }
  }
  if (g.ndim >= 3) {
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j) {
        for (int k = r2 + 1; k < n2; ++k) link(flat(i, j, k), flat(i, j, k - 1));
        for (int k = r2 - 1; k >= 0; --k) link(flat(i, j, k), flat(i, j, k + 1));
      }
  }
}

// Flags plaquettes with a nonzero phase winding. Only cells touching the
// density support are reported: on a periodic grid every winding has a
// compensating image somewhere (the total over the torus vanishes), and the
// counter-winding in the deep tail is not a physical witness.
void find_vortices(const Grid& g, const ArrayXr& raw, const ArrayXr& rho,
                   double support_level, std::vector<VortexCell>& cells) {
  const bool periodic = g.boundary == Boundary::periodic;
  for (int a = 0; a < g.ndim; ++a) {
    for (int b = a + 1; b < g.ndim; ++b) {
      const int na = g.npts[a], nb = g.npts[b];
      const int lim_a = periodic ? na : na - 1;
      const int lim_b = periodic ? nb : nb - 1;
      const int n = g.size();
      for (int flat = 0; flat < n; ++flat) {
        auto idx = g.unflatten(flat);
        if (idx[a] >= lim_a || idx[b] >= lim_b) continue;
        auto corner = [&](int da, int db) {
          auto j = idx;
          j[a] = (j[a] + da) % na;
          j[b] = (j[b] + db) % nb;
          return g.flat_index(j);
        };
        const int i00 = corner(0, 0), i10 = corner(1, 0), i11 = corner(1, 1),
                  i01 = corner(0, 1);
        const double support = std::max({rho[i00], rho[i10], rho[i11],
                                         rho[i01]});
        if (support < support_level) continue;
        const double circ =
            principal(raw[i10] - raw[i00]) + principal(raw[i11] - raw[i10]) +
            principal(raw[i01] - raw[i11]) + principal(raw[i00] - raw[i01]);
        if (std::abs(circ) > kPi)
          cells.push_back({flat, a, b, circ});
      }
    }
  }
}

ArrayXr raw_phase(const ArrayXc& v) {
  ArrayXr out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = std::arg(v[i]);
  return out;
}

double masked_l2(const ArrayXr& v, const ArrayXr& mask01, double dv) {
  return std::sqrt((v.square() * mask01).sum() * dv);
}

ResidualReport finalize_report(const Grid& g, const ArrayXr& residual,
                               const ArrayXr& mask01,
                               const std::vector<const ArrayXr*>& terms) {
  ResidualReport rep;
  const double dv = g.cell_volume();
  rep.mask = RealField(g, mask01);
  rep.residual = RealField(g, residual * mask01);
  rep.l2 = masked_l2(residual, mask01, dv);
  double scale = 0.0;
  for (const ArrayXr* term : terms)
    scale = std::max(scale, masked_l2(*term, mask01, dv));
  rep.scale = scale;
  rep.relative = scale > 0.0 ? rep.l2 / scale : (rep.l2 > 0.0 ? INFINITY : 0.0);
  rep.mask_fraction = mask01.sum() / static_cast<double>(g.size());
  return rep;
}

ArrayXr rho_mask(const ArrayXr& rho, double rel) {
  const double level = rel * rho.maxCoeff();
  return (rho > level).cast<double>();
}

// external vector-potential component along a grid axis, sampled at the
// owning particle's coordinates
ArrayXr axis_potential(const HamiltonianSpec& spec, int axis, double t) {
  const int d = spec.particle_dims();
  const int particle = axis / d, comp = axis % d;
  if (spec.gauge.a[comp].is_zero())
    return ArrayXr::Zero(spec.grid.size());
  return sample_mapped(spec.gauge.a[comp], spec.grid, t, particle * d, d)
      .values;
}

ArrayXr electrostatic_energy(const HamiltonianSpec& spec, double t) {
  ArrayXr acc = ArrayXr::Zero(spec.grid.size());
  if (spec.gauge.phi.is_zero()) return acc;
  const int d = spec.particle_dims();
  for (int I = 0; I < spec.nparticles(); ++I)
    acc += spec.particles[I].e *
           sample_mapped(spec.gauge.phi, spec.grid, t, I * d, d).values;
  return acc;
}

}  // namespace

LogRhoDerivs log_rho_derivs(const RealField& rho, double floor_abs,
                            DerivScheme scheme) {
  const Grid& g = rho.grid;
  LogRhoDerivs out;
  for (int a = 0; a < 3; ++a) {
    out.d1[a] = ArrayXr::Zero(g.size());
    out.d2_pure[a] = ArrayXr::Zero(g.size());
  }
  if (scheme == DerivScheme::central4) {
    RealField logrho(g, rho.values.max(floor_abs).log());
    for (int a = 0; a < g.ndim; ++a) {
      out.d1[a] = differentiate(logrho, a, 1, scheme).values;
      out.d2_pure[a] = differentiate(logrho, a, 2, scheme).values;
    }
  } else {
    // log rho is generally not periodic; differentiate rho directly
    const ArrayXr rho_f = rho.values.max(floor_abs);
    for (int a = 0; a < g.ndim; ++a) {
      out.d1[a] = differentiate(rho, a, 1, scheme).values / rho_f;
      out.d2_pure[a] =
          differentiate(rho, a, 2, scheme).values / rho_f -
          out.d1[a].square();
    }
  }
  return out;
}

namespace {

// quantum potential sum_a (hbar^2/2 m_a) d_a^2 sqrt(rho)/sqrt(rho)
//   = sum_a (hbar^2/4 m_a) [ d_a^2 log rho + (1/2)(d_a log rho)^2 ]
ArrayXr quantum_potential(const HamiltonianSpec& spec, const RealField& rho,
                          double floor_abs, DerivScheme scheme) {
  const Grid& g = spec.grid;
  LogRhoDerivs ld = log_rho_derivs(rho, floor_abs, scheme);
  ArrayXr acc = ArrayXr::Zero(g.size());
  const double h2 = spec.consts.hbar * spec.consts.hbar;
  for (int a = 0; a < g.ndim; ++a)
    acc += (h2 / (4.0 * spec.axis_mass(a))) *
           (ld.d2_pure[a] + 0.5 * ld.d1[a].square());
  return acc;
}

// hbar * arg(next conj(prev)) / (2 dt): the principal-branch phase rate,
// immune to the additive branch constants of the unwrapped actions
ArrayXr phase_rate(const ArrayXc& prev, const ArrayXc& next, double scale_num,
                   double dt) {
  ArrayXr out(prev.size());
  for (Eigen::Index i = 0; i < prev.size(); ++i)
    out[i] = scale_num * std::arg(next[i] * std::conj(prev[i])) / (2.0 * dt);
  return out;
}

// ---- derivative bundles ---------------------------------------------------
//
// Spatial derivatives of the unwrapped fields use local centered stencils:
// global (spectral) differentiation of solver output is polluted by phase
// raggedness and interference ripple in the far density tails, while stencil
// errors stay confined there and are removed by the evaluation mask. Time
// derivatives are read from state-function phase products, which makes the
// 2 pi branch constants of the slices drop out exactly.

struct ScalarDerived {
  std::array<ArrayXr, 3> rho_ds;  // rho d_a S
  std::array<ArrayXr, 3> ds;      // pointwise d_a S
};

ScalarDerived scalar_derived(const HydroState& hs, DerivScheme scheme) {
  const Grid& g = hs.rho.grid;
  ScalarDerived out;
  for (int a = 0; a < 3; ++a) {
    out.rho_ds[a] = ArrayXr::Zero(g.size());
    out.ds[a] = ArrayXr::Zero(g.size());
  }
  for (int a = 0; a < g.ndim; ++a) {
    out.ds[a] = differentiate(hs.s, a, 1, scheme).values;
    out.rho_ds[a] = hs.rho.values * out.ds[a];
  }
  return out;
}

// spin case: gradients of S, theta, phi plus the current combination
struct SpinDerived {
  ArrayXr st, ct, sp, cp;
  std::array<ArrayXr, 3> ds, dth, dph;
  // rho d_a S + (hbar/2) rho cos(th) d_a phi  (= m rho v_a + (e/c) rho A_a)
  std::array<ArrayXr, 3> current;
};

SpinDerived spin_derived(const SpinHydroState& shs, double hbar,
                         DerivScheme scheme) {
  const Grid& g = shs.rho.grid;
  SpinDerived out;
  out.st = shs.theta.values.sin();
  out.ct = shs.theta.values.cos();
  out.sp = shs.phi_angle.values.sin();
  out.cp = shs.phi_angle.values.cos();
  for (int a = 0; a < 3; ++a) {
    out.ds[a] = ArrayXr::Zero(g.size());
    out.dth[a] = ArrayXr::Zero(g.size());
    out.dph[a] = ArrayXr::Zero(g.size());
    out.current[a] = ArrayXr::Zero(g.size());
  }
  for (int a = 0; a < g.ndim; ++a) {
    out.ds[a] = differentiate(shs.s, a, 1, scheme).values;
    out.dth[a] = differentiate(shs.theta, a, 1, scheme).values;
    out.dph[a] = differentiate(shs.phi_angle, a, 1, scheme).values;
    out.current[a] = shs.rho.values *
                     (out.ds[a] + 0.5 * hbar * out.ct * out.dph[a]);
  }
  return out;
}

}  // namespace

ComplexField hydro_to_psi(const HydroState& hs, double hbar) {
  ComplexField psi(hs.rho.grid);
  psi.values = hs.rho.values.max(0.0).sqrt().cast<cplx>() *
               (cplx(0, 1) / hbar * hs.s.values.cast<cplx>()).exp();
  return psi;
}

std::pair<HydroState, UnwrapReport> psi_to_hydro(const ComplexField& psi,
                                                 double hbar,
                                                 const MadelungOptions& opt) {
  const Grid& g = psi.grid;
  HydroState hs{RealField(g, psi.values.abs2()), RealField(g)};
  UnwrapReport rep;
  const double floor_abs = opt.rho_floor_rel * hs.rho.values.maxCoeff();
  ArrayXr raw = raw_phase(psi.values);
  ArrayXr unwrapped;
  BoolArray taint;
  unwrap_staircase(g, raw, hs.rho.values, floor_abs, argmax(hs.rho.values),
                   unwrapped, taint);
  hs.s.values = hbar * unwrapped;
  rep.tainted = RealField(g, taint.cast<double>());
  rep.low_rho_warning = taint.any();
  find_vortices(g, raw, hs.rho.values,
                opt.mask_rel * hs.rho.values.maxCoeff(), rep.vortices);
  rep.vortex_count = static_cast<int>(rep.vortices.size());
  return {std::move(hs), std::move(rep)};
}

std::pair<SpinHydroState, UnwrapReport> takabayasi_split(
    const SpinorField& psi, double hbar, const MadelungOptions& opt) {
  const Grid& g = psi.grid();
  SpinHydroState shs{RealField(g), RealField(g), RealField(g), RealField(g)};
  UnwrapReport rep;
  const ArrayXr r1 = psi.c1.values.abs2();
  const ArrayXr r2 = psi.c2.values.abs2();
  shs.rho.values = r1 + r2;
  const double floor_abs = opt.rho_floor_rel * shs.rho.values.maxCoeff();
  for (int i = 0; i < g.size(); ++i)
    shs.theta.values[i] = 2.0 * std::atan2(std::sqrt(r2[i]), std::sqrt(r1[i]));

  const bool c1_dead = r1.maxCoeff() <= floor_abs;
  const bool c2_dead = r2.maxCoeff() <= floor_abs;
  ArrayXr u1, u2;
  BoolArray taint1, taint2;
  if (!c1_dead)
    unwrap_staircase(g, raw_phase(psi.c1.values), r1, floor_abs, argmax(r1),
                     u1, taint1);
  if (!c2_dead)
    unwrap_staircase(g, raw_phase(psi.c2.values), r2, floor_abs, argmax(r2),
                     u2, taint2);

  if (c2_dead && !c1_dead) {
    // theta ~ 0 branch: psi_1 = sqrt(rho) e^{iS/hbar}, phi fixed to 0
    rep.degenerate = true;
    shs.phi_angle.values.setZero();
    shs.s.values = hbar * u1;
    rep.tainted = RealField(g, taint1.cast<double>());
    rep.low_rho_warning = taint1.any();
  } else if (c1_dead && !c2_dead) {
    // theta ~ pi branch: psi_2 = i sqrt(rho) e^{iS/hbar}
    rep.degenerate = true;
    shs.phi_angle.values.setZero();
    shs.s.values = hbar * (u2 - 0.5 * kPi);
    rep.tainted = RealField(g, taint2.cast<double>());
    rep.low_rho_warning = taint2.any();
  } else if (c1_dead && c2_dead) {
    throw DomainError("takabayasi_split: state is identically zero");
  } else {
    shs.s.values = 0.5 * hbar * (u1 + u2 - 0.5 * kPi);
    shs.phi_angle.values = u1 - u2 + 0.5 * kPi;
    rep.tainted = RealField(g, (taint1 || taint2).cast<double>());
    rep.low_rho_warning = taint1.any() || taint2.any();
  }
  std::vector<VortexCell> v1, v2;
  const double support_level = opt.mask_rel * shs.rho.values.maxCoeff();
  if (!c1_dead)
    find_vortices(g, raw_phase(psi.c1.values), r1, support_level, v1);
  if (!c2_dead)
    find_vortices(g, raw_phase(psi.c2.values), r2, support_level, v2);
  rep.vortices = std::move(v1);
  rep.vortices.insert(rep.vortices.end(), v2.begin(), v2.end());
  rep.vortex_count = static_cast<int>(rep.vortices.size());
  return {std::move(shs), std::move(rep)};
}

SpinorField takabayasi_join(const SpinHydroState& shs, double hbar) {
  const Grid& g = shs.rho.grid;
  SpinorField psi(g);
  const ArrayXr amp = shs.rho.values.max(0.0).sqrt();
  const ArrayXc common =
      amp.cast<cplx>() *
      (cplx(0, 1) / hbar * shs.s.values.cast<cplx>()).exp();
  const ArrayXr half_th = 0.5 * shs.theta.values;
  const ArrayXc phase_half =
      (cplx(0, 0.5) * shs.phi_angle.values.cast<cplx>()).exp();
  psi.c1.values = common * half_th.cos().cast<cplx>() * phase_half;
  psi.c2.values = cplx(0, 1) * common * half_th.sin().cast<cplx>() /
                  phase_half;
  return psi;
}

SpinVectorField spin_vector(const SpinHydroState& shs, double hbar) {
  const Grid& g = shs.rho.grid;
  SpinVectorField out{{RealField(g), RealField(g), RealField(g)}};
  const ArrayXr st = shs.theta.values.sin(), ct = shs.theta.values.cos();
  out.s[0].values = 0.5 * hbar * st * shs.phi_angle.values.sin();
  out.s[1].values = 0.5 * hbar * st * shs.phi_angle.values.cos();
  out.s[2].values = 0.5 * hbar * ct;
  return out;
}

InternalPotentials internal_potentials(const SpinHydroState& shs,
                                       const PhysicalConstants& consts,
                                       DerivScheme scheme) {
  const Grid& g = shs.rho.grid;
  InternalPotentials out{{RealField(g), RealField(g), RealField(g)},
                         RealField(g),
                         false,
                         RealField(g)};
  SpinDerived der = spin_derived(shs, consts.hbar, scheme);
  const double pref = -consts.hbar * consts.c / (2.0 * consts.e);
  for (int a = 0; a < g.ndim; ++a)
    out.a_s[a].values = pref * der.ct * der.dph[a];
  out.degenerate_mask.values =
      (shs.theta.values.sin().abs() < 1e-8).cast<double>();
  out.degenerate = out.degenerate_mask.values.sum() > 0.0;
  return out;
}

InternalPotentials internal_potentials(const SpinHydroState& prev,
                                       const SpinHydroState& cur,
                                       const SpinHydroState& next, double dt,
                                       const PhysicalConstants& consts,
                                       DerivScheme scheme) {
  InternalPotentials out = internal_potentials(cur, consts, scheme);
  // phase rates from spinor products (branch constants drop out)
  SpinorField p = takabayasi_join(prev, consts.hbar);
  SpinorField n = takabayasi_join(next, consts.hbar);
  ArrayXr a1 = phase_rate(p.c1.values, n.c1.values, 1.0, dt);
  ArrayXr a2 = phase_rate(p.c2.values, n.c2.values, 1.0, dt);
  ArrayXr dphi_dt = a1 - a2;
  out.phi_s.values =
      consts.hbar / (2.0 * consts.e) * cur.theta.values.cos() * dphi_dt;
  return out;
}

QuantumTerms quantum_terms(const SpinHydroState& shs, double mass, double hbar,
                           DerivScheme scheme, const MadelungOptions& opt) {
  const Grid& g = shs.rho.grid;
  QuantumTerms out{RealField(g), RealField(g), RealField(g), RealField(g),
                   RealField(g), 1.0};
  const ArrayXr& rho = shs.rho.values;
  const double floor_abs = opt.rho_floor_rel * rho.maxCoeff();
  const ArrayXr rho_floored = rho.max(floor_abs);

  SpinDerived der = spin_derived(shs, hbar, scheme);
  ArrayXr grad_th_sq = ArrayXr::Zero(g.size());
  ArrayXr grad_ph_sq = ArrayXr::Zero(g.size());
  for (int a = 0; a < g.ndim; ++a) {
    grad_th_sq += der.dth[a].square();
    grad_ph_sq += der.dph[a].square();
  }

  LogRhoDerivs ld = log_rho_derivs(shs.rho, floor_abs, scheme);

  // L0 = (hbar^2/2m)[lap(sqrt rho)/sqrt rho
  //                  - sin^2/4 (grad phi)^2 - (grad th)^2/4]
  // with the density part assembled from log-density stencils
  {
    ArrayXr qp = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a)
      qp += 0.5 * (ld.d2_pure[a] + 0.5 * ld.d1[a].square());
    out.l0.values =
        (hbar * hbar / (2.0 * mass)) *
        (qp - 0.25 * der.st.square() * grad_ph_sq - 0.25 * grad_th_sq);
  }

  // (1/rho) div(rho W) = dlog(rho) . W + div W, uniformly accurate on mask
  auto weighted_div = [&](const std::array<ArrayXr, 3>& w) {
    ArrayXr acc = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a) {
      RealField wa(g, w[a]);
      acc += ld.d1[a] * w[a] + differentiate(wa, a, 1, scheme).values;
    }
    return acc;
  };

  const ArrayXr s2t = 2.0 * der.st * der.ct;  // sin(2 theta)
  std::array<ArrayXr, 3> w1, w2, w3;
  for (int a = 0; a < g.ndim; ++a) {
    w1[a] = 0.5 * s2t * der.sp * der.dph[a] - der.cp * der.dth[a];
    w2[a] = 0.5 * s2t * der.cp * der.dph[a] + der.sp * der.dth[a];
    w3[a] = der.st.square() * der.dph[a];
  }
  const double pref = hbar / (2.0 * mass);
  out.g1.values = pref * weighted_div(w1);
  out.g2.values = pref * weighted_div(w2);
  out.g3.values = -pref * weighted_div(w3);

  out.mask.values = rho_mask(rho, opt.mask_rel);
  out.coverage = out.mask.values.sum() / static_cast<double>(g.size());
  return out;
}

void align_slices(const HydroState& ref, HydroState& other, double hbar) {
  const int root = argmax(ref.rho.values);
  const double step = 2.0 * kPi * hbar;
  const double k =
      std::round((other.s.values[root] - ref.s.values[root]) / step);
  if (k != 0.0) other.s.values -= k * step;
}

void align_slices_spin(const SpinHydroState& ref, SpinHydroState& other,
                       double hbar) {
  const int root = argmax(ref.rho.values);
  const double k = std::round(
      (other.phi_angle.values[root] - ref.phi_angle.values[root]) /
      (2.0 * kPi));
  if (k != 0.0) {
    // joint shift (phi - 2 pi k, S - pi hbar k) leaves the spinor unchanged
    other.phi_angle.values -= 2.0 * kPi * k;
    other.s.values -= kPi * hbar * k;
  }
  const double step = 2.0 * kPi * hbar;
  const double j =
      std::round((other.s.values[root] - ref.s.values[root]) / step);
  if (j != 0.0) other.s.values -= j * step;
}

ResidualReport continuity_residual(const HydroState& prev,
                                   const HydroState& cur,
                                   const HydroState& next, double dt,
                                   const HamiltonianSpec& spec, double t,
                                   const MadelungOptions& opt) {
  const Grid& g = spec.grid;
  const DerivScheme scheme = DerivScheme::central4;
  const double c_light = spec.consts.c;
  ScalarDerived der = scalar_derived(cur, scheme);
  const double floor_abs = opt.rho_floor_rel * cur.rho.values.maxCoeff();
  LogRhoDerivs ld = log_rho_derivs(cur.rho, floor_abs, scheme);
  ArrayXr t_time = (next.rho.values - prev.rho.values) / (2.0 * dt);
  // div(rho Q) = rho (dlog rho . Q + div Q) keeps the stencil error uniform
  ArrayXr t_flux = ArrayXr::Zero(g.size());
  for (int a = 0; a < g.ndim; ++a) {
    ArrayXr aa = axis_potential(spec, a, t);
    ArrayXr q = (der.ds[a] - (spec.axis_charge(a) / c_light) * aa) /
                spec.axis_mass(a);
    RealField qf(g, q);
    t_flux += cur.rho.values *
              (ld.d1[a] * q + differentiate(qf, a, 1, scheme).values);
  }
  ArrayXr mask = rho_mask(cur.rho.values, opt.mask_rel);
  ArrayXr residual = t_time + t_flux;
  return finalize_report(g, residual, mask, {&t_time, &t_flux});
}

ResidualReport hj_residual(const HydroState& prev, const HydroState& cur,
                           const HydroState& next, double dt,
                           const HamiltonianSpec& spec, double t,
                           const MadelungOptions& opt) {
  const Grid& g = spec.grid;
  const DerivScheme scheme = DerivScheme::central4;
  const double hbar = spec.consts.hbar;
  ScalarDerived der = scalar_derived(cur, scheme);

  // dS/dt from the phase of psi_next psi_prev^*: branch constants drop out
  ArrayXr t_time;
  {
    ComplexField pp = hydro_to_psi(prev, hbar);
    ComplexField pn = hydro_to_psi(next, hbar);
    t_time = phase_rate(pp.values, pn.values, hbar, dt);
  }

  ArrayXr t_phi = electrostatic_energy(spec, t);
  ArrayXr t_kin = ArrayXr::Zero(g.size());
  const double c_light = spec.consts.c;
  for (int a = 0; a < g.ndim; ++a) {
    ArrayXr aa = axis_potential(spec, a, t);
    t_kin += (der.ds[a] - (spec.axis_charge(a) / c_light) * aa).square() /
             (2.0 * spec.axis_mass(a));
  }
  ArrayXr t_v = spec.v.is_zero() ? ArrayXr::Zero(g.size())
                                 : sample(spec.v, g, t).values;
  const double floor_abs = opt.rho_floor_rel * cur.rho.values.maxCoeff();
  ArrayXr t_l0 = quantum_potential(spec, cur.rho, floor_abs, scheme);

  ArrayXr mask = rho_mask(cur.rho.values, opt.mask_rel);
  ArrayXr residual = t_time + t_phi + t_kin + t_v - t_l0;
  return finalize_report(g, residual, mask,
                         {&t_time, &t_phi, &t_kin, &t_v, &t_l0});
}

namespace {

// shared sampled quantities of the spin residual equations
struct SpinEqContext {
  ArrayXr dth_dt, dph_dt, ds_dt;
  std::array<ArrayXr, 3> v;        // velocity field on grid axes
  std::array<ArrayXr, 3> rho_v;    // rho * v, division-free
  std::array<ArrayXr, 3> a_hat;    // external + internal vector potential
  std::array<ArrayXr, 3> b;        // magnetic field components (3)
  ArrayXr phi_hat_e;               // e * (Phi + phi_s)
  SpinDerived der;
  QuantumTerms qt;
  ArrayXr mask_rho;
  double m = 1.0, e = 1.0, hbar = 1.0, c = 1.0;
};

SpinEqContext build_spin_context(const SpinHydroState& prev,
                                 const SpinHydroState& cur,
                                 const SpinHydroState& next, double dt,
                                 const HamiltonianSpec& spec, double t,
                                 const MadelungOptions& opt) {
  if (spec.nparticles() != 1)
    throw ConfigError("spin residuals support a single particle");
  const Grid& g = spec.grid;
  SpinEqContext ctx;
  ctx.m = spec.particles[0].m;
  ctx.e = spec.particles[0].e;
  ctx.hbar = spec.consts.hbar;
  ctx.c = spec.consts.c;
  const DerivScheme scheme = DerivScheme::central4;

  ctx.der = spin_derived(cur, ctx.hbar, scheme);

  // time derivatives from spinor-component phase products
  {
    SpinorField sp_prev = takabayasi_join(prev, ctx.hbar);
    SpinorField sp_next = takabayasi_join(next, ctx.hbar);
    ArrayXr a1 = phase_rate(sp_prev.c1.values, sp_next.c1.values, 1.0, dt);
    ArrayXr a2 = phase_rate(sp_prev.c2.values, sp_next.c2.values, 1.0, dt);
    ctx.ds_dt = 0.5 * ctx.hbar * (a1 + a2);
    ctx.dph_dt = a1 - a2;
    ctx.dth_dt = (next.theta.values - prev.theta.values) / (2.0 * dt);
  }

  const double floor_abs = opt.rho_floor_rel * cur.rho.values.maxCoeff();
  const ArrayXr rho_f = cur.rho.values.max(floor_abs);
  const double aspref = -ctx.hbar * ctx.c / (2.0 * ctx.e);
  for (int a = 0; a < 3; ++a) {
    ArrayXr a_ext = a < g.ndim ? axis_potential(spec, a, t)
                               : (spec.gauge.a[a].is_zero()
                                      ? ArrayXr::Zero(g.size())
                                      : sample(spec.gauge.a[a], g, t).values);
    ctx.a_hat[a] = a_ext + aspref * ctx.der.ct * ctx.der.dph[a];
    // rho v = rho (dS + (hbar/2) cos th dphi - (e/c) A_ext) / m
    ctx.rho_v[a] =
        (ctx.der.current[a] - (ctx.e / ctx.c) * cur.rho.values * a_ext) /
        ctx.m;
    ctx.v[a] = ctx.rho_v[a] / rho_f;
  }

  ArrayXr phi_ext = spec.gauge.phi.is_zero()
                        ? ArrayXr::Zero(g.size())
                        : sample(spec.gauge.phi, g, t).values;
  ArrayXr phi_s = ctx.hbar / (2.0 * ctx.e) * ctx.der.ct * ctx.dph_dt;
  ctx.phi_hat_e = ctx.e * (phi_ext + phi_s);

  auto b_expr = magnetic_field_expressions(spec);
  for (int k = 0; k < 3; ++k)
    ctx.b[k] = b_expr[k].is_zero() ? ArrayXr::Zero(g.size())
                                   : sample(b_expr[k], g, t).values;

  ctx.qt = quantum_terms(cur, ctx.m, ctx.hbar, scheme, opt);
  ctx.mask_rho = rho_mask(cur.rho.values, opt.mask_rel);
  return ctx;
}

}  // namespace

ResidualReport continuity_residual_spin(const SpinHydroState& prev,
                                        const SpinHydroState& cur,
                                        const SpinHydroState& next, double dt,
                                        const HamiltonianSpec& spec, double t,
                                        const MadelungOptions& opt) {
  const Grid& g = spec.grid;
  const DerivScheme scheme = DerivScheme::central4;
  SpinEqContext ctx = build_spin_context(prev, cur, next, dt, spec, t, opt);
  const double floor_abs = opt.rho_floor_rel * cur.rho.values.maxCoeff();
  LogRhoDerivs ld = log_rho_derivs(cur.rho, floor_abs, scheme);
  ArrayXr t_time = (next.rho.values - prev.rho.values) / (2.0 * dt);
  ArrayXr t_flux = ArrayXr::Zero(g.size());
  for (int a = 0; a < g.ndim; ++a) {
    RealField vf(g, ctx.v[a]);
    t_flux += cur.rho.values *
              (ld.d1[a] * ctx.v[a] + differentiate(vf, a, 1, scheme).values);
  }
  ArrayXr residual = t_time + t_flux;
  return finalize_report(g, residual, ctx.mask_rho, {&t_time, &t_flux});
}

ResidualReport hj_residual_spin(const SpinHydroState& prev,
                                const SpinHydroState& cur,
                                const SpinHydroState& next, double dt,
                                const HamiltonianSpec& spec, double t,
                                const MadelungOptions& opt) {
  const Grid& g = spec.grid;
  SpinEqContext ctx = build_spin_context(prev, cur, next, dt, spec, t, opt);

  ArrayXr t_time = ctx.ds_dt;
  ArrayXr t_kin = ArrayXr::Zero(g.size());
  for (int a = 0; a < 3; ++a)
    t_kin += (ctx.der.ds[a] - (ctx.e / ctx.c) * ctx.a_hat[a]).square() /
             (2.0 * ctx.m);
  ArrayXr t_v = spec.v.is_zero() ? ArrayXr::Zero(g.size())
                                 : sample(spec.v, g, t).values;
  // mu . B with mu = -(e/mc) s
  ArrayXr t_zeeman =
      -(ctx.e / (ctx.m * ctx.c)) * (0.5 * ctx.hbar) *
      (ctx.der.st * ctx.der.sp * ctx.b[0] +
       ctx.der.st * ctx.der.cp * ctx.b[1] + ctx.der.ct * ctx.b[2]);
  ArrayXr t_l0 = ctx.qt.l0.values;
  ArrayXr residual = t_time + ctx.phi_hat_e + t_kin + t_v + t_zeeman - t_l0;
  return finalize_report(
      g, residual, ctx.mask_rho,
      {&t_time, &ctx.phi_hat_e, &t_kin, &t_v, &t_zeeman, &t_l0});
}

SpinEvolutionReport spin_evolution_residual(const SpinHydroState& prev,
                                            const SpinHydroState& cur,
                                            const SpinHydroState& next,
                                            double dt,
                                            const HamiltonianSpec& spec,
                                            double t,
                                            const MadelungOptions& opt) {
  const Grid& g = spec.grid;
  SpinEqContext ctx = build_spin_context(prev, cur, next, dt, spec, t, opt);
  const double omega = ctx.e / (ctx.m * ctx.c);
  ArrayXr mask =
      ctx.mask_rho * (ctx.der.st.abs() > opt.sin_theta_floor).cast<double>();
  ArrayXr st_floored = ctx.der.st.max(opt.sin_theta_floor);

  SpinEvolutionReport out;
  {
    ArrayXr t_adv = ctx.dth_dt;
    for (int a = 0; a < g.ndim; ++a) t_adv += ctx.v[a] * ctx.der.dth[a];
    ArrayXr t_torque = omega * (ctx.b[0] * ctx.der.cp - ctx.b[1] * ctx.der.sp);
    ArrayXr t_g = ctx.qt.g3.values / st_floored;
    ArrayXr residual = t_adv - t_torque + t_g;
    out.theta = finalize_report(g, residual, mask, {&t_adv, &t_torque, &t_g});
  }
  {
    ArrayXr t_adv = ctx.dph_dt;
    for (int a = 0; a < g.ndim; ++a) t_adv += ctx.v[a] * ctx.der.dph[a];
    // torque component; the mixed term uses B_x sin(phi) as required by the
    // dipole law d s/dt = -(e/mc) B x s
    ArrayXr t_torque = omega / st_floored *
                       (ctx.b[2] * ctx.der.st -
                        ctx.b[1] * ctx.der.ct * ctx.der.cp -
                        ctx.b[0] * ctx.der.ct * ctx.der.sp);
    ArrayXr t_g = (ctx.der.cp * ctx.qt.g1.values -
                   ctx.der.sp * ctx.qt.g2.values) /
                  st_floored;
    ArrayXr residual = t_adv - t_torque - t_g;
    out.phi = finalize_report(g, residual, mask, {&t_adv, &t_torque, &t_g});
  }
  return out;
}

}  // namespace fisherq
