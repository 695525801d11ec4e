#include "fisherq/observables.hpp"

namespace fisherq {

namespace {

// gauge-invariant current density j_a = [hbar sum_s Im(psi_s* d_a psi_s)
//                                        - (e_a/c) rho A_a] / m_a   (times m_a
// gives the kinetic momentum density used in the reports)
std::array<ArrayXr, 3> momentum_density(const StateFunction& psi,
                                        const HamiltonianSpec& spec,
                                        double t) {
  const Grid& g = psi.grid;
  const DerivScheme scheme = default_scheme(g);
  const double hbar = spec.consts.hbar, c_light = spec.consts.c;
  const int d = spec.particle_dims();
  ArrayXr rho = ArrayXr::Zero(g.size());
  for (int s = 0; s < psi.nspin(); ++s) rho += psi.comps.col(s).array().abs2();

  std::array<ArrayXr, 3> p_dens;
  for (int a = 0; a < 3; ++a) p_dens[a] = ArrayXr::Zero(g.size());
  for (int a = 0; a < g.ndim; ++a) {
    for (int s = 0; s < psi.nspin(); ++s) {
      ComplexField comp(g, psi.comps.col(s).array());
      ArrayXc dpsi = differentiate(comp, a, 1, scheme).values;
      p_dens[a] += hbar * (comp.values.conjugate() * dpsi).imag();
    }
    if (!spec.gauge.a[a % d].is_zero()) {
      const int particle = a / d;
      ArrayXr aa =
          sample_mapped(spec.gauge.a[a % d], g, t, particle * d, d).values;
      p_dens[a] -= (spec.axis_charge(a) / c_light) * rho * aa;
    }
  }
  return p_dens;
}

// pointwise spin density s_k(x) = (hbar/2) psi^dag sigma_k psi (N=1 spinors)
std::array<ArrayXr, 3> spin_density(const StateFunction& psi, double hbar) {
  const Grid& g = psi.grid;
  std::array<ArrayXr, 3> s;
  const ArrayXc c1 = psi.comps.col(0).array();
  const ArrayXc c2 = psi.comps.col(1).array();
  const ArrayXc cross = c1.conjugate() * c2;
  s[0] = hbar * cross.real();
  s[1] = hbar * cross.imag();
  s[2] = 0.5 * hbar * (c1.abs2() - c2.abs2());
  (void)g;
  return s;
}

}  // namespace

EnsembleReport ensemble_report(const StateFunction& psi,
                               const HamiltonianSpec& spec, double t) {
  const Grid& g = psi.grid;
  const double dv = g.cell_volume();
  const PhysicalConstants& pc = spec.consts;
  EnsembleReport rep;
  rep.t = t;
  rep.norm = std::sqrt(squared_norm(psi));

  ArrayXr rho = ArrayXr::Zero(g.size());
  for (int s = 0; s < psi.nspin(); ++s) rho += psi.comps.col(s).array().abs2();

  for (int a = 0; a < g.ndim; ++a) {
    ArrayXr xa(g.size());
    for (int i = 0; i < g.size(); ++i)
      xa[i] = g.coord(a, g.unflatten(i)[a]);
    rep.mean_x[a] = (rho * xa).sum() * dv;
  }

  auto p_dens = momentum_density(psi, spec, t);
  for (int a = 0; a < g.ndim; ++a) rep.mean_p[a] = p_dens[a].sum() * dv;

  rep.energy = energy_expectation(psi, spec, t);

  const bool single = spec.nparticles() == 1;
  const bool spinor = psi.nspin() == 2 && single;

  std::array<ArrayXr, 3> s_dens;
  if (spinor) {
    s_dens = spin_density(psi, pc.hbar);
    for (int k = 0; k < 3; ++k) rep.mean_s[k] = s_dens[k].sum() * dv;
  }

  // mechanical force -<grad V> per grid axis
  if (!spec.v.is_zero()) {
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < g.ndim; ++a) {
      Expr dv_dx = spec.v.derivative(names[a]);
      if (dv_dx.is_zero()) continue;
      rep.force_mechanical[a] = -(rho * sample(dv_dx, g, t).values).sum() * dv;
    }
  }

  if (single && !spec.gauge.is_zero()) {
    const double e = spec.particles[0].e, m = spec.particles[0].m;
    EMField em = field_strengths(spec.gauge, g, t, pc);
    // full 3-velocity: grid components from the current, transverse
    // components from -(e/mc) rho A
    std::array<ArrayXr, 3> j = p_dens;
    for (int k = g.ndim; k < 3; ++k) {
      if (!spec.gauge.a[k].is_zero())
        j[k] = -(e / pc.c) * rho * sample(spec.gauge.a[k], g, t).values;
    }
    for (int l = 0; l < 3; ++l) {
      const int i = (l + 1) % 3, k = (l + 2) % 3;
      ArrayXr cross = (j[i] * em.b_field[k].values -
                       j[k] * em.b_field[i].values) /
                      m;
      rep.force_lorentz[l] =
          (e * em.e_field[l].values * rho + (e / pc.c) * cross).sum() * dv;
    }
  }

  if (spinor && spec.zeeman) {
    const double e = spec.particles[0].e, m = spec.particles[0].m;
    auto b_expr = magnetic_field_expressions(spec);
    std::array<ArrayXr, 3> b;
    for (int k = 0; k < 3; ++k)
      b[k] = b_expr[k].is_zero() ? ArrayXr::Zero(g.size())
                                 : sample(b_expr[k], g, t).values;
    // dipole force: -<mu_j d_l B_j> with mu = -(e/mc) s
    const char* names[3] = {"x", "y", "z"};
    for (int l = 0; l < g.ndim; ++l) {
      ArrayXr acc = ArrayXr::Zero(g.size());
      for (int j2 = 0; j2 < 3; ++j2) {
        Expr db = b_expr[j2].derivative(names[l]);
        if (db.is_zero()) continue;
        acc += s_dens[j2] * sample(db, g, t).values;
      }
      rep.force_dipole[l] = (e / (m * pc.c)) * acc.sum() * dv;
    }
    // torque -(e/mc) <B x s>
    for (int k = 0; k < 3; ++k) {
      const int i = (k + 1) % 3, j2 = (k + 2) % 3;
      rep.torque[k] = -(e / (m * pc.c)) *
                      (b[i] * s_dens[j2] - b[j2] * s_dens[i]).sum() * dv;
    }
  }
  return rep;
}

EnsembleReport ensemble_report(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t) {
  return ensemble_report(to_state(psi), spec, t);
}
EnsembleReport ensemble_report(const SpinorField& psi,
                               const HamiltonianSpec& spec, double t) {
  return ensemble_report(to_state(psi), spec, t);
}

EhrenfestSeries ehrenfest_check(const std::vector<EnsembleReport>& series,
                                const HamiltonianSpec& spec,
                                double torque_scale) {
  if (series.size() < 3)
    throw ConfigError("ehrenfest_check: need at least 3 reports");
  const double dt = series[1].t - series[0].t;
  for (size_t i = 1; i < series.size(); ++i) {
    if (std::abs(series[i].t - series[i - 1].t - dt) > 1e-9 * std::max(1.0, dt))
      throw ConfigError("ehrenfest_check: non-uniform report spacing");
  }
  EhrenfestSeries out;
  for (size_t i = 1; i + 1 < series.size(); ++i) {
    const auto& lo = series[i - 1];
    const auto& mid = series[i];
    const auto& hi = series[i + 1];
    Vec3 rx = Vec3::Zero(), rp = Vec3::Zero(), rs = Vec3::Zero();
    for (int a = 0; a < spec.grid.ndim; ++a) {
      rx[a] = (hi.mean_x[a] - lo.mean_x[a]) / (2.0 * dt) -
              mid.mean_p[a] / spec.axis_mass(a);
      rp[a] = (hi.mean_p[a] - lo.mean_p[a]) / (2.0 * dt) -
              (mid.force_lorentz[a] + mid.force_dipole[a] +
               mid.force_mechanical[a]);
    }
    for (int k = 0; k < 3; ++k)
      rs[k] = (hi.mean_s[k] - lo.mean_s[k]) / (2.0 * dt) -
              torque_scale * mid.torque[k];
    out.t.push_back(mid.t);
    out.residual_x.push_back(rx);
    out.residual_p.push_back(rp);
    out.residual_s.push_back(rs);
    out.max_x = std::max(out.max_x, rx.cwiseAbs().maxCoeff());
    out.max_p = std::max(out.max_p, rp.cwiseAbs().maxCoeff());
    out.max_s = std::max(out.max_s, rs.cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace fisherq
