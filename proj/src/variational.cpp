#include "fisherq/variational.hpp"

namespace fisherq {

namespace {

ArrayXr mask_of(const ArrayXr& rho, double rel) {
  return (rho > rel * rho.maxCoeff()).cast<double>();
}

ELEquationResidual make_equation(const std::string& name, const Grid& g,
                                 const ArrayXr& residual, const ArrayXr& mask,
                                 const std::vector<const ArrayXr*>& terms) {
  ELEquationResidual eq;
  eq.name = name;
  const double dv = g.cell_volume();
  ArrayXr masked = residual * mask;
  eq.residual = RealField(g, masked);
  eq.l2 = std::sqrt((masked.square()).sum() * dv);
  eq.linf = masked.abs().maxCoeff();
  double scale = 0.0;
  for (const ArrayXr* term : terms)
    scale =
        std::max(scale, std::sqrt(((*term) * mask).square().sum() * dv));
  eq.scale = scale;
  eq.relative = scale > 0.0 ? eq.l2 / scale : (eq.l2 > 0.0 ? INFINITY : 0.0);
  return eq;
}

}  // namespace

std::array<RealField, 3> rho_j_decomposition(const SpinHydroState& shs) {
  const Grid& g = shs.rho.grid;
  const ArrayXr sh = (0.5 * shs.theta.values).sin().square();
  const ArrayXr ch = (0.5 * shs.theta.values).cos().square();
  const ArrayXr sp = (0.5 * shs.phi_angle.values).sin().square();
  const ArrayXr cp = (0.5 * shs.phi_angle.values).cos().square();
  std::array<RealField, 3> out{RealField(g), RealField(g), RealField(g)};
  out[0].values = shs.rho.values * sh * cp;
  out[1].values = shs.rho.values * sh * sp;
  out[2].values = shs.rho.values * ch;
  return out;
}

FisherReport fisher_identity_check(const SpinHydroState& shs, double mass,
                                   double hbar, DerivScheme scheme,
                                   const MadelungOptions& opt) {
  const Grid& g = shs.rho.grid;
  const double dv = g.cell_volume();
  FisherReport rep;

  QuantumTerms qt = quantum_terms(shs, mass, hbar, scheme, opt);
  rep.lhs = -(shs.rho.values * qt.l0.values).sum() * dv;

  auto rho_j = rho_j_decomposition(shs);
  double coverage = 1.0;
  for (int j = 0; j < 3; ++j) {
    const ArrayXr& rj = rho_j[j].values;
    const double floor_abs =
        std::max(opt.rho_floor_rel * rj.maxCoeff(), 1e-300);
    ArrayXr mask = (rj > floor_abs).cast<double>();
    coverage = std::min(coverage, mask.sum() / static_cast<double>(g.size()));
    ArrayXr grad_sq = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a)
      grad_sq += differentiate(rho_j[j], a, 1, scheme).values.square();
    rep.rhs_per_j[j] = hbar * hbar / (8.0 * mass) *
                       (mask * grad_sq / rj.max(floor_abs)).sum() * dv;
    rep.rhs += rep.rhs_per_j[j];
  }
  rep.coverage = coverage;
  rep.degraded = coverage < 0.99;
  const double denom = std::max(std::abs(rep.lhs), std::abs(rep.rhs));
  rep.relative_gap =
      denom > 0.0 ? std::abs(rep.lhs - rep.rhs) / denom : 0.0;
  return rep;
}

ELResidualReport el_residual_scalar(const RealField& rho, double mass,
                                    double hbar, const ELOptions& opt) {
  const Grid& g = rho.grid;
  if (g.boundary != Boundary::periodic)
    throw ConfigError("el_residual_scalar requires a periodic grid");
  const DerivScheme sp = DerivScheme::spectral;
  const double b0 = hbar * hbar / (4.0 * mass);
  const double eps = opt.l0_perturbation;
  const double floor_abs =
      opt.madelung.rho_floor_rel * rho.values.maxCoeff();

  // density ratios via log-density stencils: uniform accuracy on the mask
  LogRhoDerivs ld = log_rho_derivs(rho, floor_abs, DerivScheme::central4);
  ArrayXr dlog_sq = ArrayXr::Zero(g.size());   // (grad rho / rho)^2
  ArrayXr lap_over_rho = ArrayXr::Zero(g.size());  // lap rho / rho
  for (int a = 0; a < g.ndim; ++a) {
    dlog_sq += ld.d1[a].square();
    lap_over_rho += ld.d2_pure[a] + ld.d1[a].square();
  }

  ELResidualReport rep;
  ArrayXr mask = mask_of(rho.values, opt.madelung.mask_rel);
  rep.mask_coverage = mask.sum() / static_cast<double>(g.size());

  {
    // d_k d_i [ d beta / d(rho_{,ki}) ]; the coefficient field is the
    // constant B0 delta_ki, so the equation is the flatness of that field
    RealField coeff(g, ArrayXr::Constant(g.size(), b0));
    ArrayXr eq = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a)
      eq += differentiate(coeff, a, 2, sp).values;
    ArrayXr ref = ArrayXr::Constant(g.size(), b0);
    rep.equations.push_back(
        make_equation("scalar_second_derivative", g, eq, mask, {&ref}));
  }
  {
    // d_k [d beta/d rho_k] - d beta/d rho + beta/rho with the optional
    // wrong-coefficient perturbation beta_p = eps (grad rho)^2 / rho;
    // d beta/d rho_k = (-B0 + 2 eps) d_k log rho
    ArrayXr t_div = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a) {
      if (opt.independent_routes) {
        RealField w(g, ld.d1[a]);
        t_div += (-b0 + 2.0 * eps) *
                 differentiate(w, a, 1, DerivScheme::central4).values;
      } else {
        t_div += (-b0 + 2.0 * eps) * ld.d2_pure[a];
      }
    }
    ArrayXr t_drho = -(0.5 * b0 - eps) * dlog_sq;
    ArrayXr t_l0 = b0 * (lap_over_rho - 0.5 * dlog_sq) + eps * dlog_sq;
    ArrayXr eq = t_div + t_drho + t_l0;
    rep.equations.push_back(make_equation("scalar_first_order", g, eq, mask,
                                          {&t_div, &t_drho, &t_l0}));
  }
  return rep;
}

ELResidualReport el_residual_spin(const SpinHydroState& shs, double mass,
                                  double hbar, const ELOptions& opt) {
  const Grid& g = shs.rho.grid;
  if (g.boundary != Boundary::periodic)
    throw ConfigError("el_residual_spin requires a periodic grid");
  const DerivScheme sp = DerivScheme::spectral;
  const double pref = hbar * hbar / (4.0 * mass);
  const double floor_abs =
      opt.madelung.rho_floor_rel * shs.rho.values.maxCoeff();
  const ArrayXr st = shs.theta.values.sin(), ct = shs.theta.values.cos();
  const ArrayXr sp_ang = shs.phi_angle.values.sin(),
                cp_ang = shs.phi_angle.values.cos();

  QuantumTerms qt = quantum_terms(shs, mass, hbar, sp, opt.madelung);
  LogRhoDerivs ld = log_rho_derivs(shs.rho, floor_abs, DerivScheme::central4);

  std::array<ArrayXr, 3> dth, dph;
  ArrayXr grad_ph_sq = ArrayXr::Zero(g.size());
  for (int a = 0; a < g.ndim; ++a) {
    dth[a] = differentiate(shs.theta, a, 1, sp).values;
    dph[a] = differentiate(shs.phi_angle, a, 1, sp).values;
    grad_ph_sq += dph[a].square();
  }

  ELResidualReport rep;
  ArrayXr mask = mask_of(shs.rho.values, opt.madelung.mask_rel);
  rep.mask_coverage = mask.sum() / static_cast<double>(g.size());

  {
    // rho variation: d_k[-(hbar^2/4m) rho_k / rho] - rho dL0/drho,
    // both written in log-density derivatives
    ArrayXr t_div = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a) {
      if (opt.independent_routes) {
        RealField w(g, ld.d1[a]);
        t_div +=
            -pref * differentiate(w, a, 1, DerivScheme::central4).values;
      } else {
        t_div += -pref * ld.d2_pure[a];
      }
    }
    // lap rho/rho - (grad rho/rho)^2 = sum_a d_a^2 log rho
    ArrayXr t_rho = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a)
      t_rho += pref * ld.d2_pure[a];
    ArrayXr eq = t_div + t_rho;
    rep.equations.push_back(
        make_equation("spin_rho_variation", g, eq, mask, {&t_div, &t_rho}));
  }
  {
    // theta variation vs the G1 cos(phi) - G2 sin(phi) source
    ArrayXr t_div = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a) {
      RealField w(g, -pref * shs.rho.values * dth[a]);
      t_div += differentiate(w, a, 1, sp).values;
    }
    ArrayXr t_ang = pref * 0.5 * shs.rho.values * (2.0 * st * ct) *
                    grad_ph_sq;
    ArrayXr t_g = -(0.5 * hbar) * shs.rho.values *
                  (qt.g1.values * cp_ang - qt.g2.values * sp_ang);
    ArrayXr eq = t_div + t_ang + t_g;
    rep.equations.push_back(make_equation("spin_theta_variation", g, eq, mask,
                                          {&t_div, &t_ang, &t_g}));
  }
  {
    // phi variation vs the G3 source
    ArrayXr t_div = ArrayXr::Zero(g.size());
    for (int a = 0; a < g.ndim; ++a) {
      RealField w(g, -pref * shs.rho.values * st.square() * dph[a]);
      t_div += differentiate(w, a, 1, sp).values;
    }
    ArrayXr t_g = opt.zero_g3
                      ? ArrayXr::Zero(g.size())
                      : ArrayXr(-(0.5 * hbar) * shs.rho.values * qt.g3.values);
    ArrayXr eq = t_div + t_g;
    rep.equations.push_back(
        make_equation("spin_phi_variation", g, eq, mask, {&t_div, &t_g}));
  }
  return rep;
}

double zero_mean_constraint_gap(const RealField& rho, double mass,
                                double hbar) {
  const Grid& g = rho.grid;
  if (g.boundary != Boundary::periodic)
    throw ConfigError("zero_mean_constraint_gap requires a periodic grid");
  const DerivScheme sp = DerivScheme::spectral;
  const double dv = g.cell_volume();
  // scalar L0 via the constant-angle reduction of the spin quantum terms
  SpinHydroState shs{rho, RealField(g), RealField(g), RealField(g)};
  QuantumTerms qt = quantum_terms(shs, mass, hbar, sp);
  double worst = 0.0;
  for (int a = 0; a < g.ndim; ++a) {
    ArrayXr drho = differentiate(rho, a, 1, sp).values;
    const double gap = std::abs((drho * qt.l0.values).sum() * dv);
    const double ref = (drho.abs() * qt.l0.values.abs()).sum() * dv;
    worst = std::max(worst, gap / std::max(1.0, ref));
  }
  return worst;
}

}  // namespace fisherq
