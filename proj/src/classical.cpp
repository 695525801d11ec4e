#include "fisherq/classical.hpp"

#include <thread>

#include "fisherq/rng.hpp"

namespace fisherq {

namespace {

// multilinear interpolation of a sampled field at an arbitrary point
double interp(const RealField& f, const Vec3& x) {
  const Grid& g = f.grid;
  std::array<int, 3> i0{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < g.ndim; ++a) {
    const double u = (x[a] - g.origin[a]) / g.spacing(a);
    double fl = std::floor(u);
    i0[a] = static_cast<int>(fl);
    w[a] = u - fl;
    const int n = g.npts[a];
    if (g.boundary == Boundary::periodic) {
      i0[a] = (i0[a] % n + n) % n;
    } else {
      i0[a] = std::clamp(i0[a], 0, n - 2);
    }
  }
  double acc = 0.0;
  const int corners = 1 << g.ndim;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> idx = i0;
    double wc = 1.0;
    for (int a = 0; a < g.ndim; ++a) {
      const int bit = (c >> a) & 1;
      if (bit) {
        idx[a] = (idx[a] + 1) % g.npts[a];
        wc *= w[a];
      } else {
        wc *= 1.0 - w[a];
      }
    }
    acc += wc * f.values[g.flat_index(idx)];
  }
  return acc;
}

struct ForceModel {
  double m = 1.0, e = 1.0, c = 1.0;
  std::array<Expr, 3> e_field;      // symbolic E components
  std::array<Expr, 3> b_field;      // symbolic B components
  std::array<Expr, 3> grad_v;
  std::array<std::array<Expr, 3>, 3> de_dx;  // dE_l/dx_m
  std::array<std::array<Expr, 3>, 3> db_dx;
  std::array<std::array<Expr, 3>, 3> hess_v;

  explicit ForceModel(const HamiltonianSpec& spec) {
    if (spec.nparticles() != 1)
      throw ConfigError("characteristics support a single particle");
    m = spec.particles[0].m;
    e = spec.particles[0].e;
    c = spec.consts.c;
    const char* names[3] = {"x", "y", "z"};
    auto b_expr = curl_expressions(spec.gauge);
    for (int k = 0; k < 3; ++k) {
      e_field[k] =
          Expr::constant(-1.0 / c) * spec.gauge.a[k].derivative("t") -
          spec.gauge.phi.derivative(names[k]);
      b_field[k] = b_expr[k];
      grad_v[k] = spec.v.derivative(names[k]);
      for (int l = 0; l < 3; ++l) {
        de_dx[k][l] = e_field[k].derivative(names[l]);
        db_dx[k][l] = b_field[k].derivative(names[l]);
        hess_v[k][l] = grad_v[k].derivative(names[l]);
      }
    }
  }

  Vec3 force(const Vec3& x, const Vec3& p, double t) const {
    Vec3 ef, bf;
    for (int k = 0; k < 3; ++k) {
      ef[k] = e_field[k].eval(x, t);
      bf[k] = b_field[k].eval(x, t);
    }
    const Vec3 v = p / m;
    return e * ef + (e / c) * v.cross(bf) - Vec3(grad_v[0].eval(x, t),
                                                 grad_v[1].eval(x, t),
                                                 grad_v[2].eval(x, t));
  }

  // dF/dx and dF/dp for the tangent-map integration
  void force_jacobians(const Vec3& x, const Vec3& p, double t,
                       Eigen::Matrix3d& jx, Eigen::Matrix3d& jp) const {
    const Vec3 v = p / m;
    Vec3 bf;
    for (int k = 0; k < 3; ++k) bf[k] = b_field[k].eval(x, t);
    for (int l = 0; l < 3; ++l) {
      for (int mcol = 0; mcol < 3; ++mcol) {
        double acc = e * de_dx[l][mcol].eval(x, t) - hess_v[l][mcol].eval(x, t);
        // (e/c) (v x dB/dx_m)_l
        const int i = (l + 1) % 3, j = (l + 2) % 3;
        acc += (e / c) * (v[i] * db_dx[j][mcol].eval(x, t) -
                          v[j] * db_dx[i][mcol].eval(x, t));
        jx(l, mcol) = acc;
      }
    }
    // dF_l/dp_m = (e/mc) eps_{lmk} B_k
    jp.setZero();
    jp(0, 1) = bf[2];
    jp(0, 2) = -bf[1];
    jp(1, 0) = -bf[2];
    jp(1, 2) = bf[0];
    jp(2, 0) = bf[1];
    jp(2, 1) = -bf[0];
    jp *= e / (m * c);
  }
};

struct TangentState {
  Eigen::Matrix3d m_x = Eigen::Matrix3d::Identity();  // dx/dx0
  Eigen::Matrix3d m_p = Eigen::Matrix3d::Zero();      // dp/dx0
};

struct FullState {
  Vec3 x, p;
  TangentState tan;
};

FullState rk4_step(const ForceModel& fm, const FullState& s, double t,
                   double dt, bool with_tangent) {
  auto deriv = [&](const FullState& u, double tt) {
    FullState d;
    d.x = u.p / fm.m;
    d.p = fm.force(u.x, u.p, tt);
    if (with_tangent) {
      Eigen::Matrix3d jx, jp;
      fm.force_jacobians(u.x, u.p, tt, jx, jp);
      d.tan.m_x = u.tan.m_p / fm.m;
      d.tan.m_p = jx * u.tan.m_x + jp * u.tan.m_p;
    }
    return d;
  };
  auto axpy = [&](const FullState& u, const FullState& d, double h) {
    FullState r = u;
    r.x += h * d.x;
    r.p += h * d.p;
    if (with_tangent) {
      r.tan.m_x += h * d.tan.m_x;
      r.tan.m_p += h * d.tan.m_p;
    }
    return r;
  };
  FullState k1 = deriv(s, t);
  FullState k2 = deriv(axpy(s, k1, 0.5 * dt), t + 0.5 * dt);
  FullState k3 = deriv(axpy(s, k2, 0.5 * dt), t + 0.5 * dt);
  FullState k4 = deriv(axpy(s, k3, dt), t + dt);
  FullState r = s;
  const double w = dt / 6.0;
  r.x += w * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  r.p += w * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
  if (with_tangent) {
    r.tan.m_x += w * (k1.tan.m_x + 2 * k2.tan.m_x + 2 * k3.tan.m_x + k4.tan.m_x);
    r.tan.m_p += w * (k1.tan.m_p + 2 * k2.tan.m_p + 2 * k3.tan.m_p + k4.tan.m_p);
  }
  return r;
}

// determinant of the position block restricted to the active dimensions
double det_active(const Eigen::Matrix3d& m, int dim) {
  if (dim == 1) return m(0, 0);
  if (dim == 2) return m.topLeftCorner<2, 2>().determinant();
  return m.determinant();
}

struct InitialData {
  std::array<RealField, 3> grad_s;
  std::array<std::array<RealField, 3>, 3> hess_s;
};

InitialData initial_action_derivatives(const HydroState& hs0,
                                       const Grid& g) {
  InitialData d;
  const DerivScheme scheme = default_scheme(g);
  for (int a = 0; a < 3; ++a) {
    d.grad_s[a] = RealField(g);
    for (int b = 0; b < 3; ++b) d.hess_s[a][b] = RealField(g);
  }
  for (int a = 0; a < g.ndim; ++a) {
    d.grad_s[a] = differentiate(hs0.s, a, 1, scheme);
    for (int b = 0; b < g.ndim; ++b)
      d.hess_s[a][b] = differentiate(d.grad_s[a], b, 1, scheme);
  }
  return d;
}

Vec3 initial_momentum(const InitialData& d, const HamiltonianSpec& spec,
                      const Vec3& x, double t0) {
  Vec3 p = Vec3::Zero();
  const Grid& g = spec.grid;
  for (int a = 0; a < g.ndim; ++a) {
    p[a] = interp(d.grad_s[a], x) -
           (spec.particles[0].e / spec.consts.c) * spec.gauge.a[a].eval(x, t0);
  }
  return p;
}

}  // namespace

CharacteristicEnsemble sample_ensemble(const HydroState& hs0,
                                       const HamiltonianSpec& spec, double t0,
                                       int n_samples, uint64_t seed) {
  const Grid& g = spec.grid;
  CharacteristicEnsemble ce;
  ce.t = t0;
  ce.dim = g.ndim;
  ce.samples.resize(n_samples);
  InitialData init = initial_action_derivatives(hs0, g);

  if (g.ndim == 1) {
    // inverse CDF over cell masses
    const int n = g.npts[0];
    ArrayXr cdf(n + 1);
    cdf[0] = 0.0;
    for (int i = 0; i < n; ++i)
      cdf[i + 1] = cdf[i] + std::max(hs0.rho.values[i], 0.0);
    const double total = cdf[n];
    if (!(total > 0.0)) throw DomainError("sample_ensemble: rho0 vanishes");
    for (int s = 0; s < n_samples; ++s) {
      SplitMix64 rng(mix_seed(seed, static_cast<uint64_t>(s)));
      const double u = rng.uniform() * total;
      // binary search for the cell containing u
      int lo = 0, hi = n;
      while (hi - lo > 1) {
        const int midp = (lo + hi) / 2;
        if (cdf[midp] <= u)
          lo = midp;
        else
          hi = midp;
      }
      const double cell_mass = cdf[lo + 1] - cdf[lo];
      const double frac = cell_mass > 0.0 ? (u - cdf[lo]) / cell_mass : 0.5;
      Vec3 x = Vec3::Zero();
      x[0] = g.coord(0, lo) + frac * g.spacing(0);
      ce.samples[s].x = x;
      ce.samples[s].p = initial_momentum(init, spec, x, t0);
      ce.samples[s].weight = 1.0 / n_samples;
    }
  } else {
    const double rho_max = hs0.rho.values.maxCoeff();
    for (int s = 0; s < n_samples; ++s) {
      SplitMix64 rng(mix_seed(seed, static_cast<uint64_t>(s)));
      Vec3 x = Vec3::Zero();
      for (int attempt = 0; attempt < 100000; ++attempt) {
        for (int a = 0; a < g.ndim; ++a)
          x[a] = g.origin[a] + rng.uniform() * g.length[a];
        if (rng.uniform() * rho_max <= interp(hs0.rho, x)) break;
      }
      ce.samples[s].x = x;
      ce.samples[s].p = initial_momentum(init, spec, x, t0);
      ce.samples[s].weight = 1.0 / n_samples;
    }
  }
  return ce;
}

namespace {

void integrate_ensemble(CharacteristicEnsemble& ce,
                        const HamiltonianSpec& spec,
                        const InitialData* init, double t_final,
                        const ClassicalConfig& cfg) {
  const ForceModel fm(spec);
  const int n = static_cast<int>(ce.samples.size());
  const double t0 = ce.t;
  if (t_final <= t0) return;

  std::vector<TangentState> tangents(n);
  if (cfg.caustic_guard && init) {
    for (int s = 0; s < n; ++s) {
      const Vec3& x = ce.samples[s].x;
      Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
      for (int a = 0; a < spec.grid.ndim; ++a)
        for (int b = 0; b < spec.grid.ndim; ++b)
          hess(a, b) = interp(init->hess_s[a][b], x);
      const char* names[3] = {"x", "y", "z"};
      for (int a = 0; a < spec.grid.ndim; ++a)
        for (int b = 0; b < spec.grid.ndim; ++b)
          hess(a, b) -= spec.particles[0].e / spec.consts.c *
                        spec.gauge.a[a].derivative(names[b]).eval(x, t0);
      tangents[s].m_x.setIdentity();
      tangents[s].m_p = hess;
    }
  }

  const int nsteps =
      std::max(1, static_cast<int>(std::ceil((t_final - t0) / cfg.dt - 1e-12)));
  const double dt = (t_final - t0) / nsteps;
  std::vector<char> caustic_flag(n, 0);

  auto work = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      FullState st;
      st.x = ce.samples[s].x;
      st.p = ce.samples[s].p;
      st.tan = tangents[s];
      double t = t0;
      for (int k = 0; k < nsteps; ++k) {
        st = rk4_step(fm, st, t, dt, cfg.caustic_guard);
        t += dt;
        if (cfg.caustic_guard &&
            det_active(st.tan.m_x, ce.dim) <= 1e-12) {
          caustic_flag[s] = 1;
          break;
        }
      }
      ce.samples[s].x = st.x;
      ce.samples[s].p = st.p;
      tangents[s] = st.tan;
    }
  };

  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1 || n < 256) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + nthreads - 1) / nthreads;
    for (int th = 0; th < nthreads; ++th) {
      const int b = th * chunk, e2 = std::min(n, b + chunk);
      if (b < e2) pool.emplace_back(work, b, e2);
    }
    for (auto& th : pool) th.join();
  }

  bool any_caustic = false;
  for (char f : caustic_flag) any_caustic |= (f != 0);
  if (any_caustic) {
    ce.caustic = true;
    ce.caustic_time = t_final;
  }
  ce.t = t_final;
}

}  // namespace

CharacteristicEnsemble evolve_characteristics(const HydroState& hs0,
                                              const HamiltonianSpec& spec,
                                              double t0, double t_final,
                                              const ClassicalConfig& cfg) {
  CharacteristicEnsemble ce =
      sample_ensemble(hs0, spec, t0, cfg.n_samples, cfg.seed);
  InitialData init = initial_action_derivatives(hs0, spec.grid);
  integrate_ensemble(ce, spec, &init, t_final, cfg);
  return ce;
}

void advance_ensemble(CharacteristicEnsemble& ce, const HamiltonianSpec& spec,
                      double t_final, const ClassicalConfig& cfg) {
  // tangent restart from identity underestimates caustics across calls;
  // callers that need the guard should use evolve_characteristics end to end
  ClassicalConfig c2 = cfg;
  c2.caustic_guard = false;
  integrate_ensemble(ce, spec, nullptr, t_final, c2);
}

PhaseSpaceDensity reconstruct_fields(const CharacteristicEnsemble& ce,
                                     const Grid& grid, double bandwidth) {
  PhaseSpaceDensity out{RealField(grid),
                        {RealField(grid), RealField(grid), RealField(grid)},
                        true,
                        {0, 0, 0},
                        0.0,
                        0.0,
                        false};
  if (ce.caustic) {
    out.has_momentum = false;
  }
  const int n = static_cast<int>(ce.samples.size());
  const int d = ce.dim;

  // Silverman-type bandwidth per axis unless the caller fixed one
  for (int a = 0; a < d; ++a) {
    if (bandwidth > 0.0) {
      out.bandwidth[a] = bandwidth;
      continue;
    }
    double mean = 0.0, m2 = 0.0, wsum = 0.0;
    for (const auto& s : ce.samples) {
      wsum += s.weight;
      mean += s.weight * s.x[a];
    }
    mean /= wsum;
    for (const auto& s : ce.samples)
      m2 += s.weight * (s.x[a] - mean) * (s.x[a] - mean);
    const double sigma = std::sqrt(m2 / wsum);
    out.bandwidth[a] = sigma *
                       std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) *
                       std::pow(static_cast<double>(n), -1.0 / (d + 4.0));
  }

  const int total = grid.size();
  ArrayXr rho = ArrayXr::Zero(total);
  std::array<ArrayXr, 3> pnum;
  std::array<ArrayXr, 3> p2num;
  for (int k = 0; k < 3; ++k) {
    pnum[k] = ArrayXr::Zero(total);
    p2num[k] = ArrayXr::Zero(total);
  }
  // dense evaluation is fine at the scales used here (1-2D grids)
  for (int i = 0; i < total; ++i) {
    auto idx = grid.unflatten(i);
    for (const auto& s : ce.samples) {
      double k = 1.0;
      for (int a = 0; a < d; ++a) {
        const double u = (grid.coord(a, idx[a]) - s.x[a]) / out.bandwidth[a];
        if (std::abs(u) > 8.0) {
          k = 0.0;
          break;
        }
        k *= std::exp(-0.5 * u * u) /
             (out.bandwidth[a] * std::sqrt(2.0 * kPi));
      }
      if (k == 0.0) continue;
      rho[i] += s.weight * k;
      for (int c = 0; c < d; ++c) {
        pnum[c][i] += s.weight * k * s.p[c];
        p2num[c][i] += s.weight * k * s.p[c] * s.p[c];
      }
    }
  }
  out.rho.values = rho;
  if (!out.has_momentum) return out;

  const double rho_level = 1e-3 * rho.maxCoeff();
  for (int c = 0; c < d; ++c)
    out.p_map[c].values =
        pnum[c] / rho.max(rho_level * 1e-6);

  // certify the delta form: kernel-window momentum variance must be
  // explained by the local slope of p~ across one bandwidth
  double max_scatter = 0.0, bound = 0.0;
  const DerivScheme scheme = DerivScheme::central4;
  for (int c = 0; c < d; ++c) {
    std::array<ArrayXr, 3> dp;
    for (int a = 0; a < d; ++a)
      dp[a] = differentiate(out.p_map[c], a, 1, scheme).values;
    for (int i = 0; i < total; ++i) {
      if (rho[i] < rho_level) continue;
      const double mean_p = pnum[c][i] / rho[i];
      const double var = std::max(0.0, p2num[c][i] / rho[i] - mean_p * mean_p);
      max_scatter = std::max(max_scatter, var);
      double slope = 0.0;
      for (int a = 0; a < d; ++a)
        slope += std::abs(dp[a][i]) * out.bandwidth[a];
      bound = std::max(bound, 4.0 * slope * slope + 1e-12);
    }
  }
  out.max_scatter = max_scatter;
  out.scatter_bound = bound;
  out.delta_form_certified = max_scatter <= bound;
  return out;
}

RealField classical_density_transport_1d(const HydroState& hs0,
                                         const HamiltonianSpec& spec,
                                         double t0, double t_final,
                                         double dt) {
  const Grid& g = spec.grid;
  if (g.ndim != 1)
    throw ConfigError("classical_density_transport_1d needs a 1-d grid");
  const ForceModel fm(spec);
  InitialData init = initial_action_derivatives(hs0, g);
  const int n = g.npts[0];
  const int nsteps =
      std::max(1, static_cast<int>(std::ceil((t_final - t0) / dt - 1e-12)));
  const double h = (t_final - t0) / nsteps;

  std::vector<double> x_end(n), rho_end(n);
  for (int i = 0; i < n; ++i) {
    FullState st;
    st.x = Vec3::Zero();
    st.x[0] = g.coord(0, i);
    st.p = initial_momentum(init, spec, st.x, t0);
    st.tan.m_x.setIdentity();
    st.tan.m_p.setZero();
    st.tan.m_p(0, 0) = interp(init.hess_s[0][0], st.x) -
                       spec.particles[0].e / spec.consts.c *
                           spec.gauge.a[0].derivative("x").eval(st.x, t0);
    double t = t0;
    for (int k = 0; k < nsteps; ++k) {
      st = rk4_step(fm, st, t, h, true);
      t += h;
      if (st.tan.m_x(0, 0) <= 1e-12)
        throw DomainError("classical transport hit a caustic");
    }
    x_end[i] = st.x[0];
    rho_end[i] = hs0.rho.values[i] / st.tan.m_x(0, 0);
  }

  // resample the monotone (x_end, rho_end) profile onto the original grid
  RealField out(g);
  for (int i = 0; i < n; ++i) {
    const double x = g.coord(0, i);
    if (x <= x_end.front() || x >= x_end.back()) {
      out.values[i] = 0.0;
      continue;
    }
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int midp = (lo + hi) / 2;
      if (x_end[midp] <= x)
        lo = midp;
      else
        hi = midp;
    }
    const double u = (x - x_end[lo]) / (x_end[lo + 1] - x_end[lo]);
    out.values[i] = (1.0 - u) * rho_end[lo] + u * rho_end[lo + 1];
  }
  return out;
}

Vec3 ensemble_mean_x(const CharacteristicEnsemble& ce) {
  Vec3 acc = Vec3::Zero();
  double w = 0.0;
  for (const auto& s : ce.samples) {
    acc += s.weight * s.x;
    w += s.weight;
  }
  return acc / w;
}

Vec3 ensemble_mean_p(const CharacteristicEnsemble& ce) {
  Vec3 acc = Vec3::Zero();
  double w = 0.0;
  for (const auto& s : ce.samples) {
    acc += s.weight * s.p;
    w += s.weight;
  }
  return acc / w;
}

}  // namespace fisherq
