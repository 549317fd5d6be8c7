#include "ahid/collar.hpp"

#include "ahid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

namespace ahid {

namespace {

// Composite Gauss-Legendre on [0, x1].
template <class Fn>
double quad01(Fn&& f, double x1) {
  static const auto rule = [] {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> r;
    gauss_legendre(24, r.first, r.second);
    return r;
  }();
  constexpr int panels = 6;
  const double h = x1 / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p)
    for (Eigen::Index k = 0; k < rule.first.size(); ++k)
      sum += 0.5 * h * rule.second[k] * f(h * (p + 0.5 * (rule.first[k] + 1.0)));
  return sum;
}

// Drop of Phi over [1/4, 1/4 + x delta].
double bridge_drop(double A, double delta, double x) {
  return delta * quad01([&](double y) { return A / (2.0 * std::pow(0.25 + delta * y, 1.5)) * (1.0 - smooth_step(y)); },
                        x);
}

}  // namespace

PhiProfile::PhiProfile(double A) : A_(A), delta_(0.0) {
  if (!(A > 0.0) || !std::isfinite(A)) throw Error(ErrorCode::InvalidInput, "A must be positive");
  if (bridge_drop(A, 0.25, 1.0) < 1.0)
    throw Error(ErrorCode::InvalidInput, "A = " + std::to_string(A) + " too small to fit the bridge in (1/4, 1/2)");
  double lo = 0.0, hi = 0.25;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    (bridge_drop(A, mid, 1.0) < 1.0 ? lo : hi) = mid;
  }
  delta_ = hi;
}

double PhiProfile::chi(double t, int order) const {
  const double x = (t - 0.25) / delta_;
  if (order == 0) return 1.0 - smooth_step(x);
  return -smooth_step(x, 1) / delta_;
}

double PhiProfile::operator()(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidInput, "Phi is defined for t > 0");
  if (t <= 0.25) return A_ / std::sqrt(t);
  if (t >= 0.25 + delta_) return 2.0 * A_ - 1.0;
  return 2.0 * A_ - bridge_drop(A_, delta_, (t - 0.25) / delta_);
}

double PhiProfile::d1(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidInput, "Phi is defined for t > 0");
  if (t >= 0.25 + delta_) return 0.0;
  const double base = -A_ / (2.0 * std::pow(t, 1.5));
  return t <= 0.25 ? base : base * chi(t, 0);
}

double PhiProfile::d2(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidInput, "Phi is defined for t > 0");
  if (t >= 0.25 + delta_) return 0.0;
  const double base = 0.75 * A_ / std::pow(t, 2.5);
  if (t <= 0.25) return base;
  return base * chi(t, 0) - A_ / (2.0 * std::pow(t, 1.5)) * chi(t, 1);
}

std::vector<double> collar_times(const CollarOptions& o) {
  if (!(o.t_min > 0.0 && o.t_min < 0.25) || o.inner_slices < 2 || o.bridge_slices < 1 || o.outer_slices < 1)
    throw Error(ErrorCode::InvalidInput, "bad collar grid");
  std::vector<double> t;
  const double r = std::log(0.25 / o.t_min);
  for (int k = 0; k < o.inner_slices; ++k) t.push_back(o.t_min * std::exp(r * k / (o.inner_slices - 1)));
  t.back() = 0.25;
  for (int k = 1; k <= o.bridge_slices; ++k) t.push_back(0.25 + 0.25 * k / o.bridge_slices);
  for (int k = 1; k <= o.outer_slices; ++k) t.push_back(0.5 + 0.5 * k / o.outer_slices);
  return t;
}

// ---------------------------------------------------------------------------

namespace {

double stencil_step(double t, const CollarOptions& o) { return std::min(t / 3.0, o.max_stencil); }

// u_{h(t)}, K_{h(t)} and Lap_{h(t)} u at the flowed points.
struct PointData {
  Eigen::VectorXd u, K, lap_u;
};

PointData point_data(const MetricPath& path, double t, const Eigen::Matrix3Xd& phi, bool full) {
  const EigenPair& ep = path.eigen(t);
  const Eigen::VectorXd lap_u = laplacian_coeffs(ep.coeffs);
  const double z = path.zeta()(t), a = path.a()(t);
  PointBasis pb(path.grid()->band());
  PointData d;
  d.u.resize(phi.cols());
  if (full) {
    d.K.resize(phi.cols());
    d.lap_u.resize(phi.cols());
  }
  for (Eigen::Index i = 0; i < phi.cols(); ++i) {
    pb.evaluate(phi.col(i), 0);
    d.u[i] = pb.value(ep.coeffs);
    if (!full) continue;
    const double e = std::exp(-2.0 * (z * pb.value(path.w_coeffs()) + a));
    d.K[i] = e * (1.0 - z * pb.value(path.lap_w_coeffs()));
    d.lap_u[i] = e * pb.value(lap_u);
  }
  return d;
}

double d1_stencil(double fm2, double fm1, double fp1, double fp2, double h) {
  return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
}

}  // namespace

std::vector<CollarSlice> build_slices(const MetricPath& path, const Eigen::Matrix3Xd& x,
                                      const std::vector<Mat32>& frames, const std::vector<double>& times,
                                      const CollarOptions& options) {
  std::map<double, int> index;
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidInput, "collar slices need t > 0");
    const double d = stencil_step(t, options);
    for (int k = -2; k <= 2; ++k) index.emplace(t + k * d, 0);
  }
  std::vector<double> all;
  for (auto& [t, i] : index) {
    i = static_cast<int>(all.size());
    all.push_back(t);
  }
  const std::vector<FlowState> states =
      integrate_points(path.field(), x, frames, all, path_flow_options(path, options.flow));

  std::vector<CollarSlice> out;
  out.reserve(times.size());
  for (double t : times) {
    const double d = stencil_step(t, options);
    std::array<const FlowState*, 5> st;
    for (int k = -2; k <= 2; ++k) st[k + 2] = &states[index.at(t + k * d)];

    CollarSlice s;
    s.t = t;
    s.phi = st[2]->phi;
    s.lambda = path.eigen(t).lambda1;
    std::array<PulledBack, 5> pb;
    std::array<Eigen::VectorXd, 5> u;
    for (int k = 0; k < 5; ++k) {
      pb[k] = pullback_metric(path, *st[k], true);
      if (k == 2) {
        PointData pd = point_data(path, t, st[k]->phi, true);
        u[k] = pd.u;
        s.K = std::move(pd.K);
        s.lap_u = std::move(pd.lap_u);
      } else {
        u[k] = point_data(path, st[k]->t, st[k]->phi, false).u;
      }
    }
    assert_spd(pb[2].g);
    s.g = pb[2].g;
    s.gdot = pb[2].gdot;
    s.u = u[2];
    const auto n = x.cols();
    s.gddot.resize(n);
    s.u_t.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s.gddot[i] = (pb[0].gdot[i] - 8.0 * pb[1].gdot[i] + 8.0 * pb[3].gdot[i] - pb[4].gdot[i]) / (12.0 * d);
      s.u_t[i] = d1_stencil(u[0][i], u[1][i], u[3][i], u[4][i], d);
    }
    if (s.u.minCoeff() <= 0.0)
      throw Error(ErrorCode::LostPositivity, "eigenfunction not positive at t = " + std::to_string(t));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CollarSlice> build_collar_slices(const MetricPath& path, const CollarOptions& options) {
  return build_slices(path, path.grid()->points(), grid_frames(path.grid()), collar_times(options), options);
}

// ---------------------------------------------------------------------------

CollarFields evaluate_collar(const CollarSlice& s, double eps, const PhiProfile& phi) {
  const auto n = static_cast<Eigen::Index>(s.g.size());
  if (static_cast<Eigen::Index>(s.gdot.size()) != n || static_cast<Eigen::Index>(s.gddot.size()) != n ||
      s.u_t.size() != n)
    throw Error(ErrorCode::MissingDerivatives, "slice lacks time derivatives");
  const double t = s.t, q = 1.0 + eps * t * t;
  const double P = phi(t), Pd = phi.d1(t);

  CollarFields f;
  for (Eigen::VectorXd* v : {&f.R, &f.bracket, &f.I, &f.II, &f.III, &f.IV, &f.V, &f.rest, &f.H, &f.H_predicted,
                             &f.rho_norm})
    v->resize(n);
  f.rho.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Matrix2d& g = s.g[i];
    const Eigen::Matrix2d h = q * g;
    const Eigen::Matrix2d hd = 2.0 * eps * t * g + q * s.gdot[i];
    const Eigen::Matrix2d hdd = 2.0 * eps * g + 4.0 * eps * t * s.gdot[i] + q * s.gddot[i];
    const double u = s.u[i], v = P * u;
    const double vt = Pd * u + P * s.u_t[i];
    const TraceNorm d1 = trace_and_norm(h, hd);
    const double tr2 = trace_and_norm(h, hdd).trace;
    const double Kh = s.K[i] / q;
    const double lap_v = P * s.lap_u[i] / q;

    const double quad = -tr2 - 0.25 * d1.trace * d1.trace + (vt / v) * d1.trace + 0.75 * d1.norm2;
    f.R[i] = 2.0 * Kh - 2.0 * lap_v / v + quad / (v * v);
    f.bracket[i] = f.R[i] * P * P * q * u * u;

    f.I[i] = 2.0 * P * P * s.lambda * u * u;
    f.II[i] = -4.0 * eps;
    f.III[i] = -q * trace_and_norm(g, s.gddot[i]).trace;
    f.IV[i] = 4.0 * eps * t * s.u_t[i] / u;
    f.V[i] = 4.0 * eps * t * Pd / P;
    f.rest[i] = q * (-0.25 * d1.trace * d1.trace + 0.75 * d1.norm2);

    f.H[i] = d1.trace / (4.0 * v);
    f.H_predicted[i] = eps * t / (v * q);
    f.rho[i] = -hd / (2.0 * v);
    f.rho_norm[i] = std::sqrt(d1.norm2) / (2.0 * v);
  }
  return f;
}

Eigen::VectorXd scalar_curvature_collar(const CollarSlice& s, double eps, const PhiProfile& phi) {
  return evaluate_collar(s, eps, phi).R;
}

std::vector<Eigen::Matrix2d> second_fundamental_form(const CollarSlice& s, double eps, const PhiProfile& phi) {
  return evaluate_collar(s, eps, phi).rho;
}

Eigen::VectorXd mean_curvature(const CollarSlice& s, double eps, const PhiProfile& phi) {
  return evaluate_collar(s, eps, phi).H;
}

CollarSummary summarize_collar(const std::vector<CollarSlice>& slices, double eps, const PhiProfile& phi,
                               double alpha) {
  if (slices.empty()) throw Error(ErrorCode::InvalidInput, "no collar slices");
  CollarSummary out;
  out.eps = eps;
  out.A = phi.A();
  out.min_R = out.min_H = out.bracket_margin = out.term1_ratio = std::numeric_limits<double>::infinity();
  const double A = phi.A();
  for (const CollarSlice& s : slices) {
    const CollarFields f = evaluate_collar(s, eps, phi);
    out.t.push_back(s.t);
    out.max_abs_R.push_back(f.R.cwiseAbs().maxCoeff());
    out.max_rho.push_back(f.rho_norm.maxCoeff());
    out.min_bracket.push_back(f.bracket.minCoeff());
    out.min_H_slice.push_back(f.H.minCoeff());
    out.min_R = std::min(out.min_R, f.R.minCoeff());
    out.min_H = std::min(out.min_H, f.H.minCoeff());
    out.bracket_margin = std::min(out.bracket_margin, f.bracket.minCoeff());
    out.max_H_error = std::max(out.max_H_error, (f.H - f.H_predicted).cwiseAbs().maxCoeff());
    const Eigen::ArrayXd others =
        f.II.array().abs() + f.III.array().abs() + f.IV.array().abs() + f.V.array().abs() + f.rest.array().abs();
    out.C1 = std::max(out.C1, others.maxCoeff());
    if (s.t <= 0.25 && alpha > 0.0) {
      const double bound = 2.0 * A * A * alpha * s.u.cwiseAbs2().minCoeff();
      out.term1_ratio = std::min(out.term1_ratio, f.I.minCoeff() / bound);
    }
  }
  out.max_rho_tmin = out.max_rho.front();
  out.rho_scale_tmin = std::pow(slices.front().t, 1.5) / A;
  out.rho_decreasing = out.R_decreasing = true;
  for (size_t k = 0; k + 1 < slices.size() && out.t[k + 1] <= 0.25; ++k) {
    if (out.max_rho[k] > out.max_rho[k + 1]) out.rho_decreasing = false;
    if (out.max_abs_R[k] > out.max_abs_R[k + 1]) out.R_decreasing = false;
  }
  return out;
}

SearchResult parameter_search(const std::vector<CollarSlice>& slices, const std::vector<double>& eps_range,
                              const std::vector<double>& A_range, double alpha) {
  std::vector<double> As = A_range;
  std::sort(As.begin(), As.end());
  SearchResult res;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto margin_at = [&](double eps, double A) {
    try {
      return summarize_collar(slices, eps, PhiProfile(A), alpha).bracket_margin;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidInput) throw;
      return nan;
    }
  };
  for (double eps : eps_range) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidInput, "eps must be positive");
    double last_bad = nan;
    for (double A : As) {
      std::optional<PhiProfile> phi;
      try {
        phi.emplace(A);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidInput) throw;
        res.probes.push_back({eps, A, nan, nan, nan});
        continue;
      }
      const CollarSummary s = summarize_collar(slices, eps, *phi, alpha);
      res.probes.push_back({eps, A, s.bracket_margin, s.min_R, s.min_H});
      if (s.bracket_margin > 0.0 && s.min_R > 0.0 && s.min_H > 0.0) {
        res.eps = eps;
        res.A = A;
        res.summary = s;
        // refine the positivity threshold between the last failing probe and this one
        double lo = std::isnan(last_bad) ? A / 2.0 : last_bad, hi = A;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double m = margin_at(eps, mid);
          (m > 0.0 ? hi : lo) = mid;
        }
        res.A_threshold = hi;
        return res;
      }
      last_bad = A;
    }
  }
  throw Error(ErrorCode::SearchExhausted, "no (eps, A) pair gave a positive collar");
}

// ---------------------------------------------------------------------------

SGaugeReport sqrt_reparametrize(const MetricPath& path, double eps, const PhiProfile& phi, double ds,
                                const CollarOptions& options) {
  if (!(ds > 0.0) || 4.0 * ds >= 0.5) throw Error(ErrorCode::InvalidInput, "bad s step");
  const GridPtr& grid = path.grid();
  const double A = phi.A();

  std::vector<double> s_fd, s_profile;
  for (int k = 0; k <= 4; ++k) {
    s_fd.push_back(k * ds);
    s_fd.push_back(k * ds / 2.0);
  }
  for (int j = 1; j <= 11; ++j) s_profile.push_back(j / 24.0);
  std::map<double, int> index;
  for (double s : s_fd) index.emplace(s * s, 0);
  for (double s : s_profile) index.emplace(s * s, 0);
  std::vector<double> ts;
  for (auto& [t, i] : index) {
    i = static_cast<int>(ts.size());
    ts.push_back(t);
  }
  const std::vector<FlowState> states =
      integrate_points(path.field(), grid->points(), grid_frames(grid), ts, path_flow_options(path, options.flow));

  struct Sample {
    PulledBack pb;
    Eigen::VectorXd u;
  };
  std::vector<Sample> samples(ts.size());
  for (size_t k = 0; k < ts.size(); ++k) {
    samples[k].pb = pullback_metric(path, states[k], true);
    samples[k].u = point_data(path, std::max(ts[k], 0.0), states[k].phi, false).u;
  }

  SGaugeReport r;
  // components (gamma_11, gamma_12, gamma_22, gamma_ss) at node i, parameter s
  auto comp = [&](double s, int i, int c) {
    const Sample& sm = samples[index.at(s * s)];
    if (c == 3) return 4.0 * A * A * sm.u[i] * sm.u[i];
    const Eigen::Matrix2d g = (1.0 + eps * std::pow(s, 4)) * sm.pb.g[i];
    return c == 0 ? g(0, 0) : c == 1 ? g(0, 1) : g(1, 1);
  };
  auto third = [&](double h) {
    double m = 0.0;
    for (int i = 0; i < grid->size(); ++i)
      for (int c = 0; c < 4; ++c) {
        const double v = (-5.0 * comp(0, i, c) + 18.0 * comp(h, i, c) - 24.0 * comp(2 * h, i, c) +
                          14.0 * comp(3 * h, i, c) - 3.0 * comp(4 * h, i, c)) /
                         (2.0 * h * h * h);
        m = std::max(m, std::abs(v));
      }
    return m;
  };
  r.third_derivative_coarse = third(ds);
  r.third_derivative_fine = third(ds / 2.0);
  r.finite = std::isfinite(r.third_derivative_coarse) && std::isfinite(r.third_derivative_fine);

  auto max_H = [&](double s) {
    const Sample& sm = samples[index.at(s * s)];
    const double q = 1.0 + eps * std::pow(s, 4);
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid->size(); ++i) {
      const Eigen::Matrix2d& g = sm.pb.g[i];
      const Eigen::Matrix2d hp = 4.0 * eps * s * s * s * g + q * 2.0 * s * sm.pb.gdot[i];
      m = std::max(m, trace_and_norm(q * g, hp).trace / (4.0 * 2.0 * A * sm.u[i]));
    }
    return m;
  };
  r.H_at_zero = max_H(0.0);
  for (double s : s_profile) {
    r.s.push_back(s);
    r.max_H.push_back(max_H(s));
    const double t = s * s;
    const Sample& sm = samples[index.at(t)];
    for (int i = 0; i < grid->size(); ++i) {
      const double ref = 4.0 * A * A * sm.u[i] * sm.u[i];
      const double alt = std::pow(phi(t) * sm.u[i] * 2.0 * s, 2);
      r.gamma_ss_mismatch = std::max(r.gamma_ss_mismatch, std::abs(ref - alt) / ref);
    }
  }
  // slope over the middle of the profile
  const size_t a = 2, b = r.s.size() - 3;
  r.H_exponent = std::log(r.max_H[b] / r.max_H[a]) / std::log(r.s[b] / r.s[a]);

  const Sample& s0 = samples[index.at(0.0)];
  for (int i = 0; i < grid->size(); ++i) r.boundary_area += grid->weights()[i] * std::sqrt(s0.pb.g[i].determinant());
  return r;
}

// ---------------------------------------------------------------------------

double scalar_curvature_3d_oracle(const MetricBox& box, const Eigen::Vector3d& steps) {
  auto at = [&](int i, int j, int k) -> const Eigen::Matrix3d& { return box[(i * 5 + j) * 5 + k]; };
  auto offset = [](int c, int p, int o[3]) {
    o[0] = o[1] = o[2] = 2;
    o[c] = p;
  };
  static constexpr double w1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  static constexpr double w2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

  const Eigen::Matrix3d g = at(2, 2, 2);
  const Eigen::Matrix3d gi = g.inverse();
  std::array<Eigen::Matrix3d, 3> dg;
  std::array<std::array<Eigen::Matrix3d, 3>, 3> ddg;
  for (int c = 0; c < 3; ++c) {
    dg[c].setZero();
    ddg[c][c].setZero();
    for (int p = 0; p < 5; ++p) {
      int o[3];
      offset(c, p, o);
      dg[c] += w1[p] * at(o[0], o[1], o[2]) / steps[c];
      ddg[c][c] += w2[p] * at(o[0], o[1], o[2]) / (steps[c] * steps[c]);
    }
  }
  for (int c = 0; c < 3; ++c)
    for (int d = c + 1; d < 3; ++d) {
      Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
      for (int p = 0; p < 5; ++p)
        for (int q = 0; q < 5; ++q) {
          if (w1[p] == 0.0 || w1[q] == 0.0) continue;
          int o[3] = {2, 2, 2};
          o[c] = p;
          o[d] = q;
          m += w1[p] * w1[q] * at(o[0], o[1], o[2]);
        }
      ddg[c][d] = ddg[d][c] = m / (steps[c] * steps[d]);
    }

  // Gamma^a_bc and e-derivatives
  double G[3][3][3], dG[3][3][3][3];
  std::array<Eigen::Matrix3d, 3> dgi;
  for (int e = 0; e < 3; ++e) dgi[e] = -gi * dg[e] * gi;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int d = 0; d < 3; ++d) s += 0.5 * gi(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
        G[a][b][c] = s;
        for (int e = 0; e < 3; ++e) {
          double de = 0.0;
          for (int d = 0; d < 3; ++d)
            de += 0.5 * dgi[e](a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c)) +
                  0.5 * gi(a, d) * (ddg[e][b](d, c) + ddg[e][c](d, b) - ddg[e][d](b, c));
          dG[e][a][b][c] = de;
        }
      }
  double R = 0.0;
  for (int b = 0; b < 3; ++b)
    for (int c = 0; c < 3; ++c) {
      double Ric = 0.0;
      for (int a = 0; a < 3; ++a) {
        Ric += dG[a][a][b][c] - dG[c][a][a][b];
        for (int d = 0; d < 3; ++d) Ric += G[a][a][d] * G[d][b][c] - G[a][c][d] * G[d][a][b];
      }
      R += gi(b, c) * Ric;
    }
  return R;
}

OracleComparison compare_with_oracle(const MetricPath& path, double eps, const PhiProfile& phi,
                                     const std::vector<double>& times, const std::vector<Eigen::Vector2d>& points,
                                     double hz, const CollarOptions& options) {
  const Chart chart;  // north, default geometry
  const auto np = static_cast<Eigen::Index>(points.size());
  // 25 spatial stencil points per center
  Eigen::Matrix3Xd x(3, np * 25);
  std::vector<Mat32> frames(np * 25);
  Eigen::Matrix3Xd centers(3, np);
  std::vector<Mat32> center_frames(np);
  for (Eigen::Index p = 0; p < np; ++p) {
    centers.col(p) = chart.to_sphere(points[p]);
    center_frames[p] = chart.frame(points[p]);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const Eigen::Vector2d z = points[p] + hz * Eigen::Vector2d(i - 2, j - 2);
        x.col(p * 25 + i * 5 + j) = chart.to_sphere(z);
        frames[p * 25 + i * 5 + j] = chart.frame(z);
      }
  }
  std::map<double, int> index;
  auto ht_of = [](double t) { return std::min(t / 20.0, 2e-3); };
  for (double t : times)
    for (int k = -2; k <= 2; ++k) index.emplace(t + k * ht_of(t), 0);
  std::vector<double> all;
  for (auto& [t, i] : index) {
    i = static_cast<int>(all.size());
    all.push_back(t);
  }
  const std::vector<FlowState> states =
      integrate_points(path.field(), x, frames, all, path_flow_options(path, options.flow));
  std::vector<PulledBack> pbs(all.size());
  std::vector<Eigen::VectorXd> us(all.size());
  for (size_t k = 0; k < all.size(); ++k) {
    pbs[k] = pullback_metric(path, states[k], false);
    us[k] = point_data(path, all[k], states[k].phi, false).u;
  }

  const std::vector<CollarSlice> slices = build_slices(path, centers, center_frames, times, options);
  OracleComparison out;
  for (size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti], ht = ht_of(t);
    const Eigen::VectorXd R = scalar_curvature_collar(slices[ti], eps, phi);
    for (Eigen::Index p = 0; p < np; ++p) {
      MetricBox box;
      for (int k = 0; k < 5; ++k) {
        const double tk = t + (k - 2) * ht;
        const int s = index.at(tk);
        const double q = 1.0 + eps * tk * tk, P = phi(tk);
        for (int i = 0; i < 5; ++i)
          for (int j = 0; j < 5; ++j) {
            const Eigen::Index n = p * 25 + i * 5 + j;
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            m.topLeftCorner<2, 2>() = q * pbs[s].g[n];
            m(2, 2) = std::pow(P * us[s][n], 2);
            box[(i * 5 + j) * 5 + k] = m;
          }
      }
      const double Ro = scalar_curvature_3d_oracle(box, Eigen::Vector3d(hz, hz, ht));
      out.t.push_back(t);
      out.R_formula.push_back(R[p]);
      out.R_oracle.push_back(Ro);
      out.max_relative = std::max(out.max_relative, std::abs(R[p] - Ro) / std::max(std::abs(Ro), 1e-12));
    }
  }
  return out;
}

}  // namespace ahid
