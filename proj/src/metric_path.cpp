#include "ahid/metric_path.hpp"

#include "ahid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>

namespace ahid {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double smooth_step(double x, int order) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return order == 0 ? 1.0 : 0.0;
  // S = 1/(1 + e^d) with d = 1/x - 1/(1-x); S(1-S) = e^{-|d|}/(1+e^{-|d|})^2
  const double d = 1.0 / x - 1.0 / (1.0 - x);
  const double s = d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  if (order == 0) return s;
  const double e = std::exp(-std::abs(d));
  const double p = e / ((1.0 + e) * (1.0 + e));
  if (p == 0.0) return 0.0;
  const double q = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
  const double s1 = p * q;
  if (order == 1) return s1;
  const double dq = -2.0 / (x * x * x) + 2.0 / ((1.0 - x) * (1.0 - x) * (1.0 - x));
  if (order == 2) return s1 * (1.0 - 2.0 * s) * q + p * dq;
  throw Error(ErrorCode::InvalidInput, "smooth_step supports derivative orders 0..2");
}

double ZetaProfile::derivative(double t, int order) const {
  if (t >= 0.5) return 0.0;
  const double lin = 1.0 - tilt * t;
  switch (order) {
    case 0:
      return lin * (1.0 - smooth_step(2.0 * t, 0));
    case 1:
      return -tilt * (1.0 - smooth_step(2.0 * t, 0)) - 2.0 * lin * smooth_step(2.0 * t, 1);
    case 2:
      return 4.0 * tilt * smooth_step(2.0 * t, 1) - 4.0 * lin * smooth_step(2.0 * t, 2);
    default:
      throw Error(ErrorCode::InvalidInput, "zeta supports derivative orders 0..2");
  }
}

AProfile::AProfile(const ScalarField& w, ZetaProfile zeta, int steps)
    : zeta_(zeta), w_(w.values()), weights_(w.grid()->weights()) {
  if (steps < 2 || steps % 2) throw Error(ErrorCode::InvalidInput, "a(t) needs an even step count");
  auto rhs = [&](double t) { return -zeta_.derivative(t, 1) * weighted_mean(zeta_(t)); };
  auto run = [&](int n) {
    std::vector<double> a(n + 1, 0.0);
    const double h = 0.5 / n;
    for (int k = 0; k < n; ++k) {
      const double t = k * h;
      // a' does not depend on a, so the RK4 stages collapse
      const double k1 = rhs(t), k23 = rhs(t + 0.5 * h), k4 = rhs(t + h);
      a[k + 1] = a[k] + h / 6.0 * (k1 + 4.0 * k23 + k4);
    }
    return a;
  };
  table_ = run(steps);
  const auto coarse = run(steps / 2);
  for (int k = 0; k <= steps / 2; ++k) error_ = std::max(error_, std::abs(coarse[k] - table_[2 * k]));
  dt_ = 0.5 / steps;
}

double AProfile::weighted_mean(double z) const {
  const Eigen::ArrayXd e = (2.0 * z * w_.array()).exp() * weights_.array();
  return (e * w_.array()).sum() / e.sum();
}

double AProfile::weighted_mean_dz(double z) const {
  const Eigen::ArrayXd e = (2.0 * z * w_.array()).exp() * weights_.array();
  const double z0 = e.sum(), m1 = (e * w_.array()).sum() / z0, m2 = (e * w_.array().square()).sum() / z0;
  return 2.0 * (m2 - m1 * m1);
}

double AProfile::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 0.5) return table_.back();
  const int k = std::min(static_cast<int>(t / dt_), steps() - 1);
  const double t0 = k * dt_, s = (t - t0) / dt_;
  const double p0 = table_[k], p1 = table_[k + 1];
  const double m0 = d1(t0) * dt_, m1 = d1(t0 + dt_) * dt_;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
}

double AProfile::d1(double t) const {
  const double zp = zeta_.derivative(t, 1);
  return zp == 0.0 ? 0.0 : -zp * weighted_mean(zeta_(t));
}

double AProfile::d2(double t) const {
  const double zp = zeta_.derivative(t, 1), zpp = zeta_.derivative(t, 2);
  if (zp == 0.0 && zpp == 0.0) return 0.0;
  const double z = zeta_(t);
  return -zpp * weighted_mean(z) - zp * zp * weighted_mean_dz(z);
}

AProfile solve_a(const ScalarField& w, const ZetaProfile& zeta, int steps) { return AProfile(w, zeta, steps); }

// ---------------------------------------------------------------------------

namespace {

// Everything about h(t) and X_t needed at a single point, from one basis evaluation.
struct PathSlice {
  double zeta = 0, zeta_d1 = 0, a = 0, a_d1 = 0;
  Eigen::VectorXd psi;  // empty when X_t vanishes identically
  std::shared_ptr<const Eigen::VectorXd> w;
  std::shared_ptr<PointBasis> pb;

  struct Local {
    double sigma, sigma_dot;
    Eigen::Vector3d grad_sigma;
    FieldSample f;
  };

  Local at(const Eigen::Vector3d& n) const {
    pb->evaluate(n, psi.size() ? 2 : 1);
    Local out;
    out.sigma = zeta * pb->value(*w) + a;
    out.sigma_dot = zeta_d1 * pb->value(*w) + a_d1;
    out.grad_sigma = zeta * pb->surface_gradient(*w);
    if (!psi.size()) {
      out.f.X.setZero();
      out.f.DX.setZero();
      return out;
    }
    const Eigen::Vector3d G = pb->ambient_gradient(psi);
    const Eigen::Matrix3d H = pb->ambient_hessian(psi);
    const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - n * n.transpose();
    const Eigen::Vector3d PG = P * G;
    const double e2 = std::exp(-2.0 * out.sigma);
    out.f.X = e2 * PG;
    const Eigen::Matrix3d M = e2 * (-2.0 * PG * out.grad_sigma.transpose() - n.dot(G) * Eigen::Matrix3d::Identity() -
                                    n * G.transpose() + P * H);
    out.f.DX = M * P;
    return out;
  }
};

PathSlice make_slice(const MetricPath& path, double t) {
  PathSlice s;
  s.zeta = path.zeta()(t);
  s.zeta_d1 = path.zeta().derivative(t, 1);
  s.a = path.a()(t);
  s.a_d1 = path.a().d1(t);
  s.psi = path.potential_coeffs(t);
  if (s.psi.cwiseAbs().maxCoeff() == 0.0) s.psi.resize(0);
  s.w = std::make_shared<const Eigen::VectorXd>(path.w_coeffs());
  s.pb = std::make_shared<PointBasis>(path.grid()->band());
  return s;
}

}  // namespace

MetricPath::MetricPath(ConformalMetric g, PathOptions options)
    : g_(std::move(g)), opt_(options), a_(solve_a(g_.w(), zeta_, options.a_steps)) {
  if (opt_.time_nodes < 2) throw Error(ErrorCode::InvalidInput, "path needs at least two time nodes");
  for (int k = 0; k < opt_.time_nodes; ++k) times_.push_back(double(k) / (opt_.time_nodes - 1));
  w_coeffs_ = g_.w().coeffs();
  lap_w_coeffs_ = laplacian_coeffs(w_coeffs_);
}

ScalarField MetricPath::sigma(double t) const {
  return ScalarField(grid(), (zeta_(t) * w().values().array() + a_(t)).matrix());
}

ConformalMetric MetricPath::h(double t) const { return ConformalMetric(sigma(t)); }

const EigenPair& MetricPath::eigen(double t) const {
  const double key = std::min(t, 0.5);
  for (const auto& [k, ep] : eigen_cache_)
    if (k == key) return *ep;
  auto ep = std::make_shared<EigenPair>(first_eigenpair(h(key)));
  eigen_cache_.emplace_back(key, ep);
  return *ep;
}

Eigen::VectorXd MetricPath::potential_coeffs(double t) const {
  const double zp = zeta_.derivative(t, 1), ap = a_.d1(t);
  if (zp == 0.0 && ap == 0.0) return Eigen::VectorXd::Zero(grid()->basis_size());
  const Eigen::ArrayXd sig = zeta_(t) * w().values().array() + a_(t);
  const Eigen::VectorXd f = (-2.0 * (2.0 * sig).exp() * (zp * w().values().array() + ap)).matrix();
  const double l1 = grid()->weights().dot(f.cwiseAbs());
  return poisson_solve_coeffs(ScalarField(grid(), f).coeffs(), l1);
}

TangentField MetricPath::area_fixing_field(double t) const {
  const PathSlice s = make_slice(*this, t);
  TangentField out{grid(), Eigen::VectorXd::Zero(grid()->size()), Eigen::VectorXd::Zero(grid()->size())};
  if (!s.psi.size()) return out;
  for (int k = 0; k < grid()->size(); ++k) {
    const Eigen::Vector3d X = s.at(grid()->points().col(k)).f.X;
    out.theta[k] = X.dot(grid()->e_theta().col(k));
    out.phi[k] = X.dot(grid()->e_phi().col(k));
  }
  return out;
}

TimeDependentField MetricPath::field() const {
  return [this](double t) -> FieldSlice {
    auto s = std::make_shared<PathSlice>(make_slice(*this, t));
    return [s](const Eigen::Vector3d& n) { return s->at(n).f; };
  };
}

EigenCurve eigen_curve(const MetricPath& path) {
  EigenCurve c;
  c.t = path.times();
  for (double t : c.t) {
    const EigenPair& ep = path.eigen(t);
    c.lambda1.push_back(ep.lambda1);
    c.min_u.push_back(ep.min_u);
  }
  const int n = static_cast<int>(c.t.size());
  for (int k = 1; k < n; ++k)
    if (c.lambda1[k] < -1e-7)
      throw Error(ErrorCode::NegativeInteriorEigenvalue,
                  "lambda1 = " + std::to_string(c.lambda1[k]) + " at t = " + std::to_string(c.t[k]));
  c.alpha = std::numeric_limits<double>::infinity();
  for (int k = 1; k < n; ++k) c.alpha = std::min(c.alpha, c.lambda1[k] / c.t[k]);
  if (c.lambda1[0] >= -1e-7 && !(c.alpha > 0.0))
    throw Error(ErrorCode::VerificationFailure, "fitted alpha " + std::to_string(c.alpha) + " is not positive");

  const double inf0 = c.min_u[0] * c.min_u[0];
  c.analytic_coefficient = -4.0 * kPi * path.zeta().derivative(0.0, 1) * inf0;
  c.half_inf_range = 0.0;
  for (int k = 0; k < n && c.min_u[k] * c.min_u[k] >= 0.5 * inf0; ++k) c.half_inf_range = c.t[k];

  std::vector<double> inc;
  for (int k = 0; k + 1 < n; ++k) {
    const double d = std::abs(c.lambda1[k + 1] - c.lambda1[k]);
    c.lipschitz = std::max(c.lipschitz, d / (c.t[k + 1] - c.t[k]));
    if (c.t[k + 1] <= 0.5) inc.push_back(d);
  }
  if (!inc.empty()) {
    std::vector<double> sorted = inc;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double med = sorted[sorted.size() / 2];
    const double mx = *std::max_element(inc.begin(), inc.end());
    c.max_jump_ratio = med > 0 ? mx / med : 0.0;
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

struct Batch {
  std::vector<Eigen::Vector3d> y;
  std::vector<Mat32> J;
};

void rk4_step(const FieldSlice& s0, const FieldSlice& sm, const FieldSlice& s1, double dt, const Batch& in,
              Batch& out, double blowup) {
  out.y.resize(in.y.size());
  out.J.resize(in.J.size());
  auto eval = [&](const FieldSlice& s, const Eigen::Vector3d& y, const Mat32& J, Eigen::Vector3d& dy, Mat32& dJ) {
    const double r = y.norm();
    const FieldSample f = s(y / r);
    if (!(f.X.norm() < blowup)) throw Error(ErrorCode::StepSizeUnderflow, "vector field blew up along the flow");
    dy = f.X;
    dJ = f.DX * J / r;
  };
  for (size_t i = 0; i < in.y.size(); ++i) {
    const Eigen::Vector3d& y0 = in.y[i];
    const Mat32& J0 = in.J[i];
    Eigen::Vector3d k1, k2, k3, k4;
    Mat32 K1, K2, K3, K4;
    eval(s0, y0, J0, k1, K1);
    eval(sm, y0 + 0.5 * dt * k1, J0 + 0.5 * dt * K1, k2, K2);
    eval(sm, y0 + 0.5 * dt * k2, J0 + 0.5 * dt * K2, k3, K3);
    eval(s1, y0 + dt * k3, J0 + dt * K3, k4, K4);
    const Eigen::Vector3d y = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    const Mat32 J = J0 + dt / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4);
    const double r = y.norm();
    out.y[i] = y / r;
    out.J[i] = (Eigen::Matrix3d::Identity() - out.y[i] * out.y[i].transpose()) * J / r;
  }
}

FlowState to_state(double t, const Batch& b) {
  FlowState s;
  s.t = t;
  s.phi.resize(3, b.y.size());
  for (size_t i = 0; i < b.y.size(); ++i) s.phi.col(i) = b.y[i];
  s.J = b.J;
  return s;
}

}  // namespace

std::vector<FlowState> integrate_points(const TimeDependentField& X, const Eigen::Matrix3Xd& x,
                                        const std::vector<Mat32>& frames, const std::vector<double>& times,
                                        const FlowOptions& options) {
  if (static_cast<Eigen::Index>(frames.size()) != x.cols())
    throw Error(ErrorCode::InvalidInput, "one frame per point required");
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0))
    throw Error(ErrorCode::InvalidInput, "flow times must be sorted and nonnegative");
  if (!(options.max_step > 0.0)) throw Error(ErrorCode::StepSizeUnderflow, "flow step must be positive");

  const long n_steps_unit = static_cast<long>(std::ceil(1.0 / options.max_step - 1e-9));
  const double dt = 1.0 / n_steps_unit;

  Batch cur;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    cur.y.push_back(x.col(i).normalized());
    cur.J.push_back(frames[i]);
  }
  std::vector<FlowState> out;
  out.reserve(times.size());
  long node = 0;
  FieldSlice s_node = X(0.0);
  Batch tmp;
  for (double t : times) {
    // advance the main trajectory to the last node at or before t
    const long target = static_cast<long>(std::floor(t / dt + 1e-12));
    while (node < target) {
      const double t0 = node * dt;
      FieldSlice sm = X(t0 + 0.5 * dt), s1 = X(t0 + dt);
      rk4_step(s_node, sm, s1, dt, cur, tmp, options.blowup);
      std::swap(cur, tmp);
      s_node = std::move(s1);
      ++node;
    }
    const double t0 = node * dt, h = t - t0;
    if (h <= 1e-14) {
      out.push_back(to_state(t, cur));
    } else {
      rk4_step(s_node, X(t0 + 0.5 * h), X(t), h, cur, tmp, options.blowup);
      out.push_back(to_state(t, tmp));
    }
  }
  return out;
}

std::vector<Mat32> grid_frames(const GridPtr& grid) {
  std::vector<Mat32> f(grid->size());
  for (int k = 0; k < grid->size(); ++k) {
    f[k].col(0) = grid->e_theta().col(k);
    f[k].col(1) = grid->e_phi().col(k);
  }
  return f;
}

namespace {

Mat32 local_frame(const Eigen::Vector3d& n) {
  const double s = std::hypot(n.x(), n.y());
  Mat32 e;
  e.col(0) << n.z() * n.x() / s, n.z() * n.y() / s, -s;
  e.col(1) << -n.y() / s, n.x() / s, 0.0;
  return e;
}

}  // namespace

Eigen::Matrix2d FlowMap::differential(int k, int node) const {
  return local_frame(states[k].phi.col(node)).transpose() * states[k].J[node];
}

double FlowMap::det(int k, int node) const {
  const Mat32& J = states[k].J[node];
  return states[k].phi.col(node).dot(J.col(0).cross(J.col(1)));
}

FlowOptions path_flow_options(const MetricPath& path, const FlowOptions& options) {
  const GridPtr& grid = path.grid();
  FlowOptions opt = options;
  opt.max_step = std::min(opt.max_step, path.options().max_flow_step);
  // half the grid spacing over max |X|, sampled on the path's moving segment
  double max_x = 0.0;
  for (double t : path.times()) {
    if (t >= 0.5) break;
    const TangentField X = path.area_fixing_field(t);
    max_x = std::max(max_x, (X.theta.cwiseAbs2() + X.phi.cwiseAbs2()).cwiseSqrt().maxCoeff());
  }
  if (max_x > 0.0) opt.max_step = std::min(opt.max_step, 0.5 * (kPi / grid->n_lat()) / max_x);
  return opt;
}

FlowMap integrate_flow(const MetricPath& path, const FlowOptions& options) {
  FlowMap fm;
  fm.grid = path.grid();
  fm.states = integrate_points(path.field(), fm.grid->points(), grid_frames(fm.grid), path.times(),
                               path_flow_options(path, options));
  return fm;
}

PulledBack pullback_metric(const MetricPath& path, const FlowState& state, bool with_derivative) {
  const PathSlice s = make_slice(path, state.t);
  PulledBack out;
  const auto n = state.phi.cols();
  out.g.resize(n);
  if (with_derivative) out.gdot.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = state.phi.col(i);
    const PathSlice::Local loc = s.at(p);
    const Mat32& J = state.J[i];
    const double e = std::exp(2.0 * loc.sigma);
    const Eigen::Matrix2d JJ = J.transpose() * J;
    out.g[i] = e * JJ;
    if (with_derivative) {
      const Eigen::Matrix2d S = J.transpose() * loc.f.DX * J;
      out.gdot[i] = e * (2.0 * (loc.sigma_dot + loc.grad_sigma.dot(loc.f.X)) * JJ + S + S.transpose());
    }
  }
  return out;
}

void assert_spd(const std::vector<Eigen::Matrix2d>& g) {
  for (size_t i = 0; i < g.size(); ++i)
    if (!(g[i](0, 0) > 0.0 && g[i].determinant() > 0.0))
      throw Error(ErrorCode::LostPositivity, "pulled-back metric not positive definite at node " + std::to_string(i));
}

void write_path_csv(const std::string& file, const MetricPath& path, const EigenCurve& curve) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + file);
  out.precision(17);
  out << "t,a,lambda1,area,min_u\n";
  for (size_t k = 0; k < curve.t.size(); ++k) {
    const double t = curve.t[k];
    out << t << ',' << path.a()(t) << ',' << curve.lambda1[k] << ',' << area(path.h(t)) << ','
        << curve.min_u[k] << '\n';
  }
}

void write_flow_binary(const std::string& file, const FlowMap& flow) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + file);
  const std::int32_t hdr[4] = {flow.grid->n_lat(), flow.grid->n_lon(), flow.grid->band(),
                               static_cast<std::int32_t>(flow.states.size())};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  for (const FlowState& s : flow.states) {
    out.write(reinterpret_cast<const char*>(&s.t), sizeof(double));
    for (Eigen::Index i = 0; i < s.phi.cols(); ++i) {
      const Eigen::Vector3d p = s.phi.col(i);
      out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(double));
      out.write(reinterpret_cast<const char*>(s.J[i].data()), 6 * sizeof(double));
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + file);
}

}  // namespace ahid
