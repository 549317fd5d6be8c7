#include "ahid/degenerate_finder.hpp"

#include "ahid/chart_calculus.hpp"
#include "ahid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ahid {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxLevel = 20;
// Beyond this spread of 2 t A w the area weight spans more than e^40 and the
// Cholesky reduction of the mass matrix is no longer trustworthy.
constexpr double kMaxLogSpread = 40.0;

// Polar quadrature on the unit disk: Gauss-Legendre in r, trapezoid in theta.
template <class Fn>
double disk_quadrature(Fn&& f, int n_r = 48, int n_theta = 64) {
  Eigen::VectorXd x, wts;
  gauss_legendre(n_r, x, wts);
  double sum = 0.0;
  for (int i = 0; i < n_r; ++i) {
    const double r = 0.5 * (x[i] + 1.0);
    double ring = 0.0;
    for (int k = 0; k < n_theta; ++k) {
      const double th = 2.0 * kPi * k / n_theta;
      ring += f(Eigen::Vector2d(r * std::cos(th), r * std::sin(th)), r);
    }
    sum += 0.5 * wts[i] * r * ring * (2.0 * kPi / n_theta);
  }
  return sum;
}

double lap_w_at(const ScalarField& w, const Eigen::VectorXd& lap_coeffs, const Eigen::Vector3d& q) {
  return evaluate_coeffs(lap_coeffs, w.grid()->band(), q);
}

double spread(const ScalarField& w) { return w.values().maxCoeff() - w.values().minCoeff(); }

}  // namespace

ConformalRay::ConformalRay(ScalarField w, double A) : w_(std::move(w)), A_(A) {
  if (!(A > 0.0) || !std::isfinite(A)) throw Error(ErrorCode::InvalidInput, "ray slope A must be positive");
  if (!(spread(w_) > 1e-12)) throw Error(ErrorCode::InvalidInput, "seed w is constant");
}

ConformalMetric ConformalRay::at(double t) const {
  return ConformalMetric(ScalarField(w_.grid(), t * A_ * w_.values()));
}

ScalarField default_seed(const GridPtr& grid) {
  return ScalarField::from_function(grid, [](const Eigen::Vector3d& p) { return 0.5 * (3 * p.z() * p.z() - 1); });
}

PositivePoint find_positive_laplacian_point(const ScalarField& w) {
  const GridPtr& grid = w.grid();
  const Eigen::VectorXd lap = laplacian_round(w).values();
  Eigen::Index k = 0;
  const double mx = lap.maxCoeff(&k);
  if (!(mx > 1e-10 * std::max(1.0, w.values().cwiseAbs().maxCoeff())))
    throw Error(ErrorCode::NoPositivePoint, "Lap_* w has no positive value; w is constant");
  PositivePoint pp;
  pp.p = grid->points().col(k);
  pp.max_lap = mx;
  pp.c = 0.5 * mx;
  pp.radius = kPi;
  for (int j = 0; j < grid->size(); ++j)
    if (lap[j] < pp.c)
      pp.radius = std::min(pp.radius, std::acos(std::clamp(pp.p.dot(grid->points().col(j)), -1.0, 1.0)));
  return pp;
}

DyadicChart::DyadicChart(const Eigen::Vector3d& p, int level)
    : p_(p.normalized()), level_(level), scale_(std::ldexp(1.0, -level)) {
  e1_ = p_.unitOrthogonal();
  e2_ = p_.cross(e1_);
}

Eigen::Vector3d DyadicChart::to_sphere(const Eigen::Vector2d& x) const {
  const Eigen::Vector2d z = scale_ * x;
  const double r2 = z.squaredNorm();
  return ((1.0 - r2) * p_ + 2.0 * (z[0] * e1_ + z[1] * e2_)) / (1.0 + r2);
}

double DyadicChart::metric_factor(const Eigen::Vector2d& x) const {
  const double s2 = scale_ * scale_;
  return 4.0 * s2 / std::pow(1.0 + s2 * x.squaredNorm(), 2);
}

double DyadicChart::geodesic_radius() const { return 2.0 * std::atan(scale_); }

double certificate_profile(double r) { return r < 1.0 ? (1.0 - r) * (1.0 - r) : 0.0; }

double certificate_flat_laplacian(double r) { return 2.0 - 2.0 * (1.0 - r) / r; }

double SliceCertificate::value(const Eigen::Vector3d& q) const {
  const Eigen::Vector3d n = p.normalized();
  const double d = n.dot(q);
  if (d <= -1.0 + 1e-15) return 0.0;
  // inverse stereographic projection from -p
  const Eigen::Vector3d tang = q - d * n;
  const double z = tang.norm() / (1.0 + d);
  return certificate_profile(z / chart().scale());
}

double chart_laplacian(const DyadicChart& chart, const Eigen::Vector2d& x, double h) {
  // rescaled chart metric 4^N gamma_N, which tends to 4 delta
  auto metric = [&](const Eigen::Vector2d& y) { return round_chart_metric(chart.scale() * y); };
  auto inv_det = [&](const Eigen::Vector2d& y, Eigen::Matrix2d& inv) {
    const Eigen::Matrix2d g = metric(y);
    inv = g.inverse();
    return g.determinant();
  };
  Eigen::Matrix2d inv;
  const double det = inv_det(x, inv);
  // fourth-order differences of g^{ij} and det g
  Eigen::Matrix2d dinv[2];
  double ddet[2];
  for (int a = 0; a < 2; ++a) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[a] = h;
    Eigen::Matrix2d i1, i2, i3, i4;
    const double d1 = inv_det(x + 2 * e, i1), d2 = inv_det(x + e, i2), d3 = inv_det(x - e, i3),
                 d4 = inv_det(x - 2 * e, i4);
    dinv[a] = (-i1 + 8 * i2 - 8 * i3 + i4) / (12 * h);
    ddet[a] = (-d1 + 8 * d2 - 8 * d3 + d4) / (12 * h);
  }
  const double r = x.norm();
  const Eigen::Vector2d grad = -2.0 * (1.0 - r) * x / r;
  const Eigen::Matrix2d hess =
      2.0 * x * x.transpose() / (r * r) - 2.0 * (1.0 - r) * (Eigen::Matrix2d::Identity() / r - x * x.transpose() / (r * r * r));
  double lap = (inv.cwiseProduct(hess)).sum();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) lap += (dinv[i](i, j) + inv(i, j) * ddet[i] / (2 * det)) * grad[j];
  return lap;
}

SliceCertificate build_certificate(const ScalarField& w, const PositivePoint& pp) {
  const Eigen::VectorXd lap_coeffs = laplacian_coeffs(w.coeffs());
  for (int n = 1; n <= kMaxLevel; ++n) {
    const DyadicChart chart(pp.p, n);
    SliceCertificate cert;
    cert.p = pp.p;
    cert.level = n;
    cert.c = pp.c;

    // Lap_* w >= c on the closed chart disk
    double min_lw = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 24; ++i)
      for (int k = 0; k < 48; ++k) {
        const double r = i / 24.0, th = 2 * kPi * k / 48;
        min_lw = std::min(min_lw, lap_w_at(w, lap_coeffs, chart.to_sphere({r * std::cos(th), r * std::sin(th)})));
      }
    cert.min_lap_w = min_lw;
    if (min_lw < pp.c) continue;

    double min_lap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 24; ++i)
      for (int k = 0; k < 48; ++k) {
        const double r = cert.inner_radius + (1.0 - cert.inner_radius) * i / 24.0, th = 2 * kPi * k / 48;
        min_lap = std::min(min_lap, chart_laplacian(chart, {r * std::cos(th), r * std::sin(th)}));
      }
    cert.min_lap_annulus = min_lap;
    if (!(min_lap > 0.0)) continue;

    cert.dirichlet_energy = disk_quadrature([](const Eigen::Vector2d&, double r) { return 4.0 * (1 - r) * (1 - r); });
    cert.mass = disk_quadrature([&](const Eigen::Vector2d& x, double r) {
      return std::pow(certificate_profile(r), 2) * chart.metric_factor(x);
    });
    return cert;
  }
  throw Error(ErrorCode::MaxDepthExceeded,
              "no chart level up to " + std::to_string(kMaxLevel) + " keeps Lap_* w >= c; raise the band or move p");
}

ThresholdReport choose_A(const SliceCertificate& cert, const ScalarField&) {
  const DyadicChart chart = cert.chart();
  ThresholdReport rep;
  // U \ V is the closed disk r <= inner_radius; the chart is centered, so the
  // integrand depends on r only. v Lap v tends to -infinity at the center.
  rep.sup_v_lap_v = -std::numeric_limits<double>::infinity();
  rep.inf_v2 = std::numeric_limits<double>::infinity();
  constexpr int n = 2000;
  for (int i = 1; i <= n; ++i) {
    const double r = cert.inner_radius * i / n;
    const double v = certificate_profile(r);
    const double lap = certificate_flat_laplacian(r) / chart.metric_factor({r, 0.0});
    rep.sup_v_lap_v = std::max(rep.sup_v_lap_v, v * lap);
    rep.inf_v2 = std::min(rep.inf_v2, v * v);
  }
  rep.pointwise = (1.0 + rep.sup_v_lap_v / rep.inf_v2) / cert.c;
  rep.energy = (1.0 + cert.dirichlet_energy / cert.mass) / cert.c;
  rep.A = 1.1 * std::max(rep.pointwise, rep.energy);
  return rep;
}

double certificate_rayleigh(const SliceCertificate& cert, const ScalarField& w, double A) {
  const DyadicChart chart = cert.chart();
  const Eigen::VectorXd lap_coeffs = laplacian_coeffs(w.coeffs());
  const double wp = w.evaluate(chart.center());
  const double potential = disk_quadrature([&](const Eigen::Vector2d& x, double r) {
    const double v = certificate_profile(r);
    return (1.0 - A * lap_w_at(w, lap_coeffs, chart.to_sphere(x))) * v * v * chart.metric_factor(x);
  });
  // area weight relative to its value at p, to keep e^{2Aw} in range
  const double den = disk_quadrature([&](const Eigen::Vector2d& x, double r) {
    const double v = certificate_profile(r);
    return v * v * std::exp(2 * A * (w.evaluate(chart.to_sphere(x)) - wp)) * chart.metric_factor(x);
  });
  const double num = cert.dirichlet_energy + potential;
  return std::copysign(std::exp(std::log(std::abs(num)) - std::log(den) - 2 * A * wp), num);
}

int lambda_sign(const ConformalMetric& g) {
  const GridPtr& grid = g.grid();
  const Eigen::MatrixXd& Y = grid->basis();
  const Eigen::VectorXd q = grid->weights().cwiseProduct((1.0 - g.laplacian_w().array()).matrix());
  Eigen::MatrixXd K = Y.transpose() * q.asDiagonal() * Y;
  for (int i = 0; i < K.rows(); ++i) {
    const int l = sh_degree(i);
    K(i, i) += double(l) * (l + 1);
  }
  const double mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues()[0];
  return mu > 1e-13 ? 1 : (mu < -1e-13 ? -1 : 0);
}

namespace {

CurveProbe probe(const ConformalRay& ray, double t) {
  CurveProbe p;
  p.t = t;
  const ConformalMetric g = ray.at(t);
  p.sign = lambda_sign(g);
  p.lambda1 = 2 * t * ray.A() * spread(ray.w()) <= kMaxLogSpread ? first_eigenpair(g).lambda1
                                                                 : std::numeric_limits<double>::quiet_NaN();
  if (std::isfinite(p.lambda1) && p.sign != 0 && (p.lambda1 > 0) != (p.sign > 0))
    throw Error(ErrorCode::EigensolverFailure, "eigenvalue sign disagrees with the stiffness inertia at t = " +
                                                   std::to_string(t));
  return p;
}

int sign_of(const CurveProbe& p) { return std::isfinite(p.lambda1) ? (p.lambda1 > 0) - (p.lambda1 < 0) : p.sign; }

}  // namespace

ConformalMetric DegenerateResult::metric() const { return ConformalMetric(w_t0); }

DegenerateResult eigenvalue_curve_and_root(const ConformalRay& ray, double tol) {
  DegenerateResult res;
  res.lambda_start = first_eigenpair(ray.at(0.0)).lambda1;

  // dyadic probes down from t = 1 until lambda turns positive
  double t = 1.0;
  res.coarse.push_back(probe(ray, t));
  if (sign_of(res.coarse.back()) >= 0)
    throw Error(ErrorCode::NoSignChange, "lambda1(g_1) >= 0; A is below the threshold");
  for (int k = 1; k <= 60; ++k) {
    t *= 0.5;
    res.coarse.push_back(probe(ray, t));
    if (sign_of(res.coarse.back()) > 0) break;
  }
  if (sign_of(res.coarse.back()) <= 0) throw Error(ErrorCode::NoSignChange, "no positive probe along the ray");

  CurveProbe lo = res.coarse.back(), hi = res.coarse[res.coarse.size() - 2];
  CurveProbe mid = lo;
  for (int it = 0; it < 200; ++it) {
    mid = probe(ray, 0.5 * (lo.t + hi.t));
    res.history.push_back(mid);
    if (std::isfinite(mid.lambda1) && std::abs(mid.lambda1) <= tol) break;
    (sign_of(mid) > 0 ? lo : hi) = mid;
    if (hi.t - lo.t < 1e-15) break;
  }
  if (!std::isfinite(mid.lambda1) || std::abs(mid.lambda1) > tol)
    throw Error(ErrorCode::NoSignChange, "bisection did not reach |lambda1| <= tol");
  res.t_lo = lo.t;
  res.t_hi = hi.t;
  res.t0 = mid.t;
  res.lambda_t0 = mid.lambda1;
  res.w_t0 = ScalarField(ray.w().grid(), mid.t * ray.A() * ray.w().values());

  // continuity monitor over the initial bracket and every probe inside it
  std::vector<CurveProbe> all(res.coarse.end() - 2, res.coarse.end());
  all.insert(all.end(), res.history.begin(), res.history.end());
  std::sort(all.begin(), all.end(), [](const CurveProbe& a, const CurveProbe& b) { return a.t < b.t; });
  for (size_t k = 1; k < all.size(); ++k)
    if (std::isfinite(all[k].lambda1) && std::isfinite(all[k - 1].lambda1))
      res.max_jump = std::max(res.max_jump, std::abs(all[k].lambda1 - all[k - 1].lambda1));
  return res;
}

DegenerateResult find_degenerate(const ScalarField& w, double tol) {
  const PositivePoint pp = find_positive_laplacian_point(w);
  const SliceCertificate cert = build_certificate(w, pp);
  const ThresholdReport th = choose_A(cert, w);
  const double rq = certificate_rayleigh(cert, w, th.A);
  if (!(rq < 0.0))
    throw Error(ErrorCode::NoSignChange, "certificate Rayleigh quotient on g_1 is not negative");
  DegenerateResult res = eigenvalue_curve_and_root(ConformalRay(w, th.A), tol);
  res.point = pp;
  res.certificate = cert;
  res.threshold = th;
  res.certificate_value = rq;
  return res;
}

}  // namespace ahid
