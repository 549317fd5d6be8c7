#include "ahid/chart_calculus.hpp"
#include "ahid/conformal_ops.hpp"
#include "ahid/errors.hpp"
#include "ahid/metric_path.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace ahid;

namespace {

// e^{2w} g_* in chart coordinates, w band-limited and evaluated exactly
struct ConformalChartMetric {
  Eigen::VectorXd w;
  int band;
  const Chart* chart;
  Eigen::Matrix2d operator()(const Eigen::Vector2d& z) const {
    return std::exp(2.0 * evaluate_coeffs(w, band, chart->to_sphere(z))) * round_chart_metric(z);
  }
};

Eigen::VectorXd y20_coeffs(int band, double amp) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(sh_count(band));
  c[sh_index(2, 0)] = amp;
  return c;
}

// exact K of e^{2w} g_*: e^{-2w}(1 - Lap_* w)
double exact_curvature(const Eigen::VectorXd& w, int band, const Eigen::Vector3d& p) {
  return std::exp(-2.0 * evaluate_coeffs(w, band, p)) * (1.0 - evaluate_coeffs(laplacian_coeffs(w), band, p));
}

double max_error_inside(const Chart& c, const Eigen::VectorXd& f, double radius, auto&& exact) {
  double err = 0.0;
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) {
      const Eigen::Vector2d z = c.coord(i, j);
      if (z.norm() > radius) continue;
      err = std::max(err, std::abs(f[c.index(i, j)] - exact(c.to_sphere(z))));
    }
  return err;
}

}  // namespace

TEST_CASE("chart maps and transition") {
  auto atlas = ChartAtlas::make(41);
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d p = Eigen::Vector3d(nd(rng), nd(rng), nd(rng)).normalized();
    for (const Chart* c : {&atlas.north, &atlas.south})
      CHECK((c->to_sphere(c->from_sphere(p)) - p).norm() < 1e-12);
    const Eigen::Vector2d zn = atlas.north.from_sphere(p);
    CHECK((ChartAtlas::transition(zn) - atlas.south.from_sphere(p)).norm() < 1e-12 * (1 + zn.squaredNorm()));
    CHECK((ChartAtlas::transition(ChartAtlas::transition(zn)) - zn).norm() < 1e-12 * (1 + zn.norm()));
    // owner chart covers p with |z| <= 1
    CHECK(atlas.owner(p).from_sphere(p).norm() <= 1.0 + 1e-12);
  }
  // frame against differences of the chart map
  const Eigen::Vector2d z(0.3, -0.7);
  const double h = 1e-6;
  for (const Chart* c : {&atlas.north, &atlas.south}) {
    const Mat32 J = c->frame(z);
    for (int a = 0; a < 2; ++a) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[a] = h;
      CHECK((J.col(a) - (c->to_sphere(z + e) - c->to_sphere(z - e)) / (2 * h)).norm() < 1e-8);
    }
    CHECK((J.transpose() * J - round_chart_metric(z)).norm() < 1e-14);
  }
}

TEST_CASE("curvature of flat and round chart metrics") {
  auto atlas = ChartAtlas::make(181);
  auto flat = ChartMetric::sample(atlas.north, [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity(); });
  auto K0 = curvature_general(flat);
  for (int k = 0; k < K0.size(); ++k)
    if (!std::isnan(K0[k])) CHECK(K0[k] == 0.0);
  for (const Chart* c : {&atlas.north, &atlas.south}) {
    auto K = curvature_general(ChartMetric::sample(*c, round_chart_metric));
    CHECK(max_error_inside(*c, K, 1.0, [](const Eigen::Vector3d&) { return 1.0; }) < 1e-6);
  }
  auto bad = ChartMetric::sample(atlas.north, [](const Eigen::Vector2d& z) {
    return Eigen::Matrix2d((z.x() > 0.5 ? -1.0 : 1.0) * Eigen::Matrix2d::Identity());
  });
  CHECK_THROWS_AS(curvature_general(bad), Error);
}

TEST_CASE("curvature of a conformal metric matches the spectral formula") {
  const int band = 8;
  const Eigen::VectorXd w = y20_coeffs(band, 0.2);
  auto atlas = ChartAtlas::make(181);
  for (const Chart* c : {&atlas.north, &atlas.south}) {
    auto K = curvature_general(ChartMetric::sample(*c, ConformalChartMetric{w, band, c}));
    CHECK(max_error_inside(*c, K, 1.0, [&](const Eigen::Vector3d& p) { return exact_curvature(w, band, p); }) <
          1e-5);
  }
}

TEST_CASE("fourth-order convergence of curvature and Laplacian") {
  const int band = 8;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(sh_count(band));
  w[sh_index(2, 0)] = 0.2;
  w[sh_index(3, 1)] = -0.1;
  w[sh_index(1, -1)] = 0.15;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(sh_count(band));
  f[sh_index(3, 2)] = 1.0;
  auto lap_exact = [&](const Eigen::Vector3d& p) {
    return std::exp(-2.0 * evaluate_coeffs(w, band, p)) * evaluate_coeffs(laplacian_coeffs(f), band, p);
  };
  double errK[2], errL[2];
  int idx = 0;
  for (int n : {31, 61}) {
    Chart c{Pole::North, n, 1.5};
    auto m = ChartMetric::sample(c, ConformalChartMetric{w, band, &c});
    Eigen::VectorXd fv(c.size());
    for (int k = 0; k < c.size(); ++k) fv[k] = evaluate_coeffs(f, band, c.points().col(k));
    errK[idx] = max_error_inside(c, curvature_general(m), 1.0,
                                 [&](const Eigen::Vector3d& p) { return exact_curvature(w, band, p); });
    errL[idx] = max_error_inside(c, laplace_beltrami_general(m, fv), 1.0, lap_exact);
    ++idx;
  }
  MESSAGE("curvature error ratio " << errK[0] / errK[1] << ", Laplacian error ratio " << errL[0] / errL[1]);
  CHECK(errK[0] / errK[1] >= 8.0);
  CHECK(errL[0] / errL[1] >= 8.0);
}

TEST_CASE("Laplace-Beltrami on round and conformal metrics") {
  const int band = 8;
  auto atlas = ChartAtlas::make(181);
  Eigen::VectorXd y = y20_coeffs(band, 1.0);
  const Eigen::VectorXd w = y20_coeffs(band, 0.2);
  for (const Chart* c : {&atlas.north, &atlas.south}) {
    Eigen::VectorXd f(c->size());
    const Eigen::Matrix3Xd pts = c->points();
    for (int k = 0; k < c->size(); ++k) f[k] = evaluate_coeffs(y, band, pts.col(k));
    auto round = ChartMetric::sample(*c, round_chart_metric);
    auto lap = laplace_beltrami_general(round, f);
    CHECK(max_error_inside(*c, lap, 1.0, [&](const Eigen::Vector3d& p) { return -6.0 * evaluate_coeffs(y, band, p); }) <
          1e-5);
    auto lc = laplace_beltrami_general(round, Eigen::VectorXd::Constant(c->size(), 2.5));
    for (int k = 0; k < lc.size(); ++k)
      if (!std::isnan(lc[k])) CHECK(lc[k] == 0.0);
    auto conf = ChartMetric::sample(*c, ConformalChartMetric{w, band, c});
    auto lg = laplace_beltrami_general(conf, f);
    CHECK(max_error_inside(*c, lg, 1.0, [&](const Eigen::Vector3d& p) {
            return -6.0 * std::exp(-2.0 * evaluate_coeffs(w, band, p)) * evaluate_coeffs(y, band, p);
          }) < 1e-5);
  }
}

TEST_CASE("chart covariance on the overlap annulus") {
  const int band = 8;
  const Eigen::VectorXd w = y20_coeffs(band, 0.2) + 0.1 * Eigen::VectorXd::Unit(sh_count(band), sh_index(2, 1));
  auto atlas = ChartAtlas::make(181);
  auto mn = ChartMetric::sample(atlas.north, ConformalChartMetric{w, band, &atlas.north});
  auto ms = ChartMetric::sample(atlas.south, ConformalChartMetric{w, band, &atlas.south});
  AtlasScalar K{curvature_general(mn), curvature_general(ms)};
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> ur(1.0 / 1.3, 1.3), ua(0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = ur(rng), th = ua(rng);
    const Eigen::Vector2d zn(r * std::cos(th), r * std::sin(th));
    const Eigen::Vector2d zs = ChartAtlas::transition(zn);
    CHECK(std::abs(interpolate(atlas.north, K.north, zn) - interpolate(atlas.south, K.south, zs)) < 1e-5);
    // metric components transform with the transition Jacobian
    const Eigen::Matrix2d Jt = ChartAtlas::transition_jacobian(zn);
    const Eigen::Matrix2d gn = ConformalChartMetric{w, band, &atlas.north}(zn);
    const Eigen::Matrix2d gs = ConformalChartMetric{w, band, &atlas.south}(zs);
    CHECK((Jt.transpose() * gs * Jt - gn).norm() <= 1e-5 * gn.norm());
  }
}

TEST_CASE("trace and norm algebra") {
  const Eigen::Matrix2d m = (Eigen::Matrix2d() << 2.0, 0.3, 0.3, 1.5).finished();
  auto tn = trace_and_norm(m, m);
  CHECK(std::abs(tn.trace - 2.0) < 1e-14);
  CHECK(std::abs(tn.norm2 - 2.0) < 1e-14);
  const double eps = 1e-2, t = 0.4;
  auto tw = trace_and_norm((1 + eps * t * t) * m, 2 * eps * t * m);
  CHECK(std::abs(tw.trace - 4 * eps * t / (1 + eps * t * t)) < 1e-15);
  std::mt19937 rng(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Matrix2d a;
    a << nd(rng), nd(rng), nd(rng), nd(rng);
    const Eigen::Matrix2d spd = a * a.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d s;
    s << nd(rng), nd(rng), 0, nd(rng);
    s(1, 0) = s(0, 1);
    auto r = trace_and_norm(spd, s);
    CHECK(r.trace * r.trace <= 2.0 * r.norm2 * (1 + 1e-12));
  }
}

TEST_CASE("time derivatives from five samples") {
  std::vector<std::vector<Eigen::Matrix2d>> s(5, std::vector<Eigen::Matrix2d>(1));
  const double t = 0.3, d = 1e-3;
  auto m = [](double x) {
    return (Eigen::Matrix2d() << std::exp(x), std::sin(x), std::sin(x), 1 + x * x * x).finished();
  };
  for (int k = 0; k < 5; ++k) s[k][0] = m(t + (k - 2) * d);
  std::vector<Eigen::Matrix2d> d1, d2;
  time_derivatives({&s[0], &s[1], &s[2], &s[3], &s[4]}, d, d1, d2);
  const Eigen::Matrix2d e1 = (Eigen::Matrix2d() << std::exp(t), std::cos(t), std::cos(t), 3 * t * t).finished();
  const Eigen::Matrix2d e2 = (Eigen::Matrix2d() << std::exp(t), -std::sin(t), -std::sin(t), 6 * t).finished();
  CHECK((d1[0] - e1).norm() < 1e-11);
  CHECK((d2[0] - e2).norm() < 1e-7);
}

TEST_CASE("pulled-back Rayleigh quotient equals the conformal eigenvalue") {
  const int band = 12;
  auto g = SphereGrid::for_band(band);
  MetricPath path(ConformalMetric(ScalarField(g, 0.2 * spherical_harmonic(g, 2, 0).values())));
  const double t = 0.2;
  const EigenPair& ep = path.eigen(t);
  const double zt = path.zeta()(t), at = path.a()(t);
  auto atlas = ChartAtlas::make(61);
  ChartIntegrand data[2];
  PointBasis pb(band);
  for (int side = 0; side < 2; ++side) {
    const Chart& c = side == 0 ? atlas.north : atlas.south;
    auto st = integrate_points(path.field(), c.points(), c.frames(), {t});
    auto pbm = pullback_metric(path, st[0], false);
    ChartIntegrand& d = data[side];
    d.g = pbm.g;
    d.v.resize(c.size());
    d.K.resize(c.size());
    d.dv.resize(c.size());
    for (int k = 0; k < c.size(); ++k) {
      const Eigen::Vector3d p = st[0].phi.col(k);
      pb.evaluate(p, 1);
      d.v[k] = pb.value(ep.coeffs);
      const Eigen::Vector3d gu = pb.surface_gradient(ep.coeffs);
      d.dv[k] = st[0].J[k].transpose() * gu;
      const double sigma = zt * pb.value(path.w_coeffs()) + at;
      d.K[k] = std::exp(-2 * sigma) * (1 - zt * pb.value(path.lap_w_coeffs()));
    }
  }
  const double rq = rayleigh_quotient_charts(atlas, data[0], data[1]);
  CHECK(std::abs(rq - ep.lambda1) < 1e-4);
}
