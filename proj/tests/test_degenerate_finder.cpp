#include "ahid/degenerate_finder.hpp"
#include "ahid/errors.hpp"

#include "doctest.h"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>

using namespace ahid;

namespace {

constexpr double kPi = std::numbers::pi;

// t0 for the default seed at band 16, recorded from the first verified run.
constexpr double kDefaultT0 = 0.00916499365121;

}  // namespace

TEST_CASE("positive Laplacian point") {
  GridPtr g = SphereGrid::for_band(16);
  const PositivePoint pz = find_positive_laplacian_point(ScalarField::from_function(g, [](const Eigen::Vector3d& p) { return p.z(); }));
  const double z_min = g->points().row(2).minCoeff();
  CHECK(pz.p.z() == doctest::Approx(z_min).epsilon(1e-14));  // the node nearest the south pole
  CHECK(pz.c == doctest::Approx(-z_min).epsilon(1e-10));     // half of max(-2z)
  CHECK(pz.c == doctest::Approx(1.0).epsilon(5e-3));

  const ScalarField y20 = spherical_harmonic(g, 2, 0);
  const PositivePoint py = find_positive_laplacian_point(y20);
  const double ymax = y20.values().cwiseAbs().maxCoeff();
  CHECK(py.max_lap == doctest::Approx(3 * ymax).epsilon(1e-2));  // -6 Y at the minimum of Y
  CHECK(std::abs(py.p.z()) < 0.1);

  // random band-8 seed: the returned disk keeps Lap_* w >= c on the grid
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  GridPtr g8 = SphereGrid::for_band(8);
  Eigen::VectorXd c(sh_count(8));
  for (int i = 0; i < c.size(); ++i) c[i] = i == 0 ? 0.0 : nd(rng) / (1 + sh_degree(i));
  const ScalarField w = ScalarField::from_coeffs(g8, c);
  const PositivePoint pr = find_positive_laplacian_point(w);
  const Eigen::VectorXd lap = laplacian_round(w).values();
  for (int k = 0; k < g8->size(); ++k)
    if (std::acos(std::clamp(pr.p.dot(g8->points().col(k)), -1.0, 1.0)) < pr.radius) CHECK(lap[k] >= pr.c);

  CHECK_THROWS_AS(find_positive_laplacian_point(ScalarField::constant(g, 2.0)), Error);
}

TEST_CASE("certificate profile and chart Laplacian") {
  CHECK(certificate_flat_laplacian(2.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i <= 20; ++i) CHECK(certificate_flat_laplacian(2.0 / 3.0 + i / 60.0) >= 1.0 - 1e-15);
  CHECK(certificate_profile(0.0) == 1.0);
  CHECK(certificate_profile(1.0) == 0.0);
  CHECK(certificate_profile(1.5) == 0.0);

  // the round metric in the level-3 chart is conformal to the flat one
  const DyadicChart chart(Eigen::Vector3d(0.3, -0.4, 0.5).normalized(), 3);
  for (double r : {0.7, 0.8, 0.95})
    for (double th : {0.0, 1.0, 4.0}) {
      const Eigen::Vector2d x(r * std::cos(th), r * std::sin(th));
      const double s2 = chart.scale() * chart.scale();
      const double expect = std::pow(1 + s2 * r * r, 2) / 4.0 * certificate_flat_laplacian(r);
      CHECK(chart_laplacian(chart, x) == doctest::Approx(expect).epsilon(1e-9));
      CHECK(chart_laplacian(chart, x) > 0.0);
    }
  // chart points land on the sphere at the right distance from p
  const Eigen::Vector3d q = chart.to_sphere({1.0, 0.0});
  CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::acos(q.dot(chart.center())) == doctest::Approx(chart.geodesic_radius()).epsilon(1e-12));
}

TEST_CASE("certificate and threshold for the default seed") {
  GridPtr g = SphereGrid::for_band(16);
  const ScalarField w = default_seed(g);
  const PositivePoint pp = find_positive_laplacian_point(w);
  const SliceCertificate cert = build_certificate(w, pp);
  CHECK(cert.level >= 1);
  CHECK(cert.min_lap_w >= cert.c);
  CHECK(cert.min_lap_annulus > 0.0);
  CHECK(cert.dirichlet_energy == doctest::Approx(2 * kPi / 3).epsilon(1e-12));
  // v vanishes outside U and equals 1 at p
  CHECK(cert.value(pp.p) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cert.value(-pp.p) == 0.0);
  CHECK(cert.value(cert.chart().to_sphere({0.5, 0.0})) == doctest::Approx(0.25).epsilon(1e-12));

  const ThresholdReport th = choose_A(cert, w);
  CHECK(th.inf_v2 == doctest::Approx(1.0 / 81).epsilon(1e-12));
  CHECK(th.A == doctest::Approx(1.1 * std::max(th.pointwise, th.energy)));
  SliceCertificate twice = cert;
  twice.c *= 2;
  const ThresholdReport th2 = choose_A(twice, w);
  CHECK(th2.pointwise == doctest::Approx(th.pointwise / 2).epsilon(1e-14));
  CHECK(th2.energy == doctest::Approx(th.energy / 2).epsilon(1e-14));

  CHECK(certificate_rayleigh(cert, w, th.A) < 0.0);
  // A = 0: the quotient is (E + int v^2) / int v^2 on the round sphere
  CHECK(certificate_rayleigh(cert, w, 0.0) == doctest::Approx((cert.dirichlet_energy + cert.mass) / cert.mass));
  MESSAGE("level " << cert.level << ", A pointwise " << th.pointwise << ", energy " << th.energy);
}

TEST_CASE("eigenvalue curve and root") {
  GridPtr g = SphereGrid::for_band(16);
  const DegenerateResult r = find_degenerate(default_seed(g));
  CHECK(r.lambda_start == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.coarse.front().t == 1.0);
  CHECK(r.coarse.front().sign < 0);
  CHECK(r.certificate_value < 0.0);
  CHECK(r.t0 > 0.0);
  CHECK(r.t0 < 1.0);
  CHECK(std::abs(r.lambda_t0) <= 1e-7);
  CHECK(std::abs(first_eigenpair(r.metric()).lambda1) <= 1e-7);
  CHECK(r.t_lo < r.t0);
  CHECK(r.t0 < r.t_hi);
  const CurveProbe& lo0 = r.coarse.back();
  const CurveProbe& hi0 = r.coarse[r.coarse.size() - 2];
  CHECK(r.max_jump < std::abs(lo0.lambda1 - hi0.lambda1));  // no jump beyond the bracket span
  MESSAGE(std::setprecision(12) << "t0 = " << r.t0 << ", A = " << r.threshold.A << ", probes " << r.history.size());
  CHECK(r.t0 == doctest::Approx(kDefaultT0).epsilon(1e-6));

  CHECK_THROWS_AS(eigenvalue_curve_and_root(ConformalRay(default_seed(g), 0.5)), Error);
  CHECK_THROWS_AS(ConformalRay(ScalarField::constant(g, 1.0), 1.0), Error);
}
