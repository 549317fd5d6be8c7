#include "ahid/conformal_ops.hpp"
#include "ahid/errors.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace ahid;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField harmonic_field(const GridPtr& g, int l, int m, double amp) {
  return ScalarField(g, amp * spherical_harmonic(g, l, m).values());
}

ScalarField random_smooth_field(const GridPtr& g, int max_degree, double amp, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(g->basis_size());
  for (int l = 1; l <= max_degree; ++l)
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] = amp * nd(rng) / (l * l);
  return synthesize(g, c);
}

}  // namespace

TEST_CASE("Gauss curvature of round, scaled and perturbed metrics") {
  auto g = SphereGrid::for_band(16);
  auto k0 = gauss_curvature(ConformalMetric::round(g));
  CHECK((k0.values().array() - 1.0).abs().maxCoeff() < 1e-14);
  auto kc = gauss_curvature(ConformalMetric(ScalarField::constant(g, 0.7)));
  CHECK((kc.values().array() - std::exp(-1.4)).abs().maxCoeff() < 1e-12);

  ConformalMetric gp(harmonic_field(g, 2, 0, 0.1));
  auto k = gauss_curvature(gp);
  const double gb = g->weights().dot(k.values().cwiseProduct(gp.area_density()));
  CHECK(std::abs(gb - 4.0 * kPi) < 1e-8);
}

TEST_CASE("area and Hawking mass") {
  auto g = SphereGrid::for_band(16);
  CHECK(std::abs(area(ConformalMetric::round(g)) - 4.0 * kPi) < 1e-12);
  CHECK(std::abs(hawking_mass(4.0 * kPi) - 0.5) < 1e-15);
  CHECK(std::abs(hawking_mass(64.0 * kPi) - 2.0) < 1e-15);
  CHECK_THROWS_AS(hawking_mass(0.0), Error);

  // refinement oracle: a much denser grid agrees
  auto w_of = [](const GridPtr& gr) { return harmonic_field(gr, 1, 0, 0.3); };
  const double a16 = area(ConformalMetric(w_of(g)));
  auto dense = SphereGrid::make(GridSpec{g->n_lat() + 64, 2 * (g->n_lat() + 64), 16});
  const double a_dense = area(ConformalMetric(w_of(dense)));
  CHECK(std::abs(a16 - a_dense) < 1e-9 * a_dense);
}

TEST_CASE("first eigenpair of the round metric") {
  auto g = SphereGrid::for_band(16);
  auto ep = first_eigenpair(ConformalMetric::round(g));
  CHECK(std::abs(ep.lambda1 - 1.0) < 1e-12);
  CHECK((ep.u.values().array() - 1.0 / std::sqrt(4.0 * kPi)).abs().maxCoeff() < 1e-12);
  CHECK(ep.simple);
  CHECK(std::abs(ep.lambda2 - 3.0) < 1e-12);
}

TEST_CASE("eigenvalue under constant conformal scaling") {
  auto g = SphereGrid::for_band(12);
  for (double c : {-1.0, 0.5, 2.0}) {
    auto ep = first_eigenpair(ConformalMetric(ScalarField::constant(g, c)));
    CHECK(std::abs(ep.lambda1 - std::exp(-2 * c)) < 1e-12 * std::exp(-2 * c) + 1e-14);
  }
  std::mt19937 rng(1);
  ConformalMetric base(random_smooth_field(g, 4, 0.3, rng));
  auto e0 = first_eigenpair(base);
  for (double c : {-1.0, 0.5, 2.0}) {
    auto e1 = first_eigenpair(base.scaled(c));
    CHECK(std::abs(e1.lambda1 - std::exp(-2 * c) * e0.lambda1) < 1e-8 * std::abs(e0.lambda1) * std::exp(-2 * c));
    Eigen::Index i0, i1;
    e0.u.values().maxCoeff(&i0);
    e1.u.values().maxCoeff(&i1);
    CHECK(i0 == i1);
  }
}

TEST_CASE("eigenpair invariants on a perturbed metric") {
  auto g = SphereGrid::for_band(16);
  ConformalMetric gm(harmonic_field(g, 3, 1, 0.2));
  auto ep = first_eigenpair(gm);
  const double norm = g->weights().dot(ep.u.values().cwiseAbs2().cwiseProduct(gm.area_density()));
  CHECK(std::abs(norm - 1.0) < 1e-9);
  CHECK(ep.min_u > 0.0);
  CHECK(ep.residual < 1e-7);
  CHECK(std::abs(rayleigh_quotient(gm, ep.u) - ep.lambda1) < 1e-8);
}

TEST_CASE("variational oracle: random test functions never beat lambda1") {
  // Dense assembly at twice the band is the reference; random band-limited
  // test functions and their perturbations of the ground state stay above it.
  const int L = 8;
  auto g = SphereGrid::for_band(L);
  auto g2 = SphereGrid::for_band(2 * L);
  auto w_of = [](const GridPtr& gr) { return harmonic_field(gr, 3, 1, 0.2); };
  ConformalMetric gm(w_of(g)), gm2(w_of(g2));
  const double lam = first_eigenpair(gm).lambda1;
  const auto ep2 = first_eigenpair(gm2);
  CHECK(ep2.lambda1 <= lam + 1e-10);
  std::mt19937 rng(42);
  std::normal_distribution<double> nd;
  double best = 1e300;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd c(sh_count(2 * L));
    for (int i = 0; i < c.size(); ++i) c[i] = nd(rng) / (1 + sh_degree(i) * sh_degree(i));
    const double mix = trial < 100 ? 0.0 : 1e-3;
    const Eigen::VectorXd coeffs = trial < 100 ? c : Eigen::VectorXd(ep2.coeffs + mix * c);
    best = std::min(best, rayleigh_quotient(gm2, synthesize(g2, coeffs)));
  }
  CHECK(best >= ep2.lambda1 - 1e-7);
}

TEST_CASE("Rayleigh numerator is affine in the conformal exponent scale") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  auto g = SphereGrid::for_band(10);
  for (int trial = 0; trial < 20; ++trial) {
    ConformalMetric gm(random_smooth_field(g, 6, 0.5, rng));
    auto v = random_smooth_field(g, 8, 1.0, rng);
    const double z = ud(rng);
    const double n1 = rayleigh_numerator(v, gm, 1.0), n0 = rayleigh_numerator(v, gm, 0.0);
    const double nz = rayleigh_numerator(v, gm, z);
    CHECK(std::abs(nz - (z * n1 + (1 - z) * n0)) < 1e-11 * std::max(1.0, std::abs(nz)));
  }
}

TEST_CASE("Rayleigh quotient basics") {
  auto g = SphereGrid::for_band(8);
  auto round = ConformalMetric::round(g);
  CHECK(std::abs(rayleigh_quotient(round, ScalarField::constant(g, 1.0)) - 1.0) < 1e-14);
  CHECK_THROWS_AS(rayleigh_quotient(round, ScalarField::constant(g, 0.0)), Error);
}
