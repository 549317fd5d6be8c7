#include "ahid/errors.hpp"
#include "ahid/sphere_spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

using namespace ahid;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd random_coeffs(int band, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(sh_count(band));
  for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
  return c;
}

}  // namespace

TEST_CASE("grid quadrature weights sum to the round area") {
  for (int band : {4, 16, 32}) {
    auto g = SphereGrid::for_band(band);
    CHECK(std::abs(g->weights().sum() - 4.0 * kPi) < 1e-12);
    CHECK(g->n_lat() >= band + 1);
    CHECK(g->n_lon() >= 2 * band + 1);
  }
  CHECK_THROWS_AS(SphereGrid::make(GridSpec{4, 30, 8}), Error);
}

TEST_CASE("analyze: constant and single-harmonic fields") {
  auto g = SphereGrid::for_band(16);
  auto one = ScalarField::constant(g, 1.0);
  auto h = analyze(one);
  CHECK(std::abs(h.coeffs[0] - 2.0 * std::sqrt(kPi)) < 1e-12);
  CHECK(h.coeffs.tail(h.coeffs.size() - 1).cwiseAbs().maxCoeff() < 1e-12);

  // Y_{2,1} built from the closed form sqrt(15/4pi) x z
  auto y21 = ScalarField::from_function(g, [](const Eigen::Vector3d& n) {
    return std::sqrt(15.0 / (4.0 * kPi)) * n.x() * n.z();
  });
  auto c = analyze(y21).coeffs;
  CHECK(std::abs(c[sh_index(2, 1)] - 1.0) < 1e-12);
  c[sh_index(2, 1)] = 0.0;
  CHECK(c.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("closed-form low harmonics match the convention") {
  auto g = SphereGrid::for_band(8);
  const Eigen::Vector3d n = Eigen::Vector3d(0.3, -0.5, 0.7).normalized();
  PointBasis pb(8);
  pb.evaluate(n, 0);
  CHECK(std::abs(pb.values()[sh_index(1, 0)] - std::sqrt(3.0 / (4 * kPi)) * n.z()) < 1e-14);
  CHECK(std::abs(pb.values()[sh_index(1, 1)] - std::sqrt(3.0 / (4 * kPi)) * n.x()) < 1e-14);
  CHECK(std::abs(pb.values()[sh_index(1, -1)] - std::sqrt(3.0 / (4 * kPi)) * n.y()) < 1e-14);
  CHECK(std::abs(pb.values()[sh_index(2, 0)] -
                 std::sqrt(5.0 / (16 * kPi)) * (3 * n.z() * n.z() - 1)) < 1e-14);
  CHECK(std::abs(pb.values()[sh_index(2, -2)] - std::sqrt(15.0 / (4 * kPi)) * n.x() * n.y()) < 1e-14);
}

TEST_CASE("round trip and Parseval on random band-limited fields") {
  std::mt19937 rng(7);
  auto g = SphereGrid::for_band(16);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd c = random_coeffs(16, rng);
    auto f = ScalarField(g, g->basis() * c);
    const auto h = analyze(f);
    CHECK((h.coeffs - c).cwiseAbs().maxCoeff() < 1e-10 * c.cwiseAbs().maxCoeff());
    CHECK(std::abs(integrate(f, f) - c.squaredNorm()) < 1e-10 * c.squaredNorm());
    CHECK(h.tail_energy < 1e-9 * c.squaredNorm());
  }
}

TEST_CASE("quadrature is exact for products up to combined degree 2L") {
  const int L = 12;
  auto g = SphereGrid::for_band(L);
  // Gram matrix of the full basis must be the identity
  const Eigen::MatrixXd& Y = g->basis();
  const Eigen::MatrixXd gram = Y.transpose() * g->weights().asDiagonal() * Y;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-11);
  auto y20 = spherical_harmonic(g, 2, 0);
  CHECK(std::abs(integrate(y20, y20) - 1.0) < 1e-10);
  CHECK(std::abs(integrate(spherical_harmonic(g, 1, 0))) < 1e-12);
}

TEST_CASE("round Laplacian on eigenfunctions and constants") {
  auto g = SphereGrid::for_band(16);
  auto y32 = spherical_harmonic(g, 3, 2);
  auto lap = laplacian_round(y32);
  CHECK((lap.values() + 12.0 * y32.values()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(laplacian_round(ScalarField::constant(g, 3.5)).values().cwiseAbs().maxCoeff() < 1e-11);
  auto z = ScalarField::from_function(g, [](const Eigen::Vector3d& n) { return n.z(); });
  CHECK((laplacian_round(z).values() + 2.0 * z.values()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gradient and Poisson solve") {
  auto g = SphereGrid::for_band(16);
  auto y20 = spherical_harmonic(g, 2, 0);
  auto psi = poisson_solve_round(y20);
  CHECK((psi.values() + y20.values() / 6.0).cwiseAbs().maxCoeff() < 1e-12);

  auto zero = ScalarField::constant(g, 0.0);
  CHECK(poisson_solve_round(zero).values().cwiseAbs().maxCoeff() == 0.0);
  auto gz = gradient_round(zero);
  CHECK(gz.theta.cwiseAbs().maxCoeff() == 0.0);

  // |grad Y_10|^2 integrates to l(l+1) = 2
  auto y10 = spherical_harmonic(g, 1, 0);
  auto grad = gradient_round(y10);
  const double e = g->weights().dot(grad.theta.cwiseAbs2() + grad.phi.cwiseAbs2());
  CHECK(std::abs(e - 2.0) < 1e-12);
  // and equals -int f Lap f on a random field
  std::mt19937 rng(3);
  auto f = synthesize(g, random_coeffs(16, rng));
  auto gf = gradient_round(f);
  const double lhs = g->weights().dot(gf.theta.cwiseAbs2() + gf.phi.cwiseAbs2());
  CHECK(std::abs(lhs + integrate(f, laplacian_round(f))) < 1e-9 * lhs);

  CHECK_THROWS_AS(poisson_solve_round(ScalarField::constant(g, 1.0)), Error);
}

TEST_CASE("gradient from polynomial form matches theta derivative by differences") {
  const int L = 10;
  std::mt19937 rng(11);
  const Eigen::VectorXd c = random_coeffs(L, rng);
  PointBasis pb(L);
  const double th = 1.1, ph = 0.4, h = 1e-5;
  auto at = [&](double t, double p) {
    return evaluate_coeffs(c, L, Eigen::Vector3d(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)));
  };
  const Eigen::Vector3d n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
  pb.evaluate(n, 2);
  const Eigen::Vector3d gs = pb.surface_gradient(c);
  const Eigen::Vector3d et(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
  const Eigen::Vector3d ep(-std::sin(ph), std::cos(ph), 0);
  CHECK(std::abs(gs.dot(et) - (at(th + h, ph) - at(th - h, ph)) / (2 * h)) < 1e-7);
  CHECK(std::abs(gs.dot(ep) - (at(th, ph + h) - at(th, ph - h)) / (2 * h * std::sin(th))) < 1e-7);
  // Hessian against differences of the ambient gradient
  const Eigen::Matrix3d H = pb.ambient_hessian(c);
  for (int d = 0; d < 3; ++d) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[d] = h;
    PointBasis a(L), b(L);
    a.evaluate(n + e, 1);
    b.evaluate(n - e, 1);
    const Eigen::Vector3d fd = (a.ambient_gradient(c) - b.ambient_gradient(c)) / (2 * h);
    CHECK((H.col(d) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("pole regularity: gradient limits agree across longitudes") {
  const int L = 12;
  std::mt19937 rng(5);
  const Eigen::VectorXd c = random_coeffs(L, rng);
  PointBasis pb(L);
  pb.evaluate(Eigen::Vector3d(0, 0, 1), 1);
  const Eigen::Vector3d at_pole = pb.surface_gradient(c);
  for (double ph : {0.0, 1.0, 2.5, 4.0}) {
    const double th = 1e-12;
    pb.evaluate(Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)), 1);
    CHECK((pb.surface_gradient(c) - at_pole).norm() < 1e-8);
  }
}

TEST_CASE("CSV and binary serialization") {
  std::mt19937 rng(9);
  auto g = SphereGrid::for_band(6);
  auto f = synthesize(g, random_coeffs(6, rng));
  const std::string csv = "test_field.csv", bin = "test_field.bin";
  write_csv(csv, f);
  write_binary(bin, f);
  auto a = read_csv(g, csv);
  auto b = read_binary(bin);
  CHECK((a.values() - f.values()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(b.values() == f.values());
  CHECK(b.grid()->spec() == g->spec());
  std::remove(csv.c_str());
  std::remove(bin.c_str());
}
