#include "ahid/conformal_ops.hpp"

#include "ahid/errors.hpp"

#include <cmath>
#include <numbers>

namespace ahid {

ConformalMetric::ConformalMetric(ScalarField w) : w_(std::move(w)) {
  density_ = (2.0 * w_.values().array()).exp().matrix();
  lap_w_ = w_.grid()->basis() * laplacian_coeffs(w_.coeffs());
}

ConformalMetric ConformalMetric::round(const GridPtr& grid) {
  return ConformalMetric(ScalarField::constant(grid, 0.0));
}

ConformalMetric ConformalMetric::scaled(double c) const {
  return ConformalMetric(ScalarField(grid(), (w_.values().array() + c).matrix()));
}

ScalarField gauss_curvature(const ConformalMetric& g) {
  Eigen::VectorXd k = (1.0 - g.laplacian_w().array()) / g.area_density().array();
  return ScalarField(g.grid(), std::move(k));
}

double area(const ConformalMetric& g) {
  const double a = g.grid()->weights().dot(g.area_density());
  if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveArea, "area " + std::to_string(a));
  return a;
}

double hawking_mass(double area) {
  if (!(area > 0.0)) throw Error(ErrorCode::NonPositiveArea, "area " + std::to_string(area));
  return std::sqrt(area / (16.0 * std::numbers::pi));
}

namespace {

Eigen::MatrixXd weighted_mass(const GridPtr& grid, const Eigen::VectorXd& weight) {
  const Eigen::MatrixXd& Y = grid->basis();
  const Eigen::VectorXd d = grid->weights().cwiseProduct(weight);
  Eigen::MatrixXd M = Y.transpose() * (d.asDiagonal() * Y);
  return 0.5 * (M + M.transpose());
}

struct Reduced {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
};

void solve_reduced(const ConformalMetric& g, bool vectors, Reduced& out) {
  const GridPtr& grid = g.grid();
  const int nb = grid->basis_size();
  Eigen::MatrixXd A = weighted_mass(grid, (1.0 - g.laplacian_w().array()).matrix());
  for (int i = 0; i < nb; ++i) {
    const int l = sh_degree(i);
    A(i, i) += double(l) * (l + 1);
  }
  const Eigen::MatrixXd B = weighted_mass(grid, g.area_density());
  out.llt.compute(B);
  if (out.llt.info() != Eigen::Success)
    throw Error(ErrorCode::EigensolverFailure, "mass matrix is not numerically positive definite");
  // C = L^{-1} A L^{-T}
  Eigen::MatrixXd C = out.llt.matrixL().solve(A);
  C = out.llt.matrixL().solve(C.transpose()).transpose();
  C = 0.5 * (C + C.transpose());
  out.es.compute(C, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (out.es.info() != Eigen::Success || !out.es.eigenvalues().allFinite())
    throw Error(ErrorCode::EigensolverFailure, "symmetric eigensolver did not converge");
}

}  // namespace

Eigen::VectorXd stability_spectrum(const ConformalMetric& g) {
  Reduced r;
  solve_reduced(g, false, r);
  return r.es.eigenvalues();
}

EigenPair first_eigenpair(const ConformalMetric& g) {
  Reduced r;
  solve_reduced(g, true, r);
  const GridPtr& grid = g.grid();

  EigenPair ep;
  ep.lambda1 = r.es.eigenvalues()[0];
  ep.lambda2 = r.es.eigenvalues().size() > 1 ? r.es.eigenvalues()[1] : ep.lambda1;
  ep.gap = ep.lambda2 - ep.lambda1;
  ep.simple = ep.gap >= 1e-8;
  // c^T B c = 1 after back-substitution
  ep.coeffs = r.llt.matrixU().solve(Eigen::VectorXd(r.es.eigenvectors().col(0)));
  Eigen::VectorXd u = grid->basis() * ep.coeffs;
  if (grid->weights().dot(u.cwiseProduct(g.area_density())) < 0.0) {
    ep.coeffs = -ep.coeffs;
    u = -u;
  }
  ep.min_u = u.minCoeff();

  const Eigen::VectorXd lap_u = grid->basis() * laplacian_coeffs(ep.coeffs);
  const Eigen::ArrayXd lu =
      (-lap_u.array() + (1.0 - g.laplacian_w().array()) * u.array()) / g.area_density().array();
  const Eigen::ArrayXd res = lu - ep.lambda1 * u.array();
  ep.residual = std::sqrt(grid->weights().dot((res.square() * g.area_density().array()).matrix()));

  ep.u = ScalarField(grid, std::move(u));
  return ep;
}

double rayleigh_numerator(const ScalarField& v, const ConformalMetric& g, double zeta) {
  const Eigen::VectorXd& c = v.coeffs();
  double dirichlet = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const int l = sh_degree(i);
    dirichlet += double(l) * (l + 1) * c[i] * c[i];
  }
  const Eigen::ArrayXd pot = 1.0 - zeta * g.laplacian_w().array();
  return dirichlet + v.grid()->weights().dot((pot * v.values().array().square()).matrix());
}

double rayleigh_quotient(const ConformalMetric& g, const ScalarField& v) {
  const double den = v.grid()->weights().dot(v.values().cwiseAbs2().cwiseProduct(g.area_density()));
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroNorm, "test function has zero L2 norm");
  return rayleigh_numerator(v, g, 1.0) / den;
}

}  // namespace ahid
