#pragma once

// Conformal metrics g = e^{2w} g_* on the sphere and the stability operator
// L_g = -Lap_g + K_g.

#include "ahid/sphere_spectral.hpp"

namespace ahid {

class ConformalMetric {
 public:
  explicit ConformalMetric(ScalarField w);
  static ConformalMetric round(const GridPtr& grid);

  const ScalarField& w() const { return w_; }
  const GridPtr& grid() const { return w_.grid(); }
  /// e^{2w} on the grid.
  const Eigen::VectorXd& area_density() const { return density_; }
  /// Round Laplacian of w on the grid.
  const Eigen::VectorXd& laplacian_w() const { return lap_w_; }

  /// e^{2c} g for a constant c.
  ConformalMetric scaled(double c) const;

 private:
  ScalarField w_;
  Eigen::VectorXd density_;
  Eigen::VectorXd lap_w_;
};

/// K_g = e^{-2w} (1 - Lap_* w).
ScalarField gauss_curvature(const ConformalMetric& g);
double area(const ConformalMetric& g);
/// sqrt(area / 16 pi).
double hawking_mass(double area);

struct EigenPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  double residual = 0.0;  // ||L_g u - lambda1 u|| in L^2(dA_g), pointwise on the grid
  double min_u = 0.0;
  bool simple = true;  // false flags gap < 1e-8
  Eigen::VectorXd coeffs;  // u in the harmonic basis
  ScalarField u;           // normalized: int u^2 dA_g = 1, mean positive
};

/// Ground state of L_g by Galerkin projection onto the harmonic basis:
/// A = diag(l(l+1)) + M[1 - Lap_* w], B = M[e^{2w}], where M[q] is the
/// q-weighted mass matrix. The Dirichlet energy needs no weight because it is
/// conformally invariant in two dimensions. Solved by Cholesky reduction of B.
EigenPair first_eigenpair(const ConformalMetric& g);

/// Generalized eigenvalues only (ascending), for probes that need no eigenvector.
Eigen::VectorXd stability_spectrum(const ConformalMetric& g);

/// Numerator of the Rayleigh quotient of L_{e^{2 zeta w} g_*} written on the
/// round background: int |grad_* v|^2 + (1 - zeta Lap_* w) v^2 dA_*.
double rayleigh_numerator(const ScalarField& v, const ConformalMetric& g, double zeta = 1.0);

/// Quadratic-form Rayleigh quotient of L_g for a band-limited test field.
double rayleigh_quotient(const ConformalMetric& g, const ScalarField& v);

}  // namespace ahid
