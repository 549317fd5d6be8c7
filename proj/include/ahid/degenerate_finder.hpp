#pragma once

// Construction of a horizon metric with lambda1 = 0 along the conformal ray
// g_t = e^{2tAw} g_*. A test function supported on a small chart around a
// point where Lap_* w > 0 certifies lambda1(g_1) < 0 variationally, and the
// root in t is then located by bisection.
//
// Charts: stereographic projection from -p, so p sits at z = 0 and the round
// metric reads 4 |dz|^2 / (1 + |z|^2)^2. The level-n chart uses x = 2^n z on
// the unit disk.

#include "ahid/conformal_ops.hpp"

#include <vector>

namespace ahid {

class ConformalRay {
 public:
  /// Throws InvalidInput if w is constant or A <= 0.
  ConformalRay(ScalarField w, double A);
  const ScalarField& w() const { return w_; }
  double A() const { return A_; }
  ConformalMetric at(double t) const;

 private:
  ScalarField w_;
  double A_;
};

/// Default seed: Y_{2,0} scaled to unit sup-norm, (3 z^2 - 1) / 2.
ScalarField default_seed(const GridPtr& grid);

struct PositivePoint {
  Eigen::Vector3d p;
  double max_lap = 0.0;  // Lap_* w at p
  double c = 0.0;        // half of max_lap
  double radius = 0.0;   // geodesic radius of the grid disk where Lap_* w >= c
};

/// Throws NoPositivePoint for constant w.
PositivePoint find_positive_laplacian_point(const ScalarField& w);

/// Chart of level n centered at p.
class DyadicChart {
 public:
  DyadicChart(const Eigen::Vector3d& p, int level);
  int level() const { return level_; }
  const Eigen::Vector3d& center() const { return p_; }
  double scale() const { return scale_; }  // z = scale * x
  Eigen::Vector3d to_sphere(const Eigen::Vector2d& x) const;
  /// Round metric in x, conformal factor times the identity.
  double metric_factor(const Eigen::Vector2d& x) const;
  /// Geodesic radius of the image of the unit disk.
  double geodesic_radius() const;

 private:
  Eigen::Vector3d p_, e1_, e2_;
  int level_;
  double scale_;
};

/// v(x) = (1 - |x|)^2 on the unit disk, zero outside.
double certificate_profile(double r);
/// Flat Laplacian of the profile, 2 - 2(1 - r)/r.
double certificate_flat_laplacian(double r);

struct SliceCertificate {
  Eigen::Vector3d p;
  int level = 0;
  double c = 0.0;
  double inner_radius = 2.0 / 3.0;  // annulus V is inner_radius < |x| < 1
  double min_lap_annulus = 0.0;     // min of the discretized Lap_{gamma_N} v on V, rescaled by 4^N
  double min_lap_w = 0.0;           // min of Lap_* w over the chart disk
  double dirichlet_energy = 0.0;    // int |grad v|^2, conformally invariant
  double mass = 0.0;                // int_U v^2 dA_*
  DyadicChart chart() const { return DyadicChart(p, level); }
  double value(const Eigen::Vector3d& q) const;
};

/// Discretized Laplace-Beltrami of v for the level-n chart metric at x, by
/// the divergence form with difference quotients of the metric.
double chart_laplacian(const DyadicChart& chart, const Eigen::Vector2d& x, double h = 1e-4);

/// Smallest level n >= 1 whose disk keeps Lap_* w >= c and Lap v > 0 on the
/// annulus. Throws MaxDepthExceeded past level 20.
SliceCertificate build_certificate(const ScalarField& w, const PositivePoint& pp);

struct ThresholdReport {
  double pointwise = 0.0;  // (1/c)[1 + sup v Lap_* v / inf v^2] over U \ V
  double energy = 0.0;     // (1/c)[1 + int |grad v|^2 / int_U v^2 dA_*]
  double sup_v_lap_v = 0.0, inf_v2 = 0.0;
  double A = 0.0;          // 1.1 x the larger of the two
};

ThresholdReport choose_A(const SliceCertificate& cert, const ScalarField& w);

/// Rayleigh quotient of the certificate on e^{2Aw} g_*, by quadrature in the chart.
double certificate_rayleigh(const SliceCertificate& cert, const ScalarField& w, double A);

struct CurveProbe {
  double t = 0.0;
  double lambda1 = 0.0;  // NaN when the weight range is too wide for the Galerkin solve
  int sign = 0;          // sign of lambda1 from the inertia of the stiffness form
};

struct DegenerateResult {
  PositivePoint point;
  SliceCertificate certificate;
  ThresholdReport threshold;
  double certificate_value = 0.0;  // Rayleigh quotient of v on g_1
  double lambda_start = 0.0;       // lambda1(g_0)
  std::vector<CurveProbe> coarse;  // dyadic probes t = 1, 1/2, 1/4, ...
  std::vector<CurveProbe> history; // bisection probes in order
  double t_lo = 0.0, t_hi = 0.0;   // final bracket
  double t0 = 0.0;
  double lambda_t0 = 0.0;
  double max_jump = 0.0;           // largest |lambda| change between adjacent probes in the first bracket
  ConformalMetric metric() const;  // g_{t0}
  ScalarField w_t0;                // t0 A w
};

/// Sign of lambda1(e^{2w} g_*) from the inertia of the Galerkin stiffness
/// matrix, which does not involve the area weight.
int lambda_sign(const ConformalMetric& g);

/// Throws NoSignChange if no probe has lambda1 < 0.
DegenerateResult eigenvalue_curve_and_root(const ConformalRay& ray, double tol = 1e-7);

/// The whole construction for a seed w.
DegenerateResult find_degenerate(const ScalarField& w, double tol = 1e-7);

}  // namespace ahid
