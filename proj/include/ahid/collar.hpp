#pragma once

// Collar gamma = (1 + eps t^2) g(t) + Phi(t)^2 u(t,.)^2 dt^2 on S^2 x (0, 1],
// built on a metric path g(t) = phi_t^* h(t) with u(t,.) its first
// eigenfunction. With h = (1 + eps t^2) g and v = Phi u,
//
//   R = 2 K_h - 2 v^{-1} Lap_h v
//       + v^{-2} [ -tr_h h'' - (tr_h h')^2 / 4 + (v_t / v) tr_h h' + 3/4 |h'|_h^2 ].
//
// Slice data (g, g', g'', u, u_t, K_g, Lap_g u) does not depend on (eps, A),
// so it is computed once and every (eps, A) probe is pointwise algebra.

#include "ahid/chart_calculus.hpp"
#include "ahid/metric_path.hpp"

#include <array>
#include <vector>

namespace ahid {

/// Phi = A / sqrt(t) on (0, 1/4], 2A - 1 from 1/4 + delta on, in between
/// Phi' = chi(t) * (-A / (2 t^{3/2})) with chi a smooth step from 1 to 0;
/// delta is solved so that the drop over the bridge is exactly 1.
class PhiProfile {
 public:
  explicit PhiProfile(double A);

  double A() const { return A_; }
  double bridge_width() const { return delta_; }
  double operator()(double t) const;
  double d1(double t) const;
  double d2(double t) const;

 private:
  double chi(double t, int order) const;
  double A_, delta_;
};

struct CollarOptions {
  double t_min = 1e-3;
  int inner_slices = 16;   // log-spaced on [t_min, 1/4]
  int bridge_slices = 32;  // uniform on (1/4, 1/2]
  int outer_slices = 8;    // uniform on (1/2, 1]
  /// Upper bound on the half-width of the time stencils used for g'' and u_t.
  double max_stencil = 2e-3;
  FlowOptions flow;
};

std::vector<double> collar_times(const CollarOptions& options);

/// Everything about g(t) at a set of points that the collar formulas consume,
/// in the frame the points were flowed with.
struct CollarSlice {
  double t = 0.0;
  Eigen::Matrix3Xd phi;
  std::vector<Eigen::Matrix2d> g, gdot, gddot;
  Eigen::VectorXd u, u_t, K, lap_u;
  double lambda = 0.0;
};

std::vector<CollarSlice> build_slices(const MetricPath& path, const Eigen::Matrix3Xd& x,
                                      const std::vector<Mat32>& frames, const std::vector<double>& times,
                                      const CollarOptions& options = {});

/// Grid-node slices over collar_times(options).
std::vector<CollarSlice> build_collar_slices(const MetricPath& path, const CollarOptions& options = {});

struct CollarFields {
  Eigen::VectorXd R, bracket;
  // bracket = I + II + III + IV + V + rest, with
  // I = 2 Phi^2 lambda u^2, II = -4 eps, III = -(1 + eps t^2) tr_g g'',
  // IV = 4 eps t u_t / u, V = 4 eps t Phi' / Phi and rest the quadratic terms
  Eigen::VectorXd I, II, III, IV, V, rest;
  Eigen::VectorXd H, H_predicted, rho_norm;
  std::vector<Eigen::Matrix2d> rho;
};

CollarFields evaluate_collar(const CollarSlice& s, double eps, const PhiProfile& phi);
Eigen::VectorXd scalar_curvature_collar(const CollarSlice& s, double eps, const PhiProfile& phi);
/// rho_ij = -h'_ij / (2v).
std::vector<Eigen::Matrix2d> second_fundamental_form(const CollarSlice& s, double eps, const PhiProfile& phi);
/// Mean curvature of the slice toward increasing t, normalized as the mean of the
/// principal curvatures: H = tr_h h' / (4v); the prediction is eps t / (v (1 + eps t^2)).
Eigen::VectorXd mean_curvature(const CollarSlice& s, double eps, const PhiProfile& phi);

struct CollarSummary {
  double eps = 0.0, A = 0.0;
  double min_R = 0.0, min_H = 0.0, max_H_error = 0.0, bracket_margin = 0.0;
  double max_rho_tmin = 0.0;
  double rho_scale_tmin = 0.0;  // t_min^{3/2} / A
  bool rho_decreasing = false;  // max |rho| shrinks as t decreases on (0, 1/4]
  bool R_decreasing = false;    // max |R| shrinks as t decreases on (0, 1/4]
  double term1_ratio = 0.0;     // min over (0, 1/4] of I / (2 A^2 alpha inf u^2)
  double C1 = 0.0;              // max of |II| + |III| + |IV| + |V| + |rest|
  std::vector<double> t, max_abs_R, max_rho, min_bracket, min_H_slice;
};

CollarSummary summarize_collar(const std::vector<CollarSlice>& slices, double eps, const PhiProfile& phi,
                               double alpha);

struct SearchResult {
  double eps = 0.0, A = 0.0;
  CollarSummary summary;
  /// (eps, A, margin, min_R, min_H) for every probe.
  std::vector<std::array<double, 5>> probes;
  double A_threshold = 0.0;  // bisected boundary of bracket positivity at the chosen eps
};

/// Sweeps eps in the given order and A ascending; the first pair with positive
/// bracket, R and H wins. Throws SearchExhausted if none does.
SearchResult parameter_search(const std::vector<CollarSlice>& slices, const std::vector<double>& eps_range,
                              const std::vector<double>& A_range, double alpha);

/// Boundary chart s = sqrt(t), where gamma = (1 + eps s^4) g(s^2) + 4 A^2 u(s^2)^2 ds^2.
struct SGaugeReport {
  std::vector<double> s, max_H;
  double H_at_zero = 0.0;
  /// Third s-derivatives of the components at s = 0 by one-sided differences
  /// at steps ds and ds/2.
  double third_derivative_coarse = 0.0, third_derivative_fine = 0.0;
  bool finite = false;
  double H_exponent = 0.0;         // log-log slope of max H(s)
  double gamma_ss_mismatch = 0.0;  // |4A^2u^2 - (Phi u)^2 (2s)^2| relative
  double boundary_area = 0.0;
};

SGaugeReport sqrt_reparametrize(const MetricPath& path, double eps, const PhiProfile& phi, double ds = 0.02,
                                const CollarOptions& options = {});

/// Metric sampled on a 5x5x5 box around a point, index (i*5 + j)*5 + k for
/// offsets ((i-2) dx, (j-2) dy, (k-2) dz).
using MetricBox = std::array<Eigen::Matrix3d, 125>;

/// Scalar curvature by brute force: Christoffel symbols and their derivatives
/// from fourth-order differences of the sampled components.
double scalar_curvature_3d_oracle(const MetricBox& box, const Eigen::Vector3d& steps);

template <class Fn>
double scalar_curvature_3d_oracle(Fn&& metric, const Eigen::Vector3d& x0, const Eigen::Vector3d& steps) {
  MetricBox box;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k)
        box[(i * 5 + j) * 5 + k] = metric(Eigen::Vector3d(x0.x() + (i - 2) * steps.x(), x0.y() + (j - 2) * steps.y(),
                                                          x0.z() + (k - 2) * steps.z()));
  return scalar_curvature_3d_oracle(box, steps);
}

struct OracleComparison {
  std::vector<double> t, R_formula, R_oracle;
  double max_relative = 0.0;
};

/// Compares the reduction formula with the brute-force oracle at north-chart
/// points, using chart coordinates (z1, z2, t) for the 3-metric.
OracleComparison compare_with_oracle(const MetricPath& path, double eps, const PhiProfile& phi,
                                     const std::vector<double>& times, const std::vector<Eigen::Vector2d>& points,
                                     double hz = 5e-3, const CollarOptions& options = {});

}  // namespace ahid
