#pragma once

// Area-preserving path from a conformal metric g = e^{2w} g_* to a round one.
//
//   h(t) = e^{2(zeta(t) w + a(t))} g_*,   a(0) = 0,   a' = -zeta' <w>_{h(t)}
//   g(t) = phi_t^* h(t),                  d/dt phi_t = X_t(phi_t)
//
// where X_t = grad_h psi with Lap_h psi = -2(zeta' w + a'), so that the
// pulled-back area form is constant in t. Everything is frozen for t >= 1/2.

#include "ahid/conformal_ops.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace ahid {

using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Smooth step on [0, 1] built from exp(-1/x): 0 below 0, 1 above 1, flat to
/// all orders at both ends.
double smooth_step(double x, int order = 0);

/// zeta(t) = (1 - t/2)(1 - S(2t)). zeta(0) = 1, zeta'(0) = -1/2, zeta = 0 on [1/2, 1].
struct ZetaProfile {
  double tilt = 0.5;

  double operator()(double t) const { return derivative(t, 0); }
  /// order 0..2
  double derivative(double t, int order) const;
};

/// a(t) from RK4 on a uniform table over [0, 1/2], cubic Hermite in between.
/// Derivatives are evaluated from the defining formula, not the table.
class AProfile {
 public:
  AProfile(const ScalarField& w, ZetaProfile zeta, int steps);

  double operator()(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  /// max |a_N - a_{N/2}| over the shared table nodes.
  double error_estimate() const { return error_; }
  int steps() const { return static_cast<int>(table_.size()) - 1; }

  /// <w> and d<w>/dz under the weight e^{2 z w} dA_*.
  double weighted_mean(double z) const;
  double weighted_mean_dz(double z) const;

 private:
  ZetaProfile zeta_;
  Eigen::VectorXd w_, weights_;
  std::vector<double> table_;
  double dt_ = 0.0;
  double error_ = 0.0;
};

AProfile solve_a(const ScalarField& w, const ZetaProfile& zeta = {}, int steps = 512);

struct PathOptions {
  int time_nodes = 65;
  int a_steps = 512;
  /// Flow step bound; the integrator also respects half the grid spacing over max|X|.
  double max_flow_step = 1.0 / 256;
};

/// Value and ambient Jacobian of a tangent field at one unit point. The
/// Jacobian is that of the degree-zero homogeneous extension, so DX n = 0.
struct FieldSample {
  Eigen::Vector3d X;
  Eigen::Matrix3d DX;
};
using FieldSlice = std::function<FieldSample(const Eigen::Vector3d&)>;
using TimeDependentField = std::function<FieldSlice(double t)>;

struct EigenCurve {
  std::vector<double> t, lambda1, min_u;
  double alpha = 0.0;
  /// -4 pi zeta'(0) inf u_0^2, the leading coefficient of the analytic lower bound.
  double analytic_coefficient = 0.0;
  /// Largest grid time up to which inf u_t^2 >= inf u_0^2 / 2 held throughout.
  double half_inf_range = 0.0;
  double lipschitz = 0.0;       // max |dlambda| / dt between neighbours
  double max_jump_ratio = 0.0;  // max increment over median increment
};

class MetricPath {
 public:
  explicit MetricPath(ConformalMetric g, PathOptions options = {});

  const ConformalMetric& start() const { return g_; }
  const GridPtr& grid() const { return g_.grid(); }
  const ScalarField& w() const { return g_.w(); }
  const ZetaProfile& zeta() const { return zeta_; }
  const AProfile& a() const { return a_; }
  const PathOptions& options() const { return opt_; }
  const std::vector<double>& times() const { return times_; }

  /// Exponent sigma(t) = zeta(t) w + a(t) on the grid.
  ScalarField sigma(double t) const;
  ConformalMetric h(double t) const;
  /// Eigenpair of h(t); all t >= 1/2 share one cached solve.
  const EigenPair& eigen(double t) const;

  /// Harmonic coefficients of w and Lap_* w.
  const Eigen::VectorXd& w_coeffs() const { return w_coeffs_; }
  const Eigen::VectorXd& lap_w_coeffs() const { return lap_w_coeffs_; }

  /// Potential psi of X_t (zero mean, band-limited).
  Eigen::VectorXd potential_coeffs(double t) const;
  /// X_t on the grid in (e_theta, e_phi) components.
  TangentField area_fixing_field(double t) const;
  /// X_t at arbitrary points with Jacobian, for the flow integrator.
  TimeDependentField field() const;

 private:
  ConformalMetric g_;
  PathOptions opt_;
  ZetaProfile zeta_;
  AProfile a_;
  std::vector<double> times_;
  Eigen::VectorXd w_coeffs_, lap_w_coeffs_;
  mutable std::vector<std::pair<double, std::shared_ptr<EigenPair>>> eigen_cache_;
};

/// lambda1(h(t_k)) over the path's time grid. Throws NegativeInteriorEigenvalue
/// when some interior value is below -1e-7.
EigenCurve eigen_curve(const MetricPath& path);

/// Flow positions and tangent images of a fixed frame, per requested time.
struct FlowState {
  double t = 0.0;
  Eigen::Matrix3Xd phi;
  std::vector<Mat32> J;  // D phi_t applied to the two frame vectors at x
};

struct FlowOptions {
  double max_step = 1.0 / 256;
  /// Bound on |X| above which the flow is considered ill-conditioned.
  double blowup = 1e6;
};

/// RK4 flow of points and frames through a sorted list of times, starting at
/// the identity at t = 0. The main trajectory advances on a uniform step
/// grid; requested times between nodes are reached by a side step from the
/// previous node, so results are smooth functions of the requested time.
std::vector<FlowState> integrate_points(const TimeDependentField& X, const Eigen::Matrix3Xd& x,
                                        const std::vector<Mat32>& frames, const std::vector<double>& times,
                                        const FlowOptions& options = {});

/// Flow of the grid nodes with the (e_theta, e_phi) frame, at the path times.
struct FlowMap {
  GridPtr grid;
  std::vector<FlowState> states;

  /// 2x2 differential in the (e_theta, e_phi) frames at x and phi(x).
  Eigen::Matrix2d differential(int k, int node) const;
  /// Jacobian determinant of phi_t with respect to dA_*.
  double det(int k, int node) const;
};

FlowMap integrate_flow(const MetricPath& path, const FlowOptions& options = {});

/// Options tightened to the path's step bound and half a grid cell per step.
FlowOptions path_flow_options(const MetricPath& path, const FlowOptions& options = {});

/// Frame of the grid nodes as 3x2 blocks.
std::vector<Mat32> grid_frames(const GridPtr& grid);

/// Pulled-back metric g(t) = phi_t^* h(t) and its analytic time derivative,
/// components in the frame carried by the flow state.
struct PulledBack {
  std::vector<Eigen::Matrix2d> g, gdot;
};
PulledBack pullback_metric(const MetricPath& path, const FlowState& state, bool with_derivative = true);

/// Throws LostPositivity if any block is not positive definite.
void assert_spd(const std::vector<Eigen::Matrix2d>& g);

// Path report: CSV with columns t,a,lambda1,area,min_u.
void write_path_csv(const std::string& file, const MetricPath& path, const EigenCurve& curve);
// Flow dump, little-endian: int32 n_lat, n_lon, band, n_times; then per time a
// float64 t followed by, per node, 3 position doubles and 6 doubles of the
// 3x2 tangent image block in column-major order.
void write_flow_binary(const std::string& file, const FlowMap& flow);

}  // namespace ahid
