#pragma once

// Tensor calculus for general (non-conformal) 2-metrics on the sphere, in two
// stereographic charts with uniform Cartesian grids:
//   north: n = (2 z1, 2 z2, 1 - |z|^2) / (1 + |z|^2)
//   south: n = (2 z1, 2 z2, |z|^2 - 1) / (1 + |z|^2)
// with transition z_S = z_N / |z_N|^2. Per-node scalars are stored as vectors
// indexed i * n + j (z1 = -w + i h, z2 = -w + j h); nodes too close to the
// edge for a stencil hold NaN.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ahid {

using Mat32 = Eigen::Matrix<double, 3, 2>;

enum class Pole { North, South };

struct Chart {
  Pole pole = Pole::North;
  int n = 181;
  double half_width = 1.5;

  double spacing() const { return 2.0 * half_width / (n - 1); }
  int index(int i, int j) const { return i * n + j; }
  int size() const { return n * n; }
  Eigen::Vector2d coord(int i, int j) const;

  Eigen::Vector3d to_sphere(const Eigen::Vector2d& z) const;
  Eigen::Vector2d from_sphere(const Eigen::Vector3d& p) const;
  /// Columns dn/dz1, dn/dz2.
  Mat32 frame(const Eigen::Vector2d& z) const;

  Eigen::Matrix3Xd points() const;
  std::vector<Mat32> frames() const;
};

struct ChartAtlas {
  Chart north, south;

  static ChartAtlas make(int n = 181, double half_width = 1.5);
  /// Maps coordinates in one chart to the other (the map is an involution).
  static Eigen::Vector2d transition(const Eigen::Vector2d& z);
  /// d z_other / d z.
  static Eigen::Matrix2d transition_jacobian(const Eigen::Vector2d& z);
  /// Chart that owns a sphere point: north on the closed upper hemisphere.
  const Chart& owner(const Eigen::Vector3d& p) const { return p.z() >= 0.0 ? north : south; }
};

struct ChartMetric {
  Chart chart;
  std::vector<Eigen::Matrix2d> g;
  std::vector<Eigen::Matrix2d> gdot, gddot;  // optional

  /// Samples a metric given as a function of chart coordinates.
  template <class Fn>
  static ChartMetric sample(const Chart& c, Fn&& fn) {
    ChartMetric m{c, std::vector<Eigen::Matrix2d>(c.size()), {}, {}};
    for (int i = 0; i < c.n; ++i)
      for (int j = 0; j < c.n; ++j) m.g[c.index(i, j)] = fn(c.coord(i, j));
    return m;
  }
};

/// Round metric 4 / (1 + |z|^2)^2 I, valid in both charts.
Eigen::Matrix2d round_chart_metric(const Eigen::Vector2d& z);

/// Gaussian curvature by the Brioschi formula with fourth-order differences.
/// Throws SingularMetric at a node with det <= 0.
Eigen::VectorXd curvature_general(const ChartMetric& m);

/// (1/sqrt det) d_i (sqrt det m^{ij} d_j f), fourth-order differences.
Eigen::VectorXd laplace_beltrami_general(const ChartMetric& m, const Eigen::VectorXd& f);

/// Fourth-order first derivatives of a node scalar along z1 and z2.
void chart_gradient(const Chart& c, const Eigen::VectorXd& f, Eigen::VectorXd& d1, Eigen::VectorXd& d2);

struct TraceNorm {
  double trace;
  double norm2;
};
/// tr_m mdot and |mdot|^2_m.
TraceNorm trace_and_norm(const Eigen::Matrix2d& m, const Eigen::Matrix2d& mdot);

/// First and second time derivatives from five equally spaced samples
/// (t - 2d, ..., t + 2d), fourth-order central differences.
void time_derivatives(const std::vector<const std::vector<Eigen::Matrix2d>*>& samples, double dt,
                      std::vector<Eigen::Matrix2d>& first, std::vector<Eigen::Matrix2d>& second);

/// Bicubic Lagrange interpolation of node values at chart coordinates z.
double interpolate(const Chart& c, const Eigen::VectorXd& f, const Eigen::Vector2d& z);

/// Node values in both charts; evaluation picks the owning chart.
struct AtlasScalar {
  Eigen::VectorXd north, south;
  double evaluate(const ChartAtlas& atlas, const Eigen::Vector3d& p) const;
};

/// Smooth partition of unity on the sphere: weight of the north chart at p.
double north_partition(const Eigen::Vector3d& p);

/// Data for the Rayleigh quotient of -Lap_g + K on one chart.
struct ChartIntegrand {
  std::vector<Eigen::Matrix2d> g;
  Eigen::VectorXd v, K;
  std::vector<Eigen::Vector2d> dv;  // chart-coordinate gradient of v
};

/// int (|dv|_g^2 + K v^2) dA_g / int v^2 dA_g, assembled from both charts with
/// the partition of unity and the trapezoid rule.
double rayleigh_quotient_charts(const ChartAtlas& atlas, const ChartIntegrand& north, const ChartIntegrand& south);

// Dumps. Binary: int32 pole (0 north, 1 south), int32 n, float64 half_width,
// then per node g11, g12, g22 as float64 (little-endian). CSV: i,j,z1,z2,value.
void write_chart_metric_binary(const std::string& file, const ChartMetric& m);
void write_chart_csv(const std::string& file, const Chart& c, const Eigen::VectorXd& f);

}  // namespace ahid
