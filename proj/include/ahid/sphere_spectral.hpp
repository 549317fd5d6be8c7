#pragma once

// Discretization of the unit round sphere (area 4*pi) and real spherical
// harmonic analysis on it.
//
// Harmonic convention, used by every module in the library:
//   Y_{l,0}  = Q_l^0(z)
//   Y_{l,m}  = sqrt(2) Q_l^m(z) Re((x + i y)^m)     m > 0
//   Y_{l,-m} = sqrt(2) Q_l^m(z) Im((x + i y)^m)     m > 0
// where sin^m(theta) Q_l^m(cos theta) is the associated Legendre function
// normalized so that the Y_{l,m} are orthonormal in L^2(dA_*), without the
// Condon-Shortley phase. Writing the basis as polynomials in (x, y, z) makes
// point evaluation and ambient derivatives regular at the poles.
// Coefficients are stored at index l*l + l + m.

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ahid {

inline constexpr int sh_index(int l, int m) { return l * l + l + m; }
inline constexpr int sh_count(int band) { return (band + 1) * (band + 1); }
int sh_degree(int index);

struct GridSpec {
  int n_lat = 66;
  int n_lon = 132;
  int band = 32;

  /// Oversized grid for products of two band-`band` fields times a smooth weight.
  static GridSpec for_band(int band);
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

class SphereGrid {
 public:
  explicit SphereGrid(GridSpec spec);

  static std::shared_ptr<const SphereGrid> make(GridSpec spec);
  static std::shared_ptr<const SphereGrid> for_band(int band);

  const GridSpec& spec() const { return spec_; }
  int band() const { return spec_.band; }
  int n_lat() const { return spec_.n_lat; }
  int n_lon() const { return spec_.n_lon; }
  int size() const { return spec_.n_lat * spec_.n_lon; }
  int basis_size() const { return sh_count(spec_.band); }
  int node(int lat, int lon) const { return lat * spec_.n_lon + lon; }

  double colatitude(int lat) const { return theta_[lat]; }
  double longitude(int lon) const { return phi_[lon]; }

  /// Quadrature weight per node (Gauss-Legendre in cos(theta) x trapezoid in phi).
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Unit position vectors of the nodes.
  const Eigen::Matrix3Xd& points() const { return points_; }
  const Eigen::Matrix3Xd& e_theta() const { return e_theta_; }
  const Eigen::Matrix3Xd& e_phi() const { return e_phi_; }

  /// Basis sampled on the grid, size() x basis_size(). Built on first use.
  const Eigen::MatrixXd& basis() const;

 private:
  GridSpec spec_;
  Eigen::VectorXd theta_, phi_, weights_;
  Eigen::Matrix3Xd points_, e_theta_, e_phi_;
  mutable std::once_flag basis_once_;
  mutable Eigen::MatrixXd basis_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes in descending order.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// All basis functions and their ambient derivatives at one point.
class PointBasis {
 public:
  explicit PointBasis(int band);

  /// order 0: values, 1: + gradient, 2: + Hessian.
  void evaluate(const Eigen::Vector3d& n, int order);

  int band() const { return band_; }
  const Eigen::VectorXd& values() const { return values_; }
  /// Euclidean gradient of the polynomial extension, 3 x basis.
  const Eigen::Matrix3Xd& gradients() const { return grad_; }
  /// Hessian of the polynomial extension, rows xx, xy, xz, yy, yz, zz.
  const Eigen::Matrix<double, 6, Eigen::Dynamic>& hessians() const { return hess_; }

  double value(const Eigen::VectorXd& coeffs) const;
  Eigen::Vector3d ambient_gradient(const Eigen::VectorXd& coeffs) const;
  /// Tangential projection of the ambient gradient at the evaluation point.
  Eigen::Vector3d surface_gradient(const Eigen::VectorXd& coeffs) const;
  Eigen::Matrix3d ambient_hessian(const Eigen::VectorXd& coeffs) const;
  const Eigen::Vector3d& point() const { return point_; }

 private:
  int band_;
  Eigen::Vector3d point_;
  Eigen::VectorXd values_;
  Eigen::Matrix3Xd grad_;
  Eigen::Matrix<double, 6, Eigen::Dynamic> hess_;
  std::vector<double> q_, dq_, d2q_;
  std::vector<std::complex<double>> pow_;
};

/// Real function on the sphere. Grid samples are always current; harmonic
/// coefficients are computed on demand and cached.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridPtr grid, Eigen::VectorXd values);

  static ScalarField constant(GridPtr grid, double c);
  static ScalarField from_coeffs(GridPtr grid, const Eigen::VectorXd& coeffs);
  template <class Fn>
  static ScalarField from_function(GridPtr grid, Fn&& f) {
    Eigen::VectorXd v(grid->size());
    for (int k = 0; k < grid->size(); ++k) v[k] = f(Eigen::Vector3d(grid->points().col(k)));
    return ScalarField(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int k) const { return values_[k]; }
  /// Band-limited projection coefficients.
  const Eigen::VectorXd& coeffs() const;
  bool coeffs_current() const { return coeffs_.has_value(); }

  /// Evaluates the band-limited projection at an arbitrary unit vector.
  double evaluate(const Eigen::Vector3d& n) const;

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
  mutable std::optional<Eigen::VectorXd> coeffs_;
};

/// Tangent vector field as components in the orthonormal (e_theta, e_phi) frame.
struct TangentField {
  GridPtr grid;
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;

  Eigen::Matrix3Xd ambient() const;
};

struct HarmonicCoeffs {
  Eigen::VectorXd coeffs;
  double tail_energy = 0.0;  // L^2 energy of the part not captured by the band
};

HarmonicCoeffs analyze(const ScalarField& f);
ScalarField synthesize(const GridPtr& grid, const Eigen::VectorXd& coeffs);

/// Single real harmonic sampled on the grid.
ScalarField spherical_harmonic(const GridPtr& grid, int l, int m);

/// Coefficientwise multiplication by -l(l+1).
Eigen::VectorXd laplacian_coeffs(const Eigen::VectorXd& coeffs);
ScalarField laplacian_round(const ScalarField& f);
TangentField gradient_round(const ScalarField& f);

/// Zero-mean psi with Laplacian psi = f. Throws NonZeroMean when the source
/// has mean larger than 1e-9 relative to its norm.
Eigen::VectorXd poisson_solve_coeffs(const Eigen::VectorXd& coeffs, double norm_hint);
ScalarField poisson_solve_round(const ScalarField& f);

double integrate(const ScalarField& f);
double integrate(const ScalarField& f, const ScalarField& weight);

/// Evaluates a coefficient vector at a unit vector.
double evaluate_coeffs(const Eigen::VectorXd& coeffs, int band, const Eigen::Vector3d& n);

// Serialization. CSV rows are "lat_index,lon_index,value". The binary dump is
// little-endian: int32 n_lat, int32 n_lon, int32 band, then n_lat*n_lon
// float64 values in row-major (lat, lon) order.
void write_csv(const std::string& path, const ScalarField& f);
ScalarField read_csv(const GridPtr& grid, const std::string& path);
void write_binary(const std::string& path, const ScalarField& f);
ScalarField read_binary(const std::string& path);

}  // namespace ahid
