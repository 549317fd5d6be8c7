#include "ahid/sphere_spectral.hpp"

#include "ahid/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ahid {

namespace {
constexpr double kPi = std::numbers::pi;
}

int sh_degree(int index) {
  int l = static_cast<int>(std::sqrt(static_cast<double>(index)));
  while (l * l > index) --l;
  while ((l + 1) * (l + 1) <= index) ++l;
  return l;
}

GridSpec GridSpec::for_band(int band) {
  GridSpec s;
  s.band = band;
  s.n_lat = 2 * band + 2;
  s.n_lon = 2 * s.n_lat;
  return s;
}

void GridSpec::validate() const {
  if (band < 0 || n_lat < band + 1 || n_lon < 2 * band + 1)
    throw Error(ErrorCode::InvalidInput, "grid too coarse for band " + std::to_string(band));
}

void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

SphereGrid::SphereGrid(GridSpec spec) : spec_(spec) {
  spec_.validate();
  Eigen::VectorXd x, wx;
  gauss_legendre(spec_.n_lat, x, wx);
  theta_.resize(spec_.n_lat);
  for (int i = 0; i < spec_.n_lat; ++i) theta_[i] = std::acos(x[i]);
  phi_.resize(spec_.n_lon);
  for (int j = 0; j < spec_.n_lon; ++j) phi_[j] = 2.0 * kPi * j / spec_.n_lon;

  const int n = size();
  weights_.resize(n);
  points_.resize(3, n);
  e_theta_.resize(3, n);
  e_phi_.resize(3, n);
  const double dphi = 2.0 * kPi / spec_.n_lon;
  for (int i = 0; i < spec_.n_lat; ++i) {
    const double st = std::sin(theta_[i]), ct = x[i];
    for (int j = 0; j < spec_.n_lon; ++j) {
      const int k = node(i, j);
      const double sp = std::sin(phi_[j]), cp = std::cos(phi_[j]);
      weights_[k] = wx[i] * dphi;
      points_.col(k) << st * cp, st * sp, ct;
      e_theta_.col(k) << ct * cp, ct * sp, -st;
      e_phi_.col(k) << -sp, cp, 0.0;
    }
  }
}

std::shared_ptr<const SphereGrid> SphereGrid::make(GridSpec spec) {
  return std::make_shared<const SphereGrid>(spec);
}

std::shared_ptr<const SphereGrid> SphereGrid::for_band(int band) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const SphereGrid>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[band];
  if (!slot) slot = make(GridSpec::for_band(band));
  return slot;
}

const Eigen::MatrixXd& SphereGrid::basis() const {
  std::call_once(basis_once_, [this] {
    basis_.resize(size(), basis_size());
    PointBasis pb(band());
    for (int k = 0; k < size(); ++k) {
      pb.evaluate(points_.col(k), 0);
      basis_.row(k) = pb.values().transpose();
    }
  });
  return basis_;
}

PointBasis::PointBasis(int band)
    : band_(band),
      values_(sh_count(band)),
      grad_(3, sh_count(band)),
      hess_(6, sh_count(band)),
      q_(sh_count(band)),
      dq_(sh_count(band)),
      d2q_(sh_count(band)),
      pow_(band + 1) {}

void PointBasis::evaluate(const Eigen::Vector3d& n, int order) {
  point_ = n;
  const double x = n.x(), y = n.y(), z = n.z();
  const int L = band_;
  const std::complex<double> xy(x, y);
  pow_[0] = 1.0;
  for (int k = 1; k <= L; ++k) pow_[k] = pow_[k - 1] * xy;

  // Q_l^m(z) and z-derivatives, stored at sh_index(l, m) for m >= 0.
  double qmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= L; ++m) {
    if (m > 0) qmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    q_[sh_index(m, m)] = qmm;
    dq_[sh_index(m, m)] = 0.0;
    d2q_[sh_index(m, m)] = 0.0;
    if (m + 1 <= L) {
      const double c = std::sqrt(2.0 * m + 3.0);
      q_[sh_index(m + 1, m)] = c * z * qmm;
      dq_[sh_index(m + 1, m)] = c * qmm;
      d2q_[sh_index(m + 1, m)] = 0.0;
    }
    for (int l = m + 2; l <= L; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      const int i1 = sh_index(l - 1, m), i2 = sh_index(l - 2, m);
      q_[sh_index(l, m)] = a * (z * q_[i1] - b * q_[i2]);
      dq_[sh_index(l, m)] = a * (q_[i1] + z * dq_[i1] - b * dq_[i2]);
      d2q_[sh_index(l, m)] = a * (2.0 * dq_[i1] + z * d2q_[i1] - b * d2q_[i2]);
    }
  }

  const double r2 = std::sqrt(2.0);
  for (int l = 0; l <= L; ++l) {
    const int i0 = sh_index(l, 0);
    values_[i0] = q_[i0];
    if (order >= 1) grad_.col(i0) << 0.0, 0.0, dq_[i0];
    if (order >= 2) hess_.col(i0) << 0.0, 0.0, 0.0, 0.0, 0.0, d2q_[i0];
    for (int m = 1; m <= l; ++m) {
      const int iq = sh_index(l, m);
      const double Q = q_[iq], dQ = dq_[iq], d2Q = d2q_[iq];
      const std::complex<double> p = pow_[m];
      const std::complex<double> p1 = double(m) * pow_[m - 1];
      const std::complex<double> p2 = m >= 2 ? double(m) * (m - 1) * pow_[m - 2] : 0.0;
      // cos-type: Re(.), sin-type: Im(.). d/dy (x+iy)^m = i m (x+iy)^{m-1}.
      const std::complex<double> ip1 = std::complex<double>(0, 1) * p1;
      const std::complex<double> ip2 = std::complex<double>(0, 1) * p2;
      const int ic = sh_index(l, m), is = sh_index(l, -m);
      values_[ic] = r2 * Q * p.real();
      values_[is] = r2 * Q * p.imag();
      if (order >= 1) {
        grad_.col(ic) << r2 * Q * p1.real(), r2 * Q * ip1.real(), r2 * dQ * p.real();
        grad_.col(is) << r2 * Q * p1.imag(), r2 * Q * ip1.imag(), r2 * dQ * p.imag();
      }
      if (order >= 2) {
        hess_.col(ic) << r2 * Q * p2.real(), r2 * Q * ip2.real(), r2 * dQ * p1.real(),
            -r2 * Q * p2.real(), r2 * dQ * ip1.real(), r2 * d2Q * p.real();
        hess_.col(is) << r2 * Q * p2.imag(), r2 * Q * ip2.imag(), r2 * dQ * p1.imag(),
            -r2 * Q * p2.imag(), r2 * dQ * ip1.imag(), r2 * d2Q * p.imag();
      }
    }
  }
}

double PointBasis::value(const Eigen::VectorXd& coeffs) const { return values_.dot(coeffs); }

Eigen::Vector3d PointBasis::ambient_gradient(const Eigen::VectorXd& coeffs) const {
  return grad_ * coeffs;
}

Eigen::Vector3d PointBasis::surface_gradient(const Eigen::VectorXd& coeffs) const {
  const Eigen::Vector3d g = grad_ * coeffs;
  return g - point_ * point_.dot(g);
}

Eigen::Matrix3d PointBasis::ambient_hessian(const Eigen::VectorXd& coeffs) const {
  const Eigen::Matrix<double, 6, 1> h = hess_ * coeffs;
  Eigen::Matrix3d H;
  H << h[0], h[1], h[2], h[1], h[3], h[4], h[2], h[4], h[5];
  return H;
}

ScalarField::ScalarField(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size())
    throw Error(ErrorCode::InvalidInput, "field size does not match grid");
}

ScalarField ScalarField::constant(GridPtr grid, double c) {
  const int n = grid->size();
  return ScalarField(std::move(grid), Eigen::VectorXd::Constant(n, c));
}

ScalarField ScalarField::from_coeffs(GridPtr grid, const Eigen::VectorXd& coeffs) {
  ScalarField f(grid, grid->basis() * coeffs);
  f.coeffs_ = coeffs;
  return f;
}

const Eigen::VectorXd& ScalarField::coeffs() const {
  if (!coeffs_) coeffs_ = grid_->basis().transpose() * grid_->weights().cwiseProduct(values_);
  return *coeffs_;
}

double ScalarField::evaluate(const Eigen::Vector3d& n) const {
  return evaluate_coeffs(coeffs(), grid_->band(), n);
}

Eigen::Matrix3Xd TangentField::ambient() const {
  Eigen::Matrix3Xd out(3, theta.size());
  for (int k = 0; k < theta.size(); ++k)
    out.col(k) = theta[k] * grid->e_theta().col(k) + phi[k] * grid->e_phi().col(k);
  return out;
}

HarmonicCoeffs analyze(const ScalarField& f) {
  HarmonicCoeffs h;
  h.coeffs = f.coeffs();
  const double energy = integrate(f, f);
  h.tail_energy = std::max(0.0, energy - h.coeffs.squaredNorm());
  return h;
}

ScalarField synthesize(const GridPtr& grid, const Eigen::VectorXd& coeffs) {
  return ScalarField::from_coeffs(grid, coeffs);
}

ScalarField spherical_harmonic(const GridPtr& grid, int l, int m) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(grid->basis_size());
  c[sh_index(l, m)] = 1.0;
  return synthesize(grid, c);
}

Eigen::VectorXd laplacian_coeffs(const Eigen::VectorXd& coeffs) {
  Eigen::VectorXd out(coeffs.size());
  const int band = sh_degree(static_cast<int>(coeffs.size()) - 1);
  for (int l = 0; l <= band; ++l)
    for (int m = -l; m <= l; ++m) out[sh_index(l, m)] = -double(l) * (l + 1) * coeffs[sh_index(l, m)];
  return out;
}

ScalarField laplacian_round(const ScalarField& f) {
  return synthesize(f.grid(), laplacian_coeffs(f.coeffs()));
}

TangentField gradient_round(const ScalarField& f) {
  const auto& grid = f.grid();
  TangentField out{grid, Eigen::VectorXd(grid->size()), Eigen::VectorXd(grid->size())};
  PointBasis pb(grid->band());
  const Eigen::VectorXd& c = f.coeffs();
  for (int k = 0; k < grid->size(); ++k) {
    pb.evaluate(grid->points().col(k), 1);
    const Eigen::Vector3d g = pb.surface_gradient(c);
    out.theta[k] = g.dot(grid->e_theta().col(k));
    out.phi[k] = g.dot(grid->e_phi().col(k));
  }
  return out;
}

Eigen::VectorXd poisson_solve_coeffs(const Eigen::VectorXd& coeffs, double norm_hint) {
  // coeffs[0] * Y_00 integrates to coeffs[0] * sqrt(4 pi)
  const double mean_integral = coeffs[0] * std::sqrt(4.0 * kPi);
  if (std::abs(mean_integral) > 1e-9 * std::max(norm_hint, 1e-300) && mean_integral != 0.0)
    throw Error(ErrorCode::NonZeroMean,
                "source integral " + std::to_string(mean_integral) + " is not zero");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coeffs.size());
  const int band = sh_degree(static_cast<int>(coeffs.size()) - 1);
  for (int l = 1; l <= band; ++l)
    for (int m = -l; m <= l; ++m) out[sh_index(l, m)] = -coeffs[sh_index(l, m)] / (double(l) * (l + 1));
  return out;
}

ScalarField poisson_solve_round(const ScalarField& f) {
  const double norm = std::sqrt(4.0 * kPi * integrate(f, f));
  return synthesize(f.grid(), poisson_solve_coeffs(f.coeffs(), norm));
}

double integrate(const ScalarField& f) { return f.grid()->weights().dot(f.values()); }

double integrate(const ScalarField& f, const ScalarField& weight) {
  return f.grid()->weights().dot(f.values().cwiseProduct(weight.values()));
}

double evaluate_coeffs(const Eigen::VectorXd& coeffs, int band, const Eigen::Vector3d& n) {
  thread_local std::unique_ptr<PointBasis> pb;
  if (!pb || pb->band() != band) pb = std::make_unique<PointBasis>(band);
  pb->evaluate(n, 0);
  return pb->value(coeffs);
}

void write_csv(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out.precision(17);
  out << "lat_index,lon_index,value\n";
  const auto& g = *f.grid();
  for (int i = 0; i < g.n_lat(); ++i)
    for (int j = 0; j < g.n_lon(); ++j) out << i << ',' << j << ',' << f[g.node(i, j)] << '\n';
}

ScalarField read_csv(const GridPtr& grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(grid->size(), std::nan(""));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i = 0, j = 0;
    char c1 = 0, c2 = 0;
    double val = 0.0;
    ss >> i >> c1 >> j >> c2 >> val;
    if (!ss || i < 0 || i >= grid->n_lat() || j < 0 || j >= grid->n_lon())
      throw Error(ErrorCode::IoError, "malformed row in " + path + ": " + line);
    v[grid->node(i, j)] = val;
  }
  if (v.hasNaN()) throw Error(ErrorCode::IoError, "missing nodes in " + path);
  return ScalarField(grid, std::move(v));
}

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

void write_binary(const std::string& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  const auto& s = f.grid()->spec();
  const std::int32_t header[3] = {s.n_lat, s.n_lon, s.band};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(sizeof(double) * f.values().size()));
}

ScalarField read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::int32_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  GridSpec spec{header[0], header[1], header[2]};
  auto grid = spec == GridSpec::for_band(spec.band) ? SphereGrid::for_band(spec.band) : SphereGrid::make(spec);
  Eigen::VectorXd v(grid->size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  if (!in) throw Error(ErrorCode::IoError, "truncated binary field " + path);
  return ScalarField(grid, std::move(v));
}

}  // namespace ahid
