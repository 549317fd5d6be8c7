#include "ahid/chart_calculus.hpp"

#include "ahid/errors.hpp"
#include "ahid/metric_path.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

namespace ahid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// fourth-order stencils
inline double d1(double m2, double m1, double p1, double p2, double h) {
  return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
}
inline double d2(double m2, double m1, double c, double p1, double p2, double h) {
  return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
}

// Derivative arrays of a node scalar; valid at margin 2.
struct Derivs {
  Eigen::VectorXd u, v, uu, vv, uv;
};

Derivs differentiate(const Chart& c, const Eigen::VectorXd& f, bool second) {
  const int n = c.n;
  const double h = c.spacing();
  Derivs d;
  d.u = d.v = Eigen::VectorXd::Constant(c.size(), kNaN);
  if (second) d.uu = d.vv = d.uv = d.u;
  auto F = [&](int i, int j) { return f[c.index(i, j)]; };
  for (int i = 2; i < n - 2; ++i)
    for (int j = 2; j < n - 2; ++j) {
      const int k = c.index(i, j);
      d.u[k] = d1(F(i - 2, j), F(i - 1, j), F(i + 1, j), F(i + 2, j), h);
      d.v[k] = d1(F(i, j - 2), F(i, j - 1), F(i, j + 1), F(i, j + 2), h);
      if (!second) continue;
      d.uu[k] = d2(F(i - 2, j), F(i - 1, j), F(i, j), F(i + 1, j), F(i + 2, j), h);
      d.vv[k] = d2(F(i, j - 2), F(i, j - 1), F(i, j), F(i, j + 1), F(i, j + 2), h);
      double s[5];
      for (int a = -2; a <= 2; ++a)
        s[a + 2] = d1(F(i + a, j - 2), F(i + a, j - 1), F(i + a, j + 1), F(i + a, j + 2), h);
      d.uv[k] = d1(s[0], s[1], s[3], s[4], h);
    }
  return d;
}

Eigen::VectorXd component(const std::vector<Eigen::Matrix2d>& g, int a, int b) {
  Eigen::VectorXd out(g.size());
  for (size_t k = 0; k < g.size(); ++k) out[k] = g[k](a, b);
  return out;
}

void check_metric(const ChartMetric& m) {
  if (static_cast<int>(m.g.size()) != m.chart.size())
    throw Error(ErrorCode::InvalidInput, "chart metric has the wrong number of nodes");
  for (size_t k = 0; k < m.g.size(); ++k)
    if (!(m.g[k](0, 0) > 0.0 && m.g[k].determinant() > 0.0))
      throw Error(ErrorCode::SingularMetric, "metric not positive definite at chart node " + std::to_string(k));
}

}  // namespace

Eigen::Vector2d Chart::coord(int i, int j) const {
  return Eigen::Vector2d(-half_width + i * spacing(), -half_width + j * spacing());
}

Eigen::Vector3d Chart::to_sphere(const Eigen::Vector2d& z) const {
  const double r2 = z.squaredNorm(), s = 1.0 / (1.0 + r2);
  const double h = pole == Pole::North ? 1.0 - r2 : r2 - 1.0;
  return Eigen::Vector3d(2.0 * z.x() * s, 2.0 * z.y() * s, h * s);
}

Eigen::Vector2d Chart::from_sphere(const Eigen::Vector3d& p) const {
  const double d = pole == Pole::North ? 1.0 + p.z() : 1.0 - p.z();
  return Eigen::Vector2d(p.x() / d, p.y() / d);
}

Mat32 Chart::frame(const Eigen::Vector2d& z) const {
  const double r2 = z.squaredNorm(), s = 1.0 / (1.0 + r2);
  const double sign = pole == Pole::North ? 1.0 : -1.0;
  Mat32 J;
  for (int a = 0; a < 2; ++a) {
    // d/dz_a of 2 z_b s and of sign (1 - r2) s = sign (2 s - 1)
    const double ds = -2.0 * z[a] * s * s;
    J(0, a) = 2.0 * ((a == 0) * s + z.x() * ds);
    J(1, a) = 2.0 * ((a == 1) * s + z.y() * ds);
    J(2, a) = sign * 2.0 * ds;
  }
  return J;
}

Eigen::Matrix3Xd Chart::points() const {
  Eigen::Matrix3Xd p(3, size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.col(index(i, j)) = to_sphere(coord(i, j));
  return p;
}

std::vector<Mat32> Chart::frames() const {
  std::vector<Mat32> f(size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f[index(i, j)] = frame(coord(i, j));
  return f;
}

ChartAtlas ChartAtlas::make(int n, double half_width) {
  if (n < 9) throw Error(ErrorCode::InvalidInput, "chart grids need at least 9 nodes per side");
  return ChartAtlas{Chart{Pole::North, n, half_width}, Chart{Pole::South, n, half_width}};
}

Eigen::Vector2d ChartAtlas::transition(const Eigen::Vector2d& z) { return z / z.squaredNorm(); }

Eigen::Matrix2d ChartAtlas::transition_jacobian(const Eigen::Vector2d& z) {
  const double r2 = z.squaredNorm();
  return (Eigen::Matrix2d::Identity() * r2 - 2.0 * z * z.transpose()) / (r2 * r2);
}

Eigen::Matrix2d round_chart_metric(const Eigen::Vector2d& z) {
  const double s = 2.0 / (1.0 + z.squaredNorm());
  return s * s * Eigen::Matrix2d::Identity();
}

Eigen::VectorXd curvature_general(const ChartMetric& m) {
  check_metric(m);
  const Chart& c = m.chart;
  const Eigen::VectorXd E = component(m.g, 0, 0), F = component(m.g, 0, 1), G = component(m.g, 1, 1);
  const Derivs dE = differentiate(c, E, true), dF = differentiate(c, F, true), dG = differentiate(c, G, true);
  Eigen::VectorXd K = Eigen::VectorXd::Constant(c.size(), kNaN);
  for (int k = 0; k < c.size(); ++k) {
    if (std::isnan(dE.uv[k])) continue;
    Eigen::Matrix3d a, b;
    a << -0.5 * dE.vv[k] + dF.uv[k] - 0.5 * dG.uu[k], 0.5 * dE.u[k], dF.u[k] - 0.5 * dE.v[k],
        dF.v[k] - 0.5 * dG.u[k], E[k], F[k],
        0.5 * dG.v[k], F[k], G[k];
    b << 0.0, 0.5 * dE.v[k], 0.5 * dG.u[k],
        0.5 * dE.v[k], E[k], F[k],
        0.5 * dG.u[k], F[k], G[k];
    const double det = E[k] * G[k] - F[k] * F[k];
    K[k] = (a.determinant() - b.determinant()) / (det * det);
  }
  return K;
}

Eigen::VectorXd laplace_beltrami_general(const ChartMetric& m, const Eigen::VectorXd& f) {
  check_metric(m);
  const Chart& c = m.chart;
  // (1/sqrt det) d_i(a^{ij} d_j f) with a^{ij} = sqrt det m^{ij}, expanded by
  // the product rule so every stencil has width five
  Eigen::VectorXd a11(c.size()), a12(c.size()), a22(c.size()), sq(c.size());
  for (int k = 0; k < c.size(); ++k) {
    sq[k] = std::sqrt(m.g[k].determinant());
    const Eigen::Matrix2d a = sq[k] * m.g[k].inverse();
    a11[k] = a(0, 0);
    a12[k] = a(0, 1);
    a22[k] = a(1, 1);
  }
  const Derivs df = differentiate(c, f, true);
  const Derivs d11 = differentiate(c, a11, false), d12 = differentiate(c, a12, false),
               d22 = differentiate(c, a22, false);
  Eigen::VectorXd out(c.size());
  for (int k = 0; k < c.size(); ++k) {
    const double second = a11[k] * df.uu[k] + 2.0 * a12[k] * df.uv[k] + a22[k] * df.vv[k];
    const double first = (d11.u[k] + d12.v[k]) * df.u[k] + (d12.u[k] + d22.v[k]) * df.v[k];
    out[k] = (second + first) / sq[k];
  }
  return out;
}

void chart_gradient(const Chart& c, const Eigen::VectorXd& f, Eigen::VectorXd& g1, Eigen::VectorXd& g2) {
  Derivs d = differentiate(c, f, false);
  g1 = std::move(d.u);
  g2 = std::move(d.v);
}

TraceNorm trace_and_norm(const Eigen::Matrix2d& m, const Eigen::Matrix2d& mdot) {
  const Eigen::Matrix2d a = m.inverse() * mdot;
  return {a.trace(), (a * a).trace()};
}

void time_derivatives(const std::vector<const std::vector<Eigen::Matrix2d>*>& s, double dt,
                      std::vector<Eigen::Matrix2d>& first, std::vector<Eigen::Matrix2d>& second) {
  if (s.size() != 5) throw Error(ErrorCode::MissingDerivatives, "five time samples required");
  const size_t n = s[2]->size();
  first.resize(n);
  second.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const auto &a = (*s[0])[k], &b = (*s[1])[k], &c = (*s[2])[k], &d = (*s[3])[k], &e = (*s[4])[k];
    first[k] = (a - 8.0 * b + 8.0 * d - e) / (12.0 * dt);
    second[k] = (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * dt * dt);
  }
}

double interpolate(const Chart& c, const Eigen::VectorXd& f, const Eigen::Vector2d& z) {
  const double h = c.spacing();
  double w[2][4];
  int base[2];
  for (int a = 0; a < 2; ++a) {
    const double x = (z[a] + c.half_width) / h;
    base[a] = std::clamp(static_cast<int>(std::floor(x)) - 1, 0, c.n - 4);
    const double s = x - base[a];
    for (int p = 0; p < 4; ++p) {
      double l = 1.0;
      for (int q = 0; q < 4; ++q)
        if (q != p) l *= (s - q) / double(p - q);
      w[a][p] = l;
    }
  }
  double v = 0.0;
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) v += w[0][p] * w[1][q] * f[c.index(base[0] + p, base[1] + q)];
  return v;
}

double AtlasScalar::evaluate(const ChartAtlas& atlas, const Eigen::Vector3d& p) const {
  const Chart& c = atlas.owner(p);
  return interpolate(c, c.pole == Pole::North ? north : south, c.from_sphere(p));
}

double north_partition(const Eigen::Vector3d& p) { return smooth_step((p.z() + 0.3) / 0.6); }

double rayleigh_quotient_charts(const ChartAtlas& atlas, const ChartIntegrand& north, const ChartIntegrand& south) {
  double num = 0.0, den = 0.0;
  for (const Chart* c : {&atlas.north, &atlas.south}) {
    const ChartIntegrand& d = c->pole == Pole::North ? north : south;
    const double h2 = c->spacing() * c->spacing();
    for (int i = 0; i < c->n; ++i)
      for (int j = 0; j < c->n; ++j) {
        const int k = c->index(i, j);
        const Eigen::Vector3d p = c->to_sphere(c->coord(i, j));
        const double chi = c->pole == Pole::North ? north_partition(p) : 1.0 - north_partition(p);
        if (chi == 0.0) continue;
        const double sq = std::sqrt(d.g[k].determinant());
        const double grad2 = d.dv[k].dot(d.g[k].inverse() * d.dv[k]);
        num += chi * h2 * sq * (grad2 + d.K[k] * d.v[k] * d.v[k]);
        den += chi * h2 * sq * d.v[k] * d.v[k];
      }
  }
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroNorm, "test function has zero L2 norm on the charts");
  return num / den;
}

void write_chart_metric_binary(const std::string& file, const ChartMetric& m) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + file);
  const std::int32_t hdr[2] = {m.chart.pole == Pole::North ? 0 : 1, m.chart.n};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(&m.chart.half_width), sizeof(double));
  for (const auto& g : m.g) {
    const double v[3] = {g(0, 0), g(0, 1), g(1, 1)};
    out.write(reinterpret_cast<const char*>(v), sizeof v);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + file);
}

void write_chart_csv(const std::string& file, const Chart& c, const Eigen::VectorXd& f) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + file);
  out.precision(17);
  out << "i,j,z1,z2,value\n";
  for (int i = 0; i < c.n; ++i)
    for (int j = 0; j < c.n; ++j) {
      const Eigen::Vector2d z = c.coord(i, j);
      out << i << ',' << j << ',' << z.x() << ',' << z.y() << ',' << f[c.index(i, j)] << '\n';
    }
}

}  // namespace ahid
