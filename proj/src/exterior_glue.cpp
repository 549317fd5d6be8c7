#include "ahid/exterior_glue.hpp"

#include "ahid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace ahid {

namespace {

constexpr double kPi = std::numbers::pi;

const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gl24() {
  static const auto rule = [] {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> r;
    gauss_legendre(24, r.first, r.second);
    return r;
  }();
  return rule;
}

template <class Fn>
double quad(Fn&& f, double a, double b, int panels = 8) {
  const auto& [x, w] = gl24();
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p)
    for (Eigen::Index k = 0; k < x.size(); ++k) sum += 0.5 * h * w[k] * f(a + h * (p + 0.5 * (x[k] + 1.0)));
  return sum;
}

// Arclength of Schwarzschild between two radii, with rho = 2m + y^2 removing
// the square-root singularity at the minimal sphere.
double schwarzschild_ds(double r0, double r1, double m) {
  const double y0 = std::sqrt(std::max(r0 - 2 * m, 0.0)), y1 = std::sqrt(std::max(r1 - 2 * m, 0.0));
  return quad([&](double y) { return 2.0 * std::sqrt(2 * m + y * y); }, y0, y1, 4);
}

}  // namespace

Junction junction_data(const MetricPath& path, double eps, const PhiProfile& phi) {
  if (path.zeta()(0.5) != 0.0) throw Error(ErrorCode::NotRotationallySymmetric, "path not frozen at t = 1/2");
  const Eigen::VectorXd sig = path.sigma(0.5).values();
  if (sig.maxCoeff() - sig.minCoeff() > 1e-12)
    throw Error(ErrorCode::NotRotationallySymmetric, "h(1/2) is not round");
  if (eps < 0.0) throw Error(ErrorCode::InvalidInput, "eps must be nonnegative");
  Junction j;
  j.area = area(path.start());
  j.eps = eps;
  j.A = phi.A();
  j.u = 1.0 / std::sqrt(j.area);
  const EigenPair& ep = path.eigen(0.5);
  if ((ep.u.values().array() - j.u).abs().maxCoeff() > 1e-8)
    throw Error(ErrorCode::NotRotationallySymmetric, "eigenfunction at t = 1/2 is not constant");
  const double t = 0.5, q = 1.0 + eps * t * t;
  j.rho = std::sqrt(q * j.area / (4 * kPi));
  j.slope = eps * t * j.rho / (q * phi(t) * j.u);
  j.mu = 0.5 * j.rho * (1.0 - j.slope * j.slope);
  return j;
}

double schwarzschild_arclength(double rho, double m) {
  if (rho < 2 * m) throw Error(ErrorCode::InvalidInput, "inside the Schwarzschild horizon");
  return std::sqrt(rho * (rho - 2 * m)) + 2 * m * std::log(std::sqrt(rho) + std::sqrt(rho - 2 * m));
}

// ---------------------------------------------------------------------------

Bridge::Bridge(const Junction& j, double m) : j_(j), m_(m) {
  rho_h_ = std::sqrt(j.area / (4 * kPi));
  c_ = (2 * j.A - 1) * j.u;
  if (!(j.eps > 0.0)) throw Error(ErrorCode::BridgeInfeasible, "eps = 0 leaves a cylinder that never opens up");
  if (!(m > j.mu))
    throw Error(ErrorCode::BridgeInfeasible, "m = " + std::to_string(m) + " does not exceed the junction mass " +
                                                 std::to_string(j.mu));
  // march along the continued collar until its mass function reaches m
  const double step = 1e-3 * j.rho, cap = 100.0 * std::max(j.rho, 2 * m);
  double lo = j.rho, hi = j.rho;
  for (;;) {
    if (collar_mu(hi, 1) < 0.0)
      throw Error(ErrorCode::BridgeInfeasible, "continued collar loses R >= 0 before reaching mass m");
    if (collar_mu(hi) >= m) break;
    lo = hi;
    hi += step;
    if (hi > cap) throw Error(ErrorCode::BridgeInfeasible, "continued collar never reaches mass m");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (collar_mu(mid) < m ? lo : hi) = mid;
  }
  rho_b_ = hi;
  rho_a_ = std::max(j.rho, 2 * m + 0.5 * (rho_b_ - 2 * m));
  if (!(rho_a_ < rho_b_)) throw Error(ErrorCode::BridgeInfeasible, "empty blend window");
  s_b_ = arclength(rho_b_);
}

double Bridge::collar_t(double rho) const {
  return std::sqrt(std::max((rho / rho_h_) * (rho / rho_h_) - 1.0, 0.0) / j_.eps);
}

double Bridge::collar_mu(double rho, int order) const {
  const double t = collar_t(rho), q = 1.0 + j_.eps * t * t;
  const double p = rho_h_ * j_.eps * t / (c_ * std::sqrt(q));
  if (order == 0) return 0.5 * rho * (1.0 - p * p);
  return 0.5 * (1.0 - p * p) - rho_h_ * rho_h_ * j_.eps / (c_ * c_ * q);
}

double Bridge::mu(double rho, int order) const {
  if (rho >= rho_b_) return order == 0 ? m_ : 0.0;
  if (rho <= rho_a_) return collar_mu(rho, order);
  const double w = rho_b_ - rho_a_, x = (rho - rho_a_) / w;
  const double mc = collar_mu(rho), S = smooth_step(x);
  if (order == 0) return mc + (m_ - mc) * S;
  return collar_mu(rho, 1) * (1.0 - S) + (m_ - mc) * smooth_step(x, 1) / w;
}

double Bridge::rho_prime(double rho) const { return std::sqrt(1.0 - 2.0 * mu(rho) / rho); }

double Bridge::arclength(double rho) const {
  if (rho < j_.rho) throw Error(ErrorCode::InvalidInput, "radius inside the junction");
  if (rho <= rho_a_) return c_ * (collar_t(rho) - 0.5);
  if (rho <= rho_b_) {
    const double s_a = c_ * (collar_t(rho_a_) - 0.5);
    return s_a + quad([&](double r) { return 1.0 / rho_prime(r); }, rho_a_, rho);
  }
  return s_b_ + schwarzschild_arclength(rho, m_) - schwarzschild_arclength(rho_b_, m_);
}

RadialProfile Bridge::profile(double rho_max, int nodes_inner, int nodes_outer) const {
  if (rho_max <= rho_b_ || nodes_inner < 2 || nodes_outer < 2) throw Error(ErrorCode::InvalidInput, "bad profile grid");
  std::vector<double> rs;
  for (int k = 0; k < nodes_inner; ++k) rs.push_back(j_.rho + (rho_b_ - j_.rho) * k / (nodes_inner - 1));
  const double ratio = std::log(rho_max / rho_b_);
  for (int k = 1; k < nodes_outer; ++k) rs.push_back(rho_b_ * std::exp(ratio * k / (nodes_outer - 1)));
  RadialProfile p;
  for (double r : rs) {
    p.rho.push_back(r);
    p.s.push_back(arclength(r));
    p.rho_prime.push_back(rho_prime(r));
    p.R.push_back(scalar_curvature(r));
    p.mu.push_back(mu(r));
  }
  return p;
}

Bridge build_bridge(const Junction& j, double m) { return Bridge(j, m); }

// ---------------------------------------------------------------------------

namespace {

double glued_rho_prime(const GluedMetric& gm, double rho) {
  return gm.bridge ? gm.bridge->rho_prime(rho) : std::sqrt(1.0 - 2.0 * gm.m / rho);
}

}  // namespace

GluedMetric assemble(const std::vector<CollarSlice>& slices, const CollarSummary& collar, const Bridge& bridge,
                     double lambda_boundary) {
  GluedMetric gm;
  gm.m = bridge.m();
  gm.T = bridge.rho_b();
  gm.junction = bridge.junction();
  gm.collar = collar;
  gm.lambda_boundary = lambda_boundary;
  gm.bridge = std::make_shared<const Bridge>(bridge);
  gm.profile = bridge.profile(250.0 * gm.m);
  auto it = std::find_if(slices.begin(), slices.end(), [](const CollarSlice& s) { return s.t == 0.5; });
  if (it == slices.end()) throw Error(ErrorCode::InvalidInput, "collar slices must include t = 1/2");
  const CollarFields f = evaluate_collar(*it, gm.junction.eps, PhiProfile(gm.junction.A));
  gm.collar_H_junction = f.H.minCoeff();
  gm.collar_H_junction_max = f.H.maxCoeff();
  return gm;
}

GluedMetric schwarzschild_only(double m) {
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidInput, "mass must be positive");
  GluedMetric gm;
  gm.m = m;
  gm.T = 2 * m;
  gm.has_collar = false;
  const int n = 800;
  const double ratio = std::log(250.0 / 2.0);
  for (int k = 0; k < n; ++k) {
    const double r = 2 * m * std::exp(ratio * k / (n - 1));
    gm.profile.rho.push_back(r);
    gm.profile.s.push_back(schwarzschild_arclength(r, m) - schwarzschild_arclength(2 * m, m));
    gm.profile.rho_prime.push_back(std::sqrt(1.0 - 2 * m / r));
    gm.profile.R.push_back(0.0);
    gm.profile.mu.push_back(m);
  }
  return gm;
}

TheoremReport check_theorem(const GluedMetric& gm) {
  TheoremReport r;
  const RadialProfile& p = gm.profile;
  auto fail = [&](const std::string& what) {
    if (r.failure.empty()) r.failure = what;
  };

  // (i) nonnegative scalar curvature, vanishing on the boundary
  r.min_R = *std::min_element(p.R.begin(), p.R.end());
  if (gm.has_collar) r.min_R = std::min(r.min_R, gm.collar.min_R);
  r.nonnegative_R = r.min_R >= -1e-6;
  if (gm.has_collar) {
    // R ~ a + b t near the boundary; rho ~ a + b sqrt(t) + c t
    const auto& t = gm.collar.t;
    const auto& R = gm.collar.max_abs_R;
    r.R_at_boundary = R[0] - t[0] * (R[1] - R[0]) / (t[1] - t[0]);
    Eigen::Matrix3d M;
    Eigen::Vector3d y;
    for (int k = 0; k < 3; ++k) {
      M.row(k) << 1.0, std::sqrt(t[k]), t[k];
      y[k] = gm.collar.max_rho[k];
    }
    r.rho_at_boundary = M.fullPivLu().solve(y)[0];
    r.boundary_R_asserted = std::abs(gm.lambda_boundary) <= 1e-6;
  }
  r.boundary_R = std::abs(r.R_at_boundary) <= 1e-5 || !r.boundary_R_asserted;
  if (!r.nonnegative_R) fail("(i) scalar curvature below -1e-6");
  if (!r.boundary_R) fail("(i) scalar curvature does not vanish at the boundary");

  // (ii) boundary totally geodesic
  r.totally_geodesic = std::abs(r.rho_at_boundary) <= 1e-5;
  if (!r.totally_geodesic) fail("(ii) second fundamental form does not vanish at the boundary");

  // (iii) mean convex foliation
  r.min_H = std::numeric_limits<double>::infinity();
  for (size_t k = gm.has_collar ? 0 : 1; k < p.rho.size(); ++k) r.min_H = std::min(r.min_H, p.rho_prime[k] / p.rho[k]);
  if (gm.has_collar) r.min_H = std::min(r.min_H, gm.collar.min_H);
  r.mean_convex = r.min_H > 0.0;
  if (!r.mean_convex) fail("(iii) a slice is not mean convex");

  // (iv) Schwarzschild beyond T
  r.T = gm.T;
  for (size_t k = 0; k < p.rho.size(); ++k) {
    if (p.rho[k] < gm.T) continue;
    r.exterior_residual = std::max(r.exterior_residual, std::abs(p.rho_prime[k] - std::sqrt(1 - 2 * gm.m / p.rho[k])));
    if (k > 0 && p.rho[k - 1] >= gm.T) {
      const double ds = schwarzschild_ds(p.rho[k - 1], p.rho[k], gm.m);
      r.exterior_residual = std::max(r.exterior_residual, std::abs(p.s[k] - p.s[k - 1] - ds) / ds);
    }
  }
  // the bare exterior starts on its own minimal sphere, T = 2m
  r.schwarzschild = r.exterior_residual <= 1e-9 && (gm.T > 2 * gm.m || (!gm.has_collar && gm.T == 2 * gm.m));
  if (!r.schwarzschild) fail("(iv) exterior is not Schwarzschild beyond T > 2m");

  // junctions: collar/bridge slice metric and H, bridge/exterior contact
  if (gm.has_collar) {
    const Junction& j = gm.junction;
    r.junction_metric_gap = std::abs(p.rho.front() * p.rho.front() - (1 + j.eps / 4) * j.area / (4 * kPi)) /
                            (p.rho.front() * p.rho.front());
    const double Hb = p.rho_prime.front() / p.rho.front();
    r.junction_H_gap = std::max(std::abs(gm.collar_H_junction - Hb), std::abs(gm.collar_H_junction_max - Hb));
    // one-sided differences of mu in blend units at rho_b, against mu = m outside
    const Bridge& b = *gm.bridge;
    const double w = b.rho_b() - b.rho_a(), eta = 1e-3;
    std::array<double, 5> f;
    for (int k = 0; k < 5; ++k) f[k] = (b.mu(b.rho_b() - k * eta * w) - gm.m) / gm.m;
    const double d[4] = {(f[0] - f[1]) / eta, (f[0] - 2 * f[1] + f[2]) / (eta * eta),
                         (f[0] - 3 * f[1] + 3 * f[2] - f[3]) / std::pow(eta, 3),
                         (f[0] - 4 * f[1] + 6 * f[2] - 4 * f[3] + f[4]) / std::pow(eta, 4)};
    for (double v : d) r.derivative_gap = std::max(r.derivative_gap, std::abs(v));
  }
  r.junctions = r.junction_metric_gap <= 1e-7 && r.junction_H_gap <= 1e-7 && r.derivative_gap <= 1e-6;
  if (!r.junctions) fail("junction mismatch");
  return r;
}

TheoremReport verify_theorem(const GluedMetric& gm) {
  TheoremReport r = check_theorem(gm);
  if (!r.passed()) throw Error(ErrorCode::VerificationFailure, r.failure);
  return r;
}

AdmMass adm_mass(const GluedMetric& gm) {
  AdmMass out;
  out.exact = gm.m;
  const GridPtr grid = SphereGrid::for_band(8);
  auto metric = [&](const Eigen::Vector3d& x) {
    const double r = x.norm(), rp = glued_rho_prime(gm, r);
    const Eigen::Vector3d n = x / r;
    return Eigen::Matrix3d(Eigen::Matrix3d::Identity() + (1.0 / (rp * rp) - 1.0) * n * n.transpose());
  };
  for (double k : {50.0, 100.0, 200.0}) {
    const double r = k * gm.m, h = 1e-3 * r;
    double flux = 0.0;
    for (int q = 0; q < grid->size(); ++q) {
      const Eigen::Vector3d n = grid->points().col(q), x = r * n;
      std::array<Eigen::Matrix3d, 3> dg;
      for (int c = 0; c < 3; ++c) {
        const Eigen::Vector3d e = Eigen::Vector3d::Unit(c) * h;
        dg[c] = (metric(x - 2 * e) - 8 * metric(x - e) + 8 * metric(x + e) - metric(x + 2 * e)) / (12 * h);
      }
      double integrand = 0.0;
      for (int i = 0; i < 3; ++i) {
        double v = 0.0;
        for (int j = 0; j < 3; ++j) v += dg[j](i, j) - dg[i](j, j);
        integrand += v * n[i];
      }
      flux += grid->weights()[q] * r * r * integrand;
    }
    out.radii.push_back(r);
    out.flux.push_back(flux / (16 * kPi));
  }
  // m(r) = m + a/r + b/r^2 + ..., radii in ratio 2
  const double n1 = 2 * out.flux[1] - out.flux[0], n2 = 2 * out.flux[2] - out.flux[1];
  out.extrapolated = (4 * n2 - n1) / 3;
  return out;
}

void write_profile_csv(const std::string& file, const RadialProfile& p) {
  std::ofstream os(file);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + file);
  os.precision(17);
  os << "s,rho,rho_prime,R\n";
  for (size_t k = 0; k < p.s.size(); ++k) os << p.s[k] << ',' << p.rho[k] << ',' << p.rho_prime[k] << ',' << p.R[k] << '\n';
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + file);
}

}  // namespace ahid
