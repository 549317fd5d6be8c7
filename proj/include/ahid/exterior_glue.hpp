#pragma once

// Gluing the collar to a Schwarzschild exterior through a rotationally
// symmetric bridge. Radial work is done in the arclength gauge
// rho(s)^2 g_hat + ds^2, where the mass function mu = (rho/2)(1 - rho'^2)
// satisfies d mu / d rho = rho^2 R / 4. Past t = 1/2 the collar is
// (1 + eps t^2) area/(4 pi) g_hat + c^2 dt^2 with c = (2A - 1) u, which
// continues analytically; the bridge blends its mass function into m with a
// flat smooth step, so R >= 0 as long as the continued collar has R >= 0 and
// stays below mass m.

#include "ahid/collar.hpp"

#include <string>
#include <vector>

namespace ahid {

struct Junction {
  double rho = 0.0;    // areal radius at t = 1/2
  double slope = 0.0;  // d rho / ds at t = 1/2
  double area = 0.0;   // area of the horizon metric
  double eps = 0.0, A = 0.0;
  double u = 0.0;      // round eigenfunction value on the frozen segment
  double mu = 0.0;     // mass function at the junction
};

/// Throws NotRotationallySymmetric if the path is not frozen at t = 1/2.
Junction junction_data(const MetricPath& path, double eps, const PhiProfile& phi);

struct RadialProfile {
  std::vector<double> s, rho, rho_prime, R, mu;
};

/// Bridge plus exterior as a function of areal radius.
class Bridge {
 public:
  /// Throws BridgeInfeasible when no blend from the junction to mass m keeps R >= 0.
  Bridge(const Junction& j, double m);

  const Junction& junction() const { return j_; }
  double m() const { return m_; }
  /// Blend window [rho_a, rho_b]; beyond rho_b the metric is Schwarzschild.
  double rho_a() const { return rho_a_; }
  double rho_b() const { return rho_b_; }

  /// Mass function of the continued collar segment and its rho-derivative.
  double collar_mu(double rho, int order = 0) const;
  double mu(double rho, int order = 0) const;
  double rho_prime(double rho) const;
  double scalar_curvature(double rho) const { return 4.0 * mu(rho, 1) / (rho * rho); }

  /// Arclength from the junction.
  double arclength(double rho) const;

  RadialProfile profile(double rho_max, int nodes_inner = 400, int nodes_outer = 400) const;

 private:
  double collar_t(double rho) const;
  Junction j_;
  double m_;
  double rho_h_, c_;
  double rho_a_ = 0.0, rho_b_ = 0.0;
  double s_b_ = 0.0;
};

Bridge build_bridge(const Junction& j, double m);

/// Arclength antiderivative of the Schwarzschild profile, rho >= 2m.
double schwarzschild_arclength(double rho, double m);

struct GluedMetric {
  double m = 0.0, T = 0.0;
  bool has_collar = true;
  Junction junction;
  CollarSummary collar;
  double collar_H_junction = 0.0;  // min and max of H on the collar slice t = 1/2
  double collar_H_junction_max = 0.0;
  RadialProfile profile;
  std::shared_ptr<const Bridge> bridge;
  double lambda_boundary = 0.0;  // lambda1 of the horizon metric
};

/// Collar slices must include t = 1/2.
GluedMetric assemble(const std::vector<CollarSlice>& slices, const CollarSummary& collar, const Bridge& bridge,
                     double lambda_boundary);
/// Pure Schwarzschild from its minimal sphere rho = 2m.
GluedMetric schwarzschild_only(double m);

struct TheoremReport {
  bool nonnegative_R = false, boundary_R = false, totally_geodesic = false, mean_convex = false,
       schwarzschild = false, junctions = false;
  bool boundary_R_asserted = true;  // only in the degenerate regime lambda1(g) = 0
  double min_R = 0.0, R_at_boundary = 0.0, rho_at_boundary = 0.0, min_H = 0.0;
  double exterior_residual = 0.0, T = 0.0;
  double junction_metric_gap = 0.0, junction_H_gap = 0.0, derivative_gap = 0.0;
  std::string failure;
  bool passed() const { return failure.empty(); }
};

TheoremReport check_theorem(const GluedMetric& gm);
/// Throws VerificationFailure naming the first failing clause.
TheoremReport verify_theorem(const GluedMetric& gm);

struct AdmMass {
  double exact = 0.0;
  std::vector<double> radii, flux;
  double extrapolated = 0.0;
};

/// Exact mass plus the flux integral (1/16 pi) oint (d_j g_ij - d_i g_jj) nu^i
/// evaluated with difference quotients of the Cartesian components.
AdmMass adm_mass(const GluedMetric& gm);

/// CSV with columns s,rho,rho_prime,R.
void write_profile_csv(const std::string& file, const RadialProfile& p);

}  // namespace ahid
