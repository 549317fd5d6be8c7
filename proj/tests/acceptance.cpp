// End-to-end acceptance checks, one PASS/FAIL line per criterion.

#include "ahid/chart_calculus.hpp"
#include "ahid/collar.hpp"
#include "ahid/degenerate_finder.hpp"
#include "ahid/errors.hpp"
#include "ahid/exterior_glue.hpp"
#include "ahid/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace ahid;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void report(int n, bool pass, const std::string& what, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s [%s] (%.1f s)\n", pass ? "PASS" : "FAIL", n, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

template <class Fn>
void run(int n, const std::string& what, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::ostringstream detail;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(n, pass, what, detail.str(), s);
}

Eigen::VectorXd random_coeffs(int band, double amp, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(sh_count(band));
  for (int i = 0; i < c.size(); ++i) c[i] = amp * nd(rng) / std::pow(1.0 + sh_degree(i), 2);
  return c;
}

ScalarField random_field(const GridPtr& g, int band, double amp, std::mt19937& rng) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(sh_count(g->band()));
  c.head(sh_count(band)) = random_coeffs(band, amp, rng);
  return ScalarField::from_coeffs(g, c);
}

// Degenerate metric and the collar built on it, shared by criteria 3 to 8.
struct Degenerate {
  DegenerateResult result;
  std::unique_ptr<MetricPath> path;
  std::vector<CollarSlice> slices;
  EigenCurve curve;
  std::unique_ptr<SearchResult> search;
};

Degenerate& degenerate() {
  static Degenerate d = [] {
    Degenerate d;
    d.result = find_degenerate(default_seed(SphereGrid::for_band(16)), 1e-7);
    return d;
  }();
  return d;
}

const MetricPath& degenerate_path() {
  Degenerate& d = degenerate();
  if (!d.path) d.path = std::make_unique<MetricPath>(d.result.metric());
  return *d.path;
}

const SearchResult& degenerate_search() {
  Degenerate& d = degenerate();
  if (!d.search) {
    d.curve = eigen_curve(degenerate_path());
    d.slices = build_collar_slices(degenerate_path());
    const PipelineConfig cfg;
    d.search = std::make_unique<SearchResult>(parameter_search(d.slices, cfg.eps_range, cfg.A_range, d.curve.alpha));
  }
  return *d.search;
}

}  // namespace

int main() {
  run(1, "round eigenvalue at band 32", [](std::ostream& out) {
    GridPtr g = SphereGrid::for_band(32);
    const EigenPair ep = first_eigenpair(ConformalMetric::round(g));
    const double dev = (ep.u.values().array() - 1.0 / std::sqrt(4 * kPi)).abs().maxCoeff();
    out << "lambda1 - 1 = " << ep.lambda1 - 1.0 << ", sup|u - const| = " << dev;
    return std::abs(ep.lambda1 - 1.0) <= 1e-8 && dev <= 1e-8;
  });

  run(2, "conformal scaling on 5 random metrics", [](std::ostream& out) {
    GridPtr g = SphereGrid::for_band(32);
    std::mt19937 rng(11);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const ScalarField w = random_field(g, 6, 0.4, rng);
      const double l0 = first_eigenpair(ConformalMetric(w)).lambda1;
      for (double c : {-1.0, 0.5, 2.0}) {
        const double lc = first_eigenpair(ConformalMetric(w).scaled(c)).lambda1;
        worst = std::max(worst, std::abs(lc - std::exp(-2 * c) * l0) / std::abs(std::exp(-2 * c) * l0));
      }
    }
    out << "max relative error " << worst;
    return worst <= 1e-7;
  });

  run(3, "degenerate construction for the default seed", [](std::ostream& out) {
    const DegenerateResult& r = degenerate().result;
    out << "t0 = " << r.t0 << ", A = " << r.threshold.A << ", |lambda1(g_t0)| = " << std::abs(r.lambda_t0)
        << ", lambda1(g_0) - 1 = " << r.lambda_start - 1.0 << ", certificate on g_1 = " << r.certificate_value;
    return r.t0 > 0.0 && r.t0 < 1.0 && std::abs(r.lambda_t0) <= 1e-7 && std::abs(r.lambda_start - 1.0) <= 1e-8 &&
           r.certificate_value < 0.0;
  });

  run(4, "metric path invariants on the degenerate metric", [](std::ostream& out) {
    const PathChecks c = check_path(degenerate_path());
    out << "area drift " << c.area_drift << ", area form drift " << c.area_form_drift << ", frozen " << c.frozen
        << ", alpha " << c.curve.alpha << ", bound at " << c.curve.t.size() << " times " << c.linear_bound;
    return c.area_drift <= 1e-7 && c.area_form_drift <= 1e-4 && c.frozen && c.curve.alpha > 0.0 && c.linear_bound &&
           c.curve.t.size() == 65;
  });

  run(5, "collar formula against the 3d Christoffel oracle", [](std::ostream& out) {
    const SearchResult& sr = degenerate_search();
    const PhiProfile phi(sr.A);
    const std::vector<double> times{0.02, 0.1, 0.2, 0.6, 0.9};
    const std::vector<Eigen::Vector2d> pts{{0.3, 0.1}, {-0.6, 0.8}};
    const MetricPath round_path(ConformalMetric::round(SphereGrid::for_band(16)));
    const OracleComparison a = compare_with_oracle(round_path, sr.eps, phi, times, pts);
    const OracleComparison b = compare_with_oracle(degenerate_path(), sr.eps, phi, times, pts);
    out << "round " << a.max_relative << ", degenerate " << b.max_relative << " (eps " << sr.eps << ", A " << sr.A
        << ")";
    return a.max_relative <= 1e-4 && b.max_relative <= 1e-4;
  });

  run(6, "collar conclusions", [](std::ostream& out) {
    const SearchResult& sr = degenerate_search();
    const CollarSummary& s = sr.summary;
    const double ratio = s.max_rho_tmin / s.rho_scale_tmin;
    out << "eps " << sr.eps << ", A " << sr.A << ", min R " << s.min_R << ", min H " << s.min_H << ", H error "
        << s.max_H_error << ", max|rho(t_min)| / (t_min^{3/2}/A) = " << ratio << ", rho decreasing " << s.rho_decreasing
        << ", sup|R| decreasing " << s.R_decreasing;
    return s.min_R > 0.0 && s.min_H > 0.0 && s.max_H_error <= 1e-4 && ratio <= 10.0 && s.rho_decreasing &&
           s.R_decreasing;
  });

  run(7, "sqrt(t) boundary chart", [](std::ostream& out) {
    const SearchResult& sr = degenerate_search();
    const SGaugeReport r = sqrt_reparametrize(degenerate_path(), sr.eps, PhiProfile(sr.A));
    out << "H(0) = " << r.H_at_zero << ", third differences " << r.third_derivative_coarse << " -> "
        << r.third_derivative_fine << ", finite " << r.finite;
    return r.finite && std::abs(r.H_at_zero) <= 1e-5;
  });

  run(8, "glue to Schwarzschild", [](std::ostream& out) {
    const SearchResult& sr = degenerate_search();
    const Degenerate& d = degenerate();
    const PhiProfile phi(sr.A);
    const Junction j = junction_data(degenerate_path(), sr.eps, phi);
    const double mh = hawking_mass(j.area), m = 1.02 * mh;
    const GluedMetric gm = assemble(d.slices, sr.summary, build_bridge(j, m), d.curve.lambda1.front());
    const TheoremReport th = check_theorem(gm);
    const AdmMass adm = adm_mass(gm);
    bool infeasible = true;
    for (double eps : PipelineConfig{}.eps_range) {
      try {
        build_bridge(junction_data(degenerate_path(), eps, phi), mh);
        infeasible = false;
      } catch (const Error& e) {
        infeasible = infeasible && e.code() == ErrorCode::BridgeInfeasible;
      }
    }
    out << "m = " << m << ", min R " << th.min_R << ", T = " << th.T << ", exterior residual " << th.exterior_residual
        << ", ADM exact " << adm.exact << ", numeric " << adm.extrapolated << ", infeasible at Hawking mass "
        << infeasible;
    if (!th.failure.empty()) out << ", failure: " << th.failure;
    return th.passed() && th.min_R >= -1e-6 && th.T > 2 * m && th.exterior_residual <= 1e-9 && adm.exact == m &&
           std::abs(adm.extrapolated - m) <= 1e-3 && infeasible;
  });

  run(9, "Rayleigh numerator is affine in zeta", [](std::ostream& out) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ud(-0.5, 1.5);
    GridPtr g = SphereGrid::for_band(12);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const ConformalMetric gm(random_field(g, 6, 0.6, rng));
      const ScalarField v = random_field(g, 10, 1.0, rng);
      const double z = ud(rng);
      const double n1 = rayleigh_numerator(v, gm, 1.0), n0 = rayleigh_numerator(v, gm, 0.0);
      const double nz = rayleigh_numerator(v, gm, z);
      worst = std::max(worst, std::abs(nz - (z * n1 + (1 - z) * n0)) / std::max(1.0, std::abs(nz)));
    }
    out << "max deviation " << worst;
    return worst <= 1e-11;
  });

  run(10, "convergence orders", [](std::ostream& out) {
    std::mt19937 rng(23);
    GridPtr g = SphereGrid::for_band(16);
    double rt = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd c = random_coeffs(16, 1.0, rng);
      const HarmonicCoeffs h = analyze(ScalarField(g, g->basis() * c));
      rt = std::max(rt, (h.coeffs - c).cwiseAbs().maxCoeff() / c.cwiseAbs().maxCoeff());
    }
    // curvature of e^{2w} g_* by differences against K = e^{-2w}(1 - Lap_* w)
    const int band = 8;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(sh_count(band));
    w[sh_index(2, 0)] = 0.2;
    w[sh_index(3, 1)] = -0.1;
    w[sh_index(1, -1)] = 0.15;
    const Eigen::VectorXd lap = laplacian_coeffs(w);
    double err[2];
    int idx = 0;
    for (int n : {31, 61}) {
      Chart c{Pole::North, n, 1.5};
      const ChartMetric m = ChartMetric::sample(c, [&](const Eigen::Vector2d& z) {
        return Eigen::Matrix2d(std::exp(2.0 * evaluate_coeffs(w, band, c.to_sphere(z))) * round_chart_metric(z));
      });
      const Eigen::VectorXd K = curvature_general(m);
      err[idx] = 0.0;
      for (int i = 0; i < c.n; ++i)
        for (int j = 0; j < c.n; ++j) {
          const Eigen::Vector2d z = c.coord(i, j);
          if (z.norm() > 1.0) continue;
          const Eigen::Vector3d p = c.to_sphere(z);
          const double exact = std::exp(-2.0 * evaluate_coeffs(w, band, p)) * (1.0 - evaluate_coeffs(lap, band, p));
          err[idx] = std::max(err[idx], std::abs(K[c.index(i, j)] - exact));
        }
      ++idx;
    }
    out << "round trip " << rt << ", curvature error ratio " << err[0] / err[1];
    return rt <= 1e-10 && err[0] / err[1] >= 8.0;
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
