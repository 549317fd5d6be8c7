#pragma once

// Orchestration behind the command-line tool. Each command reads its inputs
// from files or the config, writes a JSON report plus CSV data into the
// output directory, and returns the report. Module errors propagate as
// ahid::Error; a report with "passed": false means an asserted invariant
// failed without an exception.

#include "ahid/collar.hpp"
#include "ahid/degenerate_finder.hpp"
#include "ahid/exterior_glue.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace ahid {

struct PipelineConfig {
  // [grid]
  int band = 16;
  // [seed] "p2", "harmonic:l:m:amp[;l:m:amp...]" or "csv:<file>"
  std::string w_spec = "p2";
  // [path]
  int time_nodes = 65;
  int a_steps = 512;
  double max_flow_step = 1.0 / 256;
  // [collar]
  double t_min = 1e-3;
  int inner_slices = 16, bridge_slices = 32, outer_slices = 8;
  std::vector<double> eps_range{0.05, 0.02, 0.01};
  std::vector<double> A_range{3.0, 5.0, 10.0, 20.0, 50.0};
  // [glue]
  double mass_factor = 1.02;
  // [tolerances]
  double eigen_tol = 1e-7;
  double area_tol = 1e-7;
  double area_form_tol = 1e-4;
  double H_tol = 1e-4;
  double oracle_tol = 1e-4;
  double R_tol = 1e-6;
  double adm_tol = 1e-3;
  // [run]
  std::string output_dir = "ahid_out";
  unsigned seed = 1;
  int workers = 1;
  bool plot_data = false;

  /// Throws InvalidInput on non-positive tolerances, empty ranges or bad sizes.
  void validate() const;
  std::string to_ini() const;
  static PipelineConfig from_ini(const std::string& text);
  static PipelineConfig load(const std::string& file);
  void save(const std::string& file) const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Seed field from the config's w_spec on a band-`band` grid.
ScalarField seed_field(const PipelineConfig& cfg);
/// A stored conformal factor, or the round metric for "round".
ScalarField load_metric(const PipelineConfig& cfg, const std::string& source);

PathOptions path_options(const PipelineConfig& cfg);
CollarOptions collar_options(const PipelineConfig& cfg);

struct PathChecks {
  EigenCurve curve;
  double area_drift = 0.0;       // max relative change of total area
  double area_form_drift = 0.0;  // max pointwise relative drift of the pulled-back area form
  double min_det = 0.0;
  bool frozen = false;           // sigma(t) identical for all grid t >= 1/2
  bool linear_bound = false;     // lambda1(t_k) >= alpha t_k at every grid time
};

PathChecks check_path(const MetricPath& path);

/// Glued metric for a conformal factor, collar parameters and mass.
struct GlueRun {
  std::shared_ptr<MetricPath> path;
  std::vector<CollarSlice> slices;
  CollarSummary collar;
  GluedMetric glued;
  TheoremReport theorem;
  AdmMass adm;
};

GlueRun run_glue(const PipelineConfig& cfg, const ScalarField& w, double eps, double A, double m);

using Json = nlohmann::ordered_json;

Json cmd_find_degenerate(const PipelineConfig& cfg);
Json cmd_path(const PipelineConfig& cfg, const std::string& metric);
Json cmd_collar(const PipelineConfig& cfg, const std::string& metric);
/// mass <= 0 selects mass_factor x the Hawking mass of the horizon.
Json cmd_glue(const PipelineConfig& cfg, const std::string& metric, const std::string& collar_report, double mass);
/// Manifest for the bare Schwarzschild exterior of mass m.
Json cmd_glue_schwarzschild(const PipelineConfig& cfg, double m);
Json cmd_verify(const PipelineConfig& cfg, const std::string& manifest);
/// target is "round" or a stored metric; collar_report may be empty.
Json cmd_oracle(const PipelineConfig& cfg, const std::string& target, const std::string& collar_report);
/// find-degenerate, path, collar, glue and verify in order.
Json cmd_run(const PipelineConfig& cfg);

void write_json(const std::string& file, const Json& j);
Json read_json(const std::string& file);

}  // namespace ahid
