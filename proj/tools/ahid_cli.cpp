// ahid: command-line front end for the horizon construction pipeline.

#include "ahid/errors.hpp"
#include "ahid/pipeline.hpp"

#include "CLI11.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <iostream>

using namespace ahid;

namespace {

int report_exit(const Json& report) {
  std::cout << report.dump(2) << '\n';
  return report.value("passed", false) ? 0 : exit_code(ErrorCode::VerificationFailure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Apparent horizon initial data: degenerate metric, metric path, collar, Schwarzschild gluing"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, output_dir;
  int band = 0, workers = 0;
  bool plot_data = false;
  app.add_option("-c,--config", config_file, "INI config file (see `ahid config`)");
  app.add_option("-o,--output-dir", output_dir, "output directory (overrides AHID_OUTPUT_DIR and the config)");
  app.add_option("--band", band, "harmonic band limit")->check(CLI::Range(2, 48));
  app.add_option("--workers", workers, "worker threads for dense linear algebra")->check(CLI::PositiveNumber);
  app.add_flag("--plot-data", plot_data, "also write two-column series files under plot/");

  std::string w_spec, metric = "round", collar_report, manifest, target = "round";
  double mass = 0.0;
  bool schwarzschild_only = false, write_default = false;

  auto* c_find = app.add_subcommand("find-degenerate", "construct a metric with lambda1 = 0 on a conformal ray");
  c_find->add_option("--w-spec", w_spec, "seed: p2, harmonic:l:m:amp[;...] or csv:<file>");

  auto* c_path = app.add_subcommand("path", "metric path to a round metric and its eigenvalue curve");
  c_path->add_option("--metric", metric, "conformal factor CSV or 'round'");

  auto* c_collar = app.add_subcommand("collar", "collar construction and (epsilon, A) search");
  c_collar->add_option("--metric", metric, "conformal factor CSV or 'round'");

  auto* c_glue = app.add_subcommand("glue", "glue the collar to a Schwarzschild exterior");
  c_glue->add_option("--metric", metric, "conformal factor CSV or 'round'");
  c_glue->add_option("--collar", collar_report, "collar.json from the collar command");
  c_glue->add_option("--mass", mass, "exterior mass (default: mass_factor x Hawking mass)");
  c_glue->add_flag("--schwarzschild-only", schwarzschild_only, "manifest for the bare exterior of mass --mass");

  auto* c_verify = app.add_subcommand("verify", "re-check the theorem clauses for a manifest");
  c_verify->add_option("manifest", manifest, "manifest.json")->required();

  auto* c_oracle = app.add_subcommand("oracle", "collar curvature against the brute-force 3d oracle");
  c_oracle->add_option("--target", target, "conformal factor CSV or 'round'");
  c_oracle->add_option("--collar", collar_report, "collar.json supplying epsilon and A");

  auto* c_run = app.add_subcommand("run", "find-degenerate, path, collar, glue and verify in order");

  auto* c_config = app.add_subcommand("config", "print the effective config");
  c_config->add_flag("--defaults", write_default, "print the built-in defaults instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_code(ErrorCode::InvalidInput);
  }

  try {
    PipelineConfig cfg = config_file.empty() ? PipelineConfig{} : PipelineConfig::load(config_file);
    if (const char* env = std::getenv("AHID_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (band) cfg.band = band;
    if (workers) cfg.workers = workers;
    if (plot_data) cfg.plot_data = true;
    if (!w_spec.empty()) cfg.w_spec = w_spec;
    cfg.validate();
    Eigen::setNbThreads(cfg.workers);

    if (*c_config) {
      std::cout << (write_default ? PipelineConfig{}.to_ini() : cfg.to_ini());
      return 0;
    }
    if (*c_find) return report_exit(cmd_find_degenerate(cfg));
    if (*c_path) return report_exit(cmd_path(cfg, metric));
    if (*c_collar) return report_exit(cmd_collar(cfg, metric));
    if (*c_glue) {
      if (schwarzschild_only) return report_exit(cmd_glue_schwarzschild(cfg, mass));
      if (collar_report.empty()) throw Error(ErrorCode::InvalidInput, "glue needs --collar");
      return report_exit(cmd_glue(cfg, metric, collar_report, mass));
    }
    if (*c_verify) return report_exit(cmd_verify(cfg, manifest));
    if (*c_oracle) return report_exit(cmd_oracle(cfg, target, collar_report));
    if (*c_run) return report_exit(cmd_run(cfg));
  } catch (const Error& e) {
    std::cerr << "ahid: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ahid: " << e.what() << '\n';
    return exit_code(ErrorCode::EigensolverFailure);
  }
  return 0;
}
