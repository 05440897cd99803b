// doalab: direction-of-arrival estimation toolbox and benchmark CLI.
#include <CLI11.hpp>

#include <doalab/bench.hpp>
#include <doalab/config.hpp>
#include <doalab/estimators.hpp>
#include <doalab/io.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace doalab;

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  json j;
  is >> j;
  return j;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_json(load_json(path));
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_text_file(path, content);
    std::cerr << "wrote " << path << "\n";
  }
}

std::string minima_csv(const DmlSurface& surf) {
  std::string out = "theta1,theta2,value,interior\n";
  for (const auto& lm : surf.minima)
    out += format_full(lm.theta1) + "," + format_full(lm.theta2) + "," +
           format_full(lm.value) + "," + (lm.interior ? "1" : "0") + "\n";
  return out;
}

int run_spectrum(const std::string& scenario_path, const std::string& method,
                 double grid_step, const std::string& out) {
  Scenario sc = load_scenario(scenario_path);
  MethodOptions opts;
  opts.grid_step = grid_step;
  opts.keep_spectrum = true;
  auto estimator = make_estimator(method, opts);
  EstimateResult est = estimator(sc, simulate(sc).entries);
  if (!est.spectrum)
    throw std::runtime_error("method has no sampled spectrum: " + method);
  emit(out, spectrum_csv(*est.spectrum));
  std::cerr << "estimates:";
  for (double t : est.thetas_hat) std::cerr << " " << t;
  std::cerr << "\n";
  return 0;
}

int run_surface(const std::string& scenario_path, double grid_step,
                const std::string& out_csv, const std::string& out_svg,
                const std::string& out_minima) {
  Scenario sc = load_scenario(scenario_path);
  require(sc.num_sources() == 2, "surface: scenario must have two sources");
  const CMat x = simulate(sc).entries;
  auto surf =
      dml_cost_surface(sc.geometry, x * x.adjoint(), fov_grid(grid_step));
  if (!out_csv.empty()) emit(out_csv, surface_csv(surf));
  if (!out_svg.empty()) emit(out_svg, surface_svg(surf));
  if (!out_minima.empty()) emit(out_minima, minima_csv(surf));
  std::cout << "global minimum: (" << surf.best_theta1 << ", "
            << surf.best_theta2 << ")  value " << surf.best_value << "\n"
            << "local minima (full square): "
            << surf.count_local_minima(false)
            << "  interior: " << surf.count_local_minima(true) << "\n";
  return 0;
}

int run_estimate(const std::string& method, const std::string& scenario_path,
                 const std::string& snapshot_path,
                 const std::string& geometry_str, int n_sources,
                 MethodOptions opts, const std::string& out,
                 const std::string& diag_out, const std::string& spectrum_out) {
  Scenario sc;
  CMat x;
  if (!scenario_path.empty()) {
    sc = load_scenario(scenario_path);
    x = simulate(sc).entries;
  } else {
    require(!snapshot_path.empty(),
            "estimate: need --scenario or --snapshots");
    require(!geometry_str.empty() && n_sources >= 1,
            "estimate: raw snapshots need --geometry and --n");
    x = load_snapshots(snapshot_path);
    sc.geometry = geometry_from_string(geometry_str);
    require(sc.geometry.size() == int(x.rows()),
            "estimate: geometry size does not match the snapshot rows");
    sc.snapshots = int(x.cols());
    // placeholder DoAs; only the count matters for estimation
    for (int i = 1; i <= n_sources; ++i)
      sc.thetas.push_back(180.0 * double(i) / double(n_sources + 1));
  }

  if (!spectrum_out.empty()) opts.keep_spectrum = true;
  auto estimator = make_estimator(method, opts);
  EstimateResult est = estimator(sc, x);

  std::string csv = "index,theta_deg\n";
  for (std::size_t i = 0; i < est.thetas_hat.size(); ++i)
    csv += std::to_string(i) + "," + format_full(est.thetas_hat[i]) + "\n";
  emit(out, csv);

  if (!spectrum_out.empty()) {
    require(est.spectrum.has_value(),
            "estimate: method has no sampled spectrum to emit");
    emit(spectrum_out, spectrum_csv(*est.spectrum));
  }

  if (!diag_out.empty()) {
    std::string d = "step,objective\n";
    for (std::size_t i = 0; i < est.diagnostics.objective.size(); ++i)
      d += std::to_string(i) + "," +
           format_full(est.diagnostics.objective[i]) + "\n";
    emit(diag_out, d);
  }
  for (const auto& w : est.diagnostics.warnings)
    std::cerr << "warning: " << w << "\n";
  return 0;
}

int run_coarray(const std::string& geometry_str) {
  auto geom = geometry_from_string(geometry_str);
  std::cout << to_string(identifiability_budget(geom));
  if (geom.integer_grid()) {
    auto ca = difference_coarray(geom);
    std::cout << "lags:";
    for (auto lag : ca.lags) std::cout << " " << lag;
    std::cout << "\n";
  }
  return 0;
}

int run_bench(const std::string& preset, const std::string& config_path,
              int trials, std::uint64_t seed, const std::string& out_dir,
              int threads) {
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  auto out_path = [&](const std::string& name) {
    return out_dir.empty() ? name : out_dir + "/" + name;
  };

  if (preset == "fig3") {
    Scenario sc = fig3_scenario(seed);
    const CMat x = simulate(sc).entries;
    auto surf = dml_cost_surface(sc.geometry, x * x.adjoint(), fov_grid(0.25));
    emit(out_path("fig3_surface.csv"), surface_csv(surf));
    emit(out_path("fig3_surface.svg"), surface_svg(surf));
    emit(out_path("fig3_minima.csv"), minima_csv(surf));
    std::cout << "global minimum: (" << surf.best_theta1 << ", "
              << surf.best_theta2 << ")\ninterior local minima: "
              << surf.count_local_minima(true) << "\n";
    return 0;
  }

  ExperimentConfig cfg;
  std::string stem = "bench";
  if (!config_path.empty()) {
    cfg = experiment_from_json(load_json(config_path));
  } else if (preset == "fig4") {
    cfg = fig4_config(trials, seed);
    stem = "fig4";
  } else if (preset == "fig6") {
    cfg = fig6_config(trials, seed);
    stem = "fig6";
  } else {
    throw std::runtime_error("bench: need --preset fig3|fig4|fig6 or --config");
  }
  if (trials > 0) cfg.trials = trials;
  cfg.seed = seed;
  cfg.threads = threads;

  auto table = run_experiment(cfg);
  emit(out_path(stem + "_rmse.csv"), result_table_csv(table));
  emit(out_path(stem + "_rmse.svg"),
       result_table_svg(table,
                        cfg.sweep == SweepVariable::snapshots
                            ? "number of snapshots"
                            : "SNR (dB)",
                        stem));
  if (cfg.resolution_threshold > 0.0)
    emit(out_path(stem + "_resolution.csv"), resolution_table_csv(table));
  std::cout << result_table_csv(table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doalab: optimization-based DoA estimation toolbox"};
  app.require_subcommand(1);

  std::string scenario_path, snapshot_path, geometry_str, method;
  std::string out = "-", out_csv, out_svg, out_minima, diag_out, config_path;
  std::string preset;
  double grid_step = 0.5;
  int n_sources = 0;
  int trials = 0;
  int threads = 0;
  std::uint64_t seed = 1;
  MethodOptions mopts;

  auto* sp = app.add_subcommand("spectrum", "sample a null-spectrum as CSV");
  sp->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  sp->add_option("--method", method, "spectral method")->required();
  sp->add_option("--grid-step", grid_step, "grid step in degrees");
  sp->add_option("--out", out, "output CSV path (default stdout)");

  auto* su = app.add_subcommand("surface", "two-source DML cost surface");
  su->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  double surface_step = 0.25;
  su->add_option("--grid-step", surface_step, "grid step in degrees");
  su->add_option("--out-csv", out_csv, "surface CSV path");
  su->add_option("--out-svg", out_svg, "heatmap SVG path");
  su->add_option("--out-minima", out_minima, "local minima CSV path");

  auto* es = app.add_subcommand("estimate", "run one estimator");
  es->add_option("--method", method, "estimation method")->required();
  es->add_option("--scenario", scenario_path, "scenario JSON file");
  es->add_option("--snapshots", snapshot_path, "raw snapshot file");
  es->add_option("--geometry", geometry_str, "geometry (with --snapshots)");
  es->add_option("--n", n_sources, "source count (with --snapshots)");
  es->add_option("--grid-step", mopts.grid_step, "grid step in degrees");
  es->add_option("--mu", mopts.mu, "sparse regularization parameter");
  es->add_option("--window", mopts.smoothing_window, "smoothing window");
  es->add_option("--out", out, "estimates CSV path (default stdout)");
  es->add_option("--diagnostics", diag_out, "per-iteration diagnostics CSV");
  std::string spectrum_out;
  es->add_option("--spectrum-out", spectrum_out,
                 "sampled (pseudo-)spectrum CSV path");

  auto* co = app.add_subcommand("coarray", "difference-coarray report");
  co->add_option("--geometry", geometry_str, "e.g. nested:3,3")->required();
  co->add_flag("--report", "print the identifiability report (default)");

  auto* si = app.add_subcommand("simulate", "draw snapshots to a file");
  si->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  std::string sim_out;
  si->add_option("--out", sim_out, "snapshot file path")->required();

  auto* be = app.add_subcommand("bench", "Monte Carlo benchmark sweeps");
  be->add_option("--preset", preset, "fig3 | fig4 | fig6");
  be->add_option("--config", config_path, "experiment JSON file");
  be->add_option("--trials", trials, "Monte Carlo trials per point");
  be->add_option("--seed", seed, "base seed");
  be->add_option("--out", out_csv, "output directory");
  be->add_option("--threads", threads,
                 "worker threads (or env DOALAB_THREADS)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sp->parsed()) return run_spectrum(scenario_path, method, grid_step, out);
    if (su->parsed())
      return run_surface(scenario_path, surface_step, out_csv, out_svg,
                         out_minima);
    if (es->parsed())
      return run_estimate(method, scenario_path, snapshot_path, geometry_str,
                          n_sources, mopts, out, diag_out, spectrum_out);
    if (co->parsed()) return run_coarray(geometry_str);
    if (si->parsed()) {
      save_snapshots(sim_out, simulate(load_scenario(scenario_path)).entries);
      return 0;
    }
    if (be->parsed())
      return run_bench(preset, config_path, trials, seed, out_csv, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
