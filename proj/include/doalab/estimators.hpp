#pragma once

#include <functional>
#include <string>

#include "doalab/coarray.hpp"
#include "doalab/partcal.hpp"
#include "doalab/sequential.hpp"
#include "doalab/sigmodel.hpp"
#include "doalab/sparse.hpp"
#include "doalab/spectra.hpp"
#include "doalab/subspace.hpp"

namespace doalab {

struct MethodOptions {
  double grid_step = 0.5;
  double mu = -1.0;          // < 0: default row-norm scaling
  double mu_scale = 1.0;     // c in mu = c sqrt(M log K) sigma
  WsfWeighting weighting = WsfWeighting::identity;
  EspritSolve esprit_solve = EspritSolve::ls;
  int smoothing_window = -1;  // -1: maximal virtual ULA
  bool refine = true;
  bool keep_spectrum = false;  // attach the sampled spectrum to the result
};

// Uniform estimator surface consumed by the CLI and the Monte Carlo
// harness: every method maps (scenario, snapshots) to an EstimateResult.
using Estimator =
    std::function<EstimateResult(const Scenario&, const CMat& x)>;

namespace detail {

inline ShiftStructure scenario_shift_structure(const Scenario& sc) {
  if (!sc.subarrays.empty()) {
    require(!sc.known_lags.empty(),
            "scenario: subarrays given without known lags");
    return shift_structure_from_subarrays(sc.geometry, sc.subarrays,
                                          sc.known_lags);
  }
  require(sc.geometry.kind() == ArrayKind::ula,
          "esprit/rare: need a subarray layout (or a ULA geometry)");
  return ula_shift_structure(sc.geometry.size());
}

template <typename Fn>
EstimateResult spectral_estimate(const Fn& fn, const std::vector<double>& grid,
                                 std::string method, int n, bool keep_spectrum,
                                 bool polish = true) {
  auto spectrum = sample_spectrum(fn, grid, std::move(method));
  EstimateResult est = find_n_deepest_minima(spectrum, n);
  if (polish) polish_minima(fn, grid, est);
  if (!keep_spectrum) est.spectrum.reset();
  return est;
}

}  // namespace detail

inline Estimator make_estimator(const std::string& name,
                                const MethodOptions& opts = {}) {
  const auto grid_of = [opts] { return fov_grid(opts.grid_step); };

  if (name == "beamformer" || name == "bf") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      BeamformerSpectrum fn(sc.geometry, x * x.adjoint());
      return detail::spectral_estimate(fn, grid_of(), "beamformer",
                                       sc.num_sources(), opts.keep_spectrum);
    };
  }
  if (name == "capon") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      CaponFitSpectrum fn(sc.geometry, sample_covariance(x));
      return detail::spectral_estimate(fn, grid_of(), "capon",
                                       sc.num_sources(), opts.keep_spectrum);
    };
  }
  if (name == "music") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      auto dec = eigendecompose(sample_covariance(x), sc.num_sources());
      MusicSpectrum fn(sc.geometry, dec, wsf_weights(dec, opts.weighting));
      return detail::spectral_estimate(fn, grid_of(), "music",
                                       sc.num_sources(), opts.keep_spectrum);
    };
  }
  if (name == "pr-dml") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      PrDmlSpectrum fn(sc.geometry, x * x.adjoint(), sc.num_sources());
      return detail::spectral_estimate(fn, grid_of(), "pr-dml",
                                       sc.num_sources(), opts.keep_spectrum);
    };
  }
  if (name == "pr-wsf") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      auto dec = eigendecompose(sample_covariance(x), sc.num_sources());
      PrWsfSpectrum fn(sc.geometry, dec,
                       wsf_weights(dec, opts.weighting == WsfWeighting::identity
                                            ? WsfWeighting::optimal
                                            : opts.weighting),
                       sc.num_sources());
      return detail::spectral_estimate(fn, grid_of(), "pr-wsf",
                                       sc.num_sources(), opts.keep_spectrum);
    };
  }
  if (name == "pr-ccf") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      PrCcfSpectrum fn(sc.geometry, sample_covariance(x), sc.num_sources());
      EstimateResult est = detail::spectral_estimate(
          fn, grid_of(), "pr-ccf", sc.num_sources(), opts.keep_spectrum);
      if (fn.loaded())
        est.diagnostics.warnings.push_back(
            "singular covariance: diagonal loading applied");
      return est;
    };
  }
  if (name == "mp" || name == "omp" || name == "ols" || name == "pr-dml-ols") {
    SequentialMethod method = SequentialMethod::ols;
    if (name == "mp") method = SequentialMethod::mp;
    if (name == "omp") method = SequentialMethod::omp;
    if (name == "pr-dml-ols") method = SequentialMethod::pr_dml_ols;
    return [opts, grid_of, method](const Scenario& sc, const CMat& x) {
      SequentialOptions sopts;
      sopts.refine = opts.refine;
      auto run = run_sequential_cov(sc.geometry, method, x * x.adjoint(),
                                    sc.num_sources(), grid_of(), sopts);
      return run.estimate;
    };
  }
  if (name == "sparrow" || name == "mmp") {
    const bool is_sparrow = name == "sparrow";
    return [opts, grid_of, is_sparrow](const Scenario& sc, const CMat& x) {
      auto dict = build_dictionary(sc.geometry, grid_of());
      const int k = int(dict.grid.size());
      double mu = opts.mu;
      if (mu < 0.0) {
        const double sigma = std::sqrt(std::max(sc.noise_var, 1e-12));
        mu = default_sparse_mu(sc.geometry.size(), k, int(x.cols()), sigma,
                               opts.mu_scale);
      }
      RVec magnitudes;
      EstimateResult est;
      if (is_sparrow) {
        auto sol = sparrow_bcd(sample_covariance(x), dict, mu, int(x.cols()));
        magnitudes = sol.d;
        est = support_to_doas(magnitudes, dict.grid, sc.num_sources());
        est.diagnostics.iterations = sol.iterations;
        est.diagnostics.objective = {sol.objective};
        if (!sol.converged)
          est.diagnostics.warnings.push_back("sparrow: max sweeps reached");
      } else {
        auto sol = mmp_solve(x, dict, mu);
        magnitudes.resize(k);
        for (int r = 0; r < k; ++r)
          magnitudes[r] = sol.coefficients.row(r).norm();
        est = support_to_doas(magnitudes, dict.grid, sc.num_sources());
        est.diagnostics.iterations = sol.iterations;
        est.diagnostics.objective = {sol.objective};
        if (!sol.converged)
          est.diagnostics.warnings.push_back("mmp: max iterations reached");
      }
      if (opts.keep_spectrum) {
        NullSpectrum s;
        s.method = is_sparrow ? "sparrow" : "mmp";
        s.grid = dict.grid;
        s.values.assign(magnitudes.data(), magnitudes.data() + k);
        est.spectrum = s;
      }
      return est;
    };
  }
  if (name == "esprit") {
    return [opts](const Scenario& sc, const CMat& x) {
      auto structure = detail::scenario_shift_structure(sc);
      require(structure.shifts.size() == 1,
              "esprit: exactly one known lag expected");
      auto dec = eigendecompose(sample_covariance(x), sc.num_sources());
      return esprit(dec, structure, opts.esprit_solve);
    };
  }
  if (name == "rare") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      auto structure = detail::scenario_shift_structure(sc);
      auto dec = eigendecompose(sample_covariance(x), sc.num_sources());
      auto blocks = select_shift_blocks(dec.signal_vecs, structure);
      const auto grid = grid_of();
      EstimateResult est = rare_spectrum(blocks, grid, sc.num_sources());
      if (opts.refine)
        polish_minima(
            [&](double theta) { return rare_matrix(theta, blocks).min_eigval; },
            grid, est);
      if (!opts.keep_spectrum) est.spectrum.reset();
      return est;
    };
  }
  if (name == "coarray-music") {
    return [opts, grid_of](const Scenario& sc, const CMat& x) {
      return coarray_music(sample_covariance(x), sc.geometry,
                           sc.num_sources(), grid_of(),
                           opts.smoothing_window);
    };
  }
  throw std::invalid_argument("unknown estimation method: " + name);
}

inline const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names{
      "beamformer", "capon",  "music",   "pr-dml",        "pr-wsf",
      "pr-ccf",     "mp",     "omp",     "ols",           "pr-dml-ols",
      "sparrow",    "mmp",    "esprit",  "rare",          "coarray-music"};
  return names;
}

}  // namespace doalab
