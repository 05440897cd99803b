#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/types.hpp"

namespace doalab {

enum class SignalModel { unconditional, conditional };
enum class Correlation { uncorrelated, coherent, matrix };

// Full generative description of one experiment draw.
struct Scenario {
  ArrayGeometry geometry = ArrayGeometry::ula(1);
  std::vector<double> thetas;  // degrees, strictly increasing, in FoV
  SignalModel model = SignalModel::unconditional;
  Correlation correlation = Correlation::uncorrelated;
  double snr_db = 0.0;
  double noise_var = 1.0;
  int snapshots = 1;
  std::uint64_t seed = 0;
  std::optional<CMat> source_cov;  // set for Correlation::matrix
  std::optional<CMat> waveforms;   // optional fixed S for the conditional model

  // subarray layout for the partly calibrated estimators
  std::vector<std::vector<int>> subarrays;
  std::vector<double> known_lags;

  int num_sources() const { return int(thetas.size()); }

  void validate() const {
    require(!thetas.empty(), "scenario: need at least one source");
    for (std::size_t n = 0; n < thetas.size(); ++n) {
      require(in_fov(thetas[n]), "scenario: DoA outside FoV");
      if (n > 0)
        require(thetas[n] > thetas[n - 1], "scenario: DoAs must be increasing");
    }
    require(noise_var >= 0.0, "scenario: negative noise variance");
    require(snapshots >= 1, "scenario: need at least one snapshot");
    if (correlation == Correlation::matrix)
      require(source_cov.has_value(), "scenario: correlation=matrix needs P");
    if (waveforms) {
      require(model == SignalModel::conditional,
              "scenario: explicit waveforms require the conditional model");
      require(waveforms->rows() == num_sources() &&
                  waveforms->cols() == snapshots,
              "scenario: waveform matrix must be N x T");
    }
  }
};

// Equal-power P for `uncorrelated`, rank-one all-ones pattern for
// `coherent`, user matrix (validated PSD) otherwise.  Per-source power is
// p = noise_var * 10^(snr_db/10).
inline CMat build_source_cov(int n, double snr_db, double noise_var,
                             Correlation corr,
                             const std::optional<CMat>& user = {}) {
  require(n >= 1, "build_source_cov: need n >= 1");
  switch (corr) {
    case Correlation::uncorrelated:
    case Correlation::coherent: {
      require(noise_var > 0.0, "build_source_cov: noise_var must be positive");
      const double p = noise_var * std::pow(10.0, snr_db / 10.0);
      if (corr == Correlation::uncorrelated) return p * CMat::Identity(n, n);
      return p * CMat::Ones(n, n);
    }
    case Correlation::matrix: {
      require(user.has_value(), "build_source_cov: user matrix missing");
      require(user->rows() == n && user->cols() == n,
              "build_source_cov: user matrix must be N x N");
      require(is_hermitian_psd(*user), "build_source_cov: matrix not PSD");
      return *user;
    }
  }
  throw std::logic_error("unreachable");
}

// Noiseless scenarios reference the per-source power to 1 instead of nu.
inline CMat scenario_source_cov(const Scenario& sc) {
  const double ref = sc.noise_var > 0.0 ? sc.noise_var : 1.0;
  return build_source_cov(sc.num_sources(), sc.snr_db, ref, sc.correlation,
                          sc.source_cov);
}

struct SnapshotMatrix {
  CMat entries;               // M x T
  std::uint64_t scenario_hash = 0;
};

namespace detail {

inline CMat hermitian_sqrt(const CMat& p) {
  Eigen::SelfAdjointEigenSolver<CMat> es(p);
  RVec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() *
         es.eigenvectors().adjoint();
}

inline CMat cnormal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat g(rows, cols);
  for (Eigen::Index t = 0; t < cols; ++t)
    for (Eigen::Index m = 0; m < rows; ++m) g(m, t) = rng.cnormal();
  return g;
}

inline std::uint64_t scenario_hash(const Scenario& sc) {
  std::uint64_t h = mix_seed(sc.seed);
  h = derive_seed(h, std::uint64_t(sc.snapshots));
  h = derive_seed(h, std::uint64_t(sc.num_sources()));
  h = derive_seed(h, std::uint64_t(sc.geometry.size()));
  return h;
}

}  // namespace detail

// X = A(theta) S + noise.  Unconditional: S ~ CN(0, P) i.i.d. over
// snapshots; conditional: S fixed (given, or unit-modulus random phases
// drawn once from the seed, scaled to the per-source power).
inline SnapshotMatrix simulate(const Scenario& sc) {
  sc.validate();
  const int n = sc.num_sources();
  const int t = sc.snapshots;
  const CMat a = steering_matrix(sc.geometry, sc.thetas).entries;

  Rng rng_signal(derive_seed(sc.seed, 0x5167a11eULL));
  Rng rng_noise(derive_seed(sc.seed, 0x901535ULL));

  CMat s;
  if (sc.model == SignalModel::unconditional) {
    const CMat p_sqrt = detail::hermitian_sqrt(scenario_source_cov(sc));
    s = p_sqrt * detail::cnormal_matrix(rng_signal, n, t);
  } else if (sc.waveforms) {
    s = *sc.waveforms;
  } else {
    const double ref = sc.noise_var > 0.0 ? sc.noise_var : 1.0;
    const double amp = std::sqrt(ref * std::pow(10.0, sc.snr_db / 10.0));
    s.resize(n, t);
    for (Eigen::Index j = 0; j < t; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double phi = rng_signal.uniform(0.0, 2.0 * pi);
        s(i, j) = amp * cxd(std::cos(phi), std::sin(phi));
      }
  }

  SnapshotMatrix out;
  out.entries = a * s;
  if (sc.noise_var > 0.0) {
    out.entries += std::sqrt(sc.noise_var) *
                   detail::cnormal_matrix(rng_noise, sc.geometry.size(), t);
  }
  out.scenario_hash = detail::scenario_hash(sc);
  return out;
}

// Exact covariance A P A^H + nu I of the unconditional model.
inline CMat exact_covariance(const Scenario& sc) {
  const CMat a = steering_matrix(sc.geometry, sc.thetas).entries;
  return a * scenario_source_cov(sc) * a.adjoint() +
         sc.noise_var * CMat::Identity(sc.geometry.size(), sc.geometry.size());
}

// Copy of the scenario reseeded for one Monte Carlo trial; all methods in a
// trial see the same draw.
inline Scenario trial_scenario(const Scenario& base, std::uint64_t trial) {
  Scenario sc = base;
  sc.seed = derive_seed(base.seed, 0xf00d + trial);
  return sc;
}

}  // namespace doalab
