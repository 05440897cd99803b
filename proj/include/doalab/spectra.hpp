#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/subspace.hpp"
#include "doalab/types.hpp"

namespace doalab {

struct NullSpectrum {
  std::vector<double> grid;    // degrees, sorted
  std::vector<double> values;  // same length
  std::string method;
};

struct Diagnostics {
  int iterations = 0;
  std::vector<double> objective;  // per estimate or per iteration
  std::vector<double> powers;     // auxiliary powers when a method has them
  std::vector<std::string> warnings;
};

struct EstimateResult {
  std::vector<double> thetas_hat;  // degrees, sorted ascending
  std::optional<NullSpectrum> spectrum;
  Diagnostics diagnostics;
};

namespace detail {

// Projected Hermitian matrix P_a Y P_a with P_a = I - a a^H / M, using the
// unit-modulus identity a^H a = M.
inline CMat project_out_steering(const CMat& y, const CVec& a) {
  const double m = double(a.size());
  const CVec u = y * a;
  const double s = std::real(a.dot(u));  // a^H Y a
  CMat h = y;
  h.noalias() -= (a * u.adjoint()) / m;
  h.noalias() -= (u * a.adjoint()) / m;
  h.noalias() += (s / (m * m)) * (a * a.adjoint());
  return h;
}

// Golden-section descent of a continuous 1-D cost inside a bracketing
// interval; resolves the argmin far below the sampling grid.
template <typename Fn>
double golden_refine(const Fn& fn, double lo, double hi, int iters = 30) {
  constexpr double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

// Vertex of the parabola through three points; falls back to x2 when the
// triple is not strictly convex.  Result clamped to [x1, x3].
inline double parabolic_vertex(double x1, double y1, double x2, double y2,
                               double x3, double y3) {
  const double denom = (x1 - x2) * (x1 - x3) * (x2 - x3);
  if (denom == 0.0) return x2;
  const double a = (x3 * (y2 - y1) + x2 * (y1 - y3) + x1 * (y3 - y2)) / denom;
  const double b =
      (x3 * x3 * (y1 - y2) + x2 * x2 * (y3 - y1) + x1 * x1 * (y2 - y3)) / denom;
  if (!(a > 0.0)) return x2;
  const double v = -b / (2.0 * a);
  return std::clamp(v, x1, x3);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-source column: conventional beamformer null-spectrum tr(P_a Y).
// Y is the data matrix (X X^H, or any positive multiple such as R_hat).
class BeamformerSpectrum {
 public:
  BeamformerSpectrum(const ArrayGeometry& geom, CMat data)
      : geom_(geom), data_(std::move(data)), trace_(std::real(data_.trace())) {}

  double operator()(double theta_deg) const {
    const CVec a = steering_vector(geom_, theta_deg);
    return trace_ - std::real(a.dot(data_ * a)) / double(geom_.size());
  }

 private:
  ArrayGeometry geom_;
  CMat data_;
  double trace_;
};

// Weighted-MUSIC variant: tr(P_a U_s W U_s^H), weighting on the signal
// subspace.
class MusicSpectrum {
 public:
  MusicSpectrum(const ArrayGeometry& geom, const SubspaceDecomposition& dec,
                const RVec& weights)
      : geom_(geom) {
    require(weights.size() == dec.n_signal,
            "MusicSpectrum: weight size must match the signal dimension");
    require(weights.minCoeff() >= 0.0, "MusicSpectrum: weights must be >= 0");
    f_ = dec.signal_vecs * weights.asDiagonal() * dec.signal_vecs.adjoint();
    trace_ = weights.sum();
  }

  double operator()(double theta_deg) const {
    const CVec a = steering_vector(geom_, theta_deg);
    return trace_ - std::real(a.dot(f_ * a)) / double(geom_.size());
  }

 private:
  ArrayGeometry geom_;
  CMat f_;
  double trace_;
};

struct CaponFit {
  double value = 0.0;  // || R - sigma^2 a a^H ||_F^2
  double power = 0.0;  // sigma^2 = 1 / (a^H R^{-1} a), the Capon spectrum
  bool loaded = false; // diagonal loading applied to a singular R
};

// Covariance-fit variant of the Capon beamformer.
class CaponFitSpectrum {
 public:
  CaponFitSpectrum(const ArrayGeometry& geom, const CMat& r)
      : geom_(geom), r_(0.5 * (r + r.adjoint())) {
    const int m = int(r_.rows());
    require(m == geom.size(), "CaponFitSpectrum: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<CMat> es(r_, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(lmax, 1e-300)) {
      loaded_ = true;
      r_ += (1e-8 * std::real(r_.trace()) / m) * CMat::Identity(m, m);
    }
    rinv_ = r_.ldlt().solve(CMat::Identity(m, m));
    rinv_ = 0.5 * (rinv_ + rinv_.adjoint());
    fro2_ = r_.squaredNorm();
  }

  CaponFit fit(double theta_deg) const {
    const CVec a = steering_vector(geom_, theta_deg);
    const double m = double(geom_.size());
    CaponFit out;
    out.loaded = loaded_;
    out.power = 1.0 / std::real(a.dot(rinv_ * a));
    const double ara = std::real(a.dot(r_ * a));
    out.value = fro2_ - 2.0 * out.power * ara + out.power * out.power * m * m;
    return out;
  }

  double operator()(double theta_deg) const { return fit(theta_deg).value; }

  bool loaded() const { return loaded_; }
  const CMat& loaded_cov() const { return r_; }
  const CMat& inverse() const { return rinv_; }

 private:
  ArrayGeometry geom_;
  CMat r_;
  CMat rinv_;
  double fro2_ = 0.0;
  bool loaded_ = false;
};

// PR-DML: sum of the M-N+1 smallest eigenvalues of P_a Y.
class PrDmlSpectrum {
 public:
  PrDmlSpectrum(const ArrayGeometry& geom, CMat data, int n_sources)
      : geom_(geom), data_(std::move(data)), n_(n_sources) {
    require(n_ >= 1 && n_ < geom.size(), "PrDmlSpectrum: need 1 <= N < M");
  }

  double operator()(double theta_deg) const {
    const CVec a = steering_vector(geom_, theta_deg);
    const CMat h = detail::project_out_steering(data_, a);
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(geom_.size() - n_ + 1).sum();
  }

 private:
  ArrayGeometry geom_;
  CMat data_;
  int n_;
};

// PR-WSF: PR-DML applied to the weighted signal-subspace matrix.
class PrWsfSpectrum {
 public:
  PrWsfSpectrum(const ArrayGeometry& geom, const SubspaceDecomposition& dec,
                const RVec& weights, int n_sources)
      : impl_(geom,
              dec.signal_vecs * weights.asDiagonal() * dec.signal_vecs.adjoint(),
              n_sources) {}

  double operator()(double theta_deg) const { return impl_(theta_deg); }

 private:
  PrDmlSpectrum impl_;
};

// PR-CCF: sum of squares of the M-N+1 smallest eigenvalues of the
// covariance-fit residual R - (a^H R^{-1} a)^{-1} a a^H.
class PrCcfSpectrum {
 public:
  PrCcfSpectrum(const ArrayGeometry& geom, const CMat& r, int n_sources)
      : capon_(geom, r), geom_(geom), n_(n_sources) {
    require(n_ >= 1 && n_ < geom.size(), "PrCcfSpectrum: need 1 <= N < M");
  }

  double operator()(double theta_deg) const {
    const CVec a = steering_vector(geom_, theta_deg);
    const double power = 1.0 / std::real(a.dot(capon_.inverse() * a));
    CMat resid = capon_.loaded_cov() - power * (a * a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(resid, Eigen::EigenvaluesOnly);
    return es.eigenvalues()
        .head(geom_.size() - n_ + 1)
        .array()
        .square()
        .sum();
  }

  bool loaded() const { return capon_.loaded(); }

 private:
  CaponFitSpectrum capon_;
  ArrayGeometry geom_;
  int n_;
};

// Free-function forms of the spectra above.
inline double spectrum_beamformer(const ArrayGeometry& g, const CMat& data,
                                  double theta) {
  return BeamformerSpectrum(g, data)(theta);
}
inline double spectrum_music(const ArrayGeometry& g,
                             const SubspaceDecomposition& d, const RVec& w,
                             double theta) {
  return MusicSpectrum(g, d, w)(theta);
}
inline CaponFit spectrum_capon_fit(const ArrayGeometry& g, const CMat& r,
                                   double theta) {
  return CaponFitSpectrum(g, r).fit(theta);
}
inline double spectrum_pr_dml(const ArrayGeometry& g, const CMat& data, int n,
                              double theta) {
  return PrDmlSpectrum(g, data, n)(theta);
}
inline double spectrum_pr_wsf(const ArrayGeometry& g,
                              const SubspaceDecomposition& d, const RVec& w,
                              int n, double theta) {
  return PrWsfSpectrum(g, d, w, n)(theta);
}
inline double spectrum_pr_ccf(const ArrayGeometry& g, const CMat& r, int n,
                              double theta) {
  return PrCcfSpectrum(g, r, n)(theta);
}

// Evaluate any per-angle cost over a grid.  Evaluation order never affects
// the result; callers may shard the grid across threads with functor copies.
template <typename Fn>
NullSpectrum sample_spectrum(const Fn& fn, const std::vector<double>& grid,
                             std::string method = {}) {
  NullSpectrum s;
  s.method = std::move(method);
  s.grid = grid;
  s.values.reserve(grid.size());
  for (double theta : grid) {
    require(in_fov(theta), "sample_spectrum: grid angle outside FoV");
    const double v = fn(theta);
    require(std::isfinite(v), "sample_spectrum: non-finite spectrum value");
    s.values.push_back(v);
  }
  return s;
}

// N deepest strict local minima (boundary excluded), each refined by one
// parabolic fit through its grid triple.  Falls back to the smallest
// remaining grid values, with a warning, when fewer minima exist.
inline EstimateResult find_n_deepest_minima(const NullSpectrum& spectrum,
                                            int n) {
  const auto& g = spectrum.grid;
  const auto& v = spectrum.values;
  require(g.size() >= 3, "find_n_deepest_minima: need at least 3 grid points");
  require(n >= 1, "find_n_deepest_minima: need n >= 1");

  std::vector<int> minima;
  for (int i = 1; i + 1 < int(g.size()); ++i)
    if (v[std::size_t(i)] < v[std::size_t(i - 1)] &&
        v[std::size_t(i)] < v[std::size_t(i + 1)])
      minima.push_back(i);

  auto by_depth = [&](int a, int b) {
    if (v[std::size_t(a)] != v[std::size_t(b)])
      return v[std::size_t(a)] < v[std::size_t(b)];
    return g[std::size_t(a)] < g[std::size_t(b)];  // tie toward smaller angle
  };
  std::sort(minima.begin(), minima.end(), by_depth);

  EstimateResult out;
  std::vector<std::pair<double, double>> found;  // (theta, value)
  std::vector<bool> used(g.size(), false);
  for (int idx : minima) {
    if (int(found.size()) == n) break;
    const double theta = detail::parabolic_vertex(
        g[std::size_t(idx - 1)], v[std::size_t(idx - 1)], g[std::size_t(idx)],
        v[std::size_t(idx)], g[std::size_t(idx + 1)], v[std::size_t(idx + 1)]);
    found.push_back({theta, v[std::size_t(idx)]});
    used[std::size_t(idx)] = true;
  }
  if (int(found.size()) < n) {
    out.diagnostics.warnings.push_back("fewer local minima than sources; "
                                       "filled from smallest grid values");
    std::vector<int> rest;
    for (int i = 0; i < int(g.size()); ++i)
      if (!used[std::size_t(i)]) rest.push_back(i);
    std::sort(rest.begin(), rest.end(), by_depth);
    for (int idx : rest) {
      if (int(found.size()) == n) break;
      found.push_back({g[std::size_t(idx)], v[std::size_t(idx)]});
    }
  }
  std::sort(found.begin(), found.end());
  for (auto& [theta, value] : found) {
    out.thetas_hat.push_back(theta);
    out.diagnostics.objective.push_back(value);
  }
  out.spectrum = spectrum;
  return out;
}

// Polish grid-level estimates against the continuous spectrum: each
// estimate descends inside its one-grid-step bracket.
template <typename Fn>
void polish_minima(const Fn& fn, const std::vector<double>& grid,
                   EstimateResult& est) {
  for (double& theta : est.thetas_hat) {
    auto it = std::min_element(grid.begin(), grid.end(),
                               [&](double a, double b) {
                                 return std::abs(a - theta) < std::abs(b - theta);
                               });
    const int i = int(it - grid.begin());
    if (i <= 0 || i + 1 >= int(grid.size())) continue;
    theta = detail::golden_refine(fn, grid[std::size_t(i - 1)],
                                  grid[std::size_t(i + 1)]);
  }
  std::sort(est.thetas_hat.begin(), est.thetas_hat.end());
}

// ---------------------------------------------------------------------------
// Two-source DML cost surface (and the exhaustive N <= 2 grid oracle).

namespace detail {

// tr(P_A Y) for a steering matrix with a small number of columns.
inline double projected_trace(const CMat& a, const CMat& y) {
  const CMat g = a.adjoint() * a;
  const CMat ya = y * a;
  const CMat cross = a.adjoint() * ya;  // A^H Y A
  return std::real(y.trace()) - std::real(g.ldlt().solve(cross).trace());
}

}  // namespace detail

struct SurfaceMinimum {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double value = 0.0;
  bool interior = false;
};

struct DmlSurface {
  std::vector<double> grid;
  RMat values;  // values(i, j) = cost(grid[i], grid[j]); diagonal = NaN
  std::vector<SurfaceMinimum> minima;  // upper triangle (theta1 < theta2)
  double best_theta1 = 0.0;
  double best_theta2 = 0.0;
  double best_value = 0.0;

  int count_local_minima(bool interior_only) const {
    int count = 0;
    for (const auto& lm : minima)
      if (!interior_only || lm.interior) ++count;
    // symmetric partner below the diagonal
    return 2 * count;
  }
};

// Dense DML cost surface for two sources: cost(t1, t2) = tr(P_[a1 a2] Y).
inline DmlSurface dml_cost_surface(const ArrayGeometry& geom, const CMat& y,
                                   const std::vector<double>& grid) {
  require(grid.size() >= 3, "dml_cost_surface: grid too coarse");
  const int k = int(grid.size());
  DmlSurface out;
  out.grid = grid;
  out.values.setConstant(k, k, std::numeric_limits<double>::quiet_NaN());

  const CMat a_grid = steering_columns(geom, grid);
  const CMat ya = y * a_grid;
  const double try_ = std::real(y.trace());
  const CMat gram = a_grid.adjoint() * a_grid;   // k x k, entries a_i^H a_j
  const CMat quad = a_grid.adjoint() * ya;       // k x k, entries a_i^H Y a_j
  const double m = double(geom.size());

  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      // 2x2 block inverse of [ [M, g], [g*, M] ]
      const cxd g = gram(i, j);
      const double det = m * m - std::norm(g);
      const double qii = std::real(quad(i, i));
      const double qjj = std::real(quad(j, j));
      const cxd qij = quad(i, j);
      // tr(G^{-1} Q) with G Hermitian 2x2
      const double tr_inv =
          (m * qii + m * qjj - 2.0 * std::real(std::conj(g) * qij)) / det;
      const double val = try_ - tr_inv;
      out.values(i, j) = val;
      out.values(j, i) = val;
    }
  }

  out.best_value = std::numeric_limits<double>::infinity();
  auto at = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= k || j >= k || i == j)
      return std::numeric_limits<double>::infinity();
    return out.values(i, j);
  };
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double v = out.values(i, j);
      if (v < out.best_value) {
        out.best_value = v;
        out.best_theta1 = grid[std::size_t(i)];
        out.best_theta2 = grid[std::size_t(j)];
      }
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (at(i + di, j + dj) <= v) {
            is_min = false;
            break;
          }
        }
      if (is_min) {
        SurfaceMinimum lm;
        lm.theta1 = grid[std::size_t(i)];
        lm.theta2 = grid[std::size_t(j)];
        lm.value = v;
        lm.interior = i > 0 && j > 0 && i < k - 1 && j < k - 1;
        out.minima.push_back(lm);
      }
    }
  }
  return out;
}

enum class MultiSourceCriterion { dml, wsf };

// Exhaustive N-dimensional grid search (N <= 2); the test oracle for the
// relaxed and sequential methods.
inline EstimateResult exact_multisource_grid(MultiSourceCriterion criterion,
                                             const ArrayGeometry& geom,
                                             const CMat& data, int n,
                                             const std::vector<double>& grid,
                                             const RVec* wsf_w = nullptr,
                                             const SubspaceDecomposition* dec =
                                                 nullptr) {
  require(n >= 1 && n <= 2, "exact_multisource_grid: only N <= 2 supported");
  CMat y;
  if (criterion == MultiSourceCriterion::dml) {
    y = data;
  } else {
    require(dec != nullptr && wsf_w != nullptr,
            "exact_multisource_grid: wsf needs a decomposition and weights");
    y = dec->signal_vecs * wsf_w->asDiagonal() * dec->signal_vecs.adjoint();
  }

  EstimateResult out;
  if (n == 1) {
    double best = std::numeric_limits<double>::infinity();
    double best_theta = grid.front();
    for (double theta : grid) {
      const CVec a = steering_vector(geom, theta);
      const double v =
          std::real(y.trace()) - std::real(a.dot(y * a)) / double(geom.size());
      if (v < best) {
        best = v;
        best_theta = theta;
      }
    }
    out.thetas_hat = {best_theta};
    out.diagnostics.objective = {best};
    return out;
  }

  const DmlSurface surf = dml_cost_surface(geom, y, grid);
  out.thetas_hat = {surf.best_theta1, surf.best_theta2};
  out.diagnostics.objective = {surf.best_value};
  return out;
}

}  // namespace doalab
