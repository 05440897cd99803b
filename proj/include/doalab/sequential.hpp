#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "doalab/spectra.hpp"
#include "doalab/subspace.hpp"

namespace doalab {

enum class SequentialMethod { mp, omp, ols, pr_dml_ols };

inline const char* to_string(SequentialMethod m) {
  switch (m) {
    case SequentialMethod::mp: return "mp";
    case SequentialMethod::omp: return "omp";
    case SequentialMethod::ols: return "ols";
    case SequentialMethod::pr_dml_ols: return "pr-dml-ols";
  }
  return "?";
}

struct SequentialState {
  int iteration = 0;
  SequentialMethod method = SequentialMethod::ols;
  CMat a_hat;                       // M x k, exact steering columns
  std::vector<double> thetas_hat;   // selection order
  std::optional<CMat> s_hat;        // k x T waveforms (MP / OMP, X known)
};

struct SequentialOptions {
  bool refine = true;     // parabolic refinement of each selected angle
  int mask_radius = 1;    // grid neighbors masked around a selection
  double cond_limit = 1e8;
};

struct SequentialRun {
  EstimateResult estimate;
  SequentialState state;
};

// tr(P_[A_prev, a(theta)] Y); +inf when the augmented matrix is
// ill-conditioned (candidate skipped by the greedy loop).
inline double ols_selection_value(const ArrayGeometry& geom, const CMat& y,
                                  const CMat& a_prev, double theta,
                                  double cond_limit = 1e8) {
  CMat aug(geom.size(), a_prev.cols() + 1);
  if (a_prev.cols() > 0) aug.leftCols(a_prev.cols()) = a_prev;
  aug.col(a_prev.cols()) = steering_vector(geom, theta);
  Eigen::JacobiSVD<CMat> svd(aug);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > cond_limit)
    return std::numeric_limits<double>::infinity();
  return std::real((projector_complement(aug) * y).trace());
}

// Sum of the eigenvalues of P_[A_prev, a(theta)] Y excluding its n - k
// largest, where k = cols(A_prev) + 1; equals the concentrated PR-DML-OLS
// selection criterion.
inline double prdmlols_selection_value(const ArrayGeometry& geom,
                                       const CMat& y, const CMat& a_prev,
                                       double theta, int n,
                                       double cond_limit = 1e8) {
  const int k = int(a_prev.cols()) + 1;
  require(k <= n, "prdmlols_selection_value: more columns than sources");
  CMat aug(geom.size(), k);
  if (a_prev.cols() > 0) aug.leftCols(a_prev.cols()) = a_prev;
  aug.col(k - 1) = steering_vector(geom, theta);
  Eigen::JacobiSVD<CMat> svd(aug);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > cond_limit)
    return std::numeric_limits<double>::infinity();
  const CMat p = projector_complement(aug);
  const CMat h = p * y * p;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()),
                                         Eigen::EigenvaluesOnly);
  const int keep = geom.size() - (n - k);
  return es.eigenvalues().head(keep).sum();
}

// Greedy multi-source estimation on the data matrix Y = X X^H.
inline SequentialRun run_sequential_cov(const ArrayGeometry& geom,
                                        SequentialMethod method, const CMat& y,
                                        int n_sources,
                                        const std::vector<double>& grid,
                                        const SequentialOptions& opts = {}) {
  const int m = geom.size();
  require(n_sources >= 1 && n_sources < m, "run_sequential: need 1 <= N < M");
  require(grid.size() >= 3, "run_sequential: grid too coarse");

  const CMat a_grid = steering_columns(geom, grid);
  const int g = int(grid.size());

  SequentialRun out;
  out.state.method = method;
  out.state.a_hat.resize(m, 0);

  std::vector<bool> masked(std::size_t(g), false);
  CMat mp_transform = CMat::Identity(m, m);  // MP residual map Q: E = Q X
  CMat basis(m, 0);                          // orthonormal basis of a_hat

  for (int k = 1; k <= n_sources; ++k) {
    // per-iteration data matrix: MP uses the residual map, the others the
    // projection onto the complement of the selected columns
    CMat c;
    if (method == SequentialMethod::mp) {
      c = mp_transform * y * mp_transform.adjoint();
    } else {
      CMat p = CMat::Identity(m, m);
      if (basis.cols() > 0) p -= basis * basis.adjoint();
      c = p * y * p;
    }
    const double trace_c = std::real(c.trace());

    // continuous selection value at an arbitrary candidate angle
    auto candidate_value = [&](const CVec& a) -> double {
      if (method == SequentialMethod::mp || method == SequentialMethod::omp)
        return trace_c - std::real(a.dot(c * a)) / double(m);
      CVec b = a;
      if (basis.cols() > 0) b -= basis * (basis.adjoint() * a);
      const double n2 = b.squaredNorm();
      if (n2 < double(m) * 1e-16)
        return std::numeric_limits<double>::infinity();
      const CVec q = b / std::sqrt(n2);
      if (method == SequentialMethod::ols)
        return trace_c - std::real(q.dot(c * q));
      const CVec w = c * q;
      CMat h = c;
      h.noalias() -= q * w.adjoint();
      h.noalias() -= w * q.adjoint();
      h.noalias() += std::real(q.dot(w)) * (q * q.adjoint());
      Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()),
                                             Eigen::EigenvaluesOnly);
      return es.eigenvalues().head(m - (n_sources - k)).sum();
    };

    std::vector<double> vals(std::size_t(g),
                             std::numeric_limits<double>::infinity());
    for (int i = 0; i < g; ++i)
      if (!masked[std::size_t(i)])
        vals[std::size_t(i)] = candidate_value(a_grid.col(i));

    int best = -1;
    for (int i = 0; i < g; ++i)
      if (std::isfinite(vals[std::size_t(i)]) &&
          (best < 0 || vals[std::size_t(i)] < vals[std::size_t(best)]))
        best = i;
    if (best < 0) {
      out.estimate.diagnostics.warnings.push_back(
          "candidate grid exhausted at iteration " + std::to_string(k));
      break;
    }

    double theta = grid[std::size_t(best)];
    if (opts.refine && best > 0 && best + 1 < g) {
      theta = detail::golden_refine(
          [&](double t) { return candidate_value(steering_vector(geom, t)); },
          grid[std::size_t(best - 1)], grid[std::size_t(best + 1)]);
    }

    const CVec a_sel = steering_vector(geom, theta);
    out.state.a_hat.conservativeResize(m, out.state.a_hat.cols() + 1);
    out.state.a_hat.col(out.state.a_hat.cols() - 1) = a_sel;
    out.state.thetas_hat.push_back(theta);
    out.state.iteration = k;
    out.estimate.diagnostics.objective.push_back(vals[std::size_t(best)]);

    for (int d = -opts.mask_radius; d <= opts.mask_radius; ++d) {
      const int j = best + d;
      if (j >= 0 && j < g) masked[std::size_t(j)] = true;
    }

    if (method == SequentialMethod::mp) {
      mp_transform =
          (CMat::Identity(m, m) - (a_sel * a_sel.adjoint()) / double(m)) *
          mp_transform;
    } else {
      CVec b = a_sel;
      if (basis.cols() > 0) b -= basis * (basis.adjoint() * a_sel);
      const double nb = b.norm();
      if (nb > 1e-12) {
        basis.conservativeResize(m, basis.cols() + 1);
        basis.col(basis.cols() - 1) = b / nb;
      } else {
        out.estimate.diagnostics.warnings.push_back(
            "selected column nearly collinear; basis not extended");
      }
    }
  }

  out.estimate.diagnostics.iterations = out.state.iteration;
  out.estimate.thetas_hat = out.state.thetas_hat;
  std::sort(out.estimate.thetas_hat.begin(), out.estimate.thetas_hat.end());
  return out;
}

// Snapshot-domain entry point; also fills the waveform estimates for the
// matching-pursuit family.
inline SequentialRun run_sequential(const ArrayGeometry& geom,
                                    SequentialMethod method, const CMat& x,
                                    int n_sources,
                                    const std::vector<double>& grid,
                                    const SequentialOptions& opts = {}) {
  SequentialRun out =
      run_sequential_cov(geom, method, x * x.adjoint(), n_sources, grid, opts);
  const int k = int(out.state.thetas_hat.size());
  if (k == 0) return out;
  if (method == SequentialMethod::mp) {
    CMat e = x;
    CMat s(k, x.cols());
    for (int i = 0; i < k; ++i) {
      const CVec a = out.state.a_hat.col(i);
      s.row(i) = (a.adjoint() * e) / double(geom.size());
      e -= a * s.row(i);
    }
    out.state.s_hat = s;
  } else if (method == SequentialMethod::omp) {
    out.state.s_hat =
        out.state.a_hat.colPivHouseholderQr().solve(x).eval();
  }
  return out;
}

}  // namespace doalab
