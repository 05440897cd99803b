#pragma once

#include <limits>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/spectra.hpp"
#include "doalab/types.hpp"

namespace doalab {

struct Dictionary {
  std::vector<double> grid;  // K angles, sorted
  CMat matrix;               // M x K steering columns
};

inline Dictionary build_dictionary(const ArrayGeometry& geom,
                                   const std::vector<double>& grid) {
  require(int(grid.size()) >= geom.size(),
          "build_dictionary: need K >= M grid angles");
  Dictionary d;
  d.grid = grid;
  d.matrix = steering_columns(geom, grid);
  return d;
}

inline Dictionary build_dictionary(const ArrayGeometry& geom,
                                   double grid_step_deg) {
  return build_dictionary(geom, fov_grid(grid_step_deg));
}

struct L20Solution {
  std::vector<int> support;  // column indices, sorted
  CMat coefficients;         // K x T, zero off support
  double residual = 0.0;     // squared Frobenius residual at the optimum
};

// Exhaustive minimization of ||X - A S||_F^2 over supports of size n;
// the desk-scale oracle for the cardinality-constrained problem.
inline L20Solution l20_brute_force(const CMat& x, const Dictionary& dict,
                                   int n, std::size_t budget = 100000) {
  const int k = int(dict.grid.size());
  require(n >= 1 && n <= k, "l20_brute_force: need 1 <= N <= K");

  // K choose N against the enumeration budget
  double combos = 1.0;
  for (int i = 0; i < n; ++i)
    combos *= double(k - i) / double(i + 1);
  if (combos > double(budget))
    throw std::runtime_error(
        "l20_brute_force: support enumeration exceeds the budget");

  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) idx[std::size_t(i)] = i;

  L20Solution best;
  best.residual = std::numeric_limits<double>::infinity();
  const double total = x.squaredNorm();

  auto evaluate = [&](const std::vector<int>& support) {
    CMat a_s(x.rows(), n);
    for (int i = 0; i < n; ++i)
      a_s.col(i) = dict.matrix.col(support[std::size_t(i)]);
    Eigen::ColPivHouseholderQR<CMat> qr(a_s);
    if (qr.rank() < n) return;
    const CMat q = qr.householderQ() * CMat::Identity(x.rows(), n);
    const double explained = (q.adjoint() * x).squaredNorm();
    const double resid = total - explained;
    if (resid < best.residual) {
      best.residual = resid;
      best.support = support;
    }
  };

  // lexicographic enumeration of all N-subsets
  while (true) {
    evaluate(idx);
    int i = n - 1;
    while (i >= 0 && idx[std::size_t(i)] == k - n + i) --i;
    if (i < 0) break;
    ++idx[std::size_t(i)];
    for (int j = i + 1; j < n; ++j)
      idx[std::size_t(j)] = idx[std::size_t(j - 1)] + 1;
  }

  require(!best.support.empty(), "l20_brute_force: no feasible support");
  CMat a_s(x.rows(), n);
  for (int i = 0; i < n; ++i)
    a_s.col(i) = dict.matrix.col(best.support[std::size_t(i)]);
  const CMat s = a_s.completeOrthogonalDecomposition().solve(x);
  best.coefficients = CMat::Zero(k, x.cols());
  for (int i = 0; i < n; ++i)
    best.coefficients.row(best.support[std::size_t(i)]) = s.row(i);
  best.residual = (x - a_s * s).squaredNorm();
  return best;
}

struct MmpSolution {
  CMat coefficients;  // K x T
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Proximal gradient (optionally accelerated) for the convex multiple
// measurement problem  ||X - A S||_F^2 + mu * sum_k ||row_k(S)||_2.
inline MmpSolution mmp_solve(const CMat& x, const Dictionary& dict, double mu,
                             double tol = 1e-10, int max_iter = 5000,
                             bool momentum = false) {
  require(mu > 0.0, "mmp_solve: mu must be positive");
  const CMat& a = dict.matrix;
  const int k = int(a.cols());

  Eigen::SelfAdjointEigenSolver<CMat> es(a.adjoint() * a,
                                         Eigen::EigenvaluesOnly);
  const double lips = 2.0 * es.eigenvalues().maxCoeff();
  const double step = 1.0 / lips;

  auto objective = [&](const CMat& s) {
    double row_norms = 0.0;
    for (int r = 0; r < k; ++r) row_norms += s.row(r).norm();
    return (x - a * s).squaredNorm() + mu * row_norms;
  };

  MmpSolution out;
  CMat s = CMat::Zero(k, x.cols());
  CMat z = s;  // extrapolation point
  double t_prev = 1.0;
  double obj_prev = objective(s);
  for (int it = 1; it <= max_iter; ++it) {
    const CMat grad = 2.0 * (a.adjoint() * (a * z - x));
    CMat next = z - step * grad;
    for (int r = 0; r < k; ++r) {
      const double nrm = next.row(r).norm();
      const double shrink = std::max(0.0, 1.0 - step * mu / std::max(nrm, 1e-300));
      next.row(r) *= shrink;
    }
    if (momentum) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
      z = next + ((t_prev - 1.0) / t_next) * (next - s);
      t_prev = t_next;
    } else {
      z = next;
    }
    s = next;
    const double obj = objective(s);
    out.iterations = it;
    if (std::abs(obj_prev - obj) <= tol * std::max(1.0, std::abs(obj_prev))) {
      out.converged = true;
      obj_prev = obj;
      break;
    }
    obj_prev = obj;
  }
  out.coefficients = s;
  out.objective = obj_prev;
  return out;
}

struct SparrowSolution {
  RVec d;                 // K nonnegative reals
  double objective = 0.0;
  int iterations = 0;     // full coordinate sweeps
  bool converged = false;
  double mu = 0.0;
  int snapshots = 0;
  std::vector<double> objective_history;  // one entry per sweep
};

namespace detail {

// Scalar coordinate subproblem of the SPARROW objective: with
// alpha = a^H S^{-1} a and beta = a^H S^{-1} R S^{-1} a for the matrix S
// excluding coordinate k, the minimizer over d_k >= 0 is
// max(0, (sqrt(beta) - 1) / alpha).
inline double sparrow_coordinate_min(double alpha, double beta) {
  if (!(alpha > 0.0)) return 0.0;
  return std::max(0.0, (std::sqrt(std::max(beta, 0.0)) - 1.0) / alpha);
}

// The scalar objective restricted to coordinate k, up to a constant:
// phi(t) = -t * beta / (1 + t * alpha) + t.
inline double sparrow_coordinate_objective(double alpha, double beta,
                                           double t) {
  return -t * beta / (1.0 + t * alpha) + t;
}

}  // namespace detail

// Block-coordinate descent on
//   tr((A D A^H + mu/(2 sqrt(T)) I)^{-1} R) + tr(D),  D = diag(d) >= 0.
// Each coordinate update is the closed-form nonnegative root of the
// rank-one-updated scalar problem; the inverse is maintained by
// Sherman-Morrison and refreshed once per sweep.
inline SparrowSolution sparrow_bcd(const CMat& r_hat, const Dictionary& dict,
                                   double mu, int snapshots,
                                   double tol = 1e-8, int max_iter = 2000) {
  require(mu > 0.0, "sparrow_bcd: mu must be positive");
  require(snapshots >= 1, "sparrow_bcd: need T >= 1");
  const int m = int(r_hat.rows());
  require(r_hat.cols() == m && dict.matrix.rows() == m,
          "sparrow_bcd: dimension mismatch");
  require(is_hermitian_psd(r_hat, 1e-10), "sparrow_bcd: R must be Hermitian PSD");

  const CMat& a = dict.matrix;
  const int k = int(a.cols());
  const double eps = mu / (2.0 * std::sqrt(double(snapshots)));

  SparrowSolution out;
  out.mu = mu;
  out.snapshots = snapshots;
  out.d = RVec::Zero(k);

  CMat sigma_inv = CMat::Identity(m, m) / eps;
  auto objective = [&]() {
    return std::real((sigma_inv * r_hat).trace()) + out.d.sum();
  };
  double obj_prev = objective();

  for (int sweep = 1; sweep <= max_iter; ++sweep) {
    for (int j = 0; j < k; ++j) {
      const CVec aj = a.col(j);
      // remove coordinate j's contribution from the inverse
      CMat inv_minus = sigma_inv;
      const double dj = out.d[j];
      if (dj != 0.0) {
        const CVec u = sigma_inv * aj;
        const double denom = 1.0 - dj * std::real(aj.dot(u));
        inv_minus += (dj / denom) * (u * u.adjoint());
      }
      const CVec v = inv_minus * aj;
      const double alpha = std::real(aj.dot(v));
      const double beta = std::real(v.dot(r_hat * v));
      const double d_new = detail::sparrow_coordinate_min(alpha, beta);
      out.d[j] = d_new;
      if (d_new != 0.0) {
        const double denom = 1.0 + d_new * alpha;
        sigma_inv = inv_minus - (d_new / denom) * (v * v.adjoint());
      } else {
        sigma_inv = inv_minus;
      }
    }
    // refresh the inverse to stop rank-one drift
    CMat sigma = eps * CMat::Identity(m, m);
    for (int j = 0; j < k; ++j)
      if (out.d[j] != 0.0) sigma += out.d[j] * (a.col(j) * a.col(j).adjoint());
    sigma_inv = sigma.ldlt().solve(CMat::Identity(m, m));
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.adjoint());

    const double obj = objective();
    out.iterations = sweep;
    out.objective_history.push_back(obj);
    if (std::abs(obj_prev - obj) <= tol * std::max(1.0, std::abs(obj_prev))) {
      out.converged = true;
      obj_prev = obj;
      break;
    }
    obj_prev = obj;
  }
  out.objective = obj_prev;
  return out;
}

// N largest local maxima of a nonnegative sequence over the grid; plateau
// ties resolve toward the smaller angle.
inline EstimateResult support_to_doas(const RVec& values,
                                      const std::vector<double>& grid, int n) {
  const int k = int(values.size());
  require(k == int(grid.size()), "support_to_doas: size mismatch");
  require(n >= 1 && n <= k, "support_to_doas: need 1 <= N <= K");

  std::vector<int> maxima;
  for (int i = 0; i < k; ++i) {
    const bool left_ok = (i == 0) || values[i] > values[i - 1];
    const bool right_ok = (i == k - 1) || values[i] >= values[i + 1];
    if (left_ok && right_ok) maxima.push_back(i);
  }
  auto by_height = [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return grid[std::size_t(a)] < grid[std::size_t(b)];
  };
  std::sort(maxima.begin(), maxima.end(), by_height);

  EstimateResult out;
  std::vector<int> chosen(maxima.begin(),
                          maxima.begin() + std::min<std::size_t>(
                                               maxima.size(), std::size_t(n)));
  if (int(chosen.size()) < n) {
    out.diagnostics.warnings.push_back(
        "fewer local maxima than sources; filled from largest values");
    std::vector<bool> used(std::size_t(k), false);
    for (int i : chosen) used[std::size_t(i)] = true;
    std::vector<int> rest;
    for (int i = 0; i < k; ++i)
      if (!used[std::size_t(i)]) rest.push_back(i);
    std::sort(rest.begin(), rest.end(), by_height);
    for (int i : rest) {
      if (int(chosen.size()) == n) break;
      chosen.push_back(i);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (int i : chosen) {
    out.thetas_hat.push_back(grid[std::size_t(i)]);
    out.diagnostics.powers.push_back(values[i]);
  }
  return out;
}

// Group-lasso scaling for mu: the row norms of A^H N grow like
// sigma sqrt(M T), so mu = c * sqrt(M T log K) * sigma keeps the SPARROW
// loading mu/(2 sqrt(T)) independent of the snapshot count.
inline double default_sparse_mu(int m, int k, int snapshots, double noise_std,
                                double c = 1.0) {
  return c *
         std::sqrt(double(m) * double(snapshots) * std::log(double(k))) *
         noise_std;
}

}  // namespace doalab
