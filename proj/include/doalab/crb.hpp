#pragma once

#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/types.hpp"

namespace doalab {

// Unconditional (stochastic) Cramer-Rao bound on the DoAs:
//   CRB = nu/(2T) * { Re[ (D^H P_A^perp D) o (P A^H R^{-1} A P)^T ] }^{-1}
// with D the steering derivatives and o the Hadamard product.  Returns the
// per-source standard deviations in degrees.
inline RVec crb_unconditional(const ArrayGeometry& geom,
                              const std::vector<double>& thetas,
                              const CMat& p, double nu, int snapshots) {
  const int m = geom.size();
  const int n = int(thetas.size());
  require(n >= 1 && n < m, "crb_unconditional: need 1 <= N < M");
  require(p.rows() == n && p.cols() == n, "crb_unconditional: P must be NxN");
  require(nu > 0.0, "crb_unconditional: noise variance must be positive");
  require(snapshots >= 1, "crb_unconditional: need T >= 1");

  const CMat a = steering_matrix(geom, thetas).entries;
  CMat d(m, n);
  for (int j = 0; j < n; ++j) {
    const double rad = deg2rad(thetas[std::size_t(j)]);
    for (int i = 0; i < m; ++i)
      d(i, j) = a(i, j) * cxd(0.0, pi * geom.positions()[i] * std::sin(rad));
  }

  const CMat r = a * p * a.adjoint() + nu * CMat::Identity(m, m);
  const CMat rinv = r.ldlt().solve(CMat::Identity(m, m));
  const CMat gram_inv = (a.adjoint() * a).ldlt().solve(a.adjoint());
  const CMat proj = CMat::Identity(m, m) - a * gram_inv;

  const CMat h = d.adjoint() * proj * d;
  const CMat w = p * a.adjoint() * rinv * a * p;
  RMat fisher =
      (2.0 * double(snapshots) / nu) * (h.array() * w.transpose().array()).real();

  Eigen::FullPivLU<RMat> lu(fisher);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "crb_unconditional: singular Fisher matrix (unidentifiable "
        "configuration)");
  const RMat crb = lu.inverse();

  RVec out(n);
  for (int i = 0; i < n; ++i) {
    require(crb(i, i) > 0.0, "crb_unconditional: negative bound");
    out[i] = rad2deg(std::sqrt(crb(i, i)));
  }
  return out;
}

// Reduction used for figure curves: mean of the per-source deviations.
inline double crb_unconditional_mean(const ArrayGeometry& geom,
                                     const std::vector<double>& thetas,
                                     const CMat& p, double nu, int snapshots) {
  return crb_unconditional(geom, thetas, p, nu, snapshots).mean();
}

}  // namespace doalab
