#pragma once

#include "doalab/types.hpp"

namespace doalab {

inline CMat sample_covariance(const CMat& x) {
  require(x.cols() >= 1, "sample_covariance: need at least one snapshot");
  CMat r = (x * x.adjoint()) / double(x.cols());
  return 0.5 * (r + r.adjoint());  // exact Hermitian symmetry
}

// Eigenpairs of a Hermitian covariance, ordered by descending eigenvalue
// and split into signal / noise subspaces.
struct SubspaceDecomposition {
  CMat cov;          // M x M
  RVec eigvals;      // descending
  CMat eigvecs;      // unitary, columns matching eigvals
  int n_signal = 0;
  CMat signal_vecs;  // M x N
  RVec signal_vals;  // N
  CMat noise_vecs;   // M x (M - N)
  double noise_var_est = 0.0;  // mean of the M-N smallest eigenvalues

  int dim() const { return int(cov.rows()); }
};

inline SubspaceDecomposition eigendecompose(const CMat& cov, int n_signal) {
  const int m = int(cov.rows());
  require(cov.cols() == m, "eigendecompose: covariance must be square");
  require((cov - cov.adjoint()).norm() <= 1e-8 * std::max(1.0, cov.norm()),
          "eigendecompose: covariance must be Hermitian");
  require(n_signal >= 1 && n_signal < m,
          "eigendecompose: need 1 <= n_signal < M");

  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (cov + cov.adjoint()));
  require(es.info() == Eigen::Success, "eigendecompose: solver failed");

  SubspaceDecomposition d;
  d.cov = 0.5 * (cov + cov.adjoint());
  d.n_signal = n_signal;
  d.eigvals = es.eigenvalues().reverse();
  d.eigvecs = es.eigenvectors().rowwise().reverse();
  d.signal_vals = d.eigvals.head(n_signal);
  d.signal_vecs = d.eigvecs.leftCols(n_signal);
  d.noise_vecs = d.eigvecs.rightCols(m - n_signal);
  d.noise_var_est = d.eigvals.tail(m - n_signal).mean();
  return d;
}

// Orthogonal projector onto the complement of span(A), via economy QR.
inline CMat projector_complement(const CMat& a) {
  const int m = int(a.rows());
  const int k = int(a.cols());
  require(k >= 1 && k <= m, "projector_complement: bad dimensions");
  Eigen::ColPivHouseholderQR<CMat> qr(a);
  if (qr.rank() < k)
    throw std::runtime_error("projector_complement: rank-deficient matrix");
  CMat q = qr.householderQ() * CMat::Identity(m, k);
  CMat p = CMat::Identity(m, m) - q * q.adjoint();
  return 0.5 * (p + p.adjoint());
}

enum class WsfWeighting { optimal, identity };

// Diagonal subspace weights; the optimal choice (lambda - nu)^2 / lambda
// with negative numerators clipped to zero.
inline RVec wsf_weights(const SubspaceDecomposition& d,
                        WsfWeighting kind = WsfWeighting::optimal) {
  if (kind == WsfWeighting::identity) return RVec::Ones(d.n_signal);
  RVec w(d.n_signal);
  for (int i = 0; i < d.n_signal; ++i) {
    const double lam = d.signal_vals[i];
    const double num = std::max(0.0, lam - d.noise_var_est);
    w[i] = lam > 0.0 ? num * num / lam : 0.0;
  }
  return w;
}

// Forward spatial smoothing of a contiguous-lag coarray vector
// [z(-ell) ... z(ell)]: average of w w^H over all length-L windows in
// ascending-lag order, so the result lives on a virtual ULA 0..L-1.
inline CMat spatial_smoothing(const CVec& coarray_vector, int window) {
  const int len = int(coarray_vector.size());
  require(len >= 1 && len % 2 == 1,
          "spatial_smoothing: coarray vector must have odd length 2*ell+1");
  const int ell = (len - 1) / 2;
  require(window >= 1 && window <= ell + 1,
          "spatial_smoothing: window must satisfy 1 <= L <= ell+1");
  const int count = len - window + 1;
  CMat r = CMat::Zero(window, window);
  for (int i = 0; i < count; ++i) {
    const CVec w = coarray_vector.segment(i, window);
    r += w * w.adjoint();
  }
  r /= double(count);
  return 0.5 * (r + r.adjoint());
}

}  // namespace doalab
