#pragma once

#include <utility>
#include <vector>

#include "doalab/spectra.hpp"
#include "doalab/subspace.hpp"

namespace doalab {

// Known lags of a partly calibrated array: for each lag delta_k, the row
// pairs (reference, shifted) whose sensors are separated by exactly
// delta_k half-wavelengths.
struct ShiftStructure {
  struct Shift {
    double delta = 0.0;           // half-wavelengths, > 0
    std::vector<int> ref_rows;    // equal lengths
    std::vector<int> shifted_rows;
  };
  std::vector<Shift> shifts;

  void validate(int m) const {
    require(!shifts.empty(), "shift structure: need at least one lag");
    for (const auto& s : shifts) {
      require(s.delta > 0.0, "shift structure: lags must be positive");
      require(!s.ref_rows.empty() &&
                  s.ref_rows.size() == s.shifted_rows.size(),
              "shift structure: selector blocks must have equal heights");
      for (std::size_t i = 0; i < s.ref_rows.size(); ++i) {
        require(s.ref_rows[i] >= 0 && s.ref_rows[i] < m &&
                    s.shifted_rows[i] >= 0 && s.shifted_rows[i] < m,
                "shift structure: selector row out of range");
      }
    }
  }
};

// Maximally overlapping single-shift structure of a ULA.
inline ShiftStructure ula_shift_structure(int m, double delta = 1.0) {
  require(m >= 2, "ula_shift_structure: need at least two sensors");
  ShiftStructure out;
  ShiftStructure::Shift s;
  s.delta = delta;
  for (int i = 0; i + 1 < m; ++i) {
    s.ref_rows.push_back(i);
    s.shifted_rows.push_back(i + 1);
  }
  out.shifts.push_back(std::move(s));
  return out;
}

// Enumerate, per known lag, all sensor pairs inside the same subarray.
// `subarrays` lists sensor indices per subarray; positions come from the
// geometry.
inline ShiftStructure shift_structure_from_subarrays(
    const ArrayGeometry& geom, const std::vector<std::vector<int>>& subarrays,
    const std::vector<double>& lags) {
  require(!lags.empty(), "shift_structure_from_subarrays: need lags");
  ShiftStructure out;
  for (double delta : lags) {
    ShiftStructure::Shift s;
    s.delta = delta;
    for (const auto& sub : subarrays) {
      for (int i : sub)
        for (int j : sub) {
          if (i == j) continue;
          const double gap = geom.positions()[j] - geom.positions()[i];
          if (std::abs(gap - delta) < 1e-9) {
            s.ref_rows.push_back(i);
            s.shifted_rows.push_back(j);
          }
        }
    }
    if (!s.ref_rows.empty()) out.shifts.push_back(std::move(s));
  }
  require(!out.shifts.empty(),
          "shift_structure_from_subarrays: no sensor pair realizes any lag");
  return out;
}

// Signal-eigenvector blocks (reference, shifted) selected by one shift.
struct ShiftBlocks {
  double delta = 0.0;
  CMat ref;      // rows of U_s at the reference sensors
  CMat shifted;  // rows of U_s at the shifted sensors
};

inline std::vector<ShiftBlocks> select_shift_blocks(
    const CMat& signal_vecs, const ShiftStructure& structure) {
  structure.validate(int(signal_vecs.rows()));
  std::vector<ShiftBlocks> out;
  for (const auto& s : structure.shifts) {
    ShiftBlocks b;
    b.delta = s.delta;
    const int rows = int(s.ref_rows.size());
    b.ref.resize(rows, signal_vecs.cols());
    b.shifted.resize(rows, signal_vecs.cols());
    for (int i = 0; i < rows; ++i) {
      b.ref.row(i) = signal_vecs.row(s.ref_rows[std::size_t(i)]);
      b.shifted.row(i) = signal_vecs.row(s.shifted_rows[std::size_t(i)]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

enum class EspritSolve { ls, tls };

// Single-shift (TLS-)ESPRIT: solve ref * Psi ~ shifted, map the eigenvalues
// psi_n = e^{-j pi delta cos(theta_n)} back to angles.
inline EstimateResult esprit(const SubspaceDecomposition& dec,
                             const ShiftStructure& structure,
                             EspritSolve solve = EspritSolve::ls) {
  require(structure.shifts.size() == 1, "esprit: needs exactly one shift");
  const auto blocks = select_shift_blocks(dec.signal_vecs, structure);
  const CMat& lo = blocks[0].ref;
  const CMat& hi = blocks[0].shifted;
  const double delta = blocks[0].delta;
  const int n = int(lo.cols());
  require(lo.rows() >= n, "esprit: block height must be >= N");

  CMat psi;
  if (solve == EspritSolve::ls) {
    psi = lo.completeOrthogonalDecomposition().solve(hi);
  } else {
    // TLS: smallest right singular subspace of [lo hi]
    CMat stacked(lo.rows(), 2 * n);
    stacked.leftCols(n) = lo;
    stacked.rightCols(n) = hi;
    Eigen::JacobiSVD<CMat> svd(stacked, Eigen::ComputeFullV);
    const CMat v = svd.matrixV();
    const CMat v12 = v.block(0, n, n, n);
    const CMat v22 = v.block(n, n, n, n);
    require(std::abs(v22.determinant()) > 1e-14,
            "esprit: TLS subspace is degenerate");
    psi = -v12 * v22.inverse();
  }

  Eigen::ComplexEigenSolver<CMat> es(psi);
  require(es.info() == Eigen::Success, "esprit: eigensolver failed");

  EstimateResult out;
  for (int i = 0; i < n; ++i) {
    const cxd lambda = es.eigenvalues()(i);
    const double c = -std::arg(lambda) / (pi * delta);
    if (std::abs(c) > 1.0)
      throw std::runtime_error(
          "esprit: phase maps outside the FoV (aliasing: shift delta too "
          "large)");
    out.thetas_hat.push_back(rad2deg(std::acos(c)));
    out.diagnostics.powers.push_back(std::abs(lambda));
  }
  std::sort(out.thetas_hat.begin(), out.thetas_hat.end());
  return out;
}

struct RareMatrixSample {
  double theta = 0.0;
  CMat matrix;             // N x N Hermitian PSD
  double min_eigval = 0.0;
};

// M(theta) = sum_k [ (L^H L + U^H U) - L^H U e^{+j pi d_k cos}
//                                    - U^H L e^{-j pi d_k cos} ]
// with L/U the reference/shifted eigenvector blocks of shift k.
inline RareMatrixSample rare_matrix(double theta_deg,
                                    const std::vector<ShiftBlocks>& blocks) {
  require(!blocks.empty(), "rare_matrix: need at least one shift block");
  const int n = int(blocks[0].ref.cols());
  RareMatrixSample out;
  out.theta = theta_deg;
  out.matrix = CMat::Zero(n, n);
  const double c = std::cos(deg2rad(theta_deg));
  for (const auto& b : blocks) {
    require(int(b.ref.cols()) == n && int(b.shifted.cols()) == n,
            "rare_matrix: inconsistent block widths");
    const double phase = pi * b.delta * c;
    const cxd e_pos(std::cos(phase), std::sin(phase));
    out.matrix += b.ref.adjoint() * b.ref + b.shifted.adjoint() * b.shifted;
    out.matrix -= (b.ref.adjoint() * b.shifted) * e_pos;
    out.matrix -= (b.shifted.adjoint() * b.ref) * std::conj(e_pos);
  }
  out.matrix = 0.5 * (out.matrix + out.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(out.matrix, Eigen::EigenvaluesOnly);
  out.min_eigval = es.eigenvalues()(0);
  return out;
}

enum class RareVariant { min_eigenvalue, determinant };

// RARE null-spectrum over the grid: lambda_min(M(theta)) by default; the
// determinant variant is exposed for cross-validation.
inline NullSpectrum rare_null_spectrum(
    const std::vector<ShiftBlocks>& blocks, const std::vector<double>& grid,
    RareVariant variant = RareVariant::min_eigenvalue) {
  return sample_spectrum(
      [&](double theta) {
        RareMatrixSample s = rare_matrix(theta, blocks);
        if (variant == RareVariant::min_eigenvalue) return s.min_eigval;
        return std::abs(s.matrix.determinant());
      },
      grid, variant == RareVariant::min_eigenvalue ? "rare" : "rare-det");
}

inline EstimateResult rare_spectrum(const std::vector<ShiftBlocks>& blocks,
                                    const std::vector<double>& grid, int n,
                                    RareVariant variant =
                                        RareVariant::min_eigenvalue) {
  require(n <= int(blocks[0].ref.cols()),
          "rare_spectrum: N exceeds the block column count");
  return find_n_deepest_minima(rare_null_spectrum(blocks, grid, variant), n);
}

// Concentrated multiple-shift objective: sum_n t_n^H M(theta_n) t_n for the
// columns t_n of the (nonsingular) transform.
inline double concentrated_multishift_objective(
    const CMat& t_matrix, const std::vector<ShiftBlocks>& blocks,
    const std::vector<double>& thetas) {
  const int n = int(t_matrix.rows());
  require(t_matrix.cols() == n && int(thetas.size()) == n,
          "concentrated_multishift_objective: dimension mismatch");
  Eigen::JacobiSVD<CMat> svd(t_matrix);
  require(svd.singularValues()(n - 1) > 1e-14 * svd.singularValues()(0),
          "concentrated_multishift_objective: singular transform");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const RareMatrixSample s = rare_matrix(thetas[std::size_t(i)], blocks);
    total += std::real(t_matrix.col(i).dot(s.matrix * t_matrix.col(i)));
  }
  return total;
}

}  // namespace doalab
