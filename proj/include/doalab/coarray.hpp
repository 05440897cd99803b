#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/spectra.hpp"
#include "doalab/subspace.hpp"

namespace doalab {

// Covariance entries averaged per coarray lag; the single virtual snapshot
// of the Khatri-Rao model.
struct CoarraySnapshot {
  std::vector<std::int64_t> lags;  // sorted, same as the coarray structure
  CVec lag_values;                 // one averaged value per lag
  std::int64_t contiguous_half_length = 0;

  // sub-vector over lags -ell .. ell
  CVec contiguous_segment() const {
    const std::int64_t ell = contiguous_half_length;
    CVec out(2 * ell + 1);
    auto it = std::lower_bound(lags.begin(), lags.end(), -ell);
    const int base = int(it - lags.begin());
    for (std::int64_t u = -ell; u <= ell; ++u)
      out[u + ell] = lag_values[base + int(u + ell)];
    return out;
  }
};

// Average R_hat over all sensor pairs sharing each lag; conjugate symmetry
// is enforced by averaging lag u with conj(-u).
inline CoarraySnapshot vectorize_covariance(const CMat& r_hat,
                                            const CoarrayStructure& ca) {
  CoarraySnapshot out;
  out.lags = ca.lags;
  out.contiguous_half_length = ca.contiguous_half_length;
  const int l = int(ca.lags.size());
  out.lag_values.resize(l);
  for (int i = 0; i < l; ++i) {
    cxd sum = 0.0;
    for (auto [p, q] : ca.selection_map[std::size_t(i)]) sum += r_hat(p, q);
    out.lag_values[i] = sum / double(ca.selection_map[std::size_t(i)].size());
  }
  for (int i = 0; i < l; ++i) {
    const int j = ca.lag_index(-ca.lags[std::size_t(i)]);
    if (j < i) continue;
    const cxd sym = 0.5 * (out.lag_values[i] + std::conj(out.lag_values[j]));
    out.lag_values[i] = sym;
    out.lag_values[j] = std::conj(sym);
  }
  // lag 0 is a real power
  const int zero = ca.lag_index(0);
  out.lag_values[zero] = std::real(out.lag_values[zero]);
  return out;
}

// vectorize -> contiguous segment -> spatial smoothing -> MUSIC on the
// virtual ULA.  Uncorrelated sources are a model assumption; the lag budget
// bounds the resolvable source count by ell.
inline EstimateResult coarray_music(const CMat& r_hat,
                                    const ArrayGeometry& geom, int n,
                                    const std::vector<double>& grid,
                                    int window = -1) {
  const CoarrayStructure ca = difference_coarray(geom);
  const int ell = int(ca.contiguous_half_length);
  if (window < 0) window = ell + 1;  // maximal virtual ULA
  if (n >= window) {
    std::ostringstream msg;
    msg << "coarray_music: cannot resolve " << n
        << " sources with a contiguous lag budget of -" << ell << ".." << ell
        << " (virtual ULA length " << window << " supports at most "
        << window - 1 << ")";
    throw std::invalid_argument(msg.str());
  }
  const CoarraySnapshot snap = vectorize_covariance(r_hat, ca);
  const CMat smoothed = spatial_smoothing(snap.contiguous_segment(), window);
  const SubspaceDecomposition dec = eigendecompose(smoothed, n);
  const ArrayGeometry virtual_ula = ArrayGeometry::ula(window);
  const MusicSpectrum fn(virtual_ula, dec, RVec::Ones(n));
  auto spectrum = sample_spectrum(fn, grid, "coarray-music");
  EstimateResult est = find_n_deepest_minima(spectrum, n);
  polish_minima(fn, grid, est);
  return est;
}

struct IdentifiabilityReport {
  int sensors = 0;
  int unique_lags = 0;
  std::int64_t contiguous_half_length = 0;  // ell
  int contiguous_span = 0;                  // 2*ell + 1
  int max_coarray_music_sources = 0;        // ell
  int real_equations = 0;                   // independent real covariance entries
  int counting_bound = 0;                   // (real_equations - 1) / 2
};

// Equation-versus-unknown accounting of the vectorized covariance model
// for uncorrelated sources (2N + 1 unknowns).
inline IdentifiabilityReport identifiability_budget(const ArrayGeometry& geom) {
  IdentifiabilityReport rep;
  rep.sensors = geom.size();
  if (geom.integer_grid()) {
    const CoarrayStructure ca = difference_coarray(geom);
    rep.unique_lags = int(ca.lags.size());
    rep.contiguous_half_length = ca.contiguous_half_length;
  } else {
    // generic positions: count distinct pairwise differences numerically
    std::vector<double> diffs;
    const auto& p = geom.positions();
    for (int i = 0; i < geom.size(); ++i)
      for (int j = 0; j < geom.size(); ++j) diffs.push_back(p[i] - p[j]);
    std::sort(diffs.begin(), diffs.end());
    int unique = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
      if (i == 0 || diffs[i] - diffs[i - 1] > 1e-9) ++unique;
    rep.unique_lags = unique;
    rep.contiguous_half_length = 0;
  }
  rep.contiguous_span = int(2 * rep.contiguous_half_length + 1);
  rep.max_coarray_music_sources = int(rep.contiguous_half_length);
  // lag 0 is one real equation, each +/-u pair adds two
  rep.real_equations = rep.unique_lags;
  rep.counting_bound = (rep.real_equations - 1) / 2;
  return rep;
}

inline std::string to_string(const IdentifiabilityReport& rep) {
  std::ostringstream os;
  os << "sensors:              " << rep.sensors << "\n"
     << "unique lags:          " << rep.unique_lags << "\n"
     << "contiguous lags:      -" << rep.contiguous_half_length << ".."
     << rep.contiguous_half_length << " (" << rep.contiguous_span << ")\n"
     << "coarray MUSIC limit:  N <= " << rep.max_coarray_music_sources << "\n"
     << "real equations:       " << rep.real_equations << "\n"
     << "counting bound:       N <= " << rep.counting_bound << "\n";
  return os.str();
}

}  // namespace doalab
