#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "doalab/types.hpp"

namespace doalab {

enum class ArrayKind { arbitrary, ula, thinned_ula, nested, coprime };

inline const char* to_string(ArrayKind k) {
  switch (k) {
    case ArrayKind::arbitrary: return "arbitrary";
    case ArrayKind::ula: return "ula";
    case ArrayKind::thinned_ula: return "thinned-ula";
    case ArrayKind::nested: return "nested";
    case ArrayKind::coprime: return "coprime";
  }
  return "?";
}

// Linear array; sensor positions in half-wavelength units, translation
// normalized so positions[0] = 0 and strictly increasing.  Integer-grid
// kinds also carry exact integer coordinates (multiples of the baseline)
// so coarray lag arithmetic never touches floating point.
class ArrayGeometry {
 public:
  static ArrayGeometry ula(int m, double baseline = 1.0) {
    require(m >= 1, "ula: need at least one sensor");
    require(baseline > 0.0, "ula: baseline must be positive");
    std::vector<std::int64_t> grid(m);
    std::iota(grid.begin(), grid.end(), std::int64_t{0});
    return from_grid(std::move(grid), baseline, ArrayKind::ula, {});
  }

  static ArrayGeometry thinned_ula(std::vector<std::int64_t> grid,
                                   double baseline = 1.0) {
    require(baseline > 0.0, "thinned_ula: baseline must be positive");
    return from_grid(std::move(grid), baseline, ArrayKind::thinned_ula, {});
  }

  // Two uniform subarrays: m1 sensors at spacing 1 from the origin and m2
  // sensors at spacing m1+1 starting at offset m1.
  static ArrayGeometry nested(int m1, int m2, double baseline = 1.0) {
    require(m1 >= 1 && m2 >= 1, "nested: m1, m2 must be >= 1");
    std::vector<std::int64_t> grid;
    for (int i = 0; i < m1; ++i) grid.push_back(i);
    for (int i = 0; i < m2; ++i) grid.push_back(m1 + std::int64_t(i) * (m1 + 1));
    return from_grid(std::move(grid), baseline, ArrayKind::nested, {m1, m2});
  }

  // Subarray 1: m1 sensors at spacing m2; subarray 2: m2-1 sensors at
  // spacing m1/f, displaced by `offset` baselines.  Shared sensors are
  // deduplicated.
  static ArrayGeometry coprime(int m1, int m2, int f = 1,
                               std::int64_t offset = 0,
                               double baseline = 1.0) {
    require(m1 >= 1 && m2 >= 1, "coprime: m1, m2 must be >= 1");
    require(std::gcd(m1, m2) == 1, "coprime: m1 and m2 must be coprime");
    require(f >= 1 && f <= m1 && m1 % f == 0,
            "coprime: compression factor must divide m1");
    const std::int64_t l1 = m2;
    const std::int64_t l2 = m1 / f;
    std::vector<std::int64_t> grid;
    for (int i = 0; i < m1; ++i) grid.push_back(std::int64_t(i) * l1);
    for (int i = 0; i < m2 - 1; ++i) grid.push_back(offset + std::int64_t(i) * l2);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return from_grid(std::move(grid), baseline, ArrayKind::coprime, {m1, m2, f});
  }

  static ArrayGeometry arbitrary(std::vector<double> positions,
                                 double baseline = 1.0) {
    require(!positions.empty(), "arbitrary: need at least one sensor");
    std::sort(positions.begin(), positions.end());
    const double p0 = positions.front();
    for (auto& p : positions) p -= p0;
    for (std::size_t i = 1; i < positions.size(); ++i)
      require(positions[i] > positions[i - 1],
              "arbitrary: positions must be pairwise distinct");
    ArrayGeometry g;
    g.kind_ = ArrayKind::arbitrary;
    g.baseline_ = baseline;
    g.positions_ = Eigen::Map<const RVec>(positions.data(),
                                          Eigen::Index(positions.size()));
    g.detect_grid();
    return g;
  }

  // Testing escape hatch: no invariant checks, no normalization.
  static ArrayGeometry from_positions_unchecked(std::vector<double> positions) {
    ArrayGeometry g;
    g.kind_ = ArrayKind::arbitrary;
    g.baseline_ = 1.0;
    g.positions_ = Eigen::Map<const RVec>(positions.data(),
                                          Eigen::Index(positions.size()));
    return g;
  }

  int size() const { return int(positions_.size()); }
  const RVec& positions() const { return positions_; }
  double baseline() const { return baseline_; }
  ArrayKind kind() const { return kind_; }
  const std::vector<int>& kind_params() const { return params_; }

  bool integer_grid() const { return !grid_.empty(); }
  const std::vector<std::int64_t>& grid_positions() const {
    require(integer_grid(), "geometry is not on an integer grid");
    return grid_;
  }

 private:
  static ArrayGeometry from_grid(std::vector<std::int64_t> grid,
                                 double baseline, ArrayKind kind,
                                 std::vector<int> params) {
    require(!grid.empty(), "geometry needs at least one sensor");
    std::sort(grid.begin(), grid.end());
    for (std::size_t i = 1; i < grid.size(); ++i)
      require(grid[i] != grid[i - 1], "sensor positions must be distinct");
    const std::int64_t g0 = grid.front();
    for (auto& g : grid) g -= g0;
    ArrayGeometry out;
    out.kind_ = kind;
    out.baseline_ = baseline;
    out.params_ = std::move(params);
    out.grid_ = std::move(grid);
    out.positions_.resize(Eigen::Index(out.grid_.size()));
    for (Eigen::Index i = 0; i < out.positions_.size(); ++i)
      out.positions_[i] = double(out.grid_[std::size_t(i)]) * baseline;
    return out;
  }

  void detect_grid() {
    grid_.clear();
    constexpr double tol = 1e-9;
    std::vector<std::int64_t> grid(std::size_t(positions_.size()));
    for (Eigen::Index i = 0; i < positions_.size(); ++i) {
      const double q = positions_[i] / baseline_;
      const double r = std::round(q);
      if (std::abs(q - r) > tol) return;
      grid[std::size_t(i)] = std::int64_t(r);
    }
    grid_ = std::move(grid);
  }

  ArrayKind kind_ = ArrayKind::arbitrary;
  double baseline_ = 1.0;
  RVec positions_;
  std::vector<std::int64_t> grid_;
  std::vector<int> params_;
};

// a(theta), element m = exp(-j pi d_m cos theta)
inline CVec steering_vector(const ArrayGeometry& geom, double theta_deg) {
  require(in_fov(theta_deg), "steering_vector: angle outside open (0,180) FoV");
  const double c = std::cos(deg2rad(theta_deg));
  CVec a(geom.size());
  for (int m = 0; m < geom.size(); ++m) {
    const double phase = -pi * geom.positions()[m] * c;
    a[m] = cxd(std::cos(phase), std::sin(phase));
  }
  return a;
}

struct SteeringMatrix {
  CMat entries;               // M x N
  std::vector<double> angles; // degrees, strictly increasing
};

inline SteeringMatrix steering_matrix(const ArrayGeometry& geom,
                                      const std::vector<double>& thetas) {
  require(!thetas.empty(), "steering_matrix: need at least one angle");
  for (std::size_t n = 0; n < thetas.size(); ++n) {
    require(in_fov(thetas[n]), "steering_matrix: angle outside FoV");
    if (n > 0)
      require(thetas[n] > thetas[n - 1],
              "steering_matrix: angles must be strictly increasing");
  }
  SteeringMatrix out;
  out.angles = thetas;
  out.entries.resize(geom.size(), Eigen::Index(thetas.size()));
  for (std::size_t n = 0; n < thetas.size(); ++n)
    out.entries.col(Eigen::Index(n)) = steering_vector(geom, thetas[n]);
  return out;
}

// Steering matrix without the sortedness requirement; used by grid search
// and dictionary construction where column order mirrors the grid.
inline CMat steering_columns(const ArrayGeometry& geom,
                             const std::vector<double>& grid) {
  CMat a(geom.size(), Eigen::Index(grid.size()));
  for (std::size_t n = 0; n < grid.size(); ++n)
    a.col(Eigen::Index(n)) = steering_vector(geom, grid[n]);
  return a;
}

struct CoarrayStructure {
  std::vector<std::int64_t> lags;  // sorted, unique, symmetric about 0
  std::vector<int> multiplicity;   // per lag
  std::int64_t contiguous_half_length = 0;
  // per lag, all sensor index pairs (i, j) with d_i - d_j = lag
  std::vector<std::vector<std::pair<int, int>>> selection_map;

  int lag_index(std::int64_t lag) const {
    auto it = std::lower_bound(lags.begin(), lags.end(), lag);
    require(it != lags.end() && *it == lag, "lag not present in coarray");
    return int(it - lags.begin());
  }
};

inline CoarrayStructure difference_coarray(const ArrayGeometry& geom) {
  require(geom.integer_grid(),
          "difference_coarray: geometry must lie on an integer grid");
  const auto& g = geom.grid_positions();
  const int m = geom.size();
  std::map<std::int64_t, std::vector<std::pair<int, int>>> pairs;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) pairs[g[i] - g[j]].push_back({i, j});

  CoarrayStructure out;
  for (auto& [lag, list] : pairs) {
    out.lags.push_back(lag);
    out.multiplicity.push_back(int(list.size()));
    out.selection_map.push_back(std::move(list));
  }
  std::int64_t ell = 0;
  while (pairs.count(ell + 1) && pairs.count(-(ell + 1))) ++ell;
  out.contiguous_half_length = ell;
  return out;
}

// Randomized necessary check for Kruskal rank M: draw k distinct angles,
// test a random M-subset of the steering columns for numerical
// nonsingularity.  Passing all trials is evidence, not proof.
inline bool kruskal_rank_check(const ArrayGeometry& geom, int k, int trials,
                               std::uint64_t seed) {
  const int m = geom.size();
  require(k >= m, "kruskal_rank_check: need k >= M");
  if (m == 1) return true;
  Rng rng(derive_seed(seed, 0x6b72));
  constexpr double tol = 1e-8;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> angles(static_cast<std::size_t>(k), 0.0);
    for (auto& a : angles) a = rng.uniform(1e-3, 180.0 - 1e-3);
    std::sort(angles.begin(), angles.end());
    // random M-subset via partial Fisher-Yates on indices
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
      const int j = i + int(rng.next_u64() % std::uint64_t(k - i));
      std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    CMat a(m, m);
    for (int i = 0; i < m; ++i) {
      a.col(i) = steering_vector(geom, angles[std::size_t(idx[std::size_t(i)])]);
      a.col(i) /= a.col(i).norm();
    }
    Eigen::JacobiSVD<CMat> svd(a);
    if (svd.singularValues()(m - 1) <= tol) return false;
  }
  return true;
}

// Uniform grid over the open FoV: step, 2*step, ..., < 180.
inline std::vector<double> fov_grid(double step_deg = 0.5) {
  require(step_deg > 0.0, "fov_grid: step must be positive");
  std::vector<double> grid;
  for (double a = step_deg; a < 180.0 - 1e-12; a += step_deg) grid.push_back(a);
  return grid;
}

}  // namespace doalab
