#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <doalab/sigmodel.hpp>
#include <doalab/spectra.hpp>

#include <set>

using namespace doalab;

namespace {

CMat random_wishart(Rng& rng, int m, int t) {
  CMat x(m, t);
  for (int j = 0; j < t; ++j)
    for (int i = 0; i < m; ++i) x(i, j) = rng.cnormal();
  return x * x.adjoint();
}

std::set<int> local_min_indices(const NullSpectrum& s) {
  std::set<int> out;
  for (int i = 1; i + 1 < int(s.grid.size()); ++i)
    if (s.values[std::size_t(i)] < s.values[std::size_t(i - 1)] &&
        s.values[std::size_t(i)] < s.values[std::size_t(i + 1)])
      out.insert(i);
  return out;
}

// standard noise-subspace MUSIC null-spectrum
double music_standard(const ArrayGeometry& g, const SubspaceDecomposition& d,
                      double theta) {
  const CVec a = steering_vector(g, theta);
  return std::real(a.dot(d.noise_vecs * (d.noise_vecs.adjoint() * a))) /
         double(g.size());
}

}  // namespace

TEST_CASE("beamformer spectrum basics") {
  auto geom = ArrayGeometry::ula(5);
  const CVec a0 = steering_vector(geom, 104.0);
  BeamformerSpectrum bf_rank1(geom, a0 * a0.adjoint());
  CHECK(bf_rank1(104.0) == doctest::Approx(0.0).epsilon(1e-12));

  BeamformerSpectrum bf_iso(geom, CMat::Identity(5, 5));
  for (double theta : {10.0, 90.0, 151.5})
    CHECK(bf_iso(theta) == doctest::Approx(4.0));

  // noiseless single source: global grid minimum at the source
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {63.5};  // on the 0.5 grid
  sc.noise_var = 0.0;
  sc.snapshots = 16;
  sc.seed = 11;
  auto x = simulate(sc);
  BeamformerSpectrum bf(geom, x.entries * x.entries.adjoint());
  auto grid = fov_grid(0.5);
  auto spec = sample_spectrum(bf, grid, "bf");
  int best = 0;
  for (int i = 0; i < int(grid.size()); ++i)
    if (spec.values[std::size_t(i)] < spec.values[std::size_t(best)]) best = i;
  CHECK(grid[std::size_t(best)] == doctest::Approx(63.5));
}

TEST_CASE("music variant spectrum") {
  auto geom = ArrayGeometry::ula(6);

  // N = 1: value vanishes at the source
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {117.0};
  sc.noise_var = 0.0;
  sc.snapshots = 8;
  sc.seed = 3;
  auto x = simulate(sc);
  auto dec = eigendecompose(sample_covariance(x.entries), 1);
  MusicSpectrum ms(geom, dec, RVec::Ones(1));
  CHECK(ms(117.0) == doctest::Approx(0.0).epsilon(1e-10));

  // W = 0 kills the spectrum
  MusicSpectrum zero(geom, dec, RVec::Zero(1));
  for (double theta : {20.0, 90.0, 160.0}) CHECK(zero(theta) == 0.0);
}

TEST_CASE("music variant argmins equal standard MUSIC argmins") {
  auto geom = ArrayGeometry::ula(8);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {70.0, 112.0};
  sc.snr_db = 6.0;
  sc.snapshots = 200;
  sc.seed = 99;
  auto x = simulate(sc);
  auto dec = eigendecompose(sample_covariance(x.entries), 2);

  auto grid = fov_grid(0.5);
  auto variant =
      sample_spectrum(MusicSpectrum(geom, dec, RVec::Ones(2)), grid, "music");
  auto standard = sample_spectrum(
      [&](double t) { return music_standard(geom, dec, t); }, grid, "std");
  CHECK(local_min_indices(variant) == local_min_indices(standard));
}

TEST_CASE("capon covariance fit") {
  auto geom = ArrayGeometry::ula(4);
  CaponFitSpectrum iso(geom, CMat::Identity(4, 4));
  CHECK(iso.fit(75.0).power == doctest::Approx(0.25));

  // closed form for a single source: R = p a0 a0^H + nu I
  const double p = 4.0, nu = 0.5;
  const CVec a0 = steering_vector(geom, 98.0);
  CMat r = p * (a0 * a0.adjoint()) + nu * CMat::Identity(4, 4);
  CaponFitSpectrum cf(geom, r);
  for (double theta : {15.0, 50.0, 98.0, 120.0}) {
    const CVec a = steering_vector(geom, theta);
    const double cross = std::norm(a0.dot(a));
    const double want = nu / (4.0 - p * cross / (nu + 4.0 * p));
    CHECK(cf.fit(theta).power == doctest::Approx(want).epsilon(1e-10));
  }
  // far from the source the power approaches the noise floor nu / M
  CHECK(cf.fit(15.0).power == doctest::Approx(nu / 4.0).epsilon(0.05));

  // fit value is consistent with the definition
  const CaponFit fit = cf.fit(98.0);
  const CVec a = steering_vector(geom, 98.0);
  CMat resid = r - fit.power * (a * a.adjoint());
  CHECK(fit.value == doctest::Approx(resid.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("capon power matches the constrained scalar grid oracle") {
  auto geom = ArrayGeometry::ula(4);
  Rng rng(17);
  CMat r = random_wishart(rng, 4, 12) / 12.0;
  CaponFitSpectrum cf(geom, r);
  const double theta = 83.0;
  const CaponFit fit = cf.fit(theta);
  const CVec a = steering_vector(geom, theta);

  // brute force over the sigma^2 grid, PSD feasibility enforced
  const double step = 1e-4 * fit.power;
  double best_val = std::numeric_limits<double>::infinity();
  double best_sigma = 0.0;
  for (double s = 0.0; s <= 2.0 * fit.power; s += step) {
    CMat resid = r - s * (a * a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(resid, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * r.norm()) continue;
    const double v = resid.squaredNorm();
    if (v < best_val) {
      best_val = v;
      best_sigma = s;
    }
  }
  CHECK(fit.power == doctest::Approx(best_sigma).epsilon(2e-4));
  CHECK(fit.value == doctest::Approx(best_val).epsilon(1e-6));
}

TEST_CASE("capon applies diagonal loading to singular covariances") {
  auto geom = ArrayGeometry::ula(4);
  const CVec a0 = steering_vector(geom, 90.5);
  CaponFitSpectrum cf(geom, CMat(a0 * a0.adjoint()));  // rank 1
  CHECK(cf.loaded());
  CHECK(std::isfinite(cf.fit(42.0).power));
}

TEST_CASE("pr-dml reduces to the beamformer for one source") {
  Rng rng(5);
  for (int m : {3, 7, 12}) {
    auto geom = ArrayGeometry::ula(m);
    CMat y = random_wishart(rng, m, 2 * m);
    BeamformerSpectrum bf(geom, y);
    PrDmlSpectrum pr(geom, y, 1);
    double max_dev = 0.0;
    for (double theta : fov_grid(0.5))
      max_dev = std::max(max_dev, std::abs(bf(theta) - pr(theta)));
    CHECK(max_dev < 1e-9 * y.norm());
  }
}

TEST_CASE("pr-dml nulls at the true DoAs for noiseless two-source data") {
  auto geom = ArrayGeometry::ula(6);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {77.0, 122.0};
  sc.noise_var = 0.0;
  sc.snapshots = 32;
  sc.seed = 21;
  auto x = simulate(sc);
  CMat y = x.entries * x.entries.adjoint();
  PrDmlSpectrum pr(geom, y, 2);
  CHECK(pr(77.0) < 1e-8 * std::real(y.trace()));
  CHECK(pr(122.0) < 1e-8 * std::real(y.trace()));

  // N = M-1 stays nonnegative
  PrDmlSpectrum pr5(geom, y, 5);
  for (double theta : {33.0, 90.0, 140.0}) CHECK(pr5(theta) >= -1e-12);
}

TEST_CASE("pr-wsf properties") {
  auto geom = ArrayGeometry::ula(6);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {81.0, 118.0};
  sc.snr_db = 10.0;
  sc.snapshots = 500;
  sc.seed = 31;
  auto x = simulate(sc);
  auto dec = eigendecompose(sample_covariance(x.entries), 2);

  // N=1 with W=I equals the music variant with W=I (single-term sum)
  auto dec1 = eigendecompose(sample_covariance(x.entries), 1);
  PrWsfSpectrum pw1(geom, dec1, RVec::Ones(1), 1);
  MusicSpectrum mv1(geom, dec1, RVec::Ones(1));
  for (double theta : {25.0, 90.0, 118.0})
    CHECK(pw1(theta) == doctest::Approx(mv1(theta)).epsilon(1e-9));

  // W = 0 is identically zero
  PrWsfSpectrum pw0(geom, dec, RVec::Zero(2), 2);
  for (double theta : {25.0, 90.0, 118.0})
    CHECK(std::abs(pw0(theta)) < 1e-12);

  // noiseless: exact zeros at the truth
  Scenario sc0 = sc;
  sc0.noise_var = 0.0;
  auto x0 = simulate(sc0);
  auto dec0 = eigendecompose(sample_covariance(x0.entries), 2);
  PrWsfSpectrum pw(geom, dec0, wsf_weights(dec0), 2);
  CHECK(pw(81.0) < 1e-8);
  CHECK(pw(118.0) < 1e-8);
}

TEST_CASE("pr-ccf definition and noiseless limit") {
  auto geom = ArrayGeometry::ula(2);
  Rng rng(13);
  CMat r = random_wishart(rng, 2, 8) / 8.0;

  // M=2, N=1: the capon residual is singular, so the eigenvalue-square sum
  // equals the full squared Frobenius norm of the residual
  PrCcfSpectrum pc(geom, r, 1);
  CaponFitSpectrum cf(geom, r);
  const double theta = 66.0;
  CHECK(pc(theta) == doctest::Approx(cf.fit(theta).value).epsilon(1e-9));

  const CVec a = steering_vector(geom, theta);
  CMat resid = r - cf.fit(theta).power * (a * a.adjoint());
  for (int i = 0; i < 2; ++i) CHECK(std::abs(std::imag(resid(i, i))) < 1e-12);
  Eigen::SelfAdjointEigenSolver<CMat> es(resid, Eigen::EigenvaluesOnly);
  CHECK(std::abs(es.eigenvalues()(0)) < 1e-10);  // capon sits on the PSD edge

  // near-noiseless two-source covariance: value ~ 0 at a true DoA
  auto g4 = ArrayGeometry::ula(4);
  std::vector<double> thetas{74.0, 109.0};
  CMat a2 = steering_matrix(g4, thetas).entries;
  CMat r2 = a2 * a2.adjoint() + 1e-8 * CMat::Identity(4, 4);
  PrCcfSpectrum pc2(g4, r2, 2);
  CHECK(pc2(74.0) < 1e-6);
  CHECK(pc2(109.0) < 1e-6);
}

TEST_CASE("scale equivariance of the spectra") {
  auto geom = ArrayGeometry::ula(5);
  Rng rng(23);
  CMat y = random_wishart(rng, 5, 20);
  const double c = 3.7;
  auto grid = fov_grid(2.0);

  auto dec = eigendecompose(y / 20.0, 2);
  auto dec_scaled = eigendecompose(c * y / 20.0, 2);

  BeamformerSpectrum bf(geom, y), bfc(geom, c * y);
  PrDmlSpectrum pd(geom, y, 2), pdc(geom, c * y, 2);
  PrCcfSpectrum cc(geom, y / 20.0, 2), ccc(geom, c * y / 20.0, 2);
  for (double theta : grid) {
    CHECK(bfc(theta) == doctest::Approx(c * bf(theta)));
    CHECK(pdc(theta) == doctest::Approx(c * pd(theta)));
    CHECK(ccc(theta) == doctest::Approx(c * c * cc(theta)).epsilon(1e-7));
  }

  // argmin sets match for the subspace-weighted spectra as well
  auto sm = sample_spectrum(MusicSpectrum(geom, dec, wsf_weights(dec)), grid);
  auto smc =
      sample_spectrum(MusicSpectrum(geom, dec_scaled, wsf_weights(dec_scaled)),
                      grid);
  CHECK(local_min_indices(sm) == local_min_indices(smc));

  auto pw = sample_spectrum(PrWsfSpectrum(geom, dec, wsf_weights(dec), 2), grid);
  auto pwc = sample_spectrum(
      PrWsfSpectrum(geom, dec_scaled, wsf_weights(dec_scaled), 2), grid);
  CHECK(local_min_indices(pw) == local_min_indices(pwc));
}

TEST_CASE("find_n_deepest_minima") {
  // two cosine dips at 45 and 135
  NullSpectrum s;
  for (double t = 1.0; t < 180.0; t += 1.0) {
    s.grid.push_back(t);
    s.values.push_back(std::cos(deg2rad(4.0 * t)));
  }
  auto est = find_n_deepest_minima(s, 2);
  REQUIRE(est.thetas_hat.size() == 2);
  CHECK(est.thetas_hat[0] == doctest::Approx(45.0).epsilon(1e-9));
  CHECK(est.thetas_hat[1] == doctest::Approx(135.0).epsilon(1e-9));
  CHECK(est.diagnostics.warnings.empty());

  // monotone spectrum falls back to the global grid minimum with a warning
  NullSpectrum mono;
  for (double t = 1.0; t < 180.0; t += 1.0) {
    mono.grid.push_back(t);
    mono.values.push_back(t);
  }
  auto fb = find_n_deepest_minima(mono, 1);
  REQUIRE(fb.thetas_hat.size() == 1);
  CHECK(fb.thetas_hat[0] == doctest::Approx(1.0));
  CHECK(!fb.diagnostics.warnings.empty());
}

TEST_CASE("music + minima search recovers noiseless two-source DoAs") {
  auto geom = ArrayGeometry::ula(8);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {88.3, 121.7};
  sc.noise_var = 0.0;
  sc.snapshots = 64;
  sc.seed = 8;
  auto x = simulate(sc);
  auto dec = eigendecompose(sample_covariance(x.entries), 2);
  auto spec = sample_spectrum(MusicSpectrum(geom, dec, RVec::Ones(2)),
                              fov_grid(0.1), "music");
  auto est = find_n_deepest_minima(spec, 2);
  REQUIRE(est.thetas_hat.size() == 2);
  CHECK(std::abs(est.thetas_hat[0] - 88.3) < 0.05);
  CHECK(std::abs(est.thetas_hat[1] - 121.7) < 0.05);

  // noise-subspace null at both true DoAs
  for (double truth : sc.thetas)
    CHECK(music_standard(geom, dec, truth) < 1e-10);
}

TEST_CASE("exact grid oracle under the subspace fitting criterion") {
  auto geom = ArrayGeometry::ula(6);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {82.5, 117.5};
  sc.snr_db = 8.0;
  sc.snapshots = 300;
  sc.seed = 23;
  auto x = simulate(sc);
  auto dec = eigendecompose(sample_covariance(x.entries), 2);
  RVec w = wsf_weights(dec);
  auto grid = fov_grid(0.5);

  auto est = exact_multisource_grid(MultiSourceCriterion::wsf, geom, CMat(), 2,
                                    grid, &w, &dec);
  REQUIRE(est.thetas_hat.size() == 2);
  CHECK(std::abs(est.thetas_hat[0] - 82.5) < 0.5);
  CHECK(std::abs(est.thetas_hat[1] - 117.5) < 0.5);

  // N = 1 wsf oracle coincides with the weighted-music global grid minimum
  auto est1 = exact_multisource_grid(MultiSourceCriterion::wsf, geom, CMat(),
                                     1, grid, &w, &dec);
  auto ms = sample_spectrum(MusicSpectrum(geom, dec, w), grid);
  const int best = int(std::min_element(ms.values.begin(), ms.values.end()) -
                       ms.values.begin());
  CHECK(est1.thetas_hat[0] == doctest::Approx(grid[std::size_t(best)]));
}

TEST_CASE("dml cost surface") {
  auto geom = ArrayGeometry::ula(10);
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {105.0, 120.0};
  sc.snr_db = 0.0;
  sc.snapshots = 100;
  sc.seed = 42;
  auto x = simulate(sc);
  CMat y = x.entries * x.entries.adjoint();

  auto grid = fov_grid(1.0);
  auto surf = dml_cost_surface(geom, y, grid);

  // exact symmetry and an excluded diagonal
  for (int i = 0; i < 20; ++i)
    for (int j = i + 1; j < 20; ++j)
      CHECK(surf.values(i, j) == surf.values(j, i));
  for (const auto& lm : surf.minima) CHECK(lm.theta1 < lm.theta2);
  CHECK(std::isnan(surf.values(5, 5)));

  // the global minimum lands near the truth for this seed
  CHECK(std::abs(surf.best_theta1 - 105.0) <= 1.0);
  CHECK(std::abs(surf.best_theta2 - 120.0) <= 1.0);
  CHECK(surf.count_local_minima(false) >= surf.count_local_minima(true));

  CHECK_THROWS_AS(dml_cost_surface(geom, y, {90.0, 91.0}),
                  std::invalid_argument);
}

TEST_CASE("exact multisource grid oracle") {
  auto geom = ArrayGeometry::ula(6);

  // N = 1 coincides with the beamformer global minimum
  Rng rng(3);
  CMat y = random_wishart(rng, 6, 24);
  auto grid = fov_grid(0.5);
  auto est1 = exact_multisource_grid(MultiSourceCriterion::dml, geom, y, 1, grid);
  BeamformerSpectrum bf(geom, y);
  auto bf_spec = sample_spectrum(bf, grid);
  int best = int(std::min_element(bf_spec.values.begin(), bf_spec.values.end()) -
                 bf_spec.values.begin());
  CHECK(est1.thetas_hat[0] == doctest::Approx(grid[std::size_t(best)]));

  // noiseless two-source recovery at grid resolution
  Scenario sc;
  sc.geometry = geom;
  sc.thetas = {84.5, 119.0};
  sc.noise_var = 0.0;
  sc.snapshots = 32;
  sc.seed = 12;
  auto x = simulate(sc);
  CMat y2 = x.entries * x.entries.adjoint();
  auto est2 =
      exact_multisource_grid(MultiSourceCriterion::dml, geom, y2, 2, grid);
  CHECK(est2.thetas_hat[0] == doctest::Approx(84.5));
  CHECK(est2.thetas_hat[1] == doctest::Approx(119.0));

  // relaxation bound: the PR spectrum minimum lower-bounds the DML oracle,
  // and the DML cost at the PR estimates upper-bounds it
  Scenario noisy = sc;
  noisy.noise_var = 1.0;
  noisy.snr_db = 5.0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    auto xt = simulate(trial_scenario(noisy, trial));
    CMat yt = xt.entries * xt.entries.adjoint();
    auto oracle =
        exact_multisource_grid(MultiSourceCriterion::dml, geom, yt, 2, grid);
    auto pr_spec = sample_spectrum(PrDmlSpectrum(geom, yt, 2), grid, "pr-dml");
    auto pr_est = find_n_deepest_minima(pr_spec, 2);
    const double pr_min =
        *std::min_element(pr_spec.values.begin(), pr_spec.values.end());
    CHECK(pr_min <= oracle.diagnostics.objective[0] + 1e-9 * yt.norm());
    // DML cost at the PR estimates, snapped to the oracle grid, cannot beat
    // the exhaustive grid minimum
    std::vector<double> snapped;
    for (double theta : pr_est.thetas_hat)
      snapped.push_back(grid[std::size_t(
          std::min_element(grid.begin(), grid.end(),
                           [&](double a, double b) {
                             return std::abs(a - theta) < std::abs(b - theta);
                           }) -
          grid.begin())]);
    CMat a_pr = steering_columns(geom, snapped);
    CHECK(oracle.diagnostics.objective[0] <=
          detail::projected_trace(a_pr, yt) + 1e-9 * yt.norm());
  }
}
