#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "voxmorph/gmm.hpp"
#include "voxmorph/random.hpp"

using namespace voxmorph;

namespace {

// Two well-separated isotropic Gaussian clusters along x.
std::vector<Vec3> two_cluster_sample(std::size_t per_cluster, double separation,
                                     double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(2 * per_cluster);
  for (int c = 0; c < 2; ++c) {
    Vec3 center{c == 0 ? 0.0 : separation, 0.0, 0.0};
    for (std::size_t i = 0; i < per_cluster; ++i)
      pts.push_back(center + Vec3{sigma * rng.gaussian(), sigma * rng.gaussian(),
                                  sigma * rng.gaussian()});
  }
  return pts;
}

} // namespace

TEST_CASE("EM log-likelihood never decreases across iterations") {
  auto pts = two_cluster_sample(200, 8.0, 1.0, 31);
  GmmModel m = fit_gmm(pts, 2, 7);
  REQUIRE(m.converged);
  REQUIRE(!m.loglik_trace.empty());
  for (std::size_t i = 1; i < m.loglik_trace.size(); ++i)
    CHECK(m.loglik_trace[i] >= m.loglik_trace[i - 1] - 1e-9);
  CHECK(m.log_likelihood == Catch::Approx(m.loglik_trace.back()));
}

TEST_CASE("fits are reproducible from the seed") {
  auto pts = two_cluster_sample(150, 6.0, 1.0, 5);
  GmmModel a = fit_gmm(pts, 3, 42);
  GmmModel b = fit_gmm(pts, 3, 42);
  REQUIRE(a.k == b.k);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK(a.iterations == b.iterations);
  for (int j = 0; j < a.k; ++j) {
    CHECK(a.weights[j] == b.weights[j]);
    CHECK(a.means[j].x == b.means[j].x);
    CHECK(a.means[j].y == b.means[j].y);
    CHECK(a.means[j].z == b.means[j].z);
  }
}

TEST_CASE("information criterion prefers the generating component count") {
  auto pts = two_cluster_sample(300, 10.0, 1.0, 17);
  GmmModel m1 = fit_gmm(pts, 1, 3);
  GmmModel m2 = fit_gmm(pts, 2, 3);
  REQUIRE(m1.converged);
  REQUIRE(m2.converged);
  CHECK(gmm_bic(m2, pts.size()) < gmm_bic(m1, pts.size()));

  // the two fitted means recover the true centers
  double lo = std::min(m2.means[0].x, m2.means[1].x);
  double hi = std::max(m2.means[0].x, m2.means[1].x);
  CHECK(lo == Catch::Approx(0.0).margin(0.5));
  CHECK(hi == Catch::Approx(10.0).margin(0.5));
}

TEST_CASE("mixture weights form a probability vector") {
  auto pts = two_cluster_sample(120, 7.0, 1.2, 23);
  for (int k = 1; k <= 3; ++k) {
    GmmModel m = fit_gmm(pts, k, 9);
    double sum = 0;
    for (double w : m.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("single-component fit reduces to sample moments") {
  std::vector<Vec3> pts = {{0, 0, 0}, {2, 0, 0}, {1, 3, 0}, {1, 1, 4}, {0, 2, 2}};
  GmmModel m = fit_gmm(pts, 1, 1);
  REQUIRE(m.converged);
  REQUIRE(m.k == 1);
  CHECK(m.weights[0] == Catch::Approx(1.0));

  Vec3 mean{};
  for (const auto& p : pts) mean += p;
  mean = mean / static_cast<double>(pts.size());
  CHECK(m.means[0].x == Catch::Approx(mean.x).margin(1e-9));
  CHECK(m.means[0].y == Catch::Approx(mean.y).margin(1e-9));
  CHECK(m.means[0].z == Catch::Approx(mean.z).margin(1e-9));

  double sxx = 0;
  for (const auto& p : pts) sxx += (p.x - mean.x) * (p.x - mean.x);
  sxx /= static_cast<double>(pts.size()); // maximum-likelihood (1/n) estimator
  GmmOptions opts;
  CHECK(m.covariances[0].xx ==
        Catch::Approx(sxx + opts.covariance_floor).margin(1e-9));
}

TEST_CASE("covariance floor keeps degenerate clusters positive definite") {
  // all points on a line: raw covariance is rank one
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({static_cast<double>(i), 0, 0});
  GmmModel m = fit_gmm(pts, 1, 1);
  REQUIRE(m.converged);
  GmmOptions opts;
  CHECK(m.covariances[0].yy >= opts.covariance_floor - 1e-15);
  CHECK(m.covariances[0].zz >= opts.covariance_floor - 1e-15);
  CHECK(std::isfinite(m.log_likelihood));
}

TEST_CASE("hard assignment recovers well-separated clusters") {
  auto pts = two_cluster_sample(100, 12.0, 1.0, 55);
  GmmModel m = fit_gmm(pts, 2, 4);
  REQUIRE(m.converged);
  int left_component = m.means[0].x < m.means[1].x ? 0 : 1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int expect = pts[i].x < 6.0 ? left_component : 1 - left_component;
    CHECK(gmm_assign(m, pts[i]) == expect);
  }
}

TEST_CASE("fit contracts reject bad inputs") {
  std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}};
  try {
    fit_gmm({}, 1, 1);
    FAIL("expected empty_input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_input);
  }
  try {
    fit_gmm(pts, 0, 1);
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
  try {
    fit_gmm(pts, 3, 1); // more components than points
    FAIL("expected contract");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::contract);
  }
}
