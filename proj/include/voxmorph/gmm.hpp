#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/random.hpp"

namespace voxmorph {

// Symmetric 3x3 matrix, upper triangle storage.
struct Mat3Sym {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
};

namespace detail {

// Lower-triangular Cholesky factor (l00,l10,l11,l20,l21,l22), or nullopt if
// the matrix is not numerically positive definite.
inline std::optional<std::array<double, 6>> cholesky3(const Mat3Sym& m) {
  double l00sq = m.xx;
  if (l00sq <= 0) return std::nullopt;
  double l00 = std::sqrt(l00sq);
  double l10 = m.xy / l00;
  double l20 = m.xz / l00;
  double l11sq = m.yy - l10 * l10;
  if (l11sq <= 0) return std::nullopt;
  double l11 = std::sqrt(l11sq);
  double l21 = (m.yz - l20 * l10) / l11;
  double l22sq = m.zz - l20 * l20 - l21 * l21;
  if (l22sq <= 0) return std::nullopt;
  double l22 = std::sqrt(l22sq);
  return std::array<double, 6>{l00, l10, l11, l20, l21, l22};
}

inline double chol_log_det(const std::array<double, 6>& l) {
  return 2.0 * (std::log(l[0]) + std::log(l[2]) + std::log(l[5]));
}

// Squared Mahalanobis distance |L^-1 d|^2 from the Cholesky factor.
inline double chol_mahalanobis2(const std::array<double, 6>& l, const Vec3& d) {
  double y0 = d.x / l[0];
  double y1 = (d.y - l[1] * y0) / l[2];
  double y2 = (d.z - l[3] * y0 - l[4] * y1) / l[5];
  return y0 * y0 + y1 * y1 + y2 * y2;
}

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

} // namespace detail

struct GmmOptions {
  int max_iterations = 200;
  double rel_tolerance = 1e-6;   // relative log-likelihood change
  double covariance_floor = 1e-6; // added to the diagonal, in um^2
  int kmeans_iterations = 10;
};

struct GmmModel {
  int k = 0;
  std::vector<double> weights;      // nonnegative, sum to 1
  std::vector<Vec3> means;          // microns
  std::vector<Mat3Sym> covariances; // positive definite
  double log_likelihood = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  std::vector<double> loglik_trace; // per EM iteration
};

namespace detail {

inline std::vector<int> kmeans_pp(const std::vector<Vec3>& pts, int k, Rng& rng,
                                  int lloyd_iters) {
  const std::size_t n = pts.size();
  std::vector<Vec3> centers;
  centers.reserve(k);
  centers.push_back(pts[rng.uniform_index(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (pts[i] - centers.back()).norm2());
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0) {
      pick = rng.uniform_index(n); // all points coincide with a center
    } else {
      double target = rng.uniform() * total;
      double acc = 0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> assign(n, 0);
  for (int it = 0; it < lloyd_iters; ++it) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bestd = (pts[i] - centers[0]).norm2();
      for (int j = 1; j < k; ++j) {
        double d = (pts[i] - centers[j]).norm2();
        if (d < bestd) {
          bestd = d;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        moved = true;
      }
    }
    std::vector<Vec3> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]] += pts[i];
      counts[assign[i]]++;
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) centers[j] = sums[j] / static_cast<double>(counts[j]);
    }
    if (!moved) break;
  }
  return assign;
}

} // namespace detail

// Fit a k-component full-covariance Gaussian mixture to 3D points with EM,
// k-means++ initialization from the seed, and a diagonal covariance floor.
inline GmmModel fit_gmm(const std::vector<Vec3>& pts, int k, std::uint64_t seed,
                        const GmmOptions& opts = {}) {
  const std::size_t n = pts.size();
  if (n == 0) throw Error(ErrorKind::empty_input, "fit_gmm: no points");
  if (k < 1) throw Error(ErrorKind::contract, "fit_gmm: k must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorKind::contract, "fit_gmm: k exceeds point count");

  GmmModel model;
  model.k = k;
  model.weights.assign(k, 0);
  model.means.assign(k, Vec3{});
  model.covariances.assign(k, Mat3Sym{});

  Rng rng(mix_seed(seed, 0x6333ULL + static_cast<std::uint64_t>(k)));
  std::vector<int> assign = detail::kmeans_pp(pts, k, rng, opts.kmeans_iterations);

  // Moment-match each k-means cluster for the initial parameters.
  {
    std::vector<Vec3> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]] += pts[i];
      counts[assign[i]]++;
    }
    // Rescue empty clusters: move the point farthest from its own cluster
    // mean (deterministic; only clusters that keep >= 1 point donate).
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      std::size_t far = n; // sentinel
      double bestd = -1;
      for (std::size_t i = 0; i < n; ++i) {
        int a = assign[i];
        if (counts[a] < 2) continue;
        Vec3 mean_a = sums[a] / static_cast<double>(counts[a]);
        double d = (pts[i] - mean_a).norm2();
        if (d > bestd) {
          bestd = d;
          far = i;
        }
      }
      if (far == n) { // every cluster is a singleton already; cannot rescue
        model.converged = false;
        return model;
      }
      int from = assign[far];
      sums[from] -= pts[far];
      counts[from]--;
      assign[far] = j;
      sums[j] = pts[far];
      counts[j] = 1;
    }
    std::vector<Mat3Sym> covs(k);
    std::vector<Vec3> means(k);
    for (int j = 0; j < k; ++j) means[j] = sums[j] / static_cast<double>(counts[j]);
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 d = pts[i] - means[assign[i]];
      Mat3Sym& c = covs[assign[i]];
      c.xx += d.x * d.x;
      c.xy += d.x * d.y;
      c.xz += d.x * d.z;
      c.yy += d.y * d.y;
      c.yz += d.y * d.z;
      c.zz += d.z * d.z;
    }
    for (int j = 0; j < k; ++j) {
      double inv = 1.0 / counts[j];
      covs[j].xx = covs[j].xx * inv + opts.covariance_floor;
      covs[j].xy *= inv;
      covs[j].xz *= inv;
      covs[j].yy = covs[j].yy * inv + opts.covariance_floor;
      covs[j].yz *= inv;
      covs[j].zz = covs[j].zz * inv + opts.covariance_floor;
      model.weights[j] = counts[j] / static_cast<double>(n);
      model.means[j] = means[j];
      model.covariances[j] = covs[j];
    }
  }

  constexpr double log2pi = 1.8378770664093454836;
  std::vector<std::array<double, 6>> chols(k);
  std::vector<double> logdets(k);
  std::vector<double> log_resp(k);
  std::vector<std::vector<double>> resp(k, std::vector<double>(n));

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // E-step
    bool bad = false;
    for (int j = 0; j < k; ++j) {
      auto ch = detail::cholesky3(model.covariances[j]);
      if (!ch) {
        bad = true;
        break;
      }
      chols[j] = *ch;
      logdets[j] = detail::chol_log_det(*ch);
    }
    if (bad) {
      model.converged = false;
      return model;
    }
    double ll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        double lw = model.weights[j] > 0 ? std::log(model.weights[j])
                                         : -std::numeric_limits<double>::infinity();
        double m2 = detail::chol_mahalanobis2(chols[j], pts[i] - model.means[j]);
        log_resp[j] = lw - 0.5 * (3 * log2pi + logdets[j] + m2);
      }
      double lse = detail::log_sum_exp(log_resp);
      ll += lse;
      for (int j = 0; j < k; ++j) resp[j][i] = std::exp(log_resp[j] - lse);
    }
    model.log_likelihood = ll;
    model.loglik_trace.push_back(ll);
    model.iterations = iter + 1;

    if (iter > 0) {
      double rel = std::abs(ll - prev_ll) / (std::abs(prev_ll) + 1e-12);
      if (rel < opts.rel_tolerance) {
        model.converged = true;
        return model;
      }
    }
    prev_ll = ll;

    // M-step
    for (int j = 0; j < k; ++j) {
      double nj = 0;
      Vec3 mean{};
      for (std::size_t i = 0; i < n; ++i) {
        nj += resp[j][i];
        mean += pts[i] * resp[j][i];
      }
      if (nj < 1e-9) { // component starved; abandon this fit
        model.converged = false;
        return model;
      }
      mean = mean / nj;
      Mat3Sym c{};
      for (std::size_t i = 0; i < n; ++i) {
        Vec3 d = pts[i] - mean;
        double r = resp[j][i];
        c.xx += r * d.x * d.x;
        c.xy += r * d.x * d.y;
        c.xz += r * d.x * d.z;
        c.yy += r * d.y * d.y;
        c.yz += r * d.y * d.z;
        c.zz += r * d.z * d.z;
      }
      double inv = 1.0 / nj;
      c.xx = c.xx * inv + opts.covariance_floor;
      c.xy *= inv;
      c.xz *= inv;
      c.yy = c.yy * inv + opts.covariance_floor;
      c.yz *= inv;
      c.zz = c.zz * inv + opts.covariance_floor;
      model.weights[j] = nj / static_cast<double>(n);
      model.means[j] = mean;
      model.covariances[j] = c;
    }
    // Renormalize weights against accumulated rounding.
    double wsum = 0;
    for (double w : model.weights) wsum += w;
    for (double& w : model.weights) w /= wsum;
  }
  model.converged = false; // hit the iteration cap
  return model;
}

// Bayesian information criterion; free parameters: (k-1) weights, 3k means,
// 6k covariance entries.
inline double gmm_bic(const GmmModel& model, std::size_t n) {
  double p = 10.0 * model.k - 1.0;
  return -2.0 * model.log_likelihood + p * std::log(static_cast<double>(n));
}

// Hard assignment by maximum responsibility; ties break to the lowest index.
inline int gmm_assign(const GmmModel& model, const Vec3& p) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < model.k; ++j) {
    auto ch = detail::cholesky3(model.covariances[j]);
    if (!ch) continue;
    double lw = model.weights[j] > 0 ? std::log(model.weights[j])
                                     : -std::numeric_limits<double>::infinity();
    double score = lw - 0.5 * (detail::chol_log_det(*ch) +
                               detail::chol_mahalanobis2(*ch, p - model.means[j]));
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

} // namespace voxmorph
