#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "cbmbr/core_types.hpp"
#include "cbmbr/parallel.hpp"
#include "cbmbr/rng.hpp"

namespace cbmbr {

enum class KMeansInit { KMeansPlusPlus, RandomFromSamples };

inline std::string_view to_string(KMeansInit init) {
  return init == KMeansInit::KMeansPlusPlus ? "kpp" : "random";
}

inline KMeansInit parse_kmeans_init(std::string_view s) {
  if (s == "kpp" || s == "kmeans++") return KMeansInit::KMeansPlusPlus;
  if (s == "random") return KMeansInit::RandomFromSamples;
  throw Error(Errc::InvalidArgument, "unknown init '" + std::string(s) + "'");
}

inline constexpr unsigned kMaxLloydIterations = 32;

struct KMeansConfig {
  std::size_t k = 1;
  unsigned niter = 1;
  KMeansInit init = KMeansInit::KMeansPlusPlus;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct Clustering {
  CentroidMatrix centroids;
  /// Nearest-centroid index of every point w.r.t. `centroids`.
  std::vector<std::size_t> assignments;
  /// counts[j] == number of points with assignments[i] == j.
  std::vector<std::size_t> counts;
  /// Sizes of the groups averaged into each centroid by the last update
  /// step. Equal to `counts` once the assignment is stable; after at least
  /// one update, sum_j update_counts[j] * centroid_j == sum of all points.
  /// With niter == 0 there is no update and this is `counts`.
  std::vector<std::size_t> update_counts;
  std::size_t k = 0;
};

namespace detail {

inline void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (k > n)
    throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
}

template <typename T>
std::vector<double> squared_norms(const Matrix<T>& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), m.row(i));
  return out;
}

template <typename T>
CentroidMatrix gather_rows(const Matrix<T>& points, const std::vector<std::size_t>& idx) {
  CentroidMatrix out(idx.size(), points.dims());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    auto src = points.row(idx[j]);
    auto dst = out.row(j);
    for (std::size_t d = 0; d < src.size(); ++d) dst[d] = static_cast<double>(src[d]);
  }
  return out;
}

}  // namespace detail

/**
 * k-means++ seeding. Returns the indices of the chosen rows in pick order.
 *
 * The first index is uniform over all points; every later one is drawn with
 * probability d^2(i) / sum_j d^2(j), d^2 being the squared distance to the
 * nearest centroid chosen so far. If every weight is zero (all points sit on
 * chosen centroids) the draw falls back to uniform over all points.
 */
template <typename T>
std::vector<std::size_t> kmeanspp_seed_indices(const Matrix<T>& points, std::size_t k, Rng& rng) {
  detail::check_k(k, points.rows());
  const std::size_t n = points.rows();
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  chosen.push_back(rng.uniform_index(n));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), points.row(chosen[0]));

  while (chosen.size() < k) {
    double total = 0.0;
    for (double w : d2) total += w;

    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double cumulative = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cumulative += d2[i];
        if (target < cumulative) {
          pick = i;
          break;
        }
      }
      // round-off can leave target at the very top of the range
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      pick = rng.uniform_index(n);
    }
    chosen.push_back(pick);

    auto c = points.row(pick);
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = squared_distance(points.row(i), c);
      if (dist < d2[i]) d2[i] = dist;
    }
  }
  return chosen;
}

template <typename T>
CentroidMatrix kmeanspp_init(const Matrix<T>& points, std::size_t k, Rng& rng) {
  return detail::gather_rows(points, kmeanspp_seed_indices(points, k, rng));
}

/// k distinct rows sampled uniformly without replacement (partial Fisher-Yates).
template <typename T>
CentroidMatrix random_init(const Matrix<T>& points, std::size_t k, Rng& rng) {
  detail::check_k(k, points.rows());
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t swap_with = j + rng.uniform_index(idx.size() - j);
    std::swap(idx[j], idx[swap_with]);
  }
  idx.resize(k);
  return detail::gather_rows(points, idx);
}

/**
 * Nearest centroid per point under squared Euclidean distance, lowest index
 * on ties. Distances use ||p||^2 + ||c||^2 - 2 p.c with cached norms, clamped
 * at zero.
 */
template <typename T>
std::vector<std::size_t> assign_step(const Matrix<T>& points, const CentroidMatrix& centroids,
                                     unsigned threads = 1) {
  if (centroids.rows() == 0) throw Error(Errc::EmptySet, "no centroids");
  if (points.dims() != centroids.dims())
    throw Error(Errc::DimensionMismatch, "points and centroids differ in dims");

  const auto point_norms = detail::squared_norms(points);
  const auto centroid_norms = detail::squared_norms(centroids);
  std::vector<std::size_t> out(points.rows(), 0);

  parallel_for(points.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto p = points.row(i);
      std::size_t best = 0;
      double best_d = 0.0;
      for (std::size_t j = 0; j < centroids.rows(); ++j) {
        double d = point_norms[i] + centroid_norms[j] - 2.0 * dot(p, centroids.row(j));
        if (d < 0.0) d = 0.0;
        if (j == 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      out[i] = best;
    }
  });
  return out;
}

inline std::vector<std::size_t> cluster_counts(const std::vector<std::size_t>& assignments, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assignments) {
    if (a >= k) throw Error(Errc::InvalidArgument, "assignment out of range");
    ++counts[a];
  }
  return counts;
}

/// Per-cluster means; an empty cluster keeps its previous centroid.
template <typename T>
CentroidMatrix update_step(const Matrix<T>& points, const std::vector<std::size_t>& assignments, std::size_t k,
                           const CentroidMatrix& prev_centroids) {
  if (assignments.size() != points.rows())
    throw Error(Errc::DimensionMismatch, "one assignment per point required");
  if (prev_centroids.rows() != k || prev_centroids.dims() != points.dims())
    throw Error(Errc::DimensionMismatch, "previous centroids must be k x dims");

  const auto counts = cluster_counts(assignments, k);
  CentroidMatrix sums(k, points.dims());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto p = points.row(i);
    auto s = sums.row(assignments[i]);
    for (std::size_t d = 0; d < p.size(); ++d) s[d] += static_cast<double>(p[d]);
  }
  for (std::size_t j = 0; j < k; ++j) {
    auto s = sums.row(j);
    if (counts[j] == 0) {
      auto prev = prev_centroids.row(j);
      std::copy(prev.begin(), prev.end(), s.begin());
      continue;
    }
    const double n = static_cast<double>(counts[j]);
    for (double& v : s) v /= n;
  }
  return sums;
}

/// Within-cluster sum of squared distances.
template <typename T>
double inertia(const Matrix<T>& points, const CentroidMatrix& centroids, const std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    total += squared_distance(points.row(i), centroids.row(assignments[i]));
  return total;
}

/**
 * Seeding, `niter` Lloyd rounds of (assign, update), then a final assign so
 * that the returned assignments and counts refer to the returned centroids.
 *
 * For k == 1 the single centroid is the column mean for every niter and seed,
 * computed exactly as `column_mean` does.
 */
template <typename T>
Clustering run_kmeans(const Matrix<T>& points, const KMeansConfig& cfg, Rng& rng) {
  detail::check_k(cfg.k, points.rows());
  if (cfg.niter > kMaxLloydIterations)
    throw Error(Errc::InvalidArgument, "niter must be in [0, " + std::to_string(kMaxLloydIterations) + "]");

  Clustering out;
  out.k = cfg.k;
  if (cfg.k == 1) {
    const auto mean = column_mean(points);
    out.centroids = CentroidMatrix(1, points.dims(), mean);
    out.assignments.assign(points.rows(), 0);
    out.counts = {points.rows()};
    out.update_counts = out.counts;
    return out;
  }

  CentroidMatrix centroids = cfg.init == KMeansInit::KMeansPlusPlus ? kmeanspp_init(points, cfg.k, rng)
                                                                    : random_init(points, cfg.k, rng);
  std::vector<std::size_t> update_counts;
  for (unsigned it = 0; it < cfg.niter; ++it) {
    const auto assignments = assign_step(points, centroids, cfg.threads);
    update_counts = cluster_counts(assignments, cfg.k);
    centroids = update_step(points, assignments, cfg.k, centroids);
  }
  out.assignments = assign_step(points, centroids, cfg.threads);
  out.counts = cluster_counts(out.assignments, cfg.k);
  out.update_counts = cfg.niter == 0 ? out.counts : std::move(update_counts);
  out.centroids = std::move(centroids);
  return out;
}

template <typename T>
Clustering run_kmeans(const Matrix<T>& points, const KMeansConfig& cfg) {
  Rng rng(cfg.seed);
  return run_kmeans(points, cfg, rng);
}

}  // namespace cbmbr
