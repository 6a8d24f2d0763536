#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cbmbr/clustering.hpp"
#include "cbmbr/core_types.hpp"
#include "cbmbr/timing.hpp"
#include "cbmbr/utility.hpp"

namespace cbmbr {

struct DecoderConfig {
  Variant variant = Variant::Vanilla;
  KMeansConfig kmeans;  // unused by Vanilla and MeanAggregate
  UtilityFn utility = UtilityFn::dot_linear();
  unsigned threads = 1;
};

namespace detail {

inline std::vector<double> row_means(const Matrix<double>& m) {
  std::vector<double> out(m.rows());
  const double cols = static_cast<double>(m.dims());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    out[i] = s / cols;
  }
  return out;
}

inline std::vector<double> row_weighted_sums(const Matrix<double>& m, std::span<const double> weights) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * weights[j];
    out[i] = s;
  }
  return out;
}

inline DecodeResult finish(Variant variant, std::vector<double> utilities) {
  DecodeResult r;
  r.variant = variant;
  r.selected_index = argmax_with_ties(utilities);
  r.expected_utilities = std::move(utilities);
  return r;
}

}  // namespace detail

/// Quadratic-time MBR: mean score of each hypothesis against every pseudo-reference.
inline DecodeResult vanilla_mbr(const CandidateInstance& inst, const UtilityFn& u, unsigned threads = 1) {
  validate_instance(inst);
  Stopwatch sw;
  const auto scores = score_matrix(u, inst.source(), inst.hypotheses(), inst.pseudo_refs(), threads);
  auto result = detail::finish(Variant::Vanilla, detail::row_means(scores.values));
  result.phase_timings["utility"] = sw.elapsed_ns();
  return result;
}

/// Centroid-based MBR: pseudo-references replaced by k-means centroids, uniform over centroids.
inline DecodeResult cbmbr(const CandidateInstance& inst, const DecoderConfig& cfg, Rng& rng) {
  validate_instance(inst);
  Stopwatch sw;
  const auto clusters = run_kmeans(inst.pseudo_refs(), cfg.kmeans, rng);
  const auto kmeans_ns = sw.elapsed_ns();

  sw.reset();
  const auto scores = score_matrix(cfg.utility, inst.source(), inst.hypotheses(), clusters.centroids, cfg.threads);
  auto result = detail::finish(Variant::CBMBR, detail::row_means(scores.values));
  result.phase_timings["utility"] = sw.elapsed_ns();
  result.phase_timings["kmeans"] = kmeans_ns;
  return result;
}

/**
 * Count-weighted centroid MBR: each centroid's score is weighted by the share
 * of pseudo-references in its cluster, w_j = n_j / N_r.
 *
 * n_j are the sizes of the groups whose means form the centroids, so for a
 * scorer affine in the reference the result equals vanilla MBR exactly.
 */
inline DecodeResult cbmbr_cnt(const CandidateInstance& inst, const DecoderConfig& cfg, Rng& rng) {
  validate_instance(inst);
  Stopwatch sw;
  const auto clusters = run_kmeans(inst.pseudo_refs(), cfg.kmeans, rng);
  const auto kmeans_ns = sw.elapsed_ns();

  sw.reset();
  const double total = static_cast<double>(inst.pseudo_refs().rows());
  std::vector<double> weights(clusters.k);
  for (std::size_t j = 0; j < clusters.k; ++j) weights[j] = static_cast<double>(clusters.update_counts[j]) / total;
  const auto scores = score_matrix(cfg.utility, inst.source(), inst.hypotheses(), clusters.centroids, cfg.threads);
  auto result = detail::finish(Variant::CBMBRCnt, detail::row_weighted_sums(scores.values, weights));
  result.phase_timings["utility"] = sw.elapsed_ns();
  result.phase_timings["kmeans"] = kmeans_ns;
  return result;
}

inline DecodeResult cbmbr(const CandidateInstance& inst, const DecoderConfig& cfg) {
  Rng rng(cfg.kmeans.seed);
  return cbmbr(inst, cfg, rng);
}

inline DecodeResult cbmbr_cnt(const CandidateInstance& inst, const DecoderConfig& cfg) {
  Rng rng(cfg.kmeans.seed);
  return cbmbr_cnt(inst, cfg, rng);
}

/// Linear-time path: score against the single mean pseudo-reference.
inline DecodeResult mean_aggregate(const CandidateInstance& inst, const UtilityFn& u, unsigned threads = 1) {
  validate_instance(inst);
  Stopwatch sw;
  const auto& refs = inst.pseudo_refs();
  const CentroidMatrix mean(1, refs.dims(), column_mean(refs));
  const auto aggregate_ns = sw.elapsed_ns();

  sw.reset();
  const auto scores = score_matrix(u, inst.source(), inst.hypotheses(), mean, threads);
  auto result = detail::finish(Variant::MeanAggregate, detail::row_means(scores.values));
  result.phase_timings["utility"] = sw.elapsed_ns();
  result.phase_timings["aggregate"] = aggregate_ns;
  return result;
}

/// Upper-bound selector scoring every hypothesis against a gold reference.
template <typename T>
DecodeResult oracle_select(const CandidateInstance& inst, const UtilityFn& u, std::span<const T> gold_ref) {
  validate_instance(inst);
  if (gold_ref.size() != inst.hypotheses().dims())
    throw Error(Errc::DimensionMismatch, "gold reference has wrong length");
  Stopwatch sw;
  const Matrix<double> gold(1, gold_ref.size(), std::vector<double>(gold_ref.begin(), gold_ref.end()));
  const auto scores = score_matrix(u, inst.source(), inst.hypotheses(), gold);
  auto result = detail::finish(Variant::Oracle, detail::row_means(scores.values));
  result.phase_timings["utility"] = sw.elapsed_ns();
  return result;
}

/// Dispatches on cfg.variant; clustering variants seed from cfg.kmeans.seed.
inline DecodeResult decode(const CandidateInstance& inst, const DecoderConfig& cfg) {
  switch (cfg.variant) {
    case Variant::Vanilla: return vanilla_mbr(inst, cfg.utility, cfg.threads);
    case Variant::CBMBR: return cbmbr(inst, cfg);
    case Variant::CBMBRCnt: return cbmbr_cnt(inst, cfg);
    case Variant::MeanAggregate: return mean_aggregate(inst, cfg.utility, cfg.threads);
    case Variant::Oracle: break;
  }
  throw Error(Errc::InvalidArgument, "oracle selection needs a gold reference");
}

}  // namespace cbmbr
