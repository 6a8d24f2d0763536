#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cbmbr/core_types.hpp"
#include "cbmbr/rng.hpp"

namespace cbmbr {

/// Isotropic Gaussian blob. An empty `center` is drawn from N(0, center_scale^2)
/// per coordinate by the scenario generator.
struct BlobSpec {
  std::vector<double> center;
  double center_scale = 1.0;
  double radius = 1.0;
  std::size_t count = 1;
};

enum class SourceMode { Origin, BlobMean };

inline std::string_view to_string(SourceMode m) { return m == SourceMode::Origin ? "origin" : "blob_mean"; }

inline SourceMode parse_source_mode(std::string_view s) {
  if (s == "origin") return SourceMode::Origin;
  if (s == "blob_mean") return SourceMode::BlobMean;
  throw Error(Errc::InvalidArgument, "unknown source mode '" + std::string(s) + "'");
}

struct ScenarioSpec {
  std::size_t dims = 2;
  std::vector<BlobSpec> blobs;
  SourceMode source_mode = SourceMode::Origin;
  std::uint64_t seed = 0;
};

/// Generated instance plus the blob each candidate came from. Decoders only
/// ever see `instance`.
struct SyntheticInstance {
  CandidateInstance instance;
  std::vector<std::size_t> membership;
  CentroidMatrix centers;  // resolved blob centers, one row per blob
};

inline void validate_scenario(const ScenarioSpec& spec) {
  if (spec.dims == 0) throw Error(Errc::InvalidArgument, "scenario dims must be >= 1");
  if (spec.blobs.empty()) throw Error(Errc::EmptySet, "scenario has no blobs");
  for (const auto& b : spec.blobs) {
    if (b.count == 0) throw Error(Errc::InvalidArgument, "blob count must be >= 1");
    if (!(b.radius > 0.0)) throw Error(Errc::InvalidArgument, "blob radius must be > 0");
    if (!b.center.empty() && b.center.size() != spec.dims)
      throw Error(Errc::DimensionMismatch, "blob center length differs from scenario dims");
    if (b.center.empty() && !(b.center_scale >= 0.0))
      throw Error(Errc::InvalidArgument, "blob center_scale must be >= 0");
  }
}

/**
 * Draws every blob in order from a single stream seeded by spec.seed: first
 * any unspecified centers (blob order), then the points (blob order, row-major).
 */
inline SyntheticInstance gen_multisystem(const ScenarioSpec& spec) {
  validate_scenario(spec);
  Rng rng(spec.seed);
  const std::size_t dims = spec.dims;

  CentroidMatrix centers(spec.blobs.size(), dims);
  for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
    const auto& blob = spec.blobs[b];
    auto c = centers.row(b);
    for (std::size_t d = 0; d < dims; ++d) c[d] = blob.center.empty() ? blob.center_scale * rng.normal() : blob.center[d];
  }

  std::size_t total = 0;
  for (const auto& b : spec.blobs) total += b.count;
  std::vector<float> data;
  data.reserve(total * dims);
  std::vector<std::size_t> membership;
  membership.reserve(total);
  for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
    auto c = centers.row(b);
    for (std::size_t i = 0; i < spec.blobs[b].count; ++i) {
      for (std::size_t d = 0; d < dims; ++d)
        data.push_back(static_cast<float>(c[d] + spec.blobs[b].radius * rng.normal()));
      membership.push_back(b);
    }
  }

  std::vector<float> source(dims, 0.0f);
  if (spec.source_mode == SourceMode::BlobMean) {
    const auto mean = column_mean(centers);
    for (std::size_t d = 0; d < dims; ++d) source[d] = static_cast<float>(mean[d]);
  }
  return SyntheticInstance{CandidateInstance::self_referential(std::move(source), EmbeddingMatrix(total, dims, std::move(data))),
                           std::move(membership), std::move(centers)};
}

/**
 * Diverse unimodal candidate set: one unit-radius blob whose center is drawn
 * from N(0, 1) per coordinate; the source is the blob center.
 */
inline CandidateInstance gen_diverse(std::size_t n, std::size_t dims, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::InvalidArgument, "gen_diverse needs n >= 1");
  ScenarioSpec spec;
  spec.dims = dims;
  spec.seed = seed;
  spec.source_mode = SourceMode::BlobMean;
  spec.blobs.push_back(BlobSpec{{}, 1.0, 1.0, n});
  return gen_multisystem(spec).instance;
}

}  // namespace cbmbr
