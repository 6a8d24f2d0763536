#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbmbr {

enum class Errc {
  DimensionMismatch,
  NonFiniteValue,
  EmptySet,
  KTooLarge,
  ZeroVector,
  BadMagic,
  TruncatedFile,
  VersionUnsupported,
  IoError,
  InvalidArgument,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::EmptySet: return "EmptySet";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/**
 * Dense row-major matrix of `rows` vectors with `dims` coordinates each.
 *
 * Embeddings are kept as `Matrix<float>`; centroids and other derived
 * quantities that feed exactness checks are kept as `Matrix<double>`.
 */
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;

  Matrix(std::size_t rows, std::size_t dims) : data_(rows * dims, T{}), rows_(rows), dims_(dims) {
    if (dims == 0) throw Error(Errc::DimensionMismatch, "matrix dims must be >= 1");
  }

  Matrix(std::size_t rows, std::size_t dims, std::vector<T> data)
      : data_(std::move(data)), rows_(rows), dims_(dims) {
    if (dims == 0) throw Error(Errc::DimensionMismatch, "matrix dims must be >= 1");
    if (data_.size() != rows * dims)
      throw Error(Errc::DimensionMismatch, "data length " + std::to_string(data_.size()) +
                                               " != rows*dims " + std::to_string(rows * dims));
  }

  /// Builds a matrix from nested rows; all rows must share one length.
  static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
    if (rows.empty()) throw Error(Errc::EmptySet, "from_rows needs at least one row");
    const std::size_t dims = rows.front().size();
    std::vector<T> flat;
    flat.reserve(rows.size() * dims);
    for (const auto& r : rows) {
      if (r.size() != dims) throw Error(Errc::DimensionMismatch, "ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), dims, std::move(flat));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const T> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }
  std::span<T> row(std::size_t i) { return {data_.data() + i * dims_, dims_}; }

  T operator()(std::size_t i, std::size_t d) const { return data_[i * dims_ + d]; }
  T& operator()(std::size_t i, std::size_t d) { return data_[i * dims_ + d]; }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  Matrix<U> cast() const {
    return Matrix<U>(rows_, dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::vector<T> data_;
  std::size_t rows_ = 0;
  std::size_t dims_ = 1;
};

using EmbeddingMatrix = Matrix<float>;
using CentroidMatrix = Matrix<double>;

/**
 * One decoding problem: a source vector, hypotheses H and pseudo-references.
 *
 * Storage is shared and immutable, so instances are cheap to copy and safe to
 * read from several threads. When built with `self_referential` the
 * pseudo-reference set aliases the hypothesis set.
 */
class CandidateInstance {
 public:
  CandidateInstance(std::vector<float> source, EmbeddingMatrix hypotheses, EmbeddingMatrix pseudo_refs)
      : source_(std::make_shared<const std::vector<float>>(std::move(source))),
        hyps_(std::make_shared<const EmbeddingMatrix>(std::move(hypotheses))),
        refs_(std::make_shared<const EmbeddingMatrix>(std::move(pseudo_refs))) {}

  static CandidateInstance self_referential(std::vector<float> source, EmbeddingMatrix hypotheses) {
    CandidateInstance inst(std::move(source), std::move(hypotheses));
    return inst;
  }

  std::span<const float> source() const { return *source_; }
  const EmbeddingMatrix& hypotheses() const { return *hyps_; }
  const EmbeddingMatrix& pseudo_refs() const { return *refs_; }
  bool shares_refs_with_hyps() const noexcept { return hyps_ == refs_; }

 private:
  CandidateInstance(std::vector<float> source, EmbeddingMatrix hypotheses)
      : source_(std::make_shared<const std::vector<float>>(std::move(source))),
        hyps_(std::make_shared<const EmbeddingMatrix>(std::move(hypotheses))),
        refs_(hyps_) {}

  std::shared_ptr<const std::vector<float>> source_;
  std::shared_ptr<const EmbeddingMatrix> hyps_;
  std::shared_ptr<const EmbeddingMatrix> refs_;
};

enum class Variant { Vanilla, CBMBR, CBMBRCnt, MeanAggregate, Oracle };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::CBMBR: return "cbmbr";
    case Variant::CBMBRCnt: return "cbmbr-cnt";
    case Variant::MeanAggregate: return "mean";
    case Variant::Oracle: return "oracle";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "vanilla") return Variant::Vanilla;
  if (s == "cbmbr") return Variant::CBMBR;
  if (s == "cbmbr-cnt") return Variant::CBMBRCnt;
  if (s == "mean") return Variant::MeanAggregate;
  if (s == "oracle") return Variant::Oracle;
  throw Error(Errc::InvalidArgument, "unknown variant '" + std::string(s) + "'");
}

struct DecodeResult {
  std::size_t selected_index = 0;
  std::vector<double> expected_utilities;
  std::map<std::string, std::int64_t> phase_timings;  // nanoseconds
  Variant variant = Variant::Vanilla;
};

/// Index of the largest value; the lowest index wins ties.
inline std::size_t argmax_with_ties(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptySet, "argmax over empty vector");
  std::size_t best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(Errc::NonFiniteValue, "argmax input not finite");
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline void validate_instance(const CandidateInstance& inst) {
  const auto& h = inst.hypotheses();
  const auto& r = inst.pseudo_refs();
  if (h.rows() == 0) throw Error(Errc::EmptySet, "no hypotheses");
  if (r.rows() == 0) throw Error(Errc::EmptySet, "no pseudo-references");
  const std::size_t d = inst.source().size();
  if (h.dims() != d || r.dims() != d)
    throw Error(Errc::DimensionMismatch, "source has " + std::to_string(d) + " dims, hypotheses " +
                                             std::to_string(h.dims()) + ", references " +
                                             std::to_string(r.dims()));
  for (float v : inst.source())
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "source contains NaN/Inf");
  if (!h.all_finite()) throw Error(Errc::NonFiniteValue, "hypotheses contain NaN/Inf");
  if (!inst.shares_refs_with_hyps() && !r.all_finite())
    throw Error(Errc::NonFiniteValue, "pseudo-references contain NaN/Inf");
}

template <typename A, typename B>
inline double dot(std::span<const A> a, std::span<const B> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += static_cast<double>(a[d]) * static_cast<double>(b[d]);
  return s;
}

template <typename A, typename B>
inline double squared_distance(std::span<const A> a, std::span<const B> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    s += diff * diff;
  }
  return s;
}

/// Column mean accumulated in double, rows visited in ascending order.
template <typename T>
inline std::vector<double> column_mean(const Matrix<T>& m) {
  if (m.rows() == 0) throw Error(Errc::EmptySet, "mean of empty matrix");
  std::vector<double> sum(m.dims(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t d = 0; d < m.dims(); ++d) sum[d] += static_cast<double>(r[d]);
  }
  const double n = static_cast<double>(m.rows());
  for (double& v : sum) v /= n;
  return sum;
}

}  // namespace cbmbr
