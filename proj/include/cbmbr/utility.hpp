#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cbmbr/core_types.hpp"
#include "cbmbr/parallel.hpp"
#include "cbmbr/rng.hpp"

namespace cbmbr {

/// Dense layer, weights row-major [out][in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/**
 * Weights of the surrogate scorer for embeddings of `dims` coordinates.
 *
 * Input is [src; hyp; ref; hyp*ref; |hyp-ref|] (5*dims values), followed by
 * one tanh layer per hidden width and a linear scalar output. Layers are
 * drawn in order, each weight row-major from U[-a, a] with
 * a = sqrt(6 / (in + out)); biases are zero.
 */
struct MlpWeights {
  std::size_t dims = 0;
  std::vector<DenseLayer> layers;

  static MlpWeights generate(std::uint64_t seed, const std::vector<std::size_t>& hidden, std::size_t dims) {
    MlpWeights w;
    w.dims = dims;
    Rng rng(seed);
    std::vector<std::size_t> widths{5 * dims};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      DenseLayer layer;
      layer.in = widths[l];
      layer.out = widths[l + 1];
      const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      layer.weights.resize(layer.in * layer.out);
      for (double& v : layer.weights) v = rng.uniform(-a, a);
      layer.bias.assign(layer.out, 0.0);
      w.layers.push_back(std::move(layer));
    }
    return w;
  }
};

namespace detail {

struct MlpCache {
  std::mutex mutex;
  std::map<std::size_t, std::shared_ptr<const MlpWeights>> by_dims;
};

/// Applies layers [1, end) to the first layer's pre-activations.
inline double mlp_tail(const std::vector<DenseLayer>& layers, std::vector<double> act) {
  for (std::size_t l = 1; l < layers.size(); ++l) {
    for (double& v : act) v = std::tanh(v);
    const auto& layer = layers[l];
    std::vector<double> next(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double s = next[o];
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * act[i];
      next[o] = s;
    }
    act = std::move(next);
  }
  return act[0];
}

}  // namespace detail

/**
 * Triplet score s(src, hyp, ref).
 *
 * - DotLinear: hyp.ref + src.ref, affine in ref.
 * - CosineSim: cos(hyp, ref).
 * - RbfKernel: exp(-gamma ||hyp - ref||^2).
 * - MlpSurrogate: small tanh network over COMET-style pair features.
 *
 * `offset` is added to every score.
 */
class UtilityFn {
 public:
  enum class Kind { DotLinear, CosineSim, RbfKernel, MlpSurrogate };

  static UtilityFn dot_linear() { return UtilityFn(Kind::DotLinear); }
  static UtilityFn cosine() { return UtilityFn(Kind::CosineSim); }

  static UtilityFn rbf(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(Errc::InvalidArgument, "rbf gamma must be > 0");
    UtilityFn u(Kind::RbfKernel);
    u.gamma_ = gamma;
    return u;
  }

  static UtilityFn mlp(std::uint64_t seed, std::vector<std::size_t> hidden = {16, 8}) {
    if (hidden.empty()) throw Error(Errc::InvalidArgument, "mlp needs at least one hidden layer");
    for (std::size_t h : hidden)
      if (h == 0) throw Error(Errc::InvalidArgument, "mlp hidden widths must be positive");
    UtilityFn u(Kind::MlpSurrogate);
    u.seed_ = seed;
    u.hidden_ = std::move(hidden);
    u.cache_ = std::make_shared<detail::MlpCache>();
    return u;
  }

  /// Same scorer shifted by a constant.
  UtilityFn with_offset(double offset) const {
    UtilityFn u = *this;
    u.offset_ = offset;
    return u;
  }

  Kind kind() const noexcept { return kind_; }
  double gamma() const noexcept { return gamma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::size_t>& hidden_dims() const noexcept { return hidden_; }
  double offset() const noexcept { return offset_; }

  /// Round-trips through parse_utility (offset excluded).
  std::string name() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::DotLinear: os << "dot"; break;
      case Kind::CosineSim: os << "cosine"; break;
      case Kind::RbfKernel: {
        char buf[32];
        const auto end = std::to_chars(buf, buf + sizeof buf, gamma_).ptr;  // shortest round-trip form
        os << "rbf:" << std::string_view(buf, static_cast<std::size_t>(end - buf));
        break;
      }
      case Kind::MlpSurrogate: {
        os << "mlp:" << seed_ << ':';
        for (std::size_t i = 0; i < hidden_.size(); ++i) os << (i ? "x" : "") << hidden_[i];
        break;
      }
    }
    return os.str();
  }

  std::string_view kind_name() const noexcept {
    switch (kind_) {
      case Kind::DotLinear: return "dot";
      case Kind::CosineSim: return "cosine";
      case Kind::RbfKernel: return "rbf";
      case Kind::MlpSurrogate: return "mlp";
    }
    return "unknown";
  }

  /// Surrogate weights for the given embedding width, generated once per width.
  std::shared_ptr<const MlpWeights> mlp_weights(std::size_t dims) const {
    if (kind_ != Kind::MlpSurrogate) throw Error(Errc::InvalidArgument, "not an mlp utility");
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->by_dims[dims];
    if (!slot) slot = std::make_shared<const MlpWeights>(MlpWeights::generate(seed_, hidden_, dims));
    return slot;
  }

 private:
  explicit UtilityFn(Kind kind) : kind_(kind) {}

  Kind kind_;
  double gamma_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> hidden_;
  double offset_ = 0.0;
  std::shared_ptr<detail::MlpCache> cache_;
};

/// Parses dot | cosine | rbf:<gamma> | mlp:<seed>[:<w1>x<w2>x...].
inline UtilityFn parse_utility(std::string_view spec) {
  const std::string s(spec);
  auto bad = [&] { return Error(Errc::InvalidArgument, "bad utility spec '" + s + "'"); };
  try {
    if (s == "dot") return UtilityFn::dot_linear();
    if (s == "cosine") return UtilityFn::cosine();
    if (s.rfind("rbf:", 0) == 0) {
      std::size_t used = 0;
      const double gamma = std::stod(s.substr(4), &used);
      if (used != s.size() - 4) throw bad();
      return UtilityFn::rbf(gamma);
    }
    if (s.rfind("mlp:", 0) == 0) {
      const std::string rest = s.substr(4);
      const auto colon = rest.find(':');
      const std::string seed_str = rest.substr(0, colon);
      if (seed_str.empty() || seed_str.find_first_not_of("0123456789") != std::string::npos) throw bad();
      const std::uint64_t seed = std::stoull(seed_str);
      if (colon == std::string::npos) return UtilityFn::mlp(seed);
      std::vector<std::size_t> hidden;
      std::stringstream widths(rest.substr(colon + 1));
      for (std::string item; std::getline(widths, item, 'x');) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) throw bad();
        hidden.push_back(std::stoul(item));
      }
      return UtilityFn::mlp(seed, std::move(hidden));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
  throw bad();
}

namespace detail {

inline void check_triplet(std::size_t s, std::size_t h, std::size_t r) {
  if (s != h || h != r)
    throw Error(Errc::DimensionMismatch, "triplet lengths " + std::to_string(s) + "/" + std::to_string(h) + "/" +
                                             std::to_string(r));
  if (h == 0) throw Error(Errc::DimensionMismatch, "empty vectors");
}

template <typename T>
void check_finite(std::span<const T> v) {
  for (T x : v)
    if (!std::isfinite(static_cast<double>(x))) throw Error(Errc::NonFiniteValue, "score input not finite");
}

inline double checked_result(double v) {
  if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "score is not finite");
  return v;
}

}  // namespace detail

/// Single triplet score; the reference path the batched form is checked against.
inline double score(const UtilityFn& u, std::span<const double> src, std::span<const double> hyp,
                    std::span<const double> ref) {
  detail::check_triplet(src.size(), hyp.size(), ref.size());
  detail::check_finite(src);
  detail::check_finite(hyp);
  detail::check_finite(ref);
  const std::size_t dims = hyp.size();
  double value = 0.0;
  switch (u.kind()) {
    case UtilityFn::Kind::DotLinear:
      value = dot(hyp, ref) + dot(src, ref);
      break;
    case UtilityFn::Kind::CosineSim: {
      const double nh = std::sqrt(dot(hyp, hyp));
      const double nr = std::sqrt(dot(ref, ref));
      if (nh == 0.0 || nr == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
      value = dot(hyp, ref) / (nh * nr);
      break;
    }
    case UtilityFn::Kind::RbfKernel:
      value = std::exp(-u.gamma() * squared_distance(hyp, ref));
      break;
    case UtilityFn::Kind::MlpSurrogate: {
      const auto weights = u.mlp_weights(dims);
      std::vector<double> x;
      x.reserve(5 * dims);
      x.insert(x.end(), src.begin(), src.end());
      x.insert(x.end(), hyp.begin(), hyp.end());
      x.insert(x.end(), ref.begin(), ref.end());
      for (std::size_t d = 0; d < dims; ++d) x.push_back(hyp[d] * ref[d]);
      for (std::size_t d = 0; d < dims; ++d) x.push_back(std::abs(hyp[d] - ref[d]));
      const auto& first = weights->layers.front();
      std::vector<double> pre(first.bias);
      for (std::size_t o = 0; o < first.out; ++o)
        for (std::size_t i = 0; i < first.in; ++i) pre[o] += first.weights[o * first.in + i] * x[i];
      value = detail::mlp_tail(weights->layers, std::move(pre));
      break;
    }
  }
  return detail::checked_result(value + u.offset());
}

struct ScoreMatrix {
  Matrix<double> values;  // hypotheses x references (or centroids)
  std::vector<std::size_t> row_labels;
  std::vector<std::size_t> col_labels;
};

namespace detail {

/// First-layer contribution of one argument block: out[u] = sum_d W[u][off+d] v[d].
template <typename T>
void accumulate_block(const DenseLayer& layer, std::size_t offset, std::span<const T> v, double* out) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* w = layer.weights.data() + o * layer.in + offset;
    double s = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) s += w[d] * static_cast<double>(v[d]);
    out[o] += s;
  }
}

template <typename S, typename H, typename R>
void mlp_score_rows(const UtilityFn& u, std::span<const S> src, const Matrix<H>& hyps, const Matrix<R>& refs,
                    Matrix<double>& out, unsigned threads) {
  const std::size_t dims = hyps.dims();
  const auto weights = u.mlp_weights(dims);
  const auto& first = weights->layers.front();
  const std::size_t width = first.out;

  // Per-row and per-column parts of the first layer are separable.
  Matrix<double> row_part(hyps.rows(), width);
  for (std::size_t i = 0; i < hyps.rows(); ++i) {
    auto dst = row_part.row(i);
    std::copy(first.bias.begin(), first.bias.end(), dst.begin());
    accumulate_block(first, 0, src, dst.data());
    accumulate_block(first, dims, hyps.row(i), dst.data());
  }
  Matrix<double> col_part(refs.rows(), width);
  for (std::size_t j = 0; j < refs.rows(); ++j) accumulate_block(first, 2 * dims, refs.row(j), col_part.row(j).data());

  // Pair features, transposed to [d][unit] for a contiguous inner loop.
  std::vector<double> w_prod(dims * width), w_abs(dims * width);
  for (std::size_t o = 0; o < width; ++o)
    for (std::size_t d = 0; d < dims; ++d) {
      w_prod[d * width + o] = first.weights[o * first.in + 3 * dims + d];
      w_abs[d * width + o] = first.weights[o * first.in + 4 * dims + d];
    }

  const std::size_t n_refs = refs.rows();
  parallel_for(hyps.rows(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> hyp(dims), pre(width);
    for (std::size_t i = begin; i < end; ++i) {
      auto h = hyps.row(i);
      for (std::size_t d = 0; d < dims; ++d) hyp[d] = static_cast<double>(h[d]);
      auto base = row_part.row(i);
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < n_refs; ++j) {
        auto r = refs.row(j);
        auto cp = col_part.row(j);
        for (std::size_t o = 0; o < width; ++o) pre[o] = base[o] + cp[o];
        for (std::size_t d = 0; d < dims; ++d) {
          const double rd = static_cast<double>(r[d]);
          const double prod = hyp[d] * rd;
          const double absdiff = std::abs(hyp[d] - rd);
          const double* wp = w_prod.data() + d * width;
          const double* wa = w_abs.data() + d * width;
          for (std::size_t o = 0; o < width; ++o) pre[o] += wp[o] * prod + wa[o] * absdiff;
        }
        out_row[j] = mlp_tail(weights->layers, pre) + u.offset();
      }
    }
  });
}

}  // namespace detail

/**
 * All pairwise scores between hypotheses and references (or centroids).
 *
 * Rows are independent and may be split across threads; within a row the
 * arithmetic order is fixed, so the result does not depend on `threads`.
 */
template <typename S, typename H, typename R>
ScoreMatrix score_matrix(const UtilityFn& u, std::span<const S> src, const Matrix<H>& hyps, const Matrix<R>& refs,
                         unsigned threads = 1) {
  if (hyps.dims() != refs.dims() || src.size() != hyps.dims())
    throw Error(Errc::DimensionMismatch, "score_matrix dims disagree");
  if (hyps.rows() == 0 || refs.rows() == 0) throw Error(Errc::EmptySet, "score_matrix needs non-empty inputs");
  detail::check_finite(src);
  detail::check_finite(hyps.data());
  detail::check_finite(refs.data());

  ScoreMatrix out{Matrix<double>(hyps.rows(), refs.rows()), {}, {}};
  out.row_labels.resize(hyps.rows());
  out.col_labels.resize(refs.rows());
  std::iota(out.row_labels.begin(), out.row_labels.end(), std::size_t{0});
  std::iota(out.col_labels.begin(), out.col_labels.end(), std::size_t{0});
  auto& values = out.values;
  const double offset = u.offset();

  switch (u.kind()) {
    case UtilityFn::Kind::DotLinear: {
      std::vector<double> src_dot(refs.rows());
      for (std::size_t j = 0; j < refs.rows(); ++j) src_dot[j] = dot(src, refs.row(j));
      parallel_for(hyps.rows(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          for (std::size_t j = 0; j < refs.rows(); ++j)
            values(i, j) = dot(hyps.row(i), refs.row(j)) + src_dot[j] + offset;
      });
      break;
    }
    case UtilityFn::Kind::CosineSim: {
      std::vector<double> ref_norm(refs.rows());
      for (std::size_t j = 0; j < refs.rows(); ++j) {
        ref_norm[j] = std::sqrt(dot(refs.row(j), refs.row(j)));
        if (ref_norm[j] == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero reference");
      }
      for (std::size_t i = 0; i < hyps.rows(); ++i)
        if (dot(hyps.row(i), hyps.row(i)) == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero hypothesis");
      parallel_for(hyps.rows(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const double nh = std::sqrt(dot(hyps.row(i), hyps.row(i)));
          for (std::size_t j = 0; j < refs.rows(); ++j)
            values(i, j) = dot(hyps.row(i), refs.row(j)) / (nh * ref_norm[j]) + offset;
        }
      });
      break;
    }
    case UtilityFn::Kind::RbfKernel: {
      const double gamma = u.gamma();
      parallel_for(hyps.rows(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          for (std::size_t j = 0; j < refs.rows(); ++j)
            values(i, j) = std::exp(-gamma * squared_distance(hyps.row(i), refs.row(j))) + offset;
      });
      break;
    }
    case UtilityFn::Kind::MlpSurrogate:
      detail::mlp_score_rows(u, src, hyps, refs, values, threads);
      break;
  }
  for (double v : values.data())
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "score matrix contains NaN/Inf");
  return out;
}

}  // namespace cbmbr
