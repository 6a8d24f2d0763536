#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cbmbr/decoders.hpp"
#include "cbmbr/synth.hpp"
#include "cbmbr/timing.hpp"

namespace cbmbr {

inline bool uses_clustering(Variant v) { return v == Variant::CBMBR || v == Variant::CBMBRCnt; }

/// Either a committed scenario or the diverse preset of n x dims.
struct InstanceSource {
  std::optional<ScenarioSpec> scenario;
  std::size_t n = 1024;
  std::size_t dims = 256;
  std::uint64_t seed = 0;

  CandidateInstance generate() const {
    if (scenario) return gen_multisystem(*scenario).instance;
    return gen_diverse(n, dims, seed);
  }
};

struct BenchOptions {
  InstanceSource source;
  std::vector<Variant> variants{Variant::Vanilla, Variant::CBMBR};
  std::vector<std::size_t> ks{64};
  unsigned repeats = 5;
  unsigned warmup = 3;
  std::uint64_t seed = 0;  // k-means seed
  unsigned threads = 1;
  unsigned niter = 1;
  KMeansInit init = KMeansInit::KMeansPlusPlus;
  UtilityFn utility = UtilityFn::mlp(0);
};

/// One (variant, k) row. Timings are medians over repeats, in nanoseconds.
struct BenchRecord {
  Variant variant = Variant::Vanilla;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t dims = 0;
  std::string utility_kind;
  std::string utility;
  unsigned threads = 1;
  unsigned repeats = 0;
  unsigned warmup = 0;
  std::int64_t generate_ns = 0;
  std::int64_t clustering_ns = 0;
  std::int64_t utility_ns = 0;
  std::int64_t e2e_ns = 0;
  std::size_t selected_index = 0;
  double selected_expected_utility = 0.0;
  bool agrees_with_vanilla = false;
  // vanilla utility time over this row's utility / (clustering + utility); NaN without a vanilla row
  double speedup_utility = std::numeric_limits<double>::quiet_NaN();
  double speedup_total = std::numeric_limits<double>::quiet_NaN();
};

struct BenchReport {
  std::vector<BenchRecord> records;
  unsigned threads = 1;
  unsigned repeats = 0;
  unsigned warmup = 0;
};

inline constexpr const char* kBenchCsvHeader =
    "variant,n,k,dims,utility_kind,utility,threads,repeats,warmup,generate_ns,clustering_ns,utility_ns,e2e_ns,"
    "selected_index,selected_expected_utility,agrees_with_vanilla,speedup_utility,speedup_total";

namespace detail {

inline std::int64_t phase_or_zero(const DecodeResult& r, const char* key) {
  auto it = r.phase_timings.find(key);
  return it == r.phase_timings.end() ? 0 : it->second;
}

struct Measurement {
  DecodeResult last;
  std::int64_t generate_ns = 0;
  std::int64_t clustering_ns = 0;
  std::int64_t utility_ns = 0;
  std::int64_t e2e_ns = 0;
};

inline Measurement measure(const BenchOptions& opt, const DecoderConfig& cfg) {
  for (unsigned w = 0; w < opt.warmup; ++w) decode(opt.source.generate(), cfg);

  std::vector<std::int64_t> gen, clus, util, e2e;
  Measurement m;
  for (unsigned r = 0; r < opt.repeats; ++r) {
    Stopwatch total;
    Stopwatch sw;
    const auto inst = opt.source.generate();
    const auto gen_ns = sw.elapsed_ns();
    m.last = decode(inst, cfg);
    e2e.push_back(total.elapsed_ns());
    gen.push_back(gen_ns);
    clus.push_back(phase_or_zero(m.last, "kmeans") + phase_or_zero(m.last, "aggregate"));
    util.push_back(phase_or_zero(m.last, "utility"));
  }
  m.generate_ns = median(gen);
  m.clustering_ns = median(clus);
  m.utility_ns = median(util);
  m.e2e_ns = median(e2e);
  return m;
}

inline std::string csv_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/**
 * Times every requested variant for every k in opt.ks.
 *
 * Warmup runs are discarded; each repeat regenerates the instance and
 * decodes it, and the reported phase times are per-phase medians. Variants
 * that do not cluster are measured once and reported on every k row.
 */
inline BenchReport run_bench(const BenchOptions& opt) {
  if (opt.repeats == 0) throw Error(Errc::InvalidArgument, "repeats must be >= 1");
  if (opt.variants.empty()) throw Error(Errc::InvalidArgument, "no variants requested");
  if (opt.ks.empty()) throw Error(Errc::InvalidArgument, "k sweep is empty");

  const auto probe = opt.source.generate();
  validate_instance(probe);
  const std::size_t n_refs = probe.pseudo_refs().rows();
  for (std::size_t k : opt.ks)
    if (k == 0 || k > n_refs)
      throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " invalid for " + std::to_string(n_refs) + " references");

  auto make_cfg = [&](Variant v, std::size_t k) {
    DecoderConfig cfg;
    cfg.variant = v;
    cfg.utility = opt.utility;
    cfg.threads = opt.threads;
    cfg.kmeans = KMeansConfig{k, opt.niter, opt.init, opt.seed, opt.threads};
    return cfg;
  };

  std::optional<detail::Measurement> vanilla;
  std::map<Variant, detail::Measurement> fixed;
  for (Variant v : opt.variants)
    if (!uses_clustering(v) && !fixed.count(v)) fixed.emplace(v, detail::measure(opt, make_cfg(v, 1)));
  if (fixed.count(Variant::Vanilla)) vanilla = fixed.at(Variant::Vanilla);
  const std::size_t vanilla_index =
      vanilla ? vanilla->last.selected_index : vanilla_mbr(probe, opt.utility, opt.threads).selected_index;

  BenchReport report;
  report.threads = opt.threads;
  report.repeats = opt.repeats;
  report.warmup = opt.warmup;
  for (Variant v : opt.variants) {
    for (std::size_t k : opt.ks) {
      const auto m = uses_clustering(v) ? detail::measure(opt, make_cfg(v, k)) : fixed.at(v);
      BenchRecord rec;
      rec.variant = v;
      rec.n = probe.hypotheses().rows();
      rec.k = k;
      rec.dims = probe.hypotheses().dims();
      rec.utility_kind = std::string(opt.utility.kind_name());
      rec.utility = opt.utility.name();
      rec.threads = opt.threads;
      rec.repeats = opt.repeats;
      rec.warmup = opt.warmup;
      rec.generate_ns = m.generate_ns;
      rec.clustering_ns = m.clustering_ns;
      rec.utility_ns = m.utility_ns;
      rec.e2e_ns = m.e2e_ns;
      rec.selected_index = m.last.selected_index;
      rec.selected_expected_utility = m.last.expected_utilities[m.last.selected_index];
      rec.agrees_with_vanilla = m.last.selected_index == vanilla_index;
      if (vanilla) {
        const double base = static_cast<double>(vanilla->utility_ns);
        rec.speedup_utility = base / static_cast<double>(std::max<std::int64_t>(m.utility_ns, 1));
        rec.speedup_total = base / static_cast<double>(std::max<std::int64_t>(m.utility_ns + m.clustering_ns, 1));
      }
      report.records.push_back(std::move(rec));
    }
  }
  return report;
}

inline nlohmann::json to_json(const BenchRecord& r) {
  auto opt_num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"variant", std::string(to_string(r.variant))},
          {"n", r.n},
          {"k", r.k},
          {"dims", r.dims},
          {"utility_kind", r.utility_kind},
          {"utility", r.utility},
          {"threads", r.threads},
          {"repeats", r.repeats},
          {"warmup", r.warmup},
          {"generate_ns", r.generate_ns},
          {"clustering_ns", r.clustering_ns},
          {"utility_ns", r.utility_ns},
          {"e2e_ns", r.e2e_ns},
          {"selected_index", r.selected_index},
          {"selected_expected_utility", r.selected_expected_utility},
          {"agrees_with_vanilla", r.agrees_with_vanilla},
          {"speedup_utility", opt_num(r.speedup_utility)},
          {"speedup_total", opt_num(r.speedup_total)}};
}

inline nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) records.push_back(to_json(r));
  return {{"clock", "steady_clock"},
          {"timing", "median over repeats, warmup runs excluded"},
          {"e2e_scope", "instance generation + clustering + utility"},
          {"threads", report.threads},
          {"repeats", report.repeats},
          {"warmup", report.warmup},
          {"records", records}};
}

inline void write_csv(std::ostream& os, const BenchReport& report) {
  os << kBenchCsvHeader << '\n';
  for (const auto& r : report.records) {
    os << to_string(r.variant) << ',' << r.n << ',' << r.k << ',' << r.dims << ',' << r.utility_kind << ','
       << r.utility << ',' << r.threads << ',' << r.repeats << ',' << r.warmup << ',' << r.generate_ns << ','
       << r.clustering_ns << ',' << r.utility_ns << ',' << r.e2e_ns << ',' << r.selected_index << ','
       << detail::csv_double(r.selected_expected_utility) << ',' << (r.agrees_with_vanilla ? "true" : "false") << ','
       << detail::csv_double(r.speedup_utility) << ',' << detail::csv_double(r.speedup_total) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Selection regret versus k

struct SweepOptions {
  ScenarioSpec scenario;
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> seeds;
  UtilityFn utility = UtilityFn::mlp(0);
  KMeansInit init = KMeansInit::KMeansPlusPlus;
  unsigned niter = 1;
  unsigned threads = 1;
};

/// Regret = E_vanilla[vanilla pick] - E_vanilla[variant pick], always >= 0.
struct SweepRow {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  Variant variant = Variant::CBMBR;
  std::size_t selected_index = 0;
  std::size_t vanilla_index = 0;
  double regret = 0.0;
  double mean_abs_gap = 0.0;  // mean over hypotheses of |E_variant - E_vanilla|
};

struct SweepSummary {
  std::size_t k = 0;
  Variant variant = Variant::CBMBR;
  std::size_t seeds = 0;
  double mean_regret = 0.0;
  double max_regret = 0.0;
  double mean_abs_gap = 0.0;
};

/**
 * For every seed s the instance is generated from the scenario with its seed
 * offset by s, and k-means is seeded with s. cbmbr and cbmbr_cnt are scored
 * against vanilla MBR on the same instance and utility.
 */
inline std::vector<SweepRow> sweep_quality(const SweepOptions& opt) {
  if (opt.ks.empty() || opt.seeds.empty()) throw Error(Errc::InvalidArgument, "sweep needs ks and seeds");
  std::vector<SweepRow> rows;
  for (std::uint64_t s : opt.seeds) {
    ScenarioSpec spec = opt.scenario;
    spec.seed = opt.scenario.seed + s;
    const auto inst = gen_multisystem(spec).instance;
    const auto vanilla = vanilla_mbr(inst, opt.utility, opt.threads);
    const auto& ev = vanilla.expected_utilities;
    for (std::size_t k : opt.ks) {
      DecoderConfig cfg;
      cfg.utility = opt.utility;
      cfg.threads = opt.threads;
      cfg.kmeans = KMeansConfig{k, opt.niter, opt.init, s, opt.threads};
      for (Variant v : {Variant::CBMBR, Variant::CBMBRCnt}) {
        const auto r = v == Variant::CBMBR ? cbmbr(inst, cfg) : cbmbr_cnt(inst, cfg);
        SweepRow row;
        row.k = k;
        row.seed = s;
        row.variant = v;
        row.selected_index = r.selected_index;
        row.vanilla_index = vanilla.selected_index;
        row.regret = ev[vanilla.selected_index] - ev[r.selected_index];
        double gap = 0.0;
        for (std::size_t i = 0; i < ev.size(); ++i) gap += std::abs(r.expected_utilities[i] - ev[i]);
        row.mean_abs_gap = gap / static_cast<double>(ev.size());
        rows.push_back(row);
      }
    }
  }
  return rows;
}

/// Aggregates in order of first appearance of each (k, variant).
inline std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SweepSummary& s) { return s.k == row.k && s.variant == row.variant; });
    if (it == out.end()) {
      out.push_back(SweepSummary{row.k, row.variant, 0, 0.0, 0.0, 0.0});
      it = std::prev(out.end());
    }
    it->seeds += 1;
    it->mean_regret += row.regret;
    it->mean_abs_gap += row.mean_abs_gap;
    it->max_regret = std::max(it->max_regret, row.regret);
  }
  for (auto& s : out) {
    s.mean_regret /= static_cast<double>(s.seeds);
    s.mean_abs_gap /= static_cast<double>(s.seeds);
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "k,seed,variant,selected_index,vanilla_index,regret,mean_abs_gap\n";
  for (const auto& r : rows)
    os << r.k << ',' << r.seed << ',' << to_string(r.variant) << ',' << r.selected_index << ',' << r.vanilla_index
       << ',' << detail::csv_double(r.regret) << ',' << detail::csv_double(r.mean_abs_gap) << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<SweepSummary>& rows) {
  os << "k,variant,seeds,mean_regret,max_regret,mean_abs_gap\n";
  for (const auto& r : rows)
    os << r.k << ',' << to_string(r.variant) << ',' << r.seeds << ',' << detail::csv_double(r.mean_regret) << ','
       << detail::csv_double(r.max_regret) << ',' << detail::csv_double(r.mean_abs_gap) << '\n';
}

// ---------------------------------------------------------------------------

/// Decode result as JSON; timing fields live under "phase_timings_ns" only.
inline nlohmann::json to_json(const DecodeResult& r, bool emit_utilities) {
  nlohmann::json j{{"variant", std::string(to_string(r.variant))},
                   {"selected_index", r.selected_index},
                   {"selected_expected_utility", r.expected_utilities.at(r.selected_index)},
                   {"n_hypotheses", r.expected_utilities.size()},
                   {"phase_timings_ns", r.phase_timings}};
  if (emit_utilities) j["expected_utilities"] = r.expected_utilities;
  return j;
}

}  // namespace cbmbr
