// cbmbr: MBR selection over candidate embeddings.
//
//   cbmbr decode --hyps H.emb [--refs R.emb] --src S.emb --variant cbmbr --k 64
//   cbmbr bench --n 1024 --d 256 --variants vanilla,cbmbr --k-sweep 16,64 --out dir
//   cbmbr sweep-quality --scenario scenarios/multimodal_mlp.json --k 1,64 --num-seeds 32
//   cbmbr gen --n 256 --d 16 --seed 3 --out-hyps H.emb --out-src S.emb
//
// Exit codes: 0 ok, 1 data error, 2 bad flags. Errors go to stderr as JSON.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cbmbr/cbmbr.hpp"

namespace {

using cbmbr::Errc;
using cbmbr::Error;

/// Raised for flag values that parse as strings but are not valid choices.
struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item);
      } else {
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(static_cast<T>(v));
      }
    } catch (const std::exception&) {
      throw FlagError(std::string(flag) + ": bad list item '" + item + "'");
    }
  }
  if (out.empty()) throw FlagError(std::string(flag) + ": empty list");
  return out;
}

template <typename F>
auto as_flag(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw FlagError(e.what());
  }
}

std::vector<float> read_source(const std::string& path, std::size_t dims) {
  if (path.empty()) return std::vector<float>(dims, 0.0f);
  const auto m = cbmbr::read_embeddings(path);
  if (m.rows() != 1) throw Error(Errc::DimensionMismatch, "--src file must hold exactly one row");
  return {m.data().begin(), m.data().end()};
}

struct DecodeArgs {
  std::string hyps, refs, src, gold;
  std::string variant = "vanilla";
  std::size_t k = 64;
  unsigned niter = 1;
  std::string init = "kpp";
  std::string utility = "dot";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool emit_utilities = false;
};

int run_decode(const DecodeArgs& a) {
  const auto variant = as_flag([&] { return cbmbr::parse_variant(a.variant); });
  const auto init = as_flag([&] { return cbmbr::parse_kmeans_init(a.init); });
  const auto utility = as_flag([&] { return cbmbr::parse_utility(a.utility); });
  if (a.niter > cbmbr::kMaxLloydIterations) throw FlagError("--niter must be in [0, 32]");
  if (variant == cbmbr::Variant::Oracle && a.gold.empty()) throw FlagError("--variant oracle needs --gold");

  auto hyps = cbmbr::read_embeddings(a.hyps);
  auto source = read_source(a.src, hyps.dims());
  const auto inst = a.refs.empty()
                        ? cbmbr::CandidateInstance::self_referential(std::move(source), std::move(hyps))
                        : cbmbr::CandidateInstance(std::move(source), std::move(hyps), cbmbr::read_embeddings(a.refs));

  cbmbr::DecoderConfig cfg;
  cfg.variant = variant;
  cfg.utility = utility;
  cfg.threads = cbmbr::resolve_threads(a.threads ? std::optional<unsigned>(a.threads) : std::nullopt);
  cfg.kmeans = cbmbr::KMeansConfig{a.k, a.niter, init, a.seed, cfg.threads};

  cbmbr::DecodeResult result;
  if (variant == cbmbr::Variant::Oracle) {
    const auto gold = cbmbr::read_embeddings(a.gold);
    if (gold.rows() != 1) throw Error(Errc::DimensionMismatch, "--gold file must hold exactly one row");
    result = cbmbr::oracle_select(inst, utility, gold.row(0));
  } else {
    result = cbmbr::decode(inst, cfg);
  }

  auto j = cbmbr::to_json(result, a.emit_utilities);
  j["utility"] = utility.name();
  j["n_references"] = inst.pseudo_refs().rows();
  j["threads"] = cfg.threads;
  if (cbmbr::uses_clustering(variant)) {
    j["k"] = a.k;
    j["niter"] = a.niter;
    j["init"] = std::string(cbmbr::to_string(init));
    j["seed"] = a.seed;
  }
  std::cout << j.dump() << '\n';
  return 0;
}

struct BenchArgs {
  std::string scenario;
  std::size_t n = 1024, d = 256;
  std::string variants = "vanilla,cbmbr";
  std::string ks = "64";
  unsigned repeats = 5, warmup = 3;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  unsigned niter = 1;
  std::string init = "kpp";
  std::string utility = "mlp:0";
  std::string out = ".";
};

int run_bench(const BenchArgs& a) {
  cbmbr::BenchOptions opt;
  opt.variants.clear();
  for (const auto& v : parse_list<std::string>(a.variants, "--variants")) {
    const auto variant = as_flag([&] { return cbmbr::parse_variant(v); });
    if (variant == cbmbr::Variant::Oracle) throw FlagError("--variants: oracle cannot be benchmarked");
    opt.variants.push_back(variant);
  }
  opt.ks = parse_list<std::size_t>(a.ks, "--k-sweep");
  opt.repeats = a.repeats;
  opt.warmup = a.warmup;
  opt.seed = a.seed;
  opt.threads = cbmbr::resolve_threads(a.threads ? std::optional<unsigned>(a.threads) : std::nullopt);
  opt.niter = a.niter;
  opt.init = as_flag([&] { return cbmbr::parse_kmeans_init(a.init); });
  opt.utility = as_flag([&] { return cbmbr::parse_utility(a.utility); });
  if (a.repeats == 0) throw FlagError("--repeats must be >= 1");
  if (a.niter > cbmbr::kMaxLloydIterations) throw FlagError("--niter must be in [0, 32]");
  if (!a.scenario.empty()) {
    opt.source.scenario = cbmbr::load_scenario(a.scenario).spec;
  } else {
    opt.source.n = a.n;
    opt.source.dims = a.d;
    opt.source.seed = a.seed;
  }

  const auto report = cbmbr::run_bench(opt);
  std::filesystem::create_directories(a.out);
  const auto json_path = std::filesystem::path(a.out) / "report.json";
  const auto csv_path = std::filesystem::path(a.out) / "report.csv";
  {
    std::ofstream js(json_path);
    js << cbmbr::to_json(report).dump(2) << '\n';
    std::ofstream csv(csv_path);
    cbmbr::write_csv(csv, report);
    if (!js || !csv) throw Error(Errc::IoError, "cannot write report into " + a.out);
  }
  std::cout << nlohmann::json{{"report_json", json_path.string()},
                              {"report_csv", csv_path.string()},
                              {"records", report.records.size()}}
                   .dump()
            << '\n';
  return 0;
}

struct SweepArgs {
  std::string scenario;
  std::string ks = "1,4,16,64";
  std::string seeds;
  unsigned num_seeds = 32;
  std::string utility;
  std::string init = "kpp";
  unsigned niter = 1;
  unsigned threads = 0;
  std::string out;
};

int run_sweep(const SweepArgs& a) {
  cbmbr::SweepOptions opt;
  opt.ks = parse_list<std::size_t>(a.ks, "--k");
  if (!a.seeds.empty()) {
    opt.seeds = parse_list<std::uint64_t>(a.seeds, "--seeds");
  } else {
    if (a.num_seeds == 0) throw FlagError("--num-seeds must be >= 1");
    for (unsigned s = 0; s < a.num_seeds; ++s) opt.seeds.push_back(s);
  }
  opt.init = as_flag([&] { return cbmbr::parse_kmeans_init(a.init); });
  if (a.niter > cbmbr::kMaxLloydIterations) throw FlagError("--niter must be in [0, 32]");
  opt.niter = a.niter;
  opt.threads = cbmbr::resolve_threads(a.threads ? std::optional<unsigned>(a.threads) : std::nullopt);
  std::optional<cbmbr::UtilityFn> utility;
  if (!a.utility.empty()) utility = as_flag([&] { return cbmbr::parse_utility(a.utility); });

  const auto scenario = cbmbr::load_scenario(a.scenario);
  opt.scenario = scenario.spec;
  opt.utility = utility ? *utility : cbmbr::parse_utility(scenario.utility.value_or("mlp:0"));

  const auto rows = cbmbr::sweep_quality(opt);
  const auto summary = cbmbr::summarize(rows);
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream detail(std::filesystem::path(a.out) / "sweep.csv");
    cbmbr::write_sweep_csv(detail, rows);
    std::ofstream agg(std::filesystem::path(a.out) / "sweep_summary.csv");
    cbmbr::write_summary_csv(agg, summary);
    if (!detail || !agg) throw Error(Errc::IoError, "cannot write sweep into " + a.out);
  }
  cbmbr::write_summary_csv(std::cout, summary);
  return 0;
}

struct GenArgs {
  std::string scenario;
  std::size_t n = 1024, d = 256;
  std::uint64_t seed = 0;
  std::string out_hyps, out_src;
};

int run_gen(const GenArgs& a) {
  const auto inst = a.scenario.empty() ? cbmbr::gen_diverse(a.n, a.d, a.seed)
                                       : cbmbr::gen_multisystem(cbmbr::load_scenario(a.scenario).spec).instance;
  cbmbr::write_embeddings(a.out_hyps, inst.hypotheses());
  if (!a.out_src.empty()) {
    const auto src = inst.source();
    cbmbr::write_embeddings(a.out_src, cbmbr::EmbeddingMatrix(1, src.size(), {src.begin(), src.end()}));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum Bayes risk selection over candidate embeddings"};
  app.require_subcommand(1);

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Select one hypothesis and print the result as JSON");
  decode->add_option("--hyps", dec.hyps, "Hypothesis embedding file")->required();
  decode->add_option("--refs", dec.refs, "Pseudo-reference embedding file (default: the hypotheses)");
  decode->add_option("--src", dec.src, "Source embedding file with one row (default: zero vector)");
  decode->add_option("--gold", dec.gold, "Gold reference file with one row (oracle variant)");
  decode->add_option("--variant", dec.variant, "vanilla|cbmbr|cbmbr-cnt|mean|oracle");
  decode->add_option("--k", dec.k, "Number of clusters")->check(CLI::PositiveNumber);
  decode->add_option("--niter", dec.niter, "Lloyd iterations after seeding (0-32)");
  decode->add_option("--init", dec.init, "kpp|random");
  decode->add_option("--utility", dec.utility, "dot|cosine|rbf:<gamma>|mlp:<seed>[:w1xw2]");
  decode->add_option("--seed", dec.seed, "k-means seed");
  decode->add_option("--threads", dec.threads, "Worker threads (default: CBMBR_THREADS or 1)");
  decode->add_flag("--emit-utilities", dec.emit_utilities, "Include every expected utility");

  BenchArgs ben;
  auto* bench = app.add_subcommand("bench", "Time decoders and write report.json / report.csv");
  bench->add_option("--scenario", ben.scenario, "Scenario JSON file (overrides --n/--d)");
  bench->add_option("--n", ben.n, "Candidates in the diverse preset")->check(CLI::PositiveNumber);
  bench->add_option("--d", ben.d, "Embedding width in the diverse preset")->check(CLI::PositiveNumber);
  bench->add_option("--variants", ben.variants, "Comma list of variants");
  bench->add_option("--k-sweep", ben.ks, "Comma list of k values");
  bench->add_option("--repeats", ben.repeats, "Measured repeats (median reported)");
  bench->add_option("--warmup", ben.warmup, "Discarded warmup runs");
  bench->add_option("--seed", ben.seed, "Generation and k-means seed");
  bench->add_option("--threads", ben.threads, "Worker threads (default: CBMBR_THREADS or 1)");
  bench->add_option("--niter", ben.niter, "Lloyd iterations");
  bench->add_option("--init", ben.init, "kpp|random");
  bench->add_option("--utility", ben.utility, "Utility spec");
  bench->add_option("--out", ben.out, "Output directory");

  SweepArgs swp;
  auto* sweep = app.add_subcommand("sweep-quality", "Selection regret of cbmbr / cbmbr-cnt versus k");
  sweep->add_option("--scenario", swp.scenario, "Scenario JSON file")->required();
  sweep->add_option("--k", swp.ks, "Comma list of k values");
  sweep->add_option("--seeds", swp.seeds, "Comma list of seeds");
  sweep->add_option("--num-seeds", swp.num_seeds, "Use seeds 0..n-1 (ignored with --seeds)");
  sweep->add_option("--utility", swp.utility, "Utility spec (default: scenario's, else mlp:0)");
  sweep->add_option("--init", swp.init, "kpp|random");
  sweep->add_option("--niter", swp.niter, "Lloyd iterations");
  sweep->add_option("--threads", swp.threads, "Worker threads");
  sweep->add_option("--out", swp.out, "Directory for sweep.csv and sweep_summary.csv");

  GenArgs gen;
  auto* generate = app.add_subcommand("gen", "Write a synthetic candidate set as embedding files");
  generate->add_option("--scenario", gen.scenario, "Scenario JSON file (overrides --n/--d)");
  generate->add_option("--n", gen.n, "Candidates")->check(CLI::PositiveNumber);
  generate->add_option("--d", gen.d, "Embedding width")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Seed");
  generate->add_option("--out-hyps", gen.out_hyps, "Output hypothesis file")->required();
  generate->add_option("--out-src", gen.out_src, "Output source file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("BadFlags", e.what());
    return 2;
  }

  try {
    if (*decode) return run_decode(dec);
    if (*bench) return run_bench(ben);
    if (*sweep) return run_sweep(swp);
    if (*generate) return run_gen(gen);
  } catch (const FlagError& e) {
    print_error("BadFlags", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(std::string(cbmbr::to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 2;
}
