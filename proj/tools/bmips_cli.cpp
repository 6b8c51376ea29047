// bmips: benchmark, verification and data preparation front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmips/evaluation.hpp"
#include "bmips/index.hpp"
#include "bmips/io.hpp"

namespace fs = std::filesystem;
using namespace bmips;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir() {
  if (const char* env = std::getenv("BMIPS_OUTPUT_DIR"); env && *env) return env;
  return fs::current_path();
}

// Relative output paths land in the default output directory.
fs::path resolve_output(const fs::path& p) { return p.is_absolute() ? p : output_dir() / p; }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const std::optional<fs::path>& out, const std::string& text) {
  if (!out) {
    std::cout << text;
    return;
  }
  const fs::path p = resolve_output(*out);
  ensure_parent(p);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
  if (!f) throw DataError("write failed: " + p.string());
}

// ---- bench / sweep -----------------------------------------------------------

struct BenchConfig {
  std::string data;
  std::string queries;
  std::optional<std::size_t> num_queries;
  std::string algo;
  std::optional<std::uint64_t> samples;
  std::size_t budget = 100;
  std::size_t k = 10;
  std::uint64_t seed = 42;
  std::optional<std::size_t> code_bits;
  std::optional<fs::path> out;
  std::string format = "json";
  int threads = 1;
  int repeats = 5;
  bool per_query = false;
};

void add_bench_options(CLI::App* cmd, BenchConfig& c) {
  cmd->add_option("--data", c.data, "item matrix (.csv or .dmat)")->required();
  cmd->add_option("--queries", c.queries, "query matrix (.csv or .dmat)")->required();
  cmd->add_option("--num-queries", c.num_queries, "use only the first N queries");
  cmd->add_option("--algo", c.algo,
                  "bruteforce | wedge | diamond | dwedge | ddiamond | greedy | simplelsh")
      ->required();
  cmd->add_option("--samples,-S", c.samples, "sample budget S (samplers)");
  cmd->add_option("--budget,-B", c.budget, "candidate budget B")->capture_default_str();
  cmd->add_option("--k", c.k, "result size")->capture_default_str();
  cmd->add_option("--seed", c.seed, "master seed")->capture_default_str();
  cmd->add_option("--code-bits", c.code_bits, "code length h (simplelsh)");
  cmd->add_option("--threads", c.threads, "query workers")->capture_default_str();
  cmd->add_option("--repeats", c.repeats, "timing repeats, median reported")
      ->capture_default_str();
}

Algorithm validate_algo(const BenchConfig& c) {
  const auto a = parse_algorithm(c.algo);
  if (!a) throw UsageError("unknown algorithm '" + c.algo + "'");
  if (c.k == 0) throw UsageError("--k must be >= 1");
  if (*a != Algorithm::BruteForce && c.budget < c.k) throw UsageError("--budget must be >= --k");
  if (c.threads < 1) throw UsageError("--threads must be >= 1");
  if (c.repeats < 1) throw UsageError("--repeats must be >= 1");
  if (c.num_queries && *c.num_queries == 0) throw UsageError("--num-queries must be >= 1");
  return *a;
}

void validate_spec(const AlgoSpec& s, bool samples_given, bool bits_given) {
  if (uses_samples(s.algorithm)) {
    if (!samples_given) throw UsageError("--samples is required for this algorithm");
    if (s.samples == 0) throw UsageError("--samples must be >= 1");
  }
  if (s.algorithm == Algorithm::SimpleLsh) {
    if (!bits_given) throw UsageError("--code-bits is required for simplelsh");
    if (s.code_bits == 0) throw UsageError("--code-bits must be >= 1");
  }
}

struct Workload {
  DataMatrix items;
  QuerySet queries;
};

Workload load_workload(const BenchConfig& c) {
  for (const auto& p : {c.data, c.queries})
    if (!format_from_path(p)) throw UsageError("unrecognised extension on '" + p + "'");
  Workload w{load_matrix({c.data, {}, {}, {}}), {}};
  const DataMatrix Q = load_matrix({c.queries, std::nullopt, std::nullopt, w.items.cols()});
  w.queries = rows_as_queries(Q);
  if (c.num_queries && *c.num_queries < w.queries.size()) w.queries.resize(*c.num_queries);
  if (c.k > w.items.rows())
    throw UsageError("--k (" + std::to_string(c.k) + ") exceeds n (" +
                     std::to_string(w.items.rows()) + ")");
  return w;
}

int cmd_bench(const BenchConfig& c) {
  const Algorithm algo = validate_algo(c);
  const AlgoSpec spec{algo, c.samples.value_or(0), c.budget, c.code_bits.value_or(0)};
  validate_spec(spec, c.samples.has_value(), c.code_bits.has_value());
  if (c.format != "json" && c.format != "csv") throw UsageError("--format must be json or csv");

  const Workload w = load_workload(c);
  MeasureOptions opt;
  opt.repeats = c.repeats;
  opt.threads = c.threads;
  opt.keep_per_query = c.per_query;
  const RunReport r = measure_run(spec, w.items, w.queries, c.k, c.seed, opt);
  if (c.format == "json")
    write_text(c.out, report_to_json(r, c.per_query) + "\n");
  else
    write_text(c.out, report_csv_header() + "\n" + report_to_csv_row(r) + "\n");
  return 0;
}

// Sweep values are integers, or multiples of n written as "n", "2n", "n/4", "3n/2".
std::uint64_t parse_sweep_value(const std::string& tok, std::size_t n) {
  auto parse_u = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw UsageError("bad sweep value '" + tok + "'");
    return v;
  };
  const auto at = tok.find('n');
  if (at == std::string::npos) return parse_u(tok);
  const std::uint64_t mul = at == 0 ? 1 : parse_u(std::string_view(tok).substr(0, at));
  std::uint64_t div = 1;
  if (at + 1 < tok.size()) {
    if (tok[at + 1] != '/') throw UsageError("bad sweep value '" + tok + "'");
    div = parse_u(std::string_view(tok).substr(at + 2));
    if (div == 0) throw UsageError("bad sweep value '" + tok + "'");
  }
  return mul * n / div;
}

struct SweepConfig {
  BenchConfig base;
  std::vector<std::string> sweep_samples;
  std::vector<std::string> sweep_budget;
  std::vector<std::string> sweep_bits;
};

int cmd_sweep(SweepConfig& c, const CLI::App& cmd) {
  const bool has_s = cmd.count("--sweep-samples") > 0;
  const bool has_b = cmd.count("--sweep-budget") > 0;
  const bool has_h = cmd.count("--sweep-code-bits") > 0;
  if (has_s + has_b + has_h != 1)
    throw UsageError("give exactly one of --sweep-samples, --sweep-budget, --sweep-code-bits");
  const auto& raw = has_s ? c.sweep_samples : has_b ? c.sweep_budget : c.sweep_bits;
  if (raw.empty()) throw UsageError("sweep value list is empty");

  BenchConfig& b = c.base;
  const Algorithm algo = validate_algo(b);
  if (has_h && algo != Algorithm::SimpleLsh)
    throw UsageError("--sweep-code-bits applies to simplelsh only");
  if (has_s && !uses_samples(algo)) throw UsageError("--sweep-samples needs a sampler");
  // The swept axis stands in for its fixed flag during validation.
  const AlgoSpec fixed{algo, b.samples.value_or(has_s ? 1 : 0), b.budget,
                       b.code_bits.value_or(has_h ? 1 : 0)};
  validate_spec(fixed, has_s || b.samples.has_value(), has_h || b.code_bits.has_value());
  // Syntax check before loading anything; n-relative values resolve later.
  for (const auto& v : raw) parse_sweep_value(v, 1);

  const Workload w = load_workload(b);
  const std::size_t n = w.items.rows();
  std::vector<AlgoSpec> specs;
  for (const auto& v : raw) {
    AlgoSpec s = fixed;
    const std::uint64_t x = parse_sweep_value(v, n);
    if (has_s) s.samples = x;
    if (has_b) s.budget = x;
    if (has_h) s.code_bits = x;
    if (x == 0) throw UsageError("sweep value '" + v + "' resolves to 0");
    if (has_b && s.budget < b.k) throw UsageError("swept budget " + v + " is below --k");
    specs.push_back(s);
  }

  MeasureOptions opt;
  opt.repeats = b.repeats;
  opt.threads = b.threads;
  const auto truth = ground_truth(w.items, w.queries, b.k, b.threads);
  opt.truth = &truth;
  opt.bruteforce_ms = time_bruteforce(w.items, w.queries, b.k, b.repeats, b.threads);

  std::string out = report_csv_header() + "\n";
  for (const auto& s : specs) {
    out += report_to_csv_row(measure_run(s, w.items, w.queries, b.k, b.seed, opt));
    out += "\n";
  }
  write_text(b.out, out);
  return 0;
}

// ---- verify ------------------------------------------------------------------

int cmd_verify(const SeparationConfig& c, double threshold) {
  if (!(c.tau2 > 0.0)) throw UsageError("--tau2 must be > 0");
  if (!(c.tau1 > c.tau2)) throw UsageError("--tau1 must exceed --tau2");
  if (c.n < 2) throw UsageError("--n must be >= 2");
  if (c.d < 1) throw UsageError("--d must be >= 1");
  if (c.trials < 1) throw UsageError("--trials must be >= 1");
  if (c.trials < 20)
    std::cerr << "warning: " << c.trials
              << " trial(s) cannot resolve a 0.95 success rate; use 200 or more\n";

  const SeparationResult r = verify_separation(c);
  const bool pass = r.rate >= threshold;
  std::printf("n=%zu d=%zu tau1=%g tau2=%g trials=%zu seed=%llu\n", c.n, c.d, c.tau1, c.tau2,
              c.trials, static_cast<unsigned long long>(c.seed));
  std::printf("required S: min %llu, mean %.1f, max %llu\n",
              static_cast<unsigned long long>(r.min_samples), r.mean_samples,
              static_cast<unsigned long long>(r.max_samples));
  std::printf("success rate: %.4f (%zu/%zu), threshold %.2f: %s\n", r.rate, r.successes,
              r.trials, threshold, pass ? "PASS" : "FAIL");
  return pass ? 0 : kExitRuntime;
}

// ---- gen / convert -----------------------------------------------------------

struct GenConfig {
  std::string model = "lowrank";
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t rank = 10;
  std::size_t queries = 1000;
  std::uint64_t seed = 42;
  fs::path out = "items.dmat";
  fs::path queries_out = "queries.dmat";
};

int cmd_gen(const GenConfig& c) {
  const auto model = parse_synthetic_model(c.model);
  if (!model) throw UsageError("unknown model '" + c.model + "'");
  if (c.n == 0 || c.d == 0) throw UsageError("--n and --d must be >= 1");
  if (*model == SyntheticModel::LowRankFactors && (c.rank == 0 || c.rank > c.d))
    throw UsageError("--rank must be in [1, d]");
  for (const auto& p : {c.out, c.queries_out})
    if (!format_from_path(p)) throw UsageError("unrecognised extension on '" + p.string() + "'");

  const SyntheticData s = gen_synthetic(*model, c.n, c.d, c.queries, c.rank, c.seed);
  const fs::path items = resolve_output(c.out);
  ensure_parent(items);
  save_matrix(s.items, items);
  if (c.queries > 0) {
    const fs::path qs = resolve_output(c.queries_out);
    ensure_parent(qs);
    save_matrix(s.queries, qs);
  }
  std::cerr << "wrote " << items.string() << " (" << c.n << " x " << c.d << ")\n";
  return 0;
}

int cmd_convert(const fs::path& in, const fs::path& out) {
  if (!format_from_path(in)) throw UsageError("unrecognised extension on '" + in.string() + "'");
  if (!format_from_path(out)) throw UsageError("unrecognised extension on '" + out.string() + "'");
  const DataMatrix X = load_matrix({in, {}, {}, {}});
  const fs::path dst = resolve_output(out);
  ensure_parent(dst);
  save_matrix(X, dst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted top-k maximum inner product search"};
  app.require_subcommand(1);

  BenchConfig bench;
  auto* bench_cmd = app.add_subcommand("bench", "run one configuration and write a report");
  add_bench_options(bench_cmd, bench);
  bench_cmd->add_option("--out", bench.out, "report path (stdout when absent)");
  bench_cmd->add_option("--format", bench.format, "json | csv")->capture_default_str();
  bench_cmd->add_flag("--per-query", bench.per_query, "include per-query records (json)");

  SweepConfig sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one of S, B or h; CSV rows");
  add_bench_options(sweep_cmd, sweep.base);
  sweep_cmd->add_option("--out", sweep.base.out, "CSV path (stdout when absent)");
  sweep_cmd->add_option("--sweep-samples", sweep.sweep_samples, "S values, e.g. n/4,n/2,n,2n")
      ->delimiter(',')
      ->expected(0, -1);
  sweep_cmd->add_option("--sweep-budget", sweep.sweep_budget, "B values")
      ->delimiter(',')
      ->expected(0, -1);
  sweep_cmd->add_option("--sweep-code-bits", sweep.sweep_bits, "h values")
      ->delimiter(',')
      ->expected(0, -1);

  SeparationConfig verify;
  double threshold = 0.95;
  auto* verify_cmd = app.add_subcommand("verify", "planted-gap check of the wedge sample bound");
  verify_cmd->add_option("--n", verify.n)->capture_default_str();
  verify_cmd->add_option("--d", verify.d)->capture_default_str();
  verify_cmd->add_option("--tau1", verify.tau1)->capture_default_str();
  verify_cmd->add_option("--tau2", verify.tau2)->capture_default_str();
  verify_cmd->add_option("--trials", verify.trials)->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed)->capture_default_str();
  verify_cmd->add_option("--sample-multiplier", verify.sample_multiplier, "scale the bound's S")
      ->capture_default_str();
  verify_cmd->add_option("--threshold", threshold)->capture_default_str();

  GenConfig gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
  gen_cmd->add_option("--model", gen.model, "gaussian | lowrank")->capture_default_str();
  gen_cmd->add_option("--n", gen.n)->required();
  gen_cmd->add_option("--d", gen.d)->required();
  gen_cmd->add_option("--rank", gen.rank, "factor rank (lowrank)")->capture_default_str();
  gen_cmd->add_option("--queries", gen.queries, "number of query rows")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "item matrix path")->capture_default_str();
  gen_cmd->add_option("--queries-out", gen.queries_out, "query matrix path")
      ->capture_default_str();

  fs::path conv_in, conv_out;
  auto* convert_cmd = app.add_subcommand("convert", "convert between CSV and DMAT");
  convert_cmd->add_option("input", conv_in)->required();
  convert_cmd->add_option("output", conv_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*bench_cmd) return cmd_bench(bench);
    if (*sweep_cmd) return cmd_sweep(sweep, *sweep_cmd);
    if (*verify_cmd) return cmd_verify(verify, threshold);
    if (*gen_cmd) return cmd_gen(gen);
    if (*convert_cmd) return cmd_convert(conv_in, conv_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const IndexFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
