#include "bmips/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "bmips/query.hpp"
#include "bmips/samplers.hpp"

namespace bmips {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double median(std::vector<double> v) {
  std::ranges::sort(v);
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::BruteForce: return "bruteforce";
    case Algorithm::Wedge: return "wedge";
    case Algorithm::Diamond: return "diamond";
    case Algorithm::DWedge: return "dwedge";
    case Algorithm::DDiamond: return "ddiamond";
    case Algorithm::Greedy: return "greedy";
    case Algorithm::SimpleLsh: return "simplelsh";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  for (auto a : {Algorithm::BruteForce, Algorithm::Wedge, Algorithm::Diamond, Algorithm::DWedge,
                 Algorithm::DDiamond, Algorithm::Greedy, Algorithm::SimpleLsh}) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

bool uses_samples(Algorithm a) noexcept {
  return a == Algorithm::Wedge || a == Algorithm::Diamond || a == Algorithm::DWedge ||
         a == Algorithm::DDiamond;
}

double precision_at_k(const TopKResult& retrieved, const TopKResult& truth, std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision_at_k needs k >= 1");
  if (truth.size() < k) throw std::invalid_argument("truth has fewer than k entries");
  std::unordered_set<RowId> true_rows;
  for (std::size_t t = 0; t < k; ++t) true_rows.insert(truth.entries[t].row);
  std::size_t hits = 0;
  const std::size_t m = std::min(k, retrieved.size());
  for (std::size_t t = 0; t < m; ++t) hits += true_rows.count(retrieved.entries[t].row);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double cost_model_ops(double samples, std::size_t d, double budget) {
  if (d == 0) throw std::invalid_argument("cost model needs d >= 1");
  return 2.0 * samples / static_cast<double>(d) + budget;
}

// ---- pipeline ------------------------------------------------------------

Pipeline::Pipeline(const DataMatrix& X, AlgoSpec spec, std::uint64_t seed)
    : X_(&X), spec_(spec), seed_(seed) {
  if (spec_.algorithm != Algorithm::BruteForce && spec_.budget == 0)
    throw std::invalid_argument("candidate budget B must be >= 1");
  const auto t0 = Clock::now();
  switch (spec_.algorithm) {
    case Algorithm::BruteForce:
      break;
    case Algorithm::SimpleLsh:
      if (spec_.code_bits == 0) throw std::invalid_argument("simplelsh needs a code length");
      lsh_ = std::make_unique<LshModel>(lsh_build(X, spec_.code_bits, seed_));
      break;
    default:
      index_ = std::make_unique<MipsIndex>(build_index(X));
      break;
  }
  build_ms_ = ms_between(t0, Clock::now());
}

CandidateSet Pipeline::screen(std::span<const double> q, std::uint64_t ordinal) const {
  const auto name = std::string(algorithm_name(spec_.algorithm));
  switch (spec_.algorithm) {
    case Algorithm::BruteForce: {
      CandidateSet all;
      all.origin = name;
      all.rows.resize(X_->rows());
      for (std::size_t i = 0; i < X_->rows(); ++i) all.rows[i] = static_cast<RowId>(i);
      return all;
    }
    case Algorithm::Greedy:
      return greedy_candidates(*index_, q, spec_.budget);
    case Algorithm::SimpleLsh:
      return lsh_candidates(*lsh_, q, spec_.budget);
    default:
      break;
  }
  const QueryContext ctx =
      make_query_context(*index_, q, spec_.samples, spec_.algorithm != Algorithm::DWedge);
  SamplerRng rng = SamplerRng::for_query(seed_, ordinal);
  switch (spec_.algorithm) {
    case Algorithm::Wedge:
      return extract_top_b(wedge_sample(*index_, ctx, spec_.samples, rng), spec_.budget, name);
    case Algorithm::Diamond:
      return extract_top_b(diamond_sample(*index_, ctx, spec_.samples, rng), spec_.budget, name);
    case Algorithm::DWedge:
      return extract_top_b(dwedge_sample(*index_, ctx), spec_.budget, name);
    case Algorithm::DDiamond:
      return extract_top_b(ddiamond_sample(*index_, ctx, rng), spec_.budget, name);
    default:
      throw std::logic_error("unhandled algorithm");
  }
}

TopKResult Pipeline::answer(std::span<const double> q, std::size_t k, std::uint64_t ordinal,
                            QueryTiming* timing) const {
  check_query(q, X_->cols());
  if (spec_.algorithm == Algorithm::BruteForce) {
    const auto t0 = Clock::now();
    TopKResult r = brute_force_topk_serial(*X_, q, k);
    if (timing) {
      timing->screening_ms = 0.0;
      timing->ranking_ms = timing->total_ms = ms_between(t0, Clock::now());
    }
    return r;
  }
  const auto t0 = Clock::now();
  const CandidateSet cands = screen(q, ordinal);
  const auto t1 = Clock::now();
  TopKResult r = rank_candidates(*X_, q, cands, k);
  const auto t2 = Clock::now();
  if (timing) {
    timing->screening_ms = ms_between(t0, t1);
    timing->ranking_ms = ms_between(t1, t2);
    timing->total_ms = ms_between(t0, t2);
  }
  return r;
}

std::vector<TopKResult> run_batch(const Pipeline& pipeline, const QuerySet& queries,
                                  std::size_t k, int threads,
                                  std::vector<QueryTiming>* timings) {
  std::vector<TopKResult> out(queries.size());
  if (timings) timings->assign(queries.size(), {});
  const auto m = static_cast<long long>(queries.size());
  const auto one = [&](long long t) {
    const auto i = static_cast<std::size_t>(t);
    out[i] = pipeline.answer(queries[i], k, i, timings ? &(*timings)[i] : nullptr);
  };
  if (threads > 1) {
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
    for (long long t = 0; t < m; ++t) one(t);
  } else {
    for (long long t = 0; t < m; ++t) one(t);
  }
  return out;
}

std::vector<TopKResult> ground_truth(const DataMatrix& X, const QuerySet& queries, std::size_t k,
                                     int threads) {
  std::vector<TopKResult> out(queries.size());
  const auto m = static_cast<long long>(queries.size());
#pragma omp parallel for num_threads(std::max(threads, 1)) schedule(dynamic, 1)
  for (long long t = 0; t < m; ++t)
    out[static_cast<std::size_t>(t)] = brute_force_topk_serial(X, queries[static_cast<std::size_t>(t)], k);
  return out;
}

namespace {

void check_query_set(const DataMatrix& X, const QuerySet& queries) {
  if (queries.empty()) throw std::invalid_argument("empty query set");
  for (const auto& q : queries) check_query(q, X.cols());
}

struct RepeatTiming {
  double screening = 0, ranking = 0, total = 0;
};

RepeatTiming mean_timing(const std::vector<QueryTiming>& t) {
  RepeatTiming r;
  for (const auto& x : t) {
    r.screening += x.screening_ms;
    r.ranking += x.ranking_ms;
    r.total += x.total_ms;
  }
  const auto m = static_cast<double>(t.size());
  return {r.screening / m, r.ranking / m, r.total / m};
}

}  // namespace

double time_bruteforce(const DataMatrix& X, const QuerySet& queries, std::size_t k, int repeats,
                       int threads) {
  check_query_set(X, queries);
  const Pipeline bf(X, {Algorithm::BruteForce, 0, 0, 0}, 0);
  std::vector<double> totals;
  std::vector<QueryTiming> timings;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    run_batch(bf, queries, k, threads, &timings);
    totals.push_back(mean_timing(timings).total);
  }
  return median(totals);
}

RunReport measure_run(const AlgoSpec& spec, const DataMatrix& X, const QuerySet& queries,
                      std::size_t k, std::uint64_t seed, const MeasureOptions& options) {
  check_query_set(X, queries);
  if (k == 0 || k > X.rows()) throw std::invalid_argument("k must be in [1, n]");

  std::vector<TopKResult> own_truth;
  const std::vector<TopKResult>* truth = options.truth;
  if (!truth || truth->size() != queries.size()) {
    own_truth = ground_truth(X, queries, k, options.threads);
    truth = &own_truth;
  }
  const int repeats = std::max(options.repeats, 1);
  const double bf_ms = options.bruteforce_ms >= 0.0
                           ? options.bruteforce_ms
                           : time_bruteforce(X, queries, k, repeats, options.threads);

  const Pipeline pipeline(X, spec, seed);

  RunReport rep;
  rep.algorithm = std::string(algorithm_name(spec.algorithm));
  rep.samples = uses_samples(spec.algorithm) ? spec.samples : 0;
  rep.budget = spec.algorithm == Algorithm::BruteForce ? 0 : spec.budget;
  rep.k = k;
  rep.code_bits = spec.algorithm == Algorithm::SimpleLsh ? spec.code_bits : 0;
  rep.seed = seed;
  rep.n = X.rows();
  rep.d = X.cols();
  rep.queries = queries.size();
  rep.threads = options.threads;
  rep.repeats = repeats;
  rep.build_ms = pipeline.build_ms();
  rep.bruteforce_ms = bf_ms;

  std::vector<RepeatTiming> runs;
  std::vector<QueryTiming> first_timings;
  std::vector<TopKResult> results;
  for (int r = 0; r < repeats; ++r) {
    std::vector<QueryTiming> timings;
    auto res = run_batch(pipeline, queries, k, options.threads, &timings);
    runs.push_back(mean_timing(timings));
    if (r == 0) {
      results = std::move(res);
      first_timings = std::move(timings);
    }
  }
  // Report the repeat whose total is the median.
  std::ranges::sort(runs, {}, &RepeatTiming::total);
  const RepeatTiming& mid = runs[runs.size() / 2];
  rep.screening_ms = mid.screening;
  rep.ranking_ms = mid.ranking;
  rep.total_ms = mid.total;

  double psum = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const double p = precision_at_k(results[i], (*truth)[i], k);
    psum += p;
    if (options.keep_per_query) rep.per_query.push_back({p, first_timings[i]});
  }
  rep.precision = psum / static_cast<double>(queries.size());

  if (spec.algorithm == Algorithm::BruteForce)
    rep.cost_ops = static_cast<double>(X.rows());
  else if (uses_samples(spec.algorithm))
    rep.cost_ops = cost_model_ops(static_cast<double>(spec.samples), X.cols(),
                                  static_cast<double>(spec.budget));
  else
    rep.cost_ops = static_cast<double>(spec.budget);

  // Guard against a zero reading from a coarse clock.
  rep.speedup = bf_ms / std::max(rep.total_ms, 1e-6);
  return rep;
}

// ---- separation verifier -------------------------------------------------

PlantedInstance make_planted_instance(std::size_t n, std::size_t d, double tau1, double tau2,
                                      SamplerRng& rng) {
  if (!(tau1 > tau2 && tau2 > 0.0)) throw std::invalid_argument("need tau1 > tau2 > 0");
  if (n < 2 || d == 0) throw std::invalid_argument("planted instance needs n >= 2 and d >= 1");
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("planted instance too large");
  const RowId planted = rng.below(static_cast<std::uint32_t>(n));
  std::vector<float> values(n * d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double& v : row) {
      v = 1.0 - rng.uniform();  // (0, 1]
      sum += v;
    }
    const double target = i == planted ? tau1 : tau2 * (0.5 + 0.5 * (1.0 - rng.uniform()));
    for (std::size_t j = 0; j < d; ++j) values[i * d + j] = static_cast<float>(row[j] * target / sum);
  }
  return {DataMatrix(n, d, std::move(values)), std::vector<double>(d, 1.0), planted};
}

std::uint64_t separation_samples(double z, std::size_t n, double tau1, double tau2) {
  if (!(tau1 > tau2 && tau2 > 0.0))
    throw std::invalid_argument("need tau1 > tau2 > 0; the bound diverges at tau1 == tau2");
  if (n < 2) throw std::invalid_argument("separation bound needs n >= 2");
  const double gap = std::sqrt(tau1) - std::sqrt(tau2);
  return static_cast<std::uint64_t>(
      std::ceil(3.0 * z * std::log(static_cast<double>(n)) / (gap * gap)));
}

SeparationResult verify_separation(const SeparationConfig& c) {
  if (!(c.tau1 > c.tau2 && c.tau2 > 0.0))
    throw std::invalid_argument("need tau1 > tau2 > 0; the bound diverges at tau1 == tau2");
  if (c.n < 2 || c.d == 0) throw std::invalid_argument("need n >= 2 and d >= 1");
  if (c.trials == 0) throw std::invalid_argument("need at least one trial");
  if (!(c.sample_multiplier > 0.0)) throw std::invalid_argument("sample multiplier must be > 0");

  std::vector<std::uint8_t> ok(c.trials, 0);
  std::vector<std::uint64_t> used(c.trials, 0);
  const auto trials = static_cast<long long>(c.trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long t = 0; t < trials; ++t) {
    SamplerRng rng = SamplerRng::for_query(c.seed, static_cast<std::uint64_t>(t));
    const PlantedInstance inst = make_planted_instance(c.n, c.d, c.tau1, c.tau2, rng);
    const MipsIndex index = build_index_serial(inst.X);
    const QueryContext ctx = make_query_context(index, inst.q, 0);
    const auto S = static_cast<std::uint64_t>(std::ceil(
        c.sample_multiplier * static_cast<double>(separation_samples(ctx.z, c.n, c.tau1, c.tau2))));
    const Histogram h = wedge_sample(index, ctx, S, rng);
    const double top = h.at(inst.planted);
    bool separated = true;
    for (std::size_t i = 0; i < c.n && separated; ++i)
      if (i != inst.planted && !(top > h.at(static_cast<RowId>(i)))) separated = false;
    ok[static_cast<std::size_t>(t)] = separated;
    used[static_cast<std::size_t>(t)] = S;
  }

  SeparationResult r;
  r.trials = c.trials;
  for (auto v : ok) r.successes += v;
  r.rate = static_cast<double>(r.successes) / static_cast<double>(r.trials);
  r.min_samples = *std::ranges::min_element(used);
  r.max_samples = *std::ranges::max_element(used);
  double sum = 0.0;
  for (auto s : used) sum += static_cast<double>(s);
  r.mean_samples = sum / static_cast<double>(used.size());
  return r;
}

SampleBounds sample_bounds(double z, double max_entry, double q_norm1, std::size_t n, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  const double log_n = std::log(static_cast<double>(n));
  return {12.0 * z * log_n / tau, 12.0 * max_entry * q_norm1 * z * log_n / (tau * tau)};
}

// ---- serialization -------------------------------------------------------

namespace {

nlohmann::ordered_json report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["algorithm"] = r.algorithm;
  j["samples"] = r.samples;
  j["budget"] = r.budget;
  j["k"] = r.k;
  j["code_bits"] = r.code_bits;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["d"] = r.d;
  j["queries"] = r.queries;
  j["threads"] = r.threads;
  j["repeats"] = r.repeats;
  j["build_ms"] = r.build_ms;
  j["screening_ms"] = r.screening_ms;
  j["ranking_ms"] = r.ranking_ms;
  j["total_ms"] = r.total_ms;
  j["bruteforce_ms"] = r.bruteforce_ms;
  j["cost_ops"] = r.cost_ops;
  j["precision"] = r.precision;
  j["speedup"] = r.speedup;
  return j;
}

}  // namespace

std::string report_to_json(const RunReport& r, bool include_per_query) {
  auto j = report_json(r);
  if (include_per_query) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& q : r.per_query) {
      nlohmann::ordered_json e;
      e["precision"] = q.precision;
      e["screening_ms"] = q.timing.screening_ms;
      e["ranking_ms"] = q.timing.ranking_ms;
      e["total_ms"] = q.timing.total_ms;
      arr.push_back(std::move(e));
    }
    j["per_query"] = std::move(arr);
  }
  return j.dump();
}

std::string report_csv_header() {
  std::string out;
  const auto j = report_json(RunReport{});
  for (const auto& [key, _] : j.items()) {
    if (!out.empty()) out += ',';
    out += key;
  }
  return out;
}

std::string report_to_csv_row(const RunReport& r) {
  std::string out;
  bool first = true;
  const auto j = report_json(r);
  for (const auto& [_, value] : j.items()) {
    if (!first) out += ',';
    first = false;
    out += value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

}  // namespace bmips
