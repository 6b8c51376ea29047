#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmips/baselines.hpp"
#include "bmips/index.hpp"
#include "bmips/ranking.hpp"

namespace bmips {

enum class Algorithm { BruteForce, Wedge, Diamond, DWedge, DDiamond, Greedy, SimpleLsh };

std::string_view algorithm_name(Algorithm a) noexcept;
/// Accepts the CLI spellings (bruteforce, wedge, ..., simplelsh).
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;
bool uses_samples(Algorithm a) noexcept;

struct AlgoSpec {
  Algorithm algorithm = Algorithm::DWedge;
  std::uint64_t samples = 0;    // S
  std::size_t budget = 100;     // B
  std::size_t code_bits = 0;    // h, SimpleLSH only
};

using QuerySet = std::vector<std::vector<double>>;

/// |retrieved ∩ truth| / k over row sets; missing retrieved slots are misses.
double precision_at_k(const TopKResult& retrieved, const TopKResult& truth, std::size_t k);

/// dWedge operation count in equivalent inner products: 2S/d + B.
double cost_model_ops(double samples, std::size_t d, double budget);

struct QueryTiming {
  double screening_ms = 0.0;
  double ranking_ms = 0.0;
  double total_ms = 0.0;
};

/// A screening + ranking pipeline bound to one dataset. Holds whatever the
/// algorithm needs (index, LSH codes); answering queries is const and
/// thread-safe.
class Pipeline {
 public:
  Pipeline(const DataMatrix& X, AlgoSpec spec, std::uint64_t seed);

  const AlgoSpec& spec() const noexcept { return spec_; }
  const DataMatrix& data() const noexcept { return *X_; }
  double build_ms() const noexcept { return build_ms_; }

  /// Answers query number `ordinal`; the ordinal selects the random stream.
  TopKResult answer(std::span<const double> q, std::size_t k, std::uint64_t ordinal,
                    QueryTiming* timing = nullptr) const;

  /// Screening phase alone.
  CandidateSet screen(std::span<const double> q, std::uint64_t ordinal) const;

 private:
  const DataMatrix* X_;
  AlgoSpec spec_;
  std::uint64_t seed_;
  std::unique_ptr<MipsIndex> index_;
  std::unique_ptr<LshModel> lsh_;
  double build_ms_ = 0.0;
};

/// Answers every query; `threads` > 1 spreads queries over OpenMP workers.
/// Results are identical for any thread count.
std::vector<TopKResult> run_batch(const Pipeline& pipeline, const QuerySet& queries,
                                  std::size_t k, int threads = 1,
                                  std::vector<QueryTiming>* timings = nullptr);

/// Exact answers for a query set (parallel across queries).
std::vector<TopKResult> ground_truth(const DataMatrix& X, const QuerySet& queries, std::size_t k,
                                     int threads = 1);

struct QueryRecord {
  double precision;
  QueryTiming timing;
};

struct RunReport {
  std::string algorithm;
  std::uint64_t samples = 0;
  std::size_t budget = 0;
  std::size_t k = 0;
  std::size_t code_bits = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t queries = 0;
  int threads = 1;
  int repeats = 1;
  // Mean per-query times (ms), median over repeats.
  double build_ms = 0.0;
  double screening_ms = 0.0;
  double ranking_ms = 0.0;
  double total_ms = 0.0;
  double bruteforce_ms = 0.0;
  double cost_ops = 0.0;
  double precision = 0.0;
  double speedup = 0.0;
  std::vector<QueryRecord> per_query;
};

struct MeasureOptions {
  int repeats = 5;
  int threads = 1;
  bool keep_per_query = false;
  /// Precomputed truth for the same queries and k; computed when empty.
  const std::vector<TopKResult>* truth = nullptr;
  /// Precomputed brute-force per-query time; measured when negative.
  double bruteforce_ms = -1.0;
};

/// Runs the algorithm over the query set and reports accuracy and timing
/// against brute force. Throws std::invalid_argument on an empty query set or
/// dimension mismatch.
RunReport measure_run(const AlgoSpec& spec, const DataMatrix& X, const QuerySet& queries,
                      std::size_t k, std::uint64_t seed, const MeasureOptions& options = {});

/// Median-of-`repeats` mean per-query brute-force time in ms.
double time_bruteforce(const DataMatrix& X, const QuerySet& queries, std::size_t k, int repeats,
                       int threads = 1);

// Planted-gap check of the wedge separation bound: with
// S >= 3 z ln n / (sqrt(tau1) - sqrt(tau2))^2 a row at product >= tau1 must
// outcount every row at <= tau2 with probability >= 1 - 1/n.

struct PlantedInstance {
  DataMatrix X;
  std::vector<double> q;
  RowId planted;
};

/// Non-negative instance with query all-ones: the planted row's product is
/// exactly tau1, every other row's product lies in [tau2/2, tau2].
PlantedInstance make_planted_instance(std::size_t n, std::size_t d, double tau1, double tau2,
                                      SamplerRng& rng);

/// ceil(3 z ln n / (sqrt(tau1) - sqrt(tau2))^2).
std::uint64_t separation_samples(double z, std::size_t n, double tau1, double tau2);

struct SeparationConfig {
  std::size_t n = 100;
  std::size_t d = 10;
  double tau1 = 4.0;
  double tau2 = 1.0;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  /// Scales the required S (1 = the bound itself).
  double sample_multiplier = 1.0;
};

struct SeparationResult {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;
  std::uint64_t min_samples = 0;
  std::uint64_t max_samples = 0;
  double mean_samples = 0.0;
};

/// Throws std::invalid_argument unless tau1 > tau2 > 0, n >= 2, d >= 1 and
/// trials >= 1.
SeparationResult verify_separation(const SeparationConfig& config);

/// Sample counts needed to separate tau from tau/4: wedge 12 z ln n / tau,
/// diamond 12 K ||q||_1 z ln n / tau^2.
struct SampleBounds {
  double wedge;
  double diamond;
};
SampleBounds sample_bounds(double z, double max_entry, double q_norm1, std::size_t n, double tau);

// Serialization with stable field names.
std::string report_to_json(const RunReport& r, bool include_per_query = false);
std::string report_csv_header();
std::string report_to_csv_row(const RunReport& r);

}  // namespace bmips
