#include "bmips/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "bmips/rng.hpp"

namespace bmips {

static_assert(std::endian::native == std::endian::little,
              "DMAT I/O assumes a little-endian host");

namespace {

constexpr char kDmatMagic[4] = {'D', 'M', 'A', 'T'};
constexpr std::uint32_t kDmatVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw DataError(std::string("DMAT truncated while reading ") + what);
  return v;
}

}  // namespace

std::optional<MatrixFormat> format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return MatrixFormat::Csv;
  if (ext == ".dmat") return MatrixFormat::Dmat;
  return std::nullopt;
}

DataMatrix parse_csv(std::istream& in) {
  std::vector<float> values;
  std::size_t d = 0, n = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::size_t fields = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw DataError("invalid number '" + std::string(field) + "' at line " +
                        std::to_string(line_no) + ", field " + std::to_string(fields + 1));
      if (!std::isfinite(v))
        throw DataError("non-finite value at line " + std::to_string(line_no) + ", field " +
                        std::to_string(fields + 1));
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (n == 0) {
      d = fields;
    } else if (fields != d) {
      throw DataError("ragged CSV row at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(d) + " fields, got " + std::to_string(fields));
    }
    ++n;
  }
  if (n == 0) throw DataError("CSV input has no rows");
  return DataMatrix(n, d, std::move(values));
}

DataMatrix parse_dmat(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw DataError("DMAT truncated while reading magic");
  if (std::memcmp(magic, kDmatMagic, 4) != 0) throw DataError("bad DMAT magic");
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kDmatVersion)
    throw DataError("unsupported DMAT version " + std::to_string(version));
  const auto n = read_pod<std::uint64_t>(in, "row count");
  const auto d = read_pod<std::uint64_t>(in, "column count");
  if (n == 0 || d == 0) throw DataError("DMAT declares an empty matrix");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max() / sizeof(float);
  if (n > std::numeric_limits<std::uint32_t>::max() || d > kMax / n)
    throw DataError("DMAT dimensions overflow: " + std::to_string(n) + "x" + std::to_string(d));
  const std::uint64_t count = n * d;

  // Reject a header promising more data than the stream holds before
  // allocating for it.
  const auto here = in.tellg();
  if (here != std::streampos(-1)) {
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    if (end != std::streampos(-1) &&
        static_cast<std::uint64_t>(end - here) < count * sizeof(float))
      throw DataError("DMAT truncated: payload shorter than " + std::to_string(n) + "x" +
                      std::to_string(d));
  }

  std::vector<float> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(float))))
    throw DataError("DMAT truncated in payload");
  return DataMatrix(n, d, std::move(values));
}

void write_csv(const DataMatrix& X, std::ostream& out) {
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < X.cols(); ++j) {
      if (j) line.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf), X.at(i, j));
      line.append(buf, res.ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

void write_dmat(const DataMatrix& X, std::ostream& out) {
  out.write(kDmatMagic, 4);
  const std::uint32_t version = kDmatVersion;
  const std::uint64_t n = X.rows(), d = X.cols();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  const auto data = X.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
}

DataMatrix load_matrix(const DatasetSpec& spec) {
  const auto format = spec.format ? spec.format : format_from_path(spec.path);
  if (!format) throw DataError("cannot infer matrix format of " + spec.path.string());
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw DataError("cannot open " + spec.path.string());
  DataMatrix X = *format == MatrixFormat::Csv ? parse_csv(in) : parse_dmat(in);
  if (spec.expected_rows && *spec.expected_rows != X.rows())
    throw DataError(spec.path.string() + ": expected " + std::to_string(*spec.expected_rows) +
                    " rows, found " + std::to_string(X.rows()));
  if (spec.expected_cols && *spec.expected_cols != X.cols())
    throw DataError(spec.path.string() + ": expected " + std::to_string(*spec.expected_cols) +
                    " columns, found " + std::to_string(X.cols()));
  return X;
}

void save_matrix(const DataMatrix& X, const std::filesystem::path& path,
                 std::optional<MatrixFormat> format) {
  if (!format) format = format_from_path(path);
  if (!format) throw DataError("cannot infer matrix format of " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  if (*format == MatrixFormat::Csv)
    write_csv(X, out);
  else
    write_dmat(X, out);
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::vector<double>> rows_as_queries(const DataMatrix& Q) {
  std::vector<std::vector<double>> out(Q.rows());
  for (std::size_t i = 0; i < Q.rows(); ++i) out[i].assign(Q.row(i).begin(), Q.row(i).end());
  return out;
}

std::optional<SyntheticModel> parse_synthetic_model(std::string_view name) noexcept {
  if (name == "gaussian") return SyntheticModel::Gaussian;
  if (name == "lowrank" || name == "lowrank-factors") return SyntheticModel::LowRankFactors;
  return std::nullopt;
}

namespace {

std::vector<double> gaussian_block(std::size_t rows, std::size_t cols, std::mt19937_64& engine) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(rows * cols);
  for (double& v : out) v = g(engine);
  return out;
}

// (rows x r) * (r x d) / sqrt(r), rounded to float.
std::vector<float> factor_product(const std::vector<double>& left, const std::vector<double>& basis,
                                  std::size_t rows, std::size_t r, std::size_t d) {
  std::vector<float> out(rows * d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = 0; t < r; ++t) {
      const double a = left[i * r + t];
      const double* b = basis.data() + t * d;
      for (std::size_t j = 0; j < d; ++j) acc[j] += a * b[j];
    }
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = static_cast<float>(acc[j] * scale);
  }
  return out;
}

}  // namespace

SyntheticData gen_synthetic(SyntheticModel model, std::size_t n, std::size_t d,
                            std::size_t num_queries, std::size_t rank, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("synthetic data needs n >= 1 and d >= 1");
  if (num_queries == 0) throw std::invalid_argument("synthetic data needs at least one query");
  // Items and queries draw from separate streams so the item matrix does not
  // depend on the query count.
  std::mt19937_64 item_engine(mix64(seed));
  std::mt19937_64 query_engine(mix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));

  if (model == SyntheticModel::Gaussian) {
    const auto to_float = [](const std::vector<double>& v) {
      return std::vector<float>(v.begin(), v.end());
    };
    return {DataMatrix(n, d, to_float(gaussian_block(n, d, item_engine))),
            DataMatrix(num_queries, d, to_float(gaussian_block(num_queries, d, query_engine)))};
  }

  if (rank == 0 || rank > d)
    throw std::invalid_argument("low-rank model needs 1 <= rank <= d (rank " +
                                std::to_string(rank) + ", d " + std::to_string(d) + ")");
  const auto basis = gaussian_block(rank, d, item_engine);
  const auto item_factors = gaussian_block(n, rank, item_engine);
  const auto user_factors = gaussian_block(num_queries, rank, query_engine);
  return {DataMatrix(n, d, factor_product(item_factors, basis, n, rank, d)),
          DataMatrix(num_queries, d, factor_product(user_factors, basis, num_queries, rank, d))};
}

}  // namespace bmips
