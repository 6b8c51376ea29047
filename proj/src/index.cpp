#include "bmips/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace bmips {

static_assert(std::endian::native == std::endian::little,
              "index serialization assumes a little-endian host");

namespace {

void sort_column(const DataMatrix& X, std::size_t j, std::span<RowId> abs_out,
                 std::span<RowId> signed_out) {
  std::iota(abs_out.begin(), abs_out.end(), RowId{0});
  std::iota(signed_out.begin(), signed_out.end(), RowId{0});
  // Stable sort on the key alone keeps smaller rows first among ties.
  std::stable_sort(abs_out.begin(), abs_out.end(), [&](RowId a, RowId b) {
    return std::fabs(X.at(a, j)) > std::fabs(X.at(b, j));
  });
  std::stable_sort(signed_out.begin(), signed_out.end(),
                   [&](RowId a, RowId b) { return X.at(a, j) > X.at(b, j); });
}

}  // namespace

MipsIndex MipsIndex::build(const DataMatrix& X, bool parallel) {
  if (X.rows() > std::numeric_limits<RowId>::max())
    throw DataError("too many rows for 32-bit row ids");
  MipsIndex idx;
  idx.source_ = &X;
  const std::size_t n = X.rows(), d = X.cols();
  idx.col_norms_.assign(d, 0.0);
  idx.abs_order_.resize(n * d);
  idx.signed_order_.resize(n * d);
  idx.col_alias_.resize(d);

  const auto do_column = [&](std::size_t j) {
    std::vector<double> weights(n);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = std::fabs(static_cast<double>(X.at(i, j)));
      c += weights[i];
    }
    idx.col_norms_[j] = c;
    sort_column(X, j, std::span(idx.abs_order_).subspan(j * n, n),
                std::span(idx.signed_order_).subspan(j * n, n));
    if (c > 0.0) idx.col_alias_[j] = AliasTable(weights);
  };

  const auto cols = static_cast<long long>(d);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long j = 0; j < cols; ++j) do_column(static_cast<std::size_t>(j));
  } else {
    for (long long j = 0; j < cols; ++j) do_column(static_cast<std::size_t>(j));
  }
  idx.fill_derived();
  return idx;
}

void MipsIndex::fill_derived() {
  const DataMatrix& X = *source_;
  const std::size_t n = X.rows(), d = X.cols();
  abs_sorted_.resize(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto order = abs_order(j);
    for (std::size_t r = 0; r < n; ++r) abs_sorted_[j * n + r] = X.at(order[r], j);
  }
  max_entry_ = 0.0;
  for (float v : X.data()) max_entry_ = std::max(max_entry_, std::fabs(static_cast<double>(v)));
}

MipsIndex build_index(const DataMatrix& X) { return MipsIndex::build(X, true); }

MipsIndex build_index_serial(const DataMatrix& X) { return MipsIndex::build(X, false); }

bool same_structure(const MipsIndex& a, const MipsIndex& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    if (a.col_norm(j) != b.col_norm(j)) return false;
    if (!std::ranges::equal(a.abs_order(j), b.abs_order(j))) return false;
    if (!std::ranges::equal(a.signed_order(j), b.signed_order(j))) return false;
    if (!(a.col_alias(j) == b.col_alias(j))) return false;
  }
  return true;
}

// ---- serialization -------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'W', 'I', 'D', 'X'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  std::vector<std::byte> buf;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> b) : bytes_(b) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size())
      throw IndexFormatError(IndexFormatError::Kind::Truncated,
                             "index file truncated at byte " + std::to_string(pos_));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::byte> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t len = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(len));
    off += len;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::byte> serialize_index(const MipsIndex& index) {
  const std::size_t n = index.rows(), d = index.cols();
  Writer w;
  w.buf.reserve(28 + d * 8 + n * d * 20 + 4);
  for (char c : kMagic) w.put(c);
  w.put<std::uint32_t>(kIndexFormatVersion);
  w.put<std::uint64_t>(n);
  w.put<std::uint64_t>(d);
  for (std::size_t j = 0; j < d; ++j) w.put<double>(index.col_norm(j));
  for (std::size_t j = 0; j < d; ++j)
    for (RowId r : index.abs_order(j)) w.put<std::uint32_t>(r);
  for (std::size_t j = 0; j < d; ++j)
    for (RowId r : index.signed_order(j)) w.put<std::uint32_t>(r);
  for (std::size_t j = 0; j < d; ++j) {
    const AliasTable& t = index.col_alias(j);
    // Unsampleable columns are stored as n zero cells.
    for (std::size_t c = 0; c < n; ++c) {
      w.put<double>(t.empty() ? 0.0 : t.prob()[c]);
      w.put<std::uint32_t>(t.empty() ? 0u : t.alias()[c]);
    }
  }
  w.put<std::uint32_t>(crc_of(w.buf));
  return std::move(w.buf);
}

void save_index(const MipsIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IndexFormatError(IndexFormatError::Kind::Io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IndexFormatError(IndexFormatError::Kind::Io, "write failed: " + path.string());
}

MipsIndex load_index(std::span<const std::byte> bytes, const DataMatrix& X) {
  using Kind = IndexFormatError::Kind;
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<char>() != c) throw IndexFormatError(Kind::BadMagic, "not an index file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kIndexFormatVersion)
    throw IndexFormatError(Kind::VersionMismatch,
                           "index format version " + std::to_string(version) + ", expected " +
                               std::to_string(kIndexFormatVersion));
  const auto n = r.get<std::uint64_t>();
  const auto d = r.get<std::uint64_t>();
  if (n == 0 || d == 0 || n > std::numeric_limits<RowId>::max() || d > (1ULL << 32))
    throw IndexFormatError(Kind::ShapeMismatch, "implausible index shape");
  const std::uint64_t expected = 4 + 4 + 16 + d * 8 + 2 * n * d * 4 + n * d * 12 + 4;
  if (bytes.size() < expected)
    throw IndexFormatError(Kind::Truncated, "index file truncated: " + std::to_string(bytes.size()) +
                                                " of " + std::to_string(expected) + " bytes");
  const std::uint32_t stored_crc = [&] {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + expected - 4, 4);
    return v;
  }();
  if (crc_of(bytes.first(expected - 4)) != stored_crc)
    throw IndexFormatError(Kind::ChecksumMismatch, "index checksum mismatch");
  if (n != X.rows() || d != X.cols())
    throw IndexFormatError(Kind::ShapeMismatch,
                           "index is " + std::to_string(n) + "x" + std::to_string(d) +
                               ", matrix is " + std::to_string(X.rows()) + "x" +
                               std::to_string(X.cols()));

  MipsIndex idx;
  idx.source_ = &X;
  idx.col_norms_.resize(d);
  for (auto& c : idx.col_norms_) c = r.get<double>();
  idx.abs_order_.resize(n * d);
  for (auto& v : idx.abs_order_) v = r.get<std::uint32_t>();
  idx.signed_order_.resize(n * d);
  for (auto& v : idx.signed_order_) v = r.get<std::uint32_t>();
  for (RowId v : idx.abs_order_)
    if (v >= n) throw IndexFormatError(Kind::ShapeMismatch, "row id out of range");
  for (RowId v : idx.signed_order_)
    if (v >= n) throw IndexFormatError(Kind::ShapeMismatch, "row id out of range");
  idx.col_alias_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> prob(n);
    std::vector<std::uint32_t> alias(n);
    for (std::size_t c = 0; c < n; ++c) {
      prob[c] = r.get<double>();
      alias[c] = r.get<std::uint32_t>();
    }
    if (idx.col_norms_[j] > 0.0) {
      try {
        idx.col_alias_[j] = AliasTable(std::move(prob), std::move(alias));
      } catch (const std::invalid_argument& e) {
        throw IndexFormatError(Kind::ShapeMismatch, e.what());
      }
    }
  }
  idx.fill_derived();
  return idx;
}

MipsIndex load_index(const std::filesystem::path& path, const DataMatrix& X) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IndexFormatError(IndexFormatError::Kind::Io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_index(std::as_bytes(std::span(raw)), X);
}

}  // namespace bmips
