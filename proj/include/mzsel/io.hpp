#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/kernels.hpp"

// Wire format, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "MZE1"
//   4       4     u32 version (= 1)
//   8       1     u8 kind: 0 features, 1 gradients, 2 probabilities, 3 kernel
//   9       8     u64 n
//   17      8     u64 d
//   25      4     u32 num_classes
//   29      ...   n*d row-major f32 (f64 for kind 3), then n u32 labels
//
// Kernel files have n == d. Their num_classes slot carries the KernelKind
// code and their labels are written as zero.

namespace mzsel {

inline constexpr std::uint32_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 29;
inline constexpr std::uint8_t kKernelKindByte = 3;

struct WireHeader {
  std::uint32_t version = kWireVersion;
  std::uint8_t kind = 0;
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::uint32_t num_classes = 0;

  std::size_t value_bytes() const noexcept { return kind == kKernelKindByte ? 8 : 4; }
  /// Total file size implied by the header, or nullopt on overflow.
  std::optional<std::uint64_t> expected_size() const noexcept {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    if (d != 0 && n > kMax / d) return std::nullopt;
    const std::uint64_t cells = n * d;
    if (cells > (kMax - kHeaderSize) / 16) return std::nullopt;
    return kHeaderSize + cells * value_bytes() + n * 4;
  }
};

namespace detail {

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + len);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void need(std::size_t len) const {
    if (remaining() < len)
      throw Error(Errc::TruncatedFile,
                  "need " + std::to_string(len) + " bytes at offset " + std::to_string(pos_) + ", file ends at " +
                      std::to_string(data_.size()),
                  data_.size());
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline void write_header(ByteWriter& w, const WireHeader& h) {
  w.bytes("MZE1", 4);
  w.le(h.version);
  w.le(h.kind);
  w.le(h.n);
  w.le(h.d);
  w.le(h.num_classes);
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

}  // namespace detail

/// Parses and checks the fixed header, including that the payload size
/// implied by it is present.
inline WireHeader parse_header(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), "MZE1", 4) != 0) throw Error(Errc::BadMagic, "file does not start with MZE1");
  r.le<std::uint32_t>();
  WireHeader h;
  h.version = r.le<std::uint32_t>();
  if (h.version != kWireVersion)
    throw Error(Errc::VersionMismatch, "version " + std::to_string(h.version) + " unsupported");
  h.kind = r.le<std::uint8_t>();
  h.n = r.le<std::uint64_t>();
  h.d = r.le<std::uint64_t>();
  h.num_classes = r.le<std::uint32_t>();
  if (h.kind > kKernelKindByte) throw Error(Errc::InvariantViolation, "unknown kind byte " + std::to_string(h.kind));
  const auto expected = h.expected_size();
  if (!expected) throw Error(Errc::InvariantViolation, "header dimensions overflow");
  if (bytes.size() < *expected)
    throw Error(Errc::TruncatedFile,
                "expected " + std::to_string(*expected) + " bytes, file ends at byte offset " +
                    std::to_string(bytes.size()),
                bytes.size());
  if (bytes.size() > *expected)
    throw Error(Errc::InvariantViolation, std::to_string(bytes.size() - *expected) + " trailing bytes");
  return h;
}

inline std::vector<std::uint8_t> serialize_embeddings(const EmbeddingSet& set) {
  detail::ByteWriter w;
  w.reserve(kHeaderSize + set.vectors.size() * 4 + set.labels.size() * 4);
  detail::write_header(w, {kWireVersion, static_cast<std::uint8_t>(set.kind), set.n, set.d, set.num_classes});
  for (float v : set.vectors) w.f32(v);
  for (auto y : set.labels) w.le(y);
  return w.take();
}

inline EmbeddingSet parse_embeddings(std::span<const std::uint8_t> bytes) {
  const WireHeader h = parse_header(bytes);
  if (h.kind == kKernelKindByte) throw Error(Errc::KindMismatch, "file holds a kernel, not embeddings");
  detail::ByteReader r(bytes.subspan(kHeaderSize));
  EmbeddingSet set;
  set.kind = static_cast<EmbeddingKind>(h.kind);
  set.n = h.n;
  set.d = h.d;
  set.num_classes = h.num_classes;
  set.vectors.resize(set.n * set.d);
  for (auto& v : set.vectors) v = r.f32();
  set.labels.resize(set.n);
  for (auto& y : set.labels) y = r.le<std::uint32_t>();
  validate(set);
  return set;
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_embeddings(bytes);
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  validate(set);
  detail::write_file(path, serialize_embeddings(set));
}

inline std::vector<std::uint8_t> serialize_kernel(const KernelMatrix& k) {
  const std::size_t n = k.size();
  detail::ByteWriter w;
  w.reserve(kHeaderSize + n * n * 8 + n * 4);
  detail::write_header(w, {kWireVersion, kKernelKindByte, n, n, static_cast<std::uint32_t>(k.kind)});
  for (double v : k.entries.data()) w.f64(v);
  for (std::size_t i = 0; i < n; ++i) w.le(std::uint32_t{0});
  return w.take();
}

inline KernelMatrix parse_kernel(std::span<const std::uint8_t> bytes) {
  const WireHeader h = parse_header(bytes);
  if (h.kind != kKernelKindByte) throw Error(Errc::KindMismatch, "file does not hold a kernel");
  if (h.n != h.d) throw Error(Errc::InvariantViolation, "kernel file must have n == d");
  if (h.num_classes > static_cast<std::uint32_t>(KernelKind::Label))
    throw Error(Errc::InvariantViolation, "unknown kernel kind code");
  detail::ByteReader r(bytes.subspan(kHeaderSize));
  KernelMatrix k{static_cast<KernelKind>(h.num_classes), Matrix(h.n, h.n)};
  for (auto& v : k.entries.data()) v = r.f64();
  return k;
}

inline void save_kernel(const KernelMatrix& k, const std::filesystem::path& path) {
  detail::write_file(path, serialize_kernel(k));
}

inline KernelMatrix load_kernel(const std::filesystem::path& path) {
  return parse_kernel(detail::read_file(path));
}

}  // namespace mzsel
