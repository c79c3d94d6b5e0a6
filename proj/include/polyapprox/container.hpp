// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian binary container for a CoeffStore ("PWC1") and the 8-bit
// fixed-point export ("PWQ8") used for storage accounting.
//
// PWC1 layout, all integers unsigned little-endian, reals IEEE-754 binary64:
//   char[4] "PWC1"   u32 layer_count
//   per layer:
//     u32 degree        (0 = stored verbatim)
//     u32 group_size
//     u64 group_count   (fitted groups)
//     f64 coefficients[group_count * (degree + 1)]
//     u8  kind          (0 dense, 1 conv)
//     u8  axis          (0 filter-row, 1 contiguous-flat)
//     u16 reserved = 0
//     u32 rank          u64 dims[rank]
//     u64 exact_count   f64 exact[exact_count]
//     u64 bias_count    f64 bias[bias_count]
//
// PWQ8 layout:
//   char[4] "PWQ8"   u32 layer_count
//   per layer: u32 degree, u32 group_size, f64 scale, u64 count, i8 q[count]
//   where q holds coefficients followed by exact values, value ~= q * scale.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "polyapprox/error.hpp"
#include "polyapprox/projection.hpp"

namespace polyapprox {

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, const char* what) : d_(data), what_(what) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  void magic(const char* m) {
    need(4);
    if (std::memcmp(d_.data() + pos_, m, 4) != 0) {
      throw Error(errc::kCorruptContainer, std::string(what_) + ": bad magic, expected " + m);
    }
    pos_ += 4;
  }
  std::size_t remaining() const { return d_.size() - pos_; }
  // Guards against absurd counts before allocating.
  void need(std::uint64_t n) const {
    if (n > remaining()) {
      throw Error(errc::kCorruptContainer, std::string(what_) + ": truncated at byte " +
                                               std::to_string(pos_));
    }
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(d_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> d_;
  std::size_t pos_ = 0;
  const char* what_;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(errc::kIo, "write failed for " + path);
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const CoeffStore& store) {
  detail::ByteWriter w;
  w.bytes("PWC1", 4);
  w.u32(static_cast<std::uint32_t>(store.layers.size()));
  for (const LayerCoeffs& lc : store.layers) {
    const std::size_t ncoef = static_cast<std::size_t>(lc.scheme.degree) + 1;
    w.u32(static_cast<std::uint32_t>(lc.scheme.degree));
    w.u32(static_cast<std::uint32_t>(lc.scheme.group_size));
    w.u64(lc.scheme.enabled() ? lc.coefficients.size() / ncoef : 0);
    for (double c : lc.coefficients) w.f64(c);
    w.u8(lc.conv ? 1 : 0);
    w.u8(lc.scheme.axis == GroupAxis::filter_row ? 0 : 1);
    w.u16(0);
    w.u32(static_cast<std::uint32_t>(lc.weight_shape.size()));
    for (std::size_t d : lc.weight_shape) w.u64(d);
    w.u64(lc.exact.size());
    for (double v : lc.exact) w.f64(v);
    w.u64(lc.bias.size());
    for (double v : lc.bias) w.f64(v);
  }
  return w.take();
}

inline CoeffStore deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "coefficient container");
  r.magic("PWC1");
  const std::uint32_t nlayers = r.u32();
  CoeffStore store;
  for (std::uint32_t li = 0; li < nlayers; ++li) {
    LayerCoeffs lc;
    const std::uint32_t degree = r.u32();
    if (degree > static_cast<std::uint32_t>(kMaxDegree)) {
      throw Error(errc::kCorruptContainer, "layer " + std::to_string(li) + ": degree " +
                                               std::to_string(degree) + " out of range");
    }
    lc.scheme.degree = static_cast<int>(degree);
    lc.scheme.group_size = r.u32();
    const std::uint64_t groups = r.u64();
    const std::uint64_t ncoef = groups * (degree + 1);
    r.need(ncoef * 8);
    lc.coefficients.resize(ncoef);
    for (double& c : lc.coefficients) c = r.f64();
    const std::uint8_t kind = r.u8();
    const std::uint8_t axis = r.u8();
    r.u16();
    if (kind > 1 || axis > 1) {
      throw Error(errc::kCorruptContainer, "layer " + std::to_string(li) + ": bad kind/axis tag");
    }
    lc.conv = kind == 1;
    lc.scheme.axis = axis == 0 ? GroupAxis::filter_row : GroupAxis::contiguous_flat;
    const std::uint32_t rank = r.u32();
    if (rank != (lc.conv ? 4u : 2u)) {
      throw Error(errc::kCorruptContainer, "layer " + std::to_string(li) + ": rank " +
                                               std::to_string(rank) + " invalid");
    }
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint64_t d = r.u64();
      if (d == 0 || d > (1u << 24)) {
        throw Error(errc::kCorruptContainer, "layer " + std::to_string(li) + ": bad dimension");
      }
      lc.weight_shape.push_back(static_cast<std::size_t>(d));
    }
    const std::uint64_t nexact = r.u64();
    r.need(nexact * 8);
    lc.exact.resize(nexact);
    for (double& v : lc.exact) v = r.f64();
    const std::uint64_t nbias = r.u64();
    r.need(nbias * 8);
    lc.bias.resize(nbias);
    for (double& v : lc.bias) v = r.f64();
    try {
      check_layer_coeffs(lc, lc.layout());
    } catch (const Error& e) {
      throw Error(errc::kCorruptContainer, "layer " + std::to_string(li) + ": " + e.what());
    }
    store.layers.push_back(std::move(lc));
  }
  if (r.remaining() != 0) {
    throw Error(errc::kCorruptContainer, "coefficient container: trailing bytes");
  }
  return store;
}

inline void save_coeff_store(const CoeffStore& store, const std::string& path) {
  detail::write_file(path, serialize(store));
}

inline CoeffStore load_coeff_store(const std::string& path) {
  return deserialize(detail::read_file(path));
}

/// Symmetric per-layer 8-bit quantization: scale = max|v| / 127.
struct Q8Layer {
  int degree = 0;
  std::size_t group_size = 0;
  double scale = 0.0;
  std::vector<std::int8_t> values;

  std::vector<double> dequantized() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::int8_t q : values) out.push_back(static_cast<double>(q) * scale);
    return out;
  }
};

inline Q8Layer quantize_q8(const LayerCoeffs& lc) {
  Q8Layer q;
  q.degree = lc.scheme.degree;
  q.group_size = lc.scheme.group_size;
  std::vector<double> all = lc.coefficients;
  all.insert(all.end(), lc.exact.begin(), lc.exact.end());
  double mx = 0.0;
  for (double v : all) mx = std::max(mx, std::abs(v));
  q.scale = mx > 0.0 ? mx / 127.0 : 1.0;
  q.values.reserve(all.size());
  for (double v : all) {
    const double s = std::round(v / q.scale);
    q.values.push_back(static_cast<std::int8_t>(std::clamp(s, -127.0, 127.0)));
  }
  return q;
}

inline std::vector<std::uint8_t> export_q8(const CoeffStore& store) {
  detail::ByteWriter w;
  w.bytes("PWQ8", 4);
  w.u32(static_cast<std::uint32_t>(store.layers.size()));
  for (const LayerCoeffs& lc : store.layers) {
    const Q8Layer q = quantize_q8(lc);
    w.u32(static_cast<std::uint32_t>(q.degree));
    w.u32(static_cast<std::uint32_t>(q.group_size));
    w.f64(q.scale);
    w.u64(q.values.size());
    for (std::int8_t v : q.values) w.u8(static_cast<std::uint8_t>(v));
  }
  return w.take();
}

inline std::vector<Q8Layer> import_q8(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "q8 export");
  r.magic("PWQ8");
  const std::uint32_t n = r.u32();
  std::vector<Q8Layer> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    Q8Layer q;
    q.degree = static_cast<int>(r.u32());
    q.group_size = r.u32();
    q.scale = r.f64();
    const std::uint64_t count = r.u64();
    r.need(count);
    q.values.resize(count);
    for (auto& v : q.values) v = static_cast<std::int8_t>(r.u8());
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace polyapprox
