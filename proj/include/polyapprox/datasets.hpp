// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "polyapprox/container.hpp"
#include "polyapprox/error.hpp"
#include "polyapprox/tensor.hpp"

namespace polyapprox {

/// N images of identical shape, pixels in [0, 1], labels 0..9.
struct Dataset {
  Shape image_shape;
  std::vector<double> pixels;  // N x prod(image_shape)
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t image_size() const { return shape_size(image_shape); }
  Tensor image(std::size_t i) const {
    const std::size_t n = image_size();
    return Tensor(image_shape, std::vector<double>(pixels.begin() + i * n,
                                                   pixels.begin() + (i + 1) * n));
  }
  /// Examples [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) {
      throw Error(errc::kInvalidArgument, "dataset slice out of range");
    }
    Dataset d;
    d.image_shape = image_shape;
    const std::size_t n = image_size();
    d.pixels.assign(pixels.begin() + begin * n, pixels.begin() + end * n);
    d.labels.assign(labels.begin() + begin, labels.begin() + end);
    return d;
  }
};

namespace detail {

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// IDX images (ubyte, rank 3) and labels (ubyte, rank 1).
inline Dataset parse_mnist(const std::vector<std::uint8_t>& img,
                           const std::vector<std::uint8_t>& lab) {
  if (img.size() < 16) throw Error(errc::kTruncated, "IDX images: header truncated");
  if (lab.size() < 8) throw Error(errc::kTruncated, "IDX labels: header truncated");
  if (detail::be32(img, 0) != kIdxImagesMagic) {
    throw Error(errc::kBadMagic, "IDX images: bad magic");
  }
  if (detail::be32(lab, 0) != kIdxLabelsMagic) {
    throw Error(errc::kBadMagic, "IDX labels: bad magic");
  }
  const std::size_t n = detail::be32(img, 4), rows = detail::be32(img, 8),
                    cols = detail::be32(img, 12);
  const std::size_t nl = detail::be32(lab, 4);
  if (n != nl) {
    throw Error(errc::kCountMismatch, "IDX: " + std::to_string(n) + " images but " +
                                          std::to_string(nl) + " labels");
  }
  if (rows == 0 || cols == 0) throw Error(errc::kBadMagic, "IDX images: zero dimension");
  const std::size_t per = rows * cols;
  if ((img.size() - 16) / per < n || img.size() - 16 < n * per) {
    throw Error(errc::kTruncated, "IDX images: expected " + std::to_string(n) +
                                      " images, file truncated");
  }
  if (lab.size() - 8 < n) throw Error(errc::kTruncated, "IDX labels: file truncated");
  Dataset d;
  d.image_shape = {rows, cols, 1};
  d.pixels.resize(n * per);
  for (std::size_t i = 0; i < n * per; ++i) d.pixels[i] = img[16 + i] / 255.0;
  d.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  for (std::uint8_t l : d.labels) {
    if (l > 9) throw Error(errc::kBadMagic, "IDX labels: label out of range");
  }
  return d;
}

inline Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  return parse_mnist(detail::read_file(images_path), detail::read_file(labels_path));
}

inline constexpr std::size_t kCifarRecord = 3073;

/// CIFAR-10 binary records: label byte, then 1024 red, 1024 green and
/// 1024 blue bytes (row-major). Output images are 32 x 32 x 3 (H, W, RGB).
inline Dataset parse_cifar10(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  if (bytes.size() % kCifarRecord != 0) {
    throw Error(errc::kTruncated, what + ": size " + std::to_string(bytes.size()) +
                                      " is not a multiple of 3073");
  }
  Dataset d;
  d.image_shape = {32, 32, 3};
  const std::size_t n = bytes.size() / kCifarRecord;
  if (n == 0) std::cerr << "warning: " << what << " holds no records\n";
  d.pixels.resize(n * 3072);
  d.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecord;
    if (rec[0] > 9) throw Error(errc::kBadMagic, what + ": label out of range");
    d.labels[r] = rec[0];
    double* out = d.pixels.data() + r * 3072;
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t p = 0; p < 1024; ++p) out[p * 3 + ch] = rec[1 + ch * 1024 + p] / 255.0;
  }
  return d;
}

inline Dataset concat(std::vector<Dataset> parts) {
  Dataset out;
  for (auto& p : parts) {
    if (out.image_shape.empty()) out.image_shape = p.image_shape;
    if (p.image_shape != out.image_shape && p.size() != 0) {
      throw Error(errc::kShapeMismatch, "concat: image shapes differ");
    }
    out.pixels.insert(out.pixels.end(), p.pixels.begin(), p.pixels.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

inline Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  std::vector<Dataset> parts;
  for (const auto& p : batch_paths) parts.push_back(parse_cifar10(detail::read_file(p), p));
  Dataset d = concat(std::move(parts));
  if (d.image_shape.empty()) d.image_shape = {32, 32, 3};
  return d;
}

struct Split {
  Dataset train;
  Dataset test;
};

inline constexpr const char* kDataEnv = "POLYAPPROX_DATA";

/// Dataset root from POLYAPPROX_DATA, else `fallback`.
inline std::string data_root(const std::string& fallback = "data") {
  const char* env = std::getenv(kDataEnv);
  return env && *env ? std::string(env) : fallback;
}

inline void require_files(const std::vector<std::string>& paths, const std::string& dataset) {
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) {
      throw Error(errc::kMissingDataset,
                  dataset + " file " + p + " not found; run tools/fetch_data.sh or set " +
                      kDataEnv + " to the directory holding it");
    }
  }
}

/// First `train_count` official training images and the official test set.
inline Split mnist_split(const std::string& root, std::size_t train_count = 50000) {
  const std::string dir = root + "/mnist/";
  const std::vector<std::string> files{
      dir + "train-images-idx3-ubyte", dir + "train-labels-idx1-ubyte",
      dir + "t10k-images-idx3-ubyte", dir + "t10k-labels-idx1-ubyte"};
  require_files(files, "MNIST");
  Dataset train = load_mnist(files[0], files[1]);
  Split s;
  s.train = train.slice(0, std::min(train_count, train.size()));
  s.test = load_mnist(files[2], files[3]);
  return s;
}

inline Split cifar10_split(const std::string& root) {
  const std::string dir = root + "/cifar-10-batches-bin/";
  std::vector<std::string> train_files;
  for (int i = 1; i <= 5; ++i) train_files.push_back(dir + "data_batch_" + std::to_string(i) + ".bin");
  const std::string test_file = dir + "test_batch.bin";
  std::vector<std::string> all = train_files;
  all.push_back(test_file);
  require_files(all, "CIFAR-10");
  return {load_cifar10(train_files), load_cifar10({test_file})};
}

}  // namespace polyapprox
