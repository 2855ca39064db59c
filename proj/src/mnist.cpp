/*
 * Copyright 2026 The pugd-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pugd/mnist.hpp"

#include <algorithm>
#include <array>
#include <memory>

#include <zlib.h>

#include "pugd/errors.hpp"

namespace pugd {

namespace {

// gzread passes uncompressed files through unchanged.
class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path)
      : path_(path.string()), file_(gzopen(path_.c_str(), "rb"), &gzclose) {
    if (!file_) throw TruncatedFile("cannot open '" + path_ + "'");
  }

  void read(void* dst, std::size_t n) {
    auto* out = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(file_.get(), out, chunk);
      if (got <= 0) {
        throw TruncatedFile("'" + path_ + "' ended before all declared data");
      }
      out += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_u32_be() {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

}  // namespace

Matrix Dataset::images() const {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = pixels[i] / 255.0;
  return m;
}

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path) {
  GzReader images(images_path);
  const std::uint32_t image_magic = images.read_u32_be();
  if (image_magic != kIdxImagesMagic) {
    throw BadMagic("'" + images.path() + "' is not an IDX image file (magic " +
                   std::to_string(image_magic) + ")");
  }
  GzReader labels(labels_path);
  const std::uint32_t label_magic = labels.read_u32_be();
  if (label_magic != kIdxLabelsMagic) {
    throw BadMagic("'" + labels.path() + "' is not an IDX label file (magic " +
                   std::to_string(label_magic) + ")");
  }

  const std::uint32_t count = images.read_u32_be();
  const std::uint32_t height = images.read_u32_be();
  const std::uint32_t width = images.read_u32_be();
  const std::uint32_t label_count = labels.read_u32_be();
  if (count != label_count) {
    throw CountMismatch(std::to_string(count) + " images but " +
                        std::to_string(label_count) + " labels");
  }

  Dataset ds;
  ds.name = images_path.filename().string();
  ds.rows = count;
  ds.cols = std::size_t{height} * width;
  ds.pixels.resize(ds.rows * ds.cols);
  images.read(ds.pixels.data(), ds.pixels.size());
  ds.labels.resize(ds.rows);
  labels.read(ds.labels.data(), ds.labels.size());
  for (std::uint8_t label : ds.labels) {
    if (label >= ds.num_classes) {
      throw OutOfRange("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(ds.num_classes) + ")");
    }
  }
  return ds;
}

Dataset subset(const Dataset& ds, std::size_t n) {
  if (n > ds.rows) {
    throw OutOfRange("subset of " + std::to_string(n) + " from a dataset of " +
                     std::to_string(ds.rows));
  }
  Dataset out;
  out.name = ds.name;
  out.rows = n;
  out.cols = ds.cols;
  out.num_classes = ds.num_classes;
  out.pixels.assign(ds.pixels.begin(),
                    ds.pixels.begin() + static_cast<std::ptrdiff_t>(n * ds.cols));
  out.labels.assign(ds.labels.begin(),
                    ds.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Batch to_batch(const Dataset& ds) {
  Batch b;
  b.inputs = ds.images();
  b.targets = Matrix::Zero(static_cast<Eigen::Index>(ds.rows),
                           static_cast<Eigen::Index>(ds.num_classes));
  for (std::size_t i = 0; i < ds.rows; ++i) {
    b.targets(static_cast<Eigen::Index>(i), ds.labels[i]) = 1.0;
  }
  return b;
}

Batch to_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.inputs.resize(n, static_cast<Eigen::Index>(ds.cols));
  b.targets = Matrix::Zero(n, static_cast<Eigen::Index>(ds.num_classes));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    if (r >= ds.rows) throw OutOfRange("batch row " + std::to_string(r));
    for (std::size_t j = 0; j < ds.cols; ++j) {
      b.inputs(i, static_cast<Eigen::Index>(j)) = ds.pixel(r, j);
    }
    b.targets(i, ds.labels[r]) = 1.0;
  }
  return b;
}

std::filesystem::path find_idx_file(const std::filesystem::path& root,
                                    const std::string& stem) {
  for (const char* kind : {"idx3", "idx1"}) {
    for (const char* suffix : {"", ".gz"}) {
      auto p = root / (stem + "-" + kind + "-ubyte" + suffix);
      if (std::filesystem::exists(p)) return p;
    }
  }
  throw MissingArtifact("no IDX file for '" + stem + "' under '" +
                        root.string() + "'");
}

Dataset load_mnist_split(const std::filesystem::path& root,
                         const std::string& split) {
  std::string prefix;
  if (split == "train") {
    prefix = "train";
  } else if (split == "test") {
    prefix = "t10k";
  } else {
    throw ConfigError("unknown MNIST split '" + split + "'");
  }
  Dataset ds = load_mnist_idx(find_idx_file(root, prefix + "-images"),
                              find_idx_file(root, prefix + "-labels"));
  ds.name = "mnist-" + split;
  return ds;
}

}  // namespace pugd
