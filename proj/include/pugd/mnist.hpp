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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pugd/models.hpp"

namespace pugd {

/// Image classification data kept as raw bytes; pixel() and images() expose
/// the values scaled into [0, 1].
struct Dataset {
  std::string name;
  std::size_t rows = 0;  // samples
  std::size_t cols = 0;  // pixels per sample
  std::size_t num_classes = 10;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return rows; }
  double pixel(std::size_t row, std::size_t col) const {
    return pixels[row * cols + col] / 255.0;
  }
  Matrix images() const;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label pair. Either file may be gzip-compressed.
/// Throws BadMagic, TruncatedFile or CountMismatch.
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);

/// The first n samples in file order.
Dataset subset(const Dataset& ds, std::size_t n);

/// Inputs are the scaled pixels, targets are one-hot labels.
Batch to_batch(const Dataset& ds);
Batch to_batch(const Dataset& ds, std::span<const std::size_t> rows);

/// Locates <root>/<stem>-idx?-ubyte with or without a .gz suffix.
std::filesystem::path find_idx_file(const std::filesystem::path& root,
                                    const std::string& stem);

/// Loads "train" (train-*) or "test" (t10k-*) from a directory using the
/// canonical MNIST file names.
Dataset load_mnist_split(const std::filesystem::path& root,
                         const std::string& split);

}  // namespace pugd
