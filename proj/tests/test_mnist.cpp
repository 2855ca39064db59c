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

#include <gtest/gtest.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <zlib.h>

#include "pugd/errors.hpp"
#include "pugd/mnist.hpp"

using namespace pugd;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PUGD_TEST_DATA "/mnist100";

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t count,
                                      std::uint32_t rows, std::uint32_t cols,
                                      std::size_t pixel_bytes) {
  std::vector<unsigned char> out;
  put_u32(out, magic);
  put_u32(out, count);
  put_u32(out, rows);
  put_u32(out, cols);
  for (std::size_t i = 0; i < pixel_bytes; ++i) out.push_back(static_cast<unsigned char>(i * 37 % 256));
  return out;
}

std::vector<unsigned char> idx_labels(std::uint32_t magic, std::vector<unsigned char> labels,
                                      std::uint32_t count) {
  std::vector<unsigned char> out;
  put_u32(out, magic);
  put_u32(out, count);
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

class MnistFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pugd_mnist_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return p;
  }

  fs::path write_gz(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = dir_ / name;
    gzFile f = gzopen(p.c_str(), "wb");
    gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST(MnistFixtures, LoadsFirstHundred) {
  const Dataset train = load_mnist_split(kFixtures, "train");
  EXPECT_EQ(train.size(), 100u);
  EXPECT_EQ(train.cols, 784u);
  const std::vector<std::uint8_t> first{5, 0, 4, 1, 9};
  EXPECT_TRUE(std::equal(first.begin(), first.end(), train.labels.begin()));

  const Dataset test = load_mnist_split(kFixtures, "test");
  EXPECT_EQ(test.size(), 100u);
  const std::vector<std::uint8_t> tfirst{7, 2, 1, 0, 4};
  EXPECT_TRUE(std::equal(tfirst.begin(), tfirst.end(), test.labels.begin()));
  for (auto l : train.labels) EXPECT_LT(l, 10);
}

TEST(MnistFixtures, BatchScalingAndOneHot) {
  const Dataset train = load_mnist_split(kFixtures, "train");
  const Batch b = to_batch(train);
  ASSERT_EQ(b.inputs.rows(), 100);
  ASSERT_EQ(b.inputs.cols(), 784);
  EXPECT_LE(b.inputs.maxCoeff(), 1.0);
  EXPECT_GE(b.inputs.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(b.inputs(3, 200), train.pixels[3 * 784 + 200] / 255.0);
  for (Eigen::Index i = 0; i < b.targets.rows(); ++i) {
    EXPECT_DOUBLE_EQ(b.targets.row(i).sum(), 1.0);
    EXPECT_EQ(b.targets(i, train.labels[static_cast<std::size_t>(i)]), 1.0);
  }
  const std::vector<std::size_t> rows{4, 0};
  const Batch picked = to_batch(train, rows);
  EXPECT_EQ(picked.inputs.row(0), b.inputs.row(4));
  EXPECT_EQ(picked.targets.row(1), b.targets.row(0));
}

TEST(MnistFixtures, SubsetIsPrefix) {
  const Dataset train = load_mnist_split(kFixtures, "train");
  const Dataset s50 = subset(train, 50);
  EXPECT_EQ(s50.size(), 50u);
  EXPECT_TRUE(std::equal(s50.pixels.begin(), s50.pixels.end(), train.pixels.begin()));
  EXPECT_EQ(subset(train, 100).pixels, train.pixels);
  EXPECT_EQ(subset(subset(train, 80), 50).pixels, s50.pixels);
  EXPECT_EQ(subset(subset(train, 80), 50).labels, s50.labels);
  EXPECT_THROW(subset(train, 101), OutOfRange);
}

TEST(MnistCanonical, HeaderCounts) {
  const char* root = std::getenv("PUGD_DATA_ROOT");
  if (!root || !fs::exists(root)) GTEST_SKIP() << "PUGD_DATA_ROOT not set";
  const Dataset train = load_mnist_split(root, "train");
  EXPECT_EQ(train.size(), 60000u);
  EXPECT_EQ(train.cols, 784u);
  EXPECT_EQ(load_mnist_split(root, "test").size(), 10000u);
  const Dataset fixture = load_mnist_split(kFixtures, "train");
  EXPECT_EQ(subset(train, 100).pixels, fixture.pixels);
  EXPECT_EQ(subset(train, 100).labels, fixture.labels);
}

TEST_F(MnistFiles, RawAndGzipReadIdentically) {
  const auto img = idx_images(kIdxImagesMagic, 3, 2, 2, 12);
  const auto lab = idx_labels(kIdxLabelsMagic, {1, 2, 3}, 3);
  const Dataset raw = load_mnist_idx(write("i", img), write("l", lab));
  const Dataset gz = load_mnist_idx(write_gz("i.gz", img), write_gz("l.gz", lab));
  EXPECT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw.cols, 4u);
  EXPECT_EQ(raw.pixels, gz.pixels);
  EXPECT_EQ(raw.labels, gz.labels);
  EXPECT_EQ(raw.pixels[5], static_cast<std::uint8_t>(5 * 37 % 256));
}

TEST_F(MnistFiles, LabelsPassedAsImagesIsBadMagic) {
  const auto img = idx_images(kIdxImagesMagic, 2, 2, 2, 8);
  const auto lab = idx_labels(kIdxLabelsMagic, {1, 2}, 2);
  const fs::path i = write("i", img), l = write("l", lab);
  EXPECT_THROW(load_mnist_idx(l, l), BadMagic);
  EXPECT_THROW(load_mnist_idx(i, i), BadMagic);  // magic 2051 in the labels slot
}

TEST_F(MnistFiles, TruncatedPixels) {
  const auto img = idx_images(kIdxImagesMagic, 3, 2, 2, 10);
  const auto lab = idx_labels(kIdxLabelsMagic, {1, 2, 3}, 3);
  EXPECT_THROW(load_mnist_idx(write("i", img), write("l", lab)), TruncatedFile);
}

TEST_F(MnistFiles, TruncatedHeader) {
  std::vector<unsigned char> img;
  put_u32(img, kIdxImagesMagic);
  put_u32(img, 1);
  const auto lab = idx_labels(kIdxLabelsMagic, {1}, 1);
  EXPECT_THROW(load_mnist_idx(write("i", img), write("l", lab)), TruncatedFile);
}

TEST_F(MnistFiles, CountMismatch) {
  const auto img = idx_images(kIdxImagesMagic, 3, 2, 2, 12);
  const auto lab = idx_labels(kIdxLabelsMagic, {1, 2}, 2);
  EXPECT_THROW(load_mnist_idx(write("i", img), write("l", lab)), CountMismatch);
}

TEST_F(MnistFiles, LabelOutOfRange) {
  const auto img = idx_images(kIdxImagesMagic, 2, 2, 2, 8);
  const auto lab = idx_labels(kIdxLabelsMagic, {1, 12}, 2);
  EXPECT_THROW(load_mnist_idx(write("i", img), write("l", lab)), OutOfRange);
}

TEST_F(MnistFiles, MissingFile) {
  EXPECT_ANY_THROW(load_mnist_idx(dir_ / "nope", dir_ / "nope2"));
  EXPECT_ANY_THROW(load_mnist_split(dir_, "train"));
}
