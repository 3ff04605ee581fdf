// Copyright 2026 The fedguard-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedguard/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedguard/common.h"
#include "test_util.h"

namespace fedguard::data {
namespace {

using test_util::TempPath;

void WriteBytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> BigEndian(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

// Two 2x2 images and their labels, written byte by byte.
void WriteTinyIdx(const std::string& img, const std::string& lab) {
  std::vector<unsigned char> i;
  for (auto v : {0x803u, 2u, 2u, 2u}) {
    auto b = BigEndian(v);
    i.insert(i.end(), b.begin(), b.end());
  }
  i.insert(i.end(), {0, 255, 51, 102, 10, 20, 30, 40});
  WriteBytes(img, i);
  std::vector<unsigned char> l;
  for (auto v : {0x801u, 2u}) {
    auto b = BigEndian(v);
    l.insert(l.end(), b.begin(), b.end());
  }
  l.insert(l.end(), {3, 1});
  WriteBytes(lab, l);
}

TEST(IdxTest, ParsesHandWrittenFiles) {
  const std::string img = TempPath("tiny-images.idx");
  const std::string lab = TempPath("tiny-labels.idx");
  WriteTinyIdx(img, lab);
  const LabeledDataset ds = LoadIdx(img, lab);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(ds.class_count(), 4);
  EXPECT_EQ(ds.Label(0), 3);
  EXPECT_EQ(ds.Label(1), 1);
  EXPECT_FLOAT_EQ(ds.Image(0)[1], 1.0f);
  EXPECT_FLOAT_EQ(ds.Image(0)[2], 51.0f / 255.0f);
  EXPECT_EQ(LoadIdx(img, lab, 10).class_count(), 10);
}

TEST(IdxTest, WriteThenLoadIsExact) {
  const std::string img = TempPath("rt-images.idx");
  const std::string lab = TempPath("rt-labels.idx");
  WriteTinyIdx(img, lab);
  const LabeledDataset ds = LoadIdx(img, lab);
  const std::string img2 = TempPath("rt2-images.idx");
  const std::string lab2 = TempPath("rt2-labels.idx");
  WriteIdx(ds, img2, lab2);
  EXPECT_EQ(LoadIdx(img2, lab2), ds);
}

TEST(IdxTest, ErrorsNameTheFile) {
  const std::string img = TempPath("bad-images.idx");
  const std::string lab = TempPath("bad-labels.idx");
  WriteTinyIdx(img, lab);
  // Truncate the image payload.
  std::filesystem::resize_file(img, 16 + 5);
  try {
    LoadIdx(img, lab);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(img), std::string::npos);
  }
  // Swap the files: bad magic.
  WriteTinyIdx(img, lab);
  EXPECT_THROW(LoadIdx(lab, img), FormatError);
  // Label count mismatch.
  std::vector<unsigned char> l = BigEndian(0x801u);
  auto n = BigEndian(3u);
  l.insert(l.end(), n.begin(), n.end());
  l.insert(l.end(), {1, 1, 1});
  WriteBytes(lab, l);
  EXPECT_THROW(LoadIdx(img, lab), FormatError);
  EXPECT_THROW(LoadIdx(TempPath("missing.idx"), lab), IoError);
}

TEST(SynthTest, ExactClassCountsAndDeterminism) {
  SynthSpec spec;
  spec.classes = 5;
  spec.per_class = 7;
  const LabeledDataset a = SynthDataset(spec, 3);
  EXPECT_EQ(a.size(), 35u);
  for (std::size_t c : a.ClassHistogram()) EXPECT_EQ(c, 7u);
  for (float v : a.images()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(a, SynthDataset(spec, 3));
  EXPECT_NE(a.images(), SynthDataset(spec, 4).images());
}

LabeledDataset Synth(int per_class = 20) {
  SynthSpec spec;
  spec.per_class = per_class;
  return SynthDataset(spec, 1);
}

void ExpectDisjointCover(const LabeledDataset& ds, const std::vector<LabeledDataset>& parts) {
  std::multiset<std::int64_t> seen;
  for (const auto& p : parts) {
    EXPECT_FALSE(p.empty());
    seen.insert(p.ids().begin(), p.ids().end());
  }
  const std::multiset<std::int64_t> all(ds.ids().begin(), ds.ids().end());
  EXPECT_EQ(seen, all);
}

TEST(PartitionTest, IidEvenSplit) {
  const LabeledDataset ds = Synth(10);
  PartitionConfig cfg{PartitionMode::kIid, 1.0, 7, 5};
  const auto parts = Partition(ds, cfg);
  ASSERT_EQ(parts.size(), 7u);
  ExpectDisjointCover(ds, parts);
  // 100 rows over 7 clients: the first two get 15, the rest 14.
  EXPECT_EQ(parts[0].size(), 15u);
  EXPECT_EQ(parts[1].size(), 15u);
  EXPECT_EQ(parts[6].size(), 14u);
}

TEST(PartitionTest, DirichletCoversAndConcentrates) {
  const LabeledDataset ds = Synth(40);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PartitionConfig cfg{PartitionMode::kDirichlet, 0.01, 10, seed};
    const auto parts = Partition(ds, cfg);
    ExpectDisjointCover(ds, parts);
    // With alpha = 0.01 each class lands almost entirely on one client.
    std::size_t dominant = 0;
    for (int c = 0; c < ds.class_count(); ++c) {
      std::size_t best = 0;
      for (const auto& p : parts) best = std::max(best, p.ClassHistogram()[static_cast<std::size_t>(c)]);
      dominant += best;
    }
    EXPECT_GE(static_cast<double>(dominant) / ds.size(), 0.8);
  }
}

TEST(PartitionTest, LargeAlphaIsBalanced) {
  const LabeledDataset ds = Synth(100);
  PartitionConfig cfg{PartitionMode::kDirichlet, 1000.0, 4, 2};
  const auto parts = Partition(ds, cfg);
  ExpectDisjointCover(ds, parts);
  for (const auto& p : parts) {
    for (std::size_t c : p.ClassHistogram()) EXPECT_NEAR(static_cast<double>(c), 25.0, 8.0);
  }
}

TEST(PartitionTest, DeterministicAndErrors) {
  const LabeledDataset ds = Synth(5);
  PartitionConfig cfg{PartitionMode::kDirichlet, 0.5, 6, 9};
  EXPECT_EQ(PartitionIndices(ds, cfg), PartitionIndices(ds, cfg));
  cfg.client_count = 51;
  EXPECT_THROW(Partition(ds, cfg), InfeasibleError);
  cfg.client_count = 3;
  cfg.alpha = 0.0;
  EXPECT_THROW(Partition(ds, cfg), ConfigError);
}

TEST(SeedSampleTest, FloorOfOnePerClass) {
  const LabeledDataset ds = Synth(200);
  const LabeledDataset seed = SampleSeed(ds, 0.0001, 3);
  EXPECT_EQ(seed.size(), 10u);
  for (std::size_t c : seed.ClassHistogram()) EXPECT_EQ(c, 1u);
  const std::set<std::int64_t> ids(ds.ids().begin(), ds.ids().end());
  for (auto id : seed.ids()) EXPECT_TRUE(ids.count(id));
}

TEST(SeedSampleTest, FractionSizeAndFullPermutation) {
  const LabeledDataset ds = Synth(20);
  EXPECT_EQ(SampleSeed(ds, 0.25, 1).size(), 50u);
  const LabeledDataset all = SampleSeed(ds, 1.0, 1);
  std::multiset<std::int64_t> a(all.ids().begin(), all.ids().end());
  std::multiset<std::int64_t> b(ds.ids().begin(), ds.ids().end());
  EXPECT_EQ(a, b);
  EXPECT_THROW(SampleSeed(ds, 0.0, 1), ConfigError);
}

TEST(ReplicateTest, BackToBackCopies) {
  const LabeledDataset ds = Synth(1);
  const LabeledDataset rep = Replicate(ds, 3);
  ASSERT_EQ(rep.size(), 30u);
  for (std::size_t i = 0; i < rep.size(); ++i) {
    EXPECT_EQ(rep.Id(i), ds.Id(i % 10));
    EXPECT_EQ(rep.Label(i), ds.Label(i % 10));
  }
  EXPECT_THROW(Replicate(ds, 0), ConfigError);
}

TEST(DatasetTest, ConstructorValidates) {
  EXPECT_THROW(LabeledDataset({1, 2, 2}, 2, std::vector<float>(7), {0, 1}), DimensionError);
  EXPECT_THROW(LabeledDataset({1, 1, 1}, 2, {0.0f, 1.0f}, {0, 2}), DataError);
}

}  // namespace
}  // namespace fedguard::data
