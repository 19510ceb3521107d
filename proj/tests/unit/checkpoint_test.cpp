/* Copyright 2026 The TWNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "twnet/checkpoint.hpp"
#include "twnet/errors.hpp"
#include "twnet/io_util.hpp"

namespace twnet {
namespace {

namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("twnet_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    Rng rng(3, "init");
    ckpt_.params = init_keyframe_params(BackboneConfig{}, rng);
    ckpt_.metadata = to_metadata(BackboneConfig{});
    ckpt_.metadata["phase"] = "keyframe";
    ckpt_.metadata["note"] = "with spaces = and \n newline";
  }
  void TearDown() override { fs::remove_all(dir_); }

  DataErrorKind load_kind(const std::vector<std::uint8_t>& bytes) {
    const fs::path p = dir_ / "bad.ckpt";
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    try {
      load_checkpoint(p);
    } catch (const DataError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "load succeeded";
    return DataErrorKind::kEmpty;
  }

  fs::path dir_;
  Checkpoint ckpt_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  save_checkpoint(dir_ / "a.ckpt", ckpt_);
  const Checkpoint back = load_checkpoint(dir_ / "a.ckpt");
  EXPECT_EQ(back.metadata, ckpt_.metadata);
  ASSERT_EQ(back.params.size(), ckpt_.params.size());
  for (const auto& [name, t] : ckpt_.params.tensors()) {
    const Tensor& u = back.params.get(name);
    EXPECT_EQ(u.shape(), t.shape());
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), u.values().begin(), u.values().end()));
  }
  save_checkpoint(dir_ / "b.ckpt", back);
  EXPECT_EQ(read_file(dir_ / "a.ckpt"), read_file(dir_ / "b.ckpt"));
}

TEST_F(CheckpointTest, BackboneMetadataRoundTrip) {
  BackboneConfig c;
  c.head_channels = {4, 6, 8};
  c.decoder_channels = 5;
  c.class_count = 3;
  c.warp_layer = WarpLayer::kLayer2;
  const BackboneConfig d = backbone_from_metadata(to_metadata(c));
  EXPECT_EQ(d.head_channels, c.head_channels);
  EXPECT_EQ(d.decoder_channels, 5);
  EXPECT_EQ(d.class_count, 3);
  EXPECT_EQ(d.warp_layer, WarpLayer::kLayer2);
  Metadata m = to_metadata(c);
  m.erase("decoder_channels");
  EXPECT_THROW(backbone_from_metadata(m), DataError);
}

TEST_F(CheckpointTest, CorruptionIsDetected) {
  save_checkpoint(dir_ / "a.ckpt", ckpt_);
  const auto good = read_file(dir_ / "a.ckpt");

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x10;
  EXPECT_EQ(load_kind(flipped), DataErrorKind::kChecksumMismatch);

  auto magic = good;
  magic[1] = 'x';
  EXPECT_EQ(load_kind(magic), DataErrorKind::kMalformedHeader);

  auto version = good;
  version[4] = 9;
  const std::uint32_t crc = crc32_of(std::span(version.data(), version.size() - 4));
  for (int k = 0; k < 4; ++k) version[version.size() - 4 + k] = static_cast<std::uint8_t>(crc >> (8 * k));
  EXPECT_EQ(load_kind(version), DataErrorKind::kUnsupportedVersion);

  EXPECT_NE(load_kind(std::vector<std::uint8_t>(good.begin(), good.begin() + 6)), DataErrorKind::kEmpty);
}

TEST_F(CheckpointTest, SaveReplacesAtomically) {
  save_checkpoint(dir_ / "a.ckpt", ckpt_);
  Checkpoint other = ckpt_;
  other.metadata["phase"] = "nkfc";
  save_checkpoint(dir_ / "a.ckpt", other);
  EXPECT_EQ(load_checkpoint(dir_ / "a.ckpt").metadata.at("phase"), "nkfc");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  EXPECT_THROW(save_checkpoint(dir_ / "missing" / "a.ckpt", ckpt_), DataError);
}

}  // namespace
}  // namespace twnet
