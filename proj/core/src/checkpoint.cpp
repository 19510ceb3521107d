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

#include "twnet/checkpoint.hpp"

#include <array>
#include <bit>
#include <sstream>

#include "twnet/errors.hpp"
#include "twnet/io_util.hpp"

namespace twnet {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'W', 'N', 'C'};

void put_string(ByteWriter& w, const std::string& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  w.raw(s.data(), s.size());
}

std::string get_string(ByteReader& r) {
  const std::uint32_t n = r.u32();
  std::string s(n, '\0');
  r.read_raw(s.data(), n);
  return s;
}

const std::string& require_key(const Metadata& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw DataError(DataErrorKind::kIncompatible, "checkpoint metadata lacks '" + key + "'");
  return it->second;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(DataErrorKind::kIncompatible, "checkpoint metadata '" + key + "' is not an integer: " + value);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    put_string(w, k);
    put_string(w, v);
  }
  const auto& tensors = ckpt.params.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_string(w, name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.u64(std::bit_cast<std::uint64_t>(v));
  }
  w.u32(crc32_of(w.bytes()));
  write_file_atomic(path, w.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::string src = path.string();
  if (bytes.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw DataError(DataErrorKind::kMalformedHeader, src + ": not a checkpoint file");
  }
  const std::uint32_t stored = read_u32_le(bytes.data() + bytes.size() - 4);
  ByteReader r(std::span(bytes.data(), bytes.size() - 4), src);
  r.skip(kMagic.size());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError(DataErrorKind::kUnsupportedVersion,
                    src + ": unsupported checkpoint version " + std::to_string(version));
  }
  if (crc32_of(std::span(bytes.data(), bytes.size() - 4)) != stored) {
    throw DataError(DataErrorKind::kChecksumMismatch, src + ": checkpoint checksum mismatch");
  }
  Checkpoint ckpt;
  const std::uint32_t meta_count = r.u32();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string k = get_string(r);
    ckpt.metadata[k] = get_string(r);
  }
  const std::uint32_t tensor_count = r.u32();
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    std::string name = get_string(r);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw DataError(DataErrorKind::kMalformedHeader, src + ": tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    const std::size_t n = numel(shape);
    r.require(n * 8, src + ": tensor '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(r.u64());
    ckpt.params.set(name, Tensor::from(std::move(shape), std::move(values), true));
  }
  if (r.remaining() != 0) throw DataError(DataErrorKind::kMalformedHeader, src + ": trailing bytes");
  return ckpt;
}

Metadata to_metadata(const BackboneConfig& config) {
  std::ostringstream heads;
  heads << config.head_channels[0] << ',' << config.head_channels[1] << ',' << config.head_channels[2];
  return {{"class_count", std::to_string(config.class_count)},
          {"decoder_channels", std::to_string(config.decoder_channels)},
          {"head_channels", heads.str()},
          {"warp_layer", std::to_string(static_cast<int>(config.warp_layer))}};
}

BackboneConfig backbone_from_metadata(const Metadata& m) {
  BackboneConfig c;
  c.class_count = parse_int("class_count", require_key(m, "class_count"));
  c.decoder_channels = parse_int("decoder_channels", require_key(m, "decoder_channels"));
  std::istringstream heads(require_key(m, "head_channels"));
  std::string item;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(heads, item, ',')) {
      throw DataError(DataErrorKind::kIncompatible, "checkpoint metadata 'head_channels' needs 3 entries");
    }
    c.head_channels[i] = parse_int("head_channels", item);
  }
  const int layer = parse_int("warp_layer", require_key(m, "warp_layer"));
  if (layer < 1 || layer > 3) throw DataError(DataErrorKind::kIncompatible, "checkpoint warp_layer out of range");
  c.warp_layer = static_cast<WarpLayer>(layer);
  return c;
}

}  // namespace twnet
