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

// Sequence container layout (all integers little-endian):
//
//   header (32 bytes)
//     magic "TWNV" | u32 version | u32 height | u32 width | u32 gop_length
//     u32 class_count | u32 frame_count | u32 crc32(previous 28 bytes)
//   frame record, repeated frame_count times
//     u8 kind (0 = I, 1 = P) | u8 flags (bit 0: label present) | u16 zero
//     u32 payload_bytes | payload | u32 crc32(kind .. payload)
//   payload
//     image: 3 planes of H*W f32
//     P-frames: motion dx plane, motion dy plane (f32), residual 3 planes (f32)
//     label present: H*W u8
#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "twnet/errors.hpp"
#include "twnet/io_util.hpp"
#include "twnet/sequence.hpp"

namespace twnet {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'W', 'N', 'V'};
constexpr std::size_t kHeaderBytes = 32;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

void put_floats(ByteWriter& w, const std::vector<float>& v) {
  for (float f : v) w.u32(std::bit_cast<std::uint32_t>(f));
}

void get_floats(ByteReader& r, std::vector<float>& v, std::size_t n) {
  v.resize(n);
  for (auto& f : v) f = std::bit_cast<float>(r.u32());
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in bounded chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void save_sequence(const GopSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  ByteWriter out;
  out.raw(kMagic.data(), kMagic.size());
  out.u32(kContainerVersion);
  out.u32(static_cast<std::uint32_t>(seq.height));
  out.u32(static_cast<std::uint32_t>(seq.width));
  out.u32(static_cast<std::uint32_t>(seq.gop_length));
  out.u32(static_cast<std::uint32_t>(seq.class_count));
  out.u32(static_cast<std::uint32_t>(seq.frames.size()));
  out.u32(crc32_of(out.bytes()));

  for (const Frame& f : seq.frames) {
    ByteWriter payload;
    put_floats(payload, f.image.data);
    if (!f.is_intra()) {
      put_floats(payload, f.motion->dx);
      put_floats(payload, f.motion->dy);
      put_floats(payload, f.residual->data);
    }
    if (f.label) payload.raw(f.label->data.data(), f.label->data.size());

    ByteWriter record;
    record.u8(static_cast<std::uint8_t>(f.kind));
    record.u8(f.label ? 1 : 0);
    record.u16(0);
    record.u32(static_cast<std::uint32_t>(payload.bytes().size()));
    record.raw(payload.bytes().data(), payload.bytes().size());
    const std::uint32_t crc = crc32_of(record.bytes());
    out.raw(record.bytes().data(), record.bytes().size());
    out.u32(crc);
  }
  write_file_atomic(path, out.bytes());
}

GopSequence load_sequence(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < kHeaderBytes) {
    throw DataError(bytes.size() < kMagic.size() ? DataErrorKind::kMalformedHeader
                                                 : DataErrorKind::kTruncated,
                    path.string() + ": file too short for a sequence header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw DataError(DataErrorKind::kMalformedHeader, path.string() + ": bad magic, not a sequence container");
  }
  ByteReader r(bytes, path.string());
  r.skip(kMagic.size());
  const std::uint32_t version = r.u32();
  GopSequence seq;
  seq.height = static_cast<int>(r.u32());
  seq.width = static_cast<int>(r.u32());
  seq.gop_length = static_cast<int>(r.u32());
  seq.class_count = static_cast<int>(r.u32());
  const std::uint32_t frame_count = r.u32();
  const std::uint32_t header_crc = r.u32();
  if (crc32_of(std::span(bytes.data(), kHeaderBytes - 4)) != header_crc) {
    throw DataError(DataErrorKind::kMalformedHeader, path.string() + ": header checksum mismatch");
  }
  if (version != kContainerVersion) {
    throw DataError(DataErrorKind::kUnsupportedVersion,
                    path.string() + ": unsupported container version " + std::to_string(version) +
                        " (expected " + std::to_string(kContainerVersion) + ")");
  }
  if (seq.height < 1 || seq.width < 1 || seq.gop_length < 1 || seq.class_count < 1 ||
      seq.height > (1 << 15) || seq.width > (1 << 15)) {
    throw DataError(DataErrorKind::kMalformedHeader, path.string() + ": implausible header fields");
  }

  const std::size_t plane = static_cast<std::size_t>(seq.height) * seq.width;
  for (std::uint32_t i = 0; i < frame_count; ++i) {
    const std::size_t start = r.offset();
    const std::string where = path.string() + ": frame " + std::to_string(i);
    r.require(8, where);
    const std::uint8_t kind = r.u8();
    const std::uint8_t flags = r.u8();
    r.u16();
    const std::uint32_t payload_bytes = r.u32();
    r.require(static_cast<std::size_t>(payload_bytes) + 4, where);
    const std::size_t end = r.offset() + payload_bytes;
    const std::uint32_t stored = read_u32_le(bytes.data() + end);
    if (crc32_of(std::span(bytes.data() + start, end - start)) != stored) {
      throw ChecksumError(i, where + ": checksum mismatch");
    }
    if (kind > 1 || (flags & ~1u) != 0) {
      throw DataError(DataErrorKind::kMalformedHeader, where + ": unknown kind or flags");
    }
    Frame f;
    f.kind = static_cast<FrameKind>(kind);
    const bool has_label = flags & 1u;
    const std::size_t expected = plane * 4 * 3 + (kind == 1 ? plane * 4 * 5 : 0) + (has_label ? plane : 0);
    if (payload_bytes != expected) {
      throw DataError(DataErrorKind::kMalformedHeader,
                      where + ": payload size " + std::to_string(payload_bytes) + " != expected " +
                          std::to_string(expected));
    }
    f.image = Image::zeros(3, seq.height, seq.width);
    get_floats(r, f.image.data, plane * 3);
    if (kind == 1) {
      MotionMap mv = MotionMap::zeros(seq.height, seq.width);
      get_floats(r, mv.dx, plane);
      get_floats(r, mv.dy, plane);
      f.motion = std::move(mv);
      ResidualMap res = ResidualMap::zeros(seq.height, seq.width);
      get_floats(r, res.data, plane * 3);
      f.residual = std::move(res);
    }
    if (has_label) {
      LabelMap label = LabelMap::filled(seq.height, seq.width, 0);
      r.read_raw(label.data.data(), plane);
      f.label = std::move(label);
    }
    r.skip(4);
    seq.frames.push_back(std::move(f));
  }
  if (r.offset() != bytes.size()) {
    throw DataError(DataErrorKind::kMalformedHeader, path.string() + ": trailing bytes after last frame");
  }
  seq.validate();
  return seq;
}

}  // namespace twnet
