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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twnet/metrics.hpp"
#include "twnet/model.hpp"
#include "twnet/sequence.hpp"

namespace twnet {

// One way of segmenting non-key frames.
struct Variant {
  std::string name;
  BackboneConfig config;
  NkfcFlags flags;
  NetworkParams nkfc_params;  // "nkfc.", "cfr.", "rga." tensors; empty for raw warping
};

// Warps the key frame's final class scores along the motion (Layer3 warping,
// no correction). Needs no parameters beyond the key-frame CNN.
Variant raw_warp_variant(const BackboneConfig& key_config);

// The non-key-frame CNN with heads and decoder copied from the key-frame CNN
// and no second training step.
Variant untrained_nkfc_variant(const BackboneConfig& config, const NetworkParams& key_params);

struct SweepRow {
  int distance = 0;  // frames since the key frame; 0 is the key frame itself
  std::string variant;
  ConfusionMatrix confusion{1};
  IouReport report;
};

// For every GOP, segments the I-frame with the key-frame CNN and then chains
// non-key frames 1..max_distance for each variant, scoring the frame at each
// distance. Rows are ordered by distance, then by variant order. `jobs` bounds
// worker threads; results do not depend on it.
std::vector<SweepRow> sweep_distance(std::span<const GopSequence> data, const NetworkParams& key_params,
                                     std::span<const Variant> variants, int max_distance, int jobs = 1);

// Multiply-accumulate counts; one multiply-add counts as one.
struct MacCount {
  std::int64_t conv = 0;
  std::int64_t interpolation = 0;  // warping, resizing and upsampling taps
  std::int64_t elementwise = 0;    // attention gating
  std::int64_t total() const { return conv + interpolation + elementwise; }
};

enum class PathKind { kKey, kNonKey };

MacCount count_macs(const BackboneConfig& config, PathKind path, NkfcFlags flags, int height, int width);

struct LatencyStats {
  std::vector<double> samples_ms;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

LatencyStats latency_stats(std::vector<double> samples_ms);

struct BenchReport {
  LatencyStats key;
  LatencyStats non_key;
  // Summed sub-timer totals over all non-key samples, in milliseconds.
  double non_key_total_ms = 0.0;
  double heads_ms = 0.0;
  double warp_ms = 0.0;
  double correction_ms = 0.0;
  double fusion_ms = 0.0;
};

// Times `repeats` key-frame and non-key-frame passes over the first GOP of
// `seq` after one warm-up pass.
BenchReport bench(const GopSequence& seq, const NetworkParams& key_params, const Variant& variant, int repeats);

}  // namespace twnet
