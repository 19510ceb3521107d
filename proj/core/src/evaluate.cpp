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

#include "twnet/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "twnet/errors.hpp"
#include "twnet/warp.hpp"

namespace twnet {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::int64_t conv_macs(std::int64_t out_h, std::int64_t out_w, std::int64_t out_ch, std::int64_t in_ch, int k) {
  return out_h * out_w * out_ch * in_ch * k * k;
}

}  // namespace

Variant raw_warp_variant(const BackboneConfig& key_config) {
  Variant v;
  v.name = "warp";
  v.config = key_config;
  v.config.warp_layer = WarpLayer::kLayer3;
  return v;
}

Variant untrained_nkfc_variant(const BackboneConfig& config, const NetworkParams& key_params) {
  Variant v;
  v.name = "nkfc0";
  v.config = config;
  v.nkfc_params = init_nkfc_params(config, key_params);
  return v;
}

std::vector<SweepRow> sweep_distance(std::span<const GopSequence> data, const NetworkParams& key_params,
                                     std::span<const Variant> variants, int max_distance, int jobs) {
  if (variants.empty()) throw ConfigError("sweep: no variants requested");
  if (max_distance < 0) throw ConfigError("sweep: maximum distance must be >= 0");
  if (data.empty()) throw DataError(DataErrorKind::kEmpty, "sweep: no sequences to evaluate");
  const int class_count = variants.front().config.class_count;
  struct Gop {
    std::size_t seq, start;
  };
  std::vector<Gop> gops;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const GopSequence& seq = data[s];
    if (max_distance >= seq.gop_length) {
      throw ConfigError("sweep: distance " + std::to_string(max_distance) + " needs gop_length > " +
                        std::to_string(max_distance) + ", sequence has " + std::to_string(seq.gop_length));
    }
    if (seq.class_count != class_count) {
      throw DataError(DataErrorKind::kIncompatible, "sweep: sequence has " + std::to_string(seq.class_count) +
                                                        " classes, model has " + std::to_string(class_count));
    }
    for (std::size_t i = 0; i + max_distance < seq.frames.size(); i += seq.gop_length) gops.push_back({s, i});
  }
  if (gops.empty()) throw DataError(DataErrorKind::kEmpty, "sweep: no complete GOP long enough");

  const std::size_t cells = static_cast<std::size_t>(max_distance + 1) * variants.size();
  auto work = [&](std::size_t begin, std::size_t end, std::vector<ConfusionMatrix>& acc) {
    NoGradGuard no_grad;
    for (std::size_t g = begin; g < end; ++g) {
      const GopSequence& seq = data[gops[g].seq];
      const Frame& key = seq.frames[gops[g].start];
      const Tensor image = to_tensor(key.image);
      const auto contexts = keyframe_contexts(image, key_params, variants.front().config);
      const LabelMap key_pred = argmax_labels(keyframe_forward(image, key_params, variants.front().config).logits);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        const Variant& var = variants[v];
        if (key.label) acc[v].add(key_pred, *key.label);
        FeatureMap ctx = contexts[static_cast<int>(var.config.warp_layer) - 1];
        for (int t = 1; t <= max_distance; ++t) {
          const Frame& f = seq.frames[gops[g].start + t];
          NkfcOutput out = nkfc_forward(to_tensor(f.image), ctx, *f.motion, *f.residual, var.nkfc_params,
                                        var.config, var.flags);
          if (f.label) acc[static_cast<std::size_t>(t) * variants.size() + v].add(argmax_labels(out.logits), *f.label);
          ctx = std::move(out.context);
        }
      }
    }
  };

  const int workers = std::clamp(jobs, 1, static_cast<int>(gops.size()));
  std::vector<std::vector<ConfusionMatrix>> partial(workers, std::vector<ConfusionMatrix>(cells, ConfusionMatrix(class_count)));
  if (workers == 1) {
    work(0, gops.size(), partial[0]);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (gops.size() + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::size_t b = std::min(gops.size(), w * chunk), e = std::min(gops.size(), (w + 1) * chunk);
      threads.emplace_back(work, b, e, std::ref(partial[w]));
    }
    for (auto& t : threads) t.join();
  }

  std::vector<SweepRow> rows;
  for (int t = 0; t <= max_distance; ++t) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      SweepRow row;
      row.distance = t;
      row.variant = variants[v].name;
      row.confusion = ConfusionMatrix(class_count);
      for (const auto& p : partial) row.confusion.merge(p[static_cast<std::size_t>(t) * variants.size() + v]);
      row.report = summarize(row.confusion);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

MacCount count_macs(const BackboneConfig& config, PathKind path, NkfcFlags flags, int height, int width) {
  config.validate();
  flags.validate();
  MacCount m;
  const int d = config.decoder_channels, k = config.class_count;
  auto hs = [&](int stride) { return static_cast<std::int64_t>(height / stride); };
  auto ws = [&](int stride) { return static_cast<std::int64_t>(width / stride); };
  auto heads = [&](int count) {
    int in_ch = 3;
    for (int s = 1; s <= count; ++s) {
      const int stride = 1 << s, ch = config.head_channels[s - 1];
      m.conv += conv_macs(hs(stride), ws(stride), ch, in_ch, 3);
      m.conv += conv_macs(hs(stride), ws(stride), ch, ch, 3);
      m.conv += conv_macs(hs(stride), ws(stride), d, ch, 1);  // lateral
      in_ch = ch;
    }
  };
  const std::int64_t logits_upsample = 4LL * k * height * width;

  if (path == PathKind::kKey) {
    heads(3);
    m.conv += conv_macs(hs(2), ws(2), k, d, 3);
    m.interpolation += 4LL * d * hs(4) * ws(4) + 4LL * d * hs(2) * ws(2) + logits_upsample;
    return m;
  }

  const int retained = config.retained_heads();
  if (retained == 0 && flags.use_cfr) throw ConfigError("count_macs: Layer3 has no correction stage");
  heads(retained);
  if (retained > 0) m.conv += conv_macs(hs(2), ws(2), k, d, 3);
  if (retained == 2) m.interpolation += 4LL * d * hs(2) * ws(2);
  m.interpolation += logits_upsample;

  const int stride = config.context_stride(), ctx = config.context_channels();
  const std::int64_t h = hs(stride), w = ws(stride);
  m.interpolation += 2LL * height * width + 4LL * ctx * h * w;  // motion pooling + bilinear taps
  if (flags.use_cfr) m.conv += conv_macs(h, w, ctx, ctx + d, 3);
  if (flags.use_rga) {
    m.conv += conv_macs(h, w, 1, 3, 1);
    m.interpolation += 4LL * 3 * h * w;
    m.elementwise += static_cast<std::int64_t>(ctx) * h * w;
  }
  return m;
}

LatencyStats latency_stats(std::vector<double> samples_ms) {
  LatencyStats s;
  s.samples_ms = samples_ms;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  s.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

BenchReport bench(const GopSequence& seq, const NetworkParams& key_params, const Variant& variant, int repeats) {
  if (repeats < 1) throw ConfigError("bench: repeats must be >= 1");
  if (seq.frames.size() < 2 || seq.frames[1].is_intra()) {
    throw DataError(DataErrorKind::kEmpty, "bench: need an I-frame followed by a P-frame");
  }
  NoGradGuard no_grad;
  const Frame& key = seq.frames[0];
  const Frame& next = seq.frames[1];
  const Tensor key_image = to_tensor(key.image);
  const Tensor next_image = to_tensor(next.image);
  const int layer = static_cast<int>(variant.config.warp_layer) - 1;
  const FeatureMap ctx = keyframe_contexts(key_image, key_params, variant.config)[layer];

  nkfc_forward(next_image, ctx, *next.motion, *next.residual, variant.nkfc_params, variant.config, variant.flags);
  keyframe_forward(key_image, key_params, variant.config);

  BenchReport r;
  std::vector<double> key_ms, non_key_ms;
  NkfcTimings timings;
  for (int i = 0; i < repeats; ++i) {
    auto t0 = Clock::now();
    keyframe_forward(key_image, key_params, variant.config);
    key_ms.push_back(ms_since(t0));
    t0 = Clock::now();
    nkfc_forward(next_image, ctx, *next.motion, *next.residual, variant.nkfc_params, variant.config,
                 variant.flags, &timings);
    non_key_ms.push_back(ms_since(t0));
  }
  for (double v : non_key_ms) r.non_key_total_ms += v;
  r.key = latency_stats(std::move(key_ms));
  r.non_key = latency_stats(std::move(non_key_ms));
  r.heads_ms = timings.heads * 1e3;
  r.warp_ms = timings.warp * 1e3;
  r.correction_ms = timings.correction * 1e3;
  r.fusion_ms = timings.fusion * 1e3;
  return r;
}

}  // namespace twnet
