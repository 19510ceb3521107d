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

#include "twnet_cli/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "kv_config.hpp"
#include "manifest.hpp"
#include "twnet/checkpoint.hpp"
#include "twnet/errors.hpp"
#include "twnet/evaluate.hpp"
#include "twnet/io_util.hpp"
#include "twnet/sequence.hpp"
#include "twnet/train.hpp"

namespace twnet::cli {
namespace fs = std::filesystem;

namespace {

// Usage problems detected after parsing (missing companion flags and the like).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

std::vector<GopSequence> load_data(const std::vector<std::string>& paths, RunManifest& manifest) {
  std::vector<GopSequence> data;
  for (const auto& p : paths) {
    data.push_back(load_sequence(p));
    manifest.add_input(p);
    const GopSequence& s = data.back();
    const GopSequence& first = data.front();
    if (s.class_count != first.class_count || s.height != first.height || s.width != first.width) {
      throw DataError(DataErrorKind::kIncompatible,
                      p + ": " + std::to_string(s.class_count) + " classes at " + std::to_string(s.height) + "x" +
                          std::to_string(s.width) + " vs " + std::to_string(first.class_count) + " classes at " +
                          std::to_string(first.height) + "x" + std::to_string(first.width) + " in " + paths.front());
    }
  }
  return data;
}

void require_compatible(const BackboneConfig& cfg, const GopSequence& seq, const std::string& what) {
  if (cfg.class_count != seq.class_count) {
    throw DataError(DataErrorKind::kIncompatible, what + " has " + std::to_string(cfg.class_count) +
                                                      " classes, data has " + std::to_string(seq.class_count));
  }
  if (seq.height % BackboneConfig::kMaxStride || seq.width % BackboneConfig::kMaxStride) {
    throw DataError(DataErrorKind::kIncompatible, "data canvas " + std::to_string(seq.height) + "x" +
                                                      std::to_string(seq.width) + " is not a multiple of " +
                                                      std::to_string(BackboneConfig::kMaxStride));
  }
}

std::string meta_or(const Metadata& m, const std::string& key, const std::string& fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

Checkpoint load_phase(const std::string& path, const std::string& phase, RunManifest& manifest) {
  Checkpoint c = load_checkpoint(path);
  manifest.add_input(path);
  const std::string got = meta_or(c.metadata, "phase", "?");
  if (got != phase) {
    throw DataError(DataErrorKind::kIncompatible, path + ": expected a " + phase + " checkpoint, found phase '" +
                                                      got + "'");
  }
  return c;
}

std::string default_variant_name(NkfcFlags f) {
  if (f.use_rga) return "rga";
  if (f.use_cfr) return "cfr";
  return "nkfc";
}

Variant variant_from_checkpoint(const Checkpoint& c, const std::string& path, std::uint32_t key_crc) {
  Variant v;
  v.config = backbone_from_metadata(c.metadata);
  v.flags.use_cfr = meta_or(c.metadata, "use_cfr", "0") == "1";
  v.flags.use_rga = meta_or(c.metadata, "use_rga", "0") == "1";
  v.name = meta_or(c.metadata, "name", default_variant_name(v.flags));
  v.nkfc_params = c.params;
  const std::string want = meta_or(c.metadata, "key_crc32", "");
  if (!want.empty() && want != std::to_string(key_crc)) {
    throw DataError(DataErrorKind::kIncompatible, path + " was trained against a different key-frame checkpoint");
  }
  return v;
}

json metadata_json(const Metadata& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
  std::string spec_file;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  int gops = 1;
};

int cmd_generate(const GenerateOpts& o, const CLI::App& sub, const std::vector<std::string>& argv,
                 std::ostream& out) {
  KvConfig kv = o.spec_file.empty() ? KvConfig() : KvConfig::load(o.spec_file);
  const std::uint64_t seed = sub.count("--seed") ? o.seed : kv.get_u64("seed", 0);
  const int gops = sub.count("--gops") ? o.gops : kv.get_int("gops", 1);
  if (gops < 1) throw ConfigError("gops must be >= 1");

  SceneSpec spec = default_scene(seed);
  const std::string scene = kv.get_string("scene", "default");
  if (scene != "default") throw ConfigError("unknown scene '" + scene + "'");
  const int height = kv.get_int("height", spec.height);
  const int width = kv.get_int("width", spec.width);
  for (auto& s : spec.sprites) {
    s.x = std::round(s.x * width / spec.width);
    s.y = std::round(s.y * height / spec.height);
  }
  spec.height = height;
  spec.width = width;
  spec.gop_length = kv.get_int("gop_length", spec.gop_length);
  spec.noise = kv.get_double("noise", spec.noise);
  spec.block_size = kv.get_int("block_size", spec.block_size);
  spec.background_texture = kv.get_double("background_texture", spec.background_texture);
  if (kv.get_bool("static", false)) {
    for (auto& s : spec.sprites) {
      s.vx = s.vy = 0.0;
      s.jitter = 0.0;
    }
  }
  if (kv.get_bool("rigid", false)) {
    for (auto& s : spec.sprites) s.jitter = 0.0;
  }
  const int max_sprites = kv.get_int("sprites", static_cast<int>(spec.sprites.size()));
  if (max_sprites < 0) throw ConfigError("sprites must be >= 0");
  if (static_cast<std::size_t>(max_sprites) < spec.sprites.size()) spec.sprites.resize(max_sprites);
  kv.reject_unused();

  RunManifest manifest("generate", argv);
  if (!o.spec_file.empty()) manifest.add_input(o.spec_file);
  manifest.set_seed(seed);
  json cfg = {{"seed", seed},         {"gops", gops},     {"height", spec.height}, {"width", spec.width},
              {"gop_length", spec.gop_length}, {"noise", spec.noise}, {"block_size", spec.block_size},
              {"background_texture", spec.background_texture}, {"sprites", spec.sprites.size()},
              {"spec_values", kv.values()}};
  manifest.set_config(cfg);

  const GopSequence seq = generate_sequence(spec, gops);
  save_sequence(seq, o.out);
  if (!(load_sequence(o.out) == seq)) throw DataError(DataErrorKind::kIo, o.out + ": read-back differs");
  manifest.add_output(o.out);

  double abs_sum = 0.0, abs_max = 0.0;
  std::size_t nonzero = 0, samples = 0, p_frames = 0;
  for (const Frame& f : seq.frames) {
    if (!f.residual) continue;
    ++p_frames;
    for (float v : f.residual->data) {
      abs_sum += std::abs(v);
      abs_max = std::max(abs_max, static_cast<double>(std::abs(v)));
      nonzero += v != 0.0f;
      ++samples;
    }
  }
  out << "frames " << seq.frames.size() << " (" << gops << " GOPs of " << seq.gop_length << ", "
      << seq.frames.size() - p_frames << " I / " << p_frames << " P)\n";
  out << "classes " << seq.class_count << ", canvas " << seq.height << "x" << seq.width << "\n";
  if (samples) {
    out << "residual mean|r| " << fmt("%.5f", abs_sum / samples) << "  max|r| " << fmt("%.5f", abs_max)
        << "  nonzero " << fmt("%.4f", static_cast<double>(nonzero) / samples) << "\n";
  }
  manifest.write(o.manifest.empty() ? with_suffix(o.out, ".manifest.json") : fs::path(o.manifest));
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string phase;
  std::vector<std::string> data;
  std::string out;
  std::string manifest;
  std::string config_file;
  std::string key_ckpt;
  std::string loss_csv;
  std::string name;
  int warp_layer = 1;
  double lambda1 = 10.0;
  double lambda0 = 1e-7;
  double lr = 1e-3;
  int iters = 500;
  int batch = 1;
  std::uint64_t seed = 0;
  bool no_cfr = false;
  bool no_rga = false;
  bool no_fine_tune = false;
};

int cmd_train(const TrainOpts& o, const CLI::App& sub, const std::vector<std::string>& argv, std::ostream& out) {
  const bool nkfc = o.phase == "nkfc";
  if (nkfc && o.key_ckpt.empty()) throw UsageError("train nkfc requires --key-ckpt");
  if (o.no_cfr && !o.no_rga) throw UsageError("--no-cfr leaves nothing for RGA to gate; add --no-rga");

  KvConfig kv = o.config_file.empty() ? KvConfig() : KvConfig::load(o.config_file);
  auto pick_d = [&](const char* flag, const char* key, double v) {
    return sub.count(flag) ? v : kv.get_double(key, v);
  };
  auto pick_i = [&](const char* flag, const char* key, int v) { return sub.count(flag) ? v : kv.get_int(key, v); };
  TrainConfig tc;
  tc.lr = pick_d("--lr", "lr", o.lr);
  tc.lambda0 = pick_d("--lambda0", "lambda0", o.lambda0);
  tc.lambda1 = pick_d("--lambda1", "lambda1", o.lambda1);
  tc.iterations = pick_i("--iters", "iterations", o.iters);
  tc.batch_size = pick_i("--batch", "batch_size", o.batch);
  tc.seed = sub.count("--seed") ? o.seed : kv.get_u64("seed", o.seed);
  tc.flags.use_cfr = o.no_cfr ? false : kv.get_bool("use_cfr", true);
  tc.flags.use_rga = o.no_rga ? false : kv.get_bool("use_rga", true);
  tc.fine_tune_heads = o.no_fine_tune ? false : kv.get_bool("fine_tune_heads", true);
  const int warp_layer = pick_i("--warp-layer", "warp_layer", o.warp_layer);
  const int decoder_channels = kv.get_int("decoder_channels", BackboneConfig{}.decoder_channels);
  kv.reject_unused();
  if (tc.flags.use_rga && !tc.flags.use_cfr) throw UsageError("use_rga requires use_cfr");

  RunManifest manifest("train", argv);
  if (!o.config_file.empty()) manifest.add_input(o.config_file);
  const std::vector<GopSequence> data = load_data(o.data, manifest);
  manifest.set_seed(tc.seed);

  Checkpoint ckpt;
  TrainResult result;
  BackboneConfig cfg;
  if (!nkfc) {
    cfg.class_count = data.front().class_count;
    cfg.decoder_channels = decoder_channels;
    cfg.warp_layer = warp_layer_from_int(warp_layer);
    require_compatible(cfg, data.front(), "model");
    result = train_keyframe(data, cfg, tc);
    ckpt.metadata = to_metadata(cfg);
    ckpt.metadata["phase"] = "keyframe";
  } else {
    const Checkpoint key = load_phase(o.key_ckpt, "keyframe", manifest);
    cfg = backbone_from_metadata(key.metadata);
    cfg.warp_layer = warp_layer_from_int(warp_layer);
    require_compatible(cfg, data.front(), o.key_ckpt);
    result = train_nkfc(data, key.params, cfg, tc);
    ckpt.metadata = to_metadata(cfg);
    ckpt.metadata["phase"] = "nkfc";
    ckpt.metadata["use_cfr"] = tc.flags.use_cfr ? "1" : "0";
    ckpt.metadata["use_rga"] = tc.flags.use_rga ? "1" : "0";
    ckpt.metadata["fine_tune_heads"] = tc.fine_tune_heads ? "1" : "0";
    ckpt.metadata["name"] = o.name.empty() ? default_variant_name(tc.flags) : o.name;
    ckpt.metadata["key_crc32"] = std::to_string(file_crc32(o.key_ckpt));
  }
  ckpt.metadata["seed"] = std::to_string(tc.seed);
  ckpt.metadata["iterations"] = std::to_string(tc.iterations);
  ckpt.metadata["lambda0"] = fmt("%.17g", tc.lambda0);
  ckpt.metadata["lambda1"] = fmt("%.17g", tc.lambda1);
  ckpt.metadata["lr"] = fmt("%.17g", tc.lr);
  ckpt.params = std::move(result.params);

  json cfg_json = {{"phase", o.phase},
                   {"lr", tc.lr},
                   {"lambda0", tc.lambda0},
                   {"lambda1", tc.lambda1},
                   {"iterations", tc.iterations},
                   {"batch_size", tc.batch_size},
                   {"seed", tc.seed},
                   {"warp_layer", warp_layer},
                   {"use_cfr", tc.flags.use_cfr},
                   {"use_rga", tc.flags.use_rga},
                   {"fine_tune_heads", tc.fine_tune_heads},
                   {"checkpoint_metadata", metadata_json(ckpt.metadata)}};
  manifest.set_config(cfg_json);

  save_checkpoint(o.out, ckpt);
  load_checkpoint(o.out);
  manifest.add_output(o.out);
  const fs::path loss = o.loss_csv.empty() ? with_suffix(o.out, ".loss.csv") : fs::path(o.loss_csv);
  write_text_atomic(loss, loss_curve_csv(result.curve));
  manifest.add_output(loss);

  const LossRecord& first = result.curve.front();
  const LossRecord& last = result.curve.back();
  out << o.phase << ": " << tc.iterations << " iterations, total loss " << fmt("%.5g", first.total) << " -> "
      << fmt("%.5g", last.total) << "\n";
  if (nkfc) out << "L_consist " << fmt("%.5g", first.consist) << " -> " << fmt("%.5g", last.consist) << "\n";
  manifest.write(o.manifest.empty() ? with_suffix(o.out, ".manifest.json") : fs::path(o.manifest));
  out << "wrote " << o.out << " and " << loss.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::vector<std::string> data;
  std::string key_ckpt;
  std::vector<std::string> nkfc_ckpts;
  std::string variants = "warp,nkfc,cfr,rga";
  std::string out_dir;
  std::string manifest;
  int sweep_t = 8;
  int jobs = 1;
};

std::vector<Variant> resolve_variants(const std::string& spec, const Checkpoint& key, std::uint32_t key_crc,
                                      const std::vector<std::string>& nkfc_paths, RunManifest& manifest) {
  const BackboneConfig key_cfg = backbone_from_metadata(key.metadata);
  std::map<std::string, Variant> trained;
  for (const auto& p : nkfc_paths) {
    Variant v = variant_from_checkpoint(load_phase(p, "nkfc", manifest), p, key_crc);
    if (v.config.class_count != key_cfg.class_count) {
      throw DataError(DataErrorKind::kIncompatible, p + " and the key-frame checkpoint disagree on class count");
    }
    if (trained.count(v.name)) throw UsageError("two --nkfc-ckpt files are both named '" + v.name + "'");
    trained.emplace(v.name, std::move(v));
  }
  std::vector<Variant> out;
  for (const auto& name : split_csv(spec)) {
    if (name == "warp") {
      out.push_back(raw_warp_variant(key_cfg));
    } else if (name == "nkfc0") {
      BackboneConfig c = key_cfg;
      c.warp_layer = WarpLayer::kLayer1;
      out.push_back(untrained_nkfc_variant(c, key.params));
    } else if (auto it = trained.find(name); it != trained.end()) {
      out.push_back(it->second);
    } else {
      throw UsageError("variant '" + name + "' needs an --nkfc-ckpt trained under that name");
    }
  }
  if (out.empty()) throw UsageError("--variants selects nothing");
  return out;
}

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.sweep_t < 0) throw UsageError("--sweep-T must be >= 0");
  RunManifest manifest("eval", argv);
  const std::vector<GopSequence> data = load_data(o.data, manifest);
  const Checkpoint key = load_phase(o.key_ckpt, "keyframe", manifest);
  const BackboneConfig key_cfg = backbone_from_metadata(key.metadata);
  require_compatible(key_cfg, data.front(), o.key_ckpt);
  const std::vector<Variant> variants =
      resolve_variants(o.variants, key, file_crc32(o.key_ckpt), o.nkfc_ckpts, manifest);
  manifest.set_config({{"sweep_T", o.sweep_t}, {"variants", o.variants}, {"jobs", o.jobs}});

  const std::vector<SweepRow> rows = sweep_distance(data, key.params, variants, o.sweep_t, o.jobs);

  std::string per_t = "T,variant,mIoU\n";
  std::string per_class = "T,variant,class,IoU\n";
  for (const SweepRow& r : rows) {
    per_t += std::to_string(r.distance) + "," + r.variant + "," + fmt("%.6f", r.report.miou) + "\n";
    for (std::size_t k = 0; k < r.report.per_class_iou.size(); ++k) {
      const auto& iou = r.report.per_class_iou[k];
      per_class += std::to_string(r.distance) + "," + r.variant + "," + std::to_string(k) + "," +
                   (iou ? fmt("%.6f", *iou) : std::string("")) + "\n";
    }
  }
  fs::create_directories(o.out_dir);
  const fs::path t_path = fs::path(o.out_dir) / "per_T.csv";
  const fs::path c_path = fs::path(o.out_dir) / "per_class.csv";
  write_text_atomic(t_path, per_t);
  write_text_atomic(c_path, per_class);
  manifest.add_output(t_path);
  manifest.add_output(c_path);

  out << "   T";
  for (const auto& v : variants) {
    out << " " << std::string(std::max<int>(0, 10 - static_cast<int>(v.name.size())), ' ') << v.name;
  }
  out << "\n";
  for (int t = 0; t <= o.sweep_t; ++t) {
    out << fmt("%4.0f", t);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      out << " " << fmt("%10.4f", rows[static_cast<std::size_t>(t) * variants.size() + v].report.miou);
    }
    out << "\n";
  }
  manifest.write(o.manifest.empty() ? fs::path(o.out_dir) / "manifest.json" : fs::path(o.manifest));
  out << "wrote " << t_path.string() << " and " << c_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOpts {
  std::string data;
  std::string key_ckpt;
  std::vector<std::string> nkfc_ckpts;
  std::string out;
  std::string manifest;
  int repeats = 20;
};

int cmd_bench(const BenchOpts& o, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("bench", argv);
  const std::vector<GopSequence> data = load_data({o.data}, manifest);
  const GopSequence& seq = data.front();
  const Checkpoint key = load_phase(o.key_ckpt, "keyframe", manifest);
  const BackboneConfig key_cfg = backbone_from_metadata(key.metadata);
  require_compatible(key_cfg, seq, o.key_ckpt);

  std::vector<Variant> variants;
  variants.push_back(raw_warp_variant(key_cfg));
  for (WarpLayer layer : {WarpLayer::kLayer2, WarpLayer::kLayer1}) {
    BackboneConfig c = key_cfg;
    c.warp_layer = layer;
    variants.push_back(untrained_nkfc_variant(c, key.params));
    variants.back().name = "nkfc0-layer" + std::to_string(static_cast<int>(layer));
  }
  const std::uint32_t key_crc = file_crc32(o.key_ckpt);
  for (const auto& p : o.nkfc_ckpts) variants.push_back(variant_from_checkpoint(load_phase(p, "nkfc", manifest), p, key_crc));
  manifest.set_config({{"repeats", o.repeats}});

  std::string csv = "path,variant,macs,median_ms,p95_ms\n";
  bool key_row = false;
  for (const Variant& v : variants) {
    const BenchReport r = bench(seq, key.params, v, o.repeats);
    if (!key_row) {
      const std::int64_t macs = count_macs(key_cfg, PathKind::kKey, {}, seq.height, seq.width).total();
      csv += "key,keyframe," + std::to_string(macs) + "," + fmt("%.4f", r.key.median_ms) + "," +
             fmt("%.4f", r.key.p95_ms) + "\n";
      key_row = true;
    }
    const std::int64_t macs = count_macs(v.config, PathKind::kNonKey, v.flags, seq.height, seq.width).total();
    csv += "nonkey," + v.name + "," + std::to_string(macs) + "," + fmt("%.4f", r.non_key.median_ms) + "," +
           fmt("%.4f", r.non_key.p95_ms) + "\n";
    out << v.name << ": heads " << fmt("%.2f", r.heads_ms) << " ms, warp " << fmt("%.2f", r.warp_ms)
        << " ms, correction " << fmt("%.2f", r.correction_ms) << " ms, fusion " << fmt("%.2f", r.fusion_ms)
        << " ms over " << o.repeats << " passes\n";
  }
  write_text_atomic(o.out, csv);
  manifest.add_output(o.out, false);
  out << csv;
  manifest.write(o.manifest.empty() ? with_suffix(o.out, ".manifest.json") : fs::path(o.manifest));
  return kExitOk;
}

// ---------------------------------------------------------------- replay

struct ReplayOpts {
  std::string manifest;
  bool keep = false;
};

class ScopedCwd {
 public:
  explicit ScopedCwd(const fs::path& dir) : saved_(fs::current_path()) { fs::current_path(dir); }
  ~ScopedCwd() {
    std::error_code ec;
    fs::current_path(saved_, ec);
  }

 private:
  fs::path saved_;
};

int cmd_replay(const ReplayOpts& o, std::ostream& out, std::ostream& err) {
  json m;
  try {
    const auto bytes = read_file(o.manifest);
    m = json::parse(bytes.begin(), bytes.end());
    if (m.value("tool", "") != "twnet") throw DataError(DataErrorKind::kMalformedHeader, "not a twnet manifest");
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::kMalformedHeader, o.manifest + ": " + e.what());
  }
  std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw DataError(DataErrorKind::kIncompatible, "manifest has no replayable command");
  const fs::path cwd = m.at("cwd").get<std::string>();

  for (const auto& in : m.at("inputs")) {
    const fs::path p = in.at("path").get<std::string>();
    if (!fs::exists(p) || file_crc32(p) != in.at("crc32").get<std::uint32_t>()) {
      throw DataError(DataErrorKind::kChecksumMismatch, "input " + p.string() + " is missing or changed since the run");
    }
  }

  std::random_device rd;
  const fs::path tmp = fs::temp_directory_path() / ("twnet-replay-" + std::to_string(rd()));
  fs::create_directories(tmp);
  std::vector<std::pair<fs::path, fs::path>> remap;
  static const std::vector<std::string> kOutputFlags = {"--out", "--out-dir", "--loss-csv", "--manifest"};
  auto redirect = [&](const std::string& value) {
    fs::path old = fs::path(value).is_absolute() ? fs::path(value) : cwd / value;
    old = old.lexically_normal();
    const fs::path fresh = tmp / ("o" + std::to_string(remap.size())) / old.filename();
    fs::create_directories(fresh.parent_path());
    remap.emplace_back(old, fresh);
    return fresh.string();
  };
  for (std::size_t i = 0; i < args.size(); ++i) {
    for (const auto& flag : kOutputFlags) {
      if (args[i] == flag && i + 1 < args.size()) {
        args[i + 1] = redirect(args[i + 1]);
        ++i;
        break;
      }
      if (args[i].rfind(flag + "=", 0) == 0) {
        args[i] = flag + "=" + redirect(args[i].substr(flag.size() + 1));
        break;
      }
    }
  }

  int code;
  {
    ScopedCwd in_dir(cwd);
    std::ostringstream quiet;
    code = run(args, quiet, err);
  }
  if (code != kExitOk) {
    err << "replay: command exited with " << code << "\n";
    if (!o.keep) fs::remove_all(tmp);
    return code;
  }

  int mismatches = 0, checked = 0;
  for (const auto& rec : m.at("outputs")) {
    const fs::path orig = rec.at("path").get<std::string>();
    fs::path fresh;
    for (const auto& [old, now] : remap) {
      if (orig == old) {
        fresh = now;
        break;
      }
      if (auto rel = orig.lexically_relative(old); !rel.empty() && *rel.begin() != "..") {
        fresh = now / rel;
      } else if (orig.parent_path() == old.parent_path() &&
                 orig.filename().string().starts_with(old.filename().string())) {
        fresh = now.parent_path() / orig.filename();  // derived sibling such as <out>.loss.csv
      }
    }
    if (!rec.value("reproducible", true)) {
      out << "skip     " << orig.string() << " (wall-clock timings)\n";
      continue;
    }
    ++checked;
    const bool ok = !fresh.empty() && fs::exists(fresh) && file_crc32(fresh) == rec.at("crc32").get<std::uint32_t>();
    out << (ok ? "match    " : "MISMATCH ") << orig.string() << "\n";
    mismatches += !ok;
  }
  if (o.keep) out << "replayed artifacts kept in " << tmp.string() << "\n";
  else fs::remove_all(tmp);
  out << checked - mismatches << "/" << checked << " artifacts reproduced\n";
  return mismatches ? kExitData : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Motion-vector feature warping with learned correction for video segmentation", "twnet"};
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Render a synthetic compressed-video sequence");
  g->add_option("--spec", gen.spec_file, "Scene file (key = value)")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output container")->required();
  g->add_option("--seed", gen.seed, "Run seed");
  g->add_option("--gops", gen.gops, "Number of GOPs")->check(CLI::Range(1, 100000));
  g->add_option("--manifest", gen.manifest, "Manifest path (default <out>.manifest.json)");

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Train the key-frame CNN or the non-key-frame modules");
  t->add_option("phase", tr.phase, "keyframe | nkfc")->required()->check(CLI::IsMember({"keyframe", "nkfc"}));
  t->add_option("data", tr.data, "Training sequences")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Output checkpoint")->required();
  t->add_option("--config", tr.config_file, "Training config (key = value); flags win")->check(CLI::ExistingFile);
  t->add_option("--key-ckpt", tr.key_ckpt, "Key-frame checkpoint (nkfc phase)")->check(CLI::ExistingFile);
  t->add_option("--warp-layer", tr.warp_layer, "Warped layer")->check(CLI::IsMember({1, 2, 3}));
  t->add_option("--lambda1", tr.lambda1, "Consistency weight")->check(CLI::NonNegativeNumber);
  t->add_option("--lambda0", tr.lambda0, "Weight decay")->check(CLI::NonNegativeNumber);
  t->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  t->add_option("--iters", tr.iters, "Iterations")->check(CLI::Range(1, 100000000));
  t->add_option("--batch", tr.batch, "Frames per iteration")->check(CLI::Range(1, 4096));
  t->add_option("--seed", tr.seed, "Run seed");
  t->add_flag("--no-cfr", tr.no_cfr, "Disable feature rectification");
  t->add_flag("--no-rga", tr.no_rga, "Disable residual-guided attention");
  t->add_flag("--no-fine-tune", tr.no_fine_tune, "Keep the copied head stages fixed");
  t->add_option("--name", tr.name, "Variant name stored in the checkpoint");
  t->add_option("--loss-csv", tr.loss_csv, "Loss curve path (default <out>.loss.csv)");
  t->add_option("--manifest", tr.manifest, "Manifest path (default <out>.manifest.json)");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Score variants against key-frame distance");
  e->add_option("data", ev.data, "Evaluation sequences")->required()->check(CLI::ExistingFile);
  e->add_option("--key-ckpt", ev.key_ckpt, "Key-frame checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--nkfc-ckpt", ev.nkfc_ckpts, "Non-key-frame checkpoint (repeatable)")->check(CLI::ExistingFile);
  e->add_option("--variants", ev.variants, "Comma-separated: warp, nkfc0 or a checkpoint name");
  e->add_option("--sweep-T", ev.sweep_t, "Largest key-frame distance");
  e->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::Range(1, 256));
  e->add_option("--out-dir", ev.out_dir, "Directory for CSV reports")->required();
  e->add_option("--manifest", ev.manifest, "Manifest path (default <out-dir>/manifest.json)");

  BenchOpts be;
  auto* b = app.add_subcommand("bench", "Time key and non-key paths and count MACs");
  b->add_option("data", be.data, "Sequence to time")->required()->check(CLI::ExistingFile);
  b->add_option("--key-ckpt", be.key_ckpt, "Key-frame checkpoint")->required()->check(CLI::ExistingFile);
  b->add_option("--nkfc-ckpt", be.nkfc_ckpts, "Non-key-frame checkpoint (repeatable)")->check(CLI::ExistingFile);
  b->add_option("--repeats", be.repeats, "Timed passes per path")->check(CLI::Range(1, 1000000));
  b->add_option("--out", be.out, "CSV output")->required();
  b->add_option("--manifest", be.manifest, "Manifest path (default <out>.manifest.json)");

  ReplayOpts rp;
  auto* r = app.add_subcommand("replay", "Rerun a manifest and compare artifact checksums");
  r->add_option("manifest", rp.manifest, "Manifest to replay")->required()->check(CLI::ExistingFile);
  r->add_flag("--keep", rp.keep, "Keep the replayed artifacts");

  std::vector<std::string> argv_store = {"twnet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, *g, args, out);
    if (t->parsed()) return cmd_train(tr, *t, args, out);
    if (e->parsed()) return cmd_eval(ev, args, out);
    if (b->parsed()) return cmd_bench(be, args, out);
    if (r->parsed()) return cmd_replay(rp, out, err);
  } catch (const UsageError& ue) {
    err << "usage error: " << ue.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& ce) {
    err << "config error: " << ce.what() << "\n";
    return kExitUsage;
  } catch (const DataError& de) {
    err << "data error (" << to_string(de.kind()) << "): " << de.what() << "\n";
    return kExitData;
  } catch (const ShapeError& se) {
    err << "data error (shape): " << se.what() << "\n";
    return kExitData;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace twnet::cli
