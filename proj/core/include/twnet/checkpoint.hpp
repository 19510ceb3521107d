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

#include <filesystem>
#include <map>
#include <string>

#include "twnet/model.hpp"

namespace twnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
  NetworkParams params;
  Metadata metadata;
};

// Named-tensor archive: "TWNC" | u32 version | metadata pairs | tensors
// (name, rank, dims, f64 payload) | u32 crc32 of everything before it.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Metadata to_metadata(const BackboneConfig& config);
BackboneConfig backbone_from_metadata(const Metadata& metadata);

}  // namespace twnet
