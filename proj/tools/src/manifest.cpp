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

#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include "twnet/io_util.hpp"

namespace twnet::cli {

std::uint32_t file_crc32(const std::filesystem::path& path) { return crc32_of(read_file(path)); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)),
      argv_(std::move(argv)),
      cwd_(std::filesystem::current_path().string()),
      started_(utc_now()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()},
                     {"crc32", file_crc32(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path, bool reproducible) {
  outputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()},
                      {"crc32", file_crc32(path)},
                      {"bytes", std::filesystem::file_size(path)},
                      {"reproducible", reproducible}});
}

json RunManifest::to_json() const {
  return {{"tool", "twnet"},
          {"format", 1},
          {"command", command_},
          {"argv", argv_},
          {"cwd", cwd_},
          {"seed", seed_},
          {"config", config_},
          {"inputs", inputs_},
          {"outputs", outputs_},
          {"started_at", started_},
          {"finished_at", utc_now()}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_text_atomic(path, to_json().dump(2) + "\n");
}

}  // namespace twnet::cli
