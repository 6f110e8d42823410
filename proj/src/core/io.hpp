// Copyright 2026 The pasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "core/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pasr {

// Named float32 arrays in a little-endian binary container.
//
// Layout:
//   magic "PASR" | u32 version | u32 record_count
//   per record: u32 name_len | name bytes | u32 rank | u32 dims[rank] | f32 values
struct TensorRecord {
    std::string name;
    std::vector<uint32_t> dims;
    std::vector<float> values;

    size_t numel() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }
};

inline constexpr uint32_t kContainerVersion = 1;

void write_container(const std::filesystem::path &path,
                     const std::vector<TensorRecord> &records);
std::vector<TensorRecord> read_container(const std::filesystem::path &path);

// Records keyed by name; duplicate names are an error.
std::map<std::string, TensorRecord> read_container_map(const std::filesystem::path &path);

// Whole-file text helpers.
std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &content);

// One JSON object per non-empty line.
std::vector<std::string> read_lines(const std::filesystem::path &path);
void append_line(std::ofstream &out, const std::string &line);

// CSV cells are numeric or plain identifiers in this project, so no quoting.
std::string csv_join(const std::vector<std::string> &cells);

// Create dir (parents included); with force, wipe an existing non-empty dir first.
void prepare_out_dir(const std::filesystem::path &dir, bool force);

// FNV-1a over the raw bytes of a file, for manifest integrity stamps.
uint64_t hash_file(const std::filesystem::path &path);

std::string format_double(double v, int precision);

}  // namespace pasr
