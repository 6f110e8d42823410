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

#include "core/io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pasr {

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'A', 'S', 'R'};

void write_u32(std::ofstream &out, uint32_t v) {
    std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char *>(b.data()), 4);
}

uint32_t read_u32(std::ifstream &in, const std::filesystem::path &path) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char *>(b.data()), 4);
    require(in.good(), PASR_ERR_IO, cat("truncated container: ", path.string()));
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32_le(std::ofstream &out, const float *data, size_t n) {
    // Assumes little-endian float layout; static_assert guards the build.
    static_assert(sizeof(float) == 4, "float must be 32-bit");
    out.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(n * 4));
}

}  // namespace

void write_container(const std::filesystem::path &path,
                     const std::vector<TensorRecord> &records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), PASR_ERR_IO, cat("cannot open for write: ", path.string()));
    out.write(kMagic.data(), 4);
    write_u32(out, kContainerVersion);
    write_u32(out, static_cast<uint32_t>(records.size()));
    for (const auto &rec : records) {
        require(!rec.name.empty(), PASR_ERR_INVALID_ARGUMENT, "record name empty");
        require(rec.values.size() == rec.numel(), PASR_ERR_SHAPE,
                cat("record ", rec.name, ": dims/value mismatch"));
        write_u32(out, static_cast<uint32_t>(rec.name.size()));
        out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
        write_u32(out, static_cast<uint32_t>(rec.dims.size()));
        for (uint32_t d : rec.dims) write_u32(out, d);
        write_f32_le(out, rec.values.data(), rec.values.size());
    }
    require(out.good(), PASR_ERR_IO, cat("write failed: ", path.string()));
}

std::vector<TensorRecord> read_container(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), PASR_ERR_IO, cat("cannot open: ", path.string()));
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    require(in.good() && magic == kMagic, PASR_ERR_IO,
            cat("bad magic in ", path.string()));
    uint32_t version = read_u32(in, path);
    require(version == kContainerVersion, PASR_ERR_IO,
            cat("unsupported container version ", std::to_string(version)));
    uint32_t count = read_u32(in, path);
    std::vector<TensorRecord> records;
    records.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        TensorRecord rec;
        uint32_t name_len = read_u32(in, path);
        require(name_len > 0 && name_len < (1u << 16), PASR_ERR_IO, "bad record name length");
        rec.name.resize(name_len);
        in.read(rec.name.data(), name_len);
        uint32_t rank = read_u32(in, path);
        require(rank <= 8, PASR_ERR_IO, "bad record rank");
        rec.dims.resize(rank);
        for (uint32_t r = 0; r < rank; ++r) rec.dims[r] = read_u32(in, path);
        size_t n = rec.numel();
        require(n < (1ull << 31), PASR_ERR_IO, "record too large");
        rec.values.resize(n);
        in.read(reinterpret_cast<char *>(rec.values.data()),
                static_cast<std::streamsize>(n * 4));
        require(in.good(), PASR_ERR_IO, cat("truncated container: ", path.string()));
        records.push_back(std::move(rec));
    }
    return records;
}

std::map<std::string, TensorRecord> read_container_map(const std::filesystem::path &path) {
    std::map<std::string, TensorRecord> out;
    for (auto &rec : read_container(path)) {
        auto name = rec.name;
        auto [it, inserted] = out.emplace(name, std::move(rec));
        (void)it;
        require(inserted, PASR_ERR_IO, cat("duplicate record name: ", name));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), PASR_ERR_IO, cat("cannot open: ", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), PASR_ERR_IO, cat("cannot open for write: ", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    require(out.good(), PASR_ERR_IO, cat("write failed: ", path.string()));
}

std::vector<std::string> read_lines(const std::filesystem::path &path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    require(in.is_open(), PASR_ERR_IO, cat("cannot open: ", path.string()));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void append_line(std::ofstream &out, const std::string &line) {
    out << line << '\n';
}

std::string csv_join(const std::vector<std::string> &cells) {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

void prepare_out_dir(const std::filesystem::path &dir, bool force) {
    namespace fs = std::filesystem;
    if (fs::exists(dir)) {
        bool empty = fs::is_directory(dir) && fs::directory_iterator(dir) == fs::directory_iterator();
        if (!empty) {
            require(force, PASR_ERR_INVALID_ARGUMENT,
                    cat("output dir not empty (use force): ", dir.string()));
            fs::remove_all(dir);
        }
    }
    fs::create_directories(dir);
}

uint64_t hash_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), PASR_ERR_IO, cat("cannot open: ", path.string()));
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.good()) {
        in.read(buf, sizeof(buf));
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string format_double(double v, int precision) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(precision);
    ss << v;
    return ss.str();
}

}  // namespace pasr
