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

#include "core/common.hpp"
#include "core/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace pasr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string &tag) {
    fs::path dir = fs::temp_directory_path() / ("pasr_io_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<TensorRecord> sample_records() {
    TensorRecord a;
    a.name = "weights";
    a.dims = {2, 3};
    a.values = {1.0f, -2.5f, 0.0f, 3.25f, 1e-7f, -4096.0f};
    TensorRecord b;
    b.name = "bias";
    b.dims = {4};
    b.values = {0.5f, 0.5f, -0.5f, 9.0f};
    return {a, b};
}

}  // namespace

TEST_CASE("container round-trips records in order") {
    fs::path dir = temp_dir("roundtrip");
    fs::path file = dir / "t.pasr";
    auto recs = sample_records();
    write_container(file, recs);

    auto back = read_container(file);
    REQUIRE(back.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].name == recs[i].name);
        CHECK(back[i].dims == recs[i].dims);
        CHECK(back[i].values == recs[i].values);
    }

    auto map = read_container_map(file);
    REQUIRE(map.count("weights") == 1);
    REQUIRE(map.count("bias") == 1);
    CHECK(map["weights"].values == recs[0].values);
    fs::remove_all(dir);
}

TEST_CASE("container rejects duplicates, truncation and bad magic") {
    fs::path dir = temp_dir("corrupt");
    fs::path file = dir / "t.pasr";
    auto recs = sample_records();
    recs[1].name = "weights";  // duplicate
    write_container(file, recs);
    CHECK_THROWS_AS(read_container_map(file), Error);

    recs = sample_records();
    write_container(file, recs);
    auto size = fs::file_size(file);
    fs::resize_file(file, size - 5);
    try {
        read_container(file);
        FAIL("truncated container accepted");
    } catch (const Error &e) {
        CHECK(e.status() == PASR_ERR_IO);
    }

    write_text_file(file, "not a container at all");
    CHECK_THROWS_AS(read_container(file), Error);
    CHECK_THROWS_AS(read_container(dir / "missing.pasr"), Error);
    fs::remove_all(dir);
}

TEST_CASE("record numel multiplies dims") {
    TensorRecord r;
    r.dims = {3, 4, 2};
    CHECK(r.numel() == 24);
    r.dims = {};
    CHECK(r.numel() == 1);
}

TEST_CASE("text and line helpers") {
    fs::path dir = temp_dir("text");
    fs::path file = dir / "a.txt";
    write_text_file(file, "hello\nworld");
    CHECK(read_text_file(file) == "hello\nworld");
    CHECK_THROWS_AS(read_text_file(dir / "nope.txt"), Error);

    {
        std::ofstream out(dir / "lines.jsonl");
        append_line(out, "{\"a\":1}");
        append_line(out, "{\"b\":2}");
    }
    auto lines = read_lines(dir / "lines.jsonl");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "{\"a\":1}");
    CHECK(lines[1] == "{\"b\":2}");

    write_text_file(dir / "gaps.jsonl", "x\n\n\ny\n");
    auto gaps = read_lines(dir / "gaps.jsonl");
    REQUIRE(gaps.size() == 2);
    CHECK(gaps[0] == "x");
    CHECK(gaps[1] == "y");
    fs::remove_all(dir);
}

TEST_CASE("csv_join and format_double") {
    CHECK(csv_join({"a", "1", "2.5"}) == "a,1,2.5");
    CHECK(csv_join({}) == "");
    CHECK(format_double(1.23456, 3) == "1.235");
    CHECK(format_double(-0.5, 2) == "-0.50");
    CHECK(format_double(12.0, 0) == "12");
}

TEST_CASE("prepare_out_dir refuses non-empty targets unless forced") {
    fs::path dir = temp_dir("outdir");
    fs::path target = dir / "nested" / "run";
    prepare_out_dir(target, false);
    CHECK(fs::is_directory(target));
    // Empty dir can be re-prepared freely.
    prepare_out_dir(target, false);

    write_text_file(target / "old.txt", "stale");
    try {
        prepare_out_dir(target, false);
        FAIL("non-empty dir accepted without force");
    } catch (const Error &e) {
        CHECK(e.status() == PASR_ERR_INVALID_ARGUMENT);
    }

    prepare_out_dir(target, true);
    CHECK(fs::is_directory(target));
    CHECK(!fs::exists(target / "old.txt"));
    fs::remove_all(dir);
}

TEST_CASE("hash_file tracks content") {
    fs::path dir = temp_dir("hash");
    write_text_file(dir / "a", "same bytes");
    write_text_file(dir / "b", "same bytes");
    write_text_file(dir / "c", "same bytes!");
    CHECK(hash_file(dir / "a") == hash_file(dir / "b"));
    CHECK(hash_file(dir / "a") != hash_file(dir / "c"));
    CHECK_THROWS_AS(hash_file(dir / "missing"), Error);
    fs::remove_all(dir);
}
