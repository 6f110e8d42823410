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

#include "pasr.h"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

namespace pasr {

// Error carrying the status code surfaced at the C boundary.
class Error : public std::runtime_error {
public:
    Error(pasr_status status, const std::string &msg)
        : std::runtime_error(msg), status_(status) {}
    pasr_status status() const { return status_; }

private:
    pasr_status status_;
};

[[noreturn]] inline void fail(pasr_status status, const std::string &msg) {
    throw Error(status, msg);
}

inline void require(bool ok, pasr_status status, const std::string &msg) {
    if (!ok) fail(status, msg);
}

// Vocabulary layout shared by the CTC head, the decoder and the corpus
// generator: index 0 is the CTC blank, index 1 doubles as start- and
// end-of-sentence, real tokens start at 2.
constexpr int kBlankId = 0;
constexpr int kEosId = 1;
constexpr int kFirstTokenId = 2;

// Feature frames are 10 ms apart; the encoder subsamples by 4, so one
// encoder frame spans 40 ms.
constexpr int kSubsampleFactor = 4;

// FNV-1a, used for config hashes and for deriving per-name RNG streams.
inline uint64_t fnv1a(const void *data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a(const std::string &s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

// Worker pool width: hardware concurrency capped by PASR_THREADS and by an
// optional programmatic limit (pasr_set_max_threads).
int worker_threads();
void set_max_threads(int n);

template <typename... Args>
std::string cat(Args &&...args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

inline std::string hex_u64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace pasr
