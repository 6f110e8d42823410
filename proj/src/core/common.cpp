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

#include <algorithm>
#include <atomic>

namespace pasr {

namespace {

std::atomic<int> g_max_threads{0};  // 0 means "no programmatic cap"

int env_thread_cap() {
    const char *env = std::getenv("PASR_THREADS");
    if (!env || !*env) return 0;
    char *end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 0;
    return static_cast<int>(std::min<long>(v, 256));
}

}  // namespace

int worker_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    int env_cap = env_thread_cap();
    if (env_cap > 0) n = std::min(n, env_cap);
    int prog_cap = g_max_threads.load(std::memory_order_relaxed);
    if (prog_cap > 0) n = std::min(n, prog_cap);
    return std::max(n, 1);
}

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

}  // namespace pasr
