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

#include <cstdint>
#include <string>
#include <vector>

namespace pasr {

struct OracleReport {
    int suites = 0;
    int failures = 0;
    std::vector<std::string> lines;  // one "ok ..."/"FAIL ..." entry per suite

    bool ok() const { return failures == 0; }
};

// Brute-force oracle suites, independent of the implementations they check:
// EOU threshold rule vs linear scan (plus scale invariance and psi
// monotonicity), edit distance vs full alignment-path enumeration, CTC vs
// direct summation over all collapsing symbol sequences, and beam search vs
// exhaustive scoring on a miniature model. verbose prints each suite line.
OracleReport run_oracle_tests(uint64_t seed, bool verbose);

}  // namespace pasr
