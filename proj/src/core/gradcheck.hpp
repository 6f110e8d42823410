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

namespace pasr {

struct GradcheckResult {
    int checks = 0;         // parameter scalars compared
    double max_rel_err = 0.0;
    std::string worst;      // scenario/param[index] of max_rel_err
    bool ok = false;
};

// Central finite differences in 64-bit against one reverse sweep, for every
// tape operation in isolation and for every parameter scalar of a complete
// tiny model under the joint loss. Relative errors use denominators floored
// at 1e-3, so near-zero gradients are compared absolutely at tol * 1e-3.
GradcheckResult run_gradcheck(uint64_t seed, bool verbose, double tol);

}  // namespace pasr
