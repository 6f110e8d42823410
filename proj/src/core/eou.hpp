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

#include "core/model.hpp"
#include "core/tensor.hpp"

#include <vector>

namespace pasr {

// Encoder frames last 40 ms: 10 ms feature hop times x4 subsampling.
constexpr double kTauMs = 40.0;

struct EouEstimate {
    double t_hat_ms = 0.0;
    double a_max = 0.0;
    int frame = 0;  // chosen frame, 1-based; t_hat = tau * frame
    double psi = 0.0;
    double tau_ms = 0.0;
};

// Picks the LAST 1-based index whose score reaches psi * max(row) (ties at
// the threshold qualify) and places the estimate at that frame's end.
EouEstimate estimate_eou(const std::vector<double> &a_row, double psi, double tau_ms);

// Teacher-forces `tokens` against precomputed encoder output values, takes
// the eos row of the cross-attention matrix (layer/head as in EvalConfig; -1
// selects final layer / head average) and applies estimate_eou.
EouEstimate detect_with_encoder(AsrModel &model, const Mat &enc_values,
                                const std::vector<int> &tokens, double psi, int layer,
                                int head);

// Convenience wrapper that runs the encoder on (already masked) features.
EouEstimate detect_from_hypothesis(AsrModel &model, const Mat &masked_features,
                                   const std::vector<int> &tokens, double psi, int layer,
                                   int head);

}  // namespace pasr
