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

#include "core/eou.hpp"

namespace pasr {

EouEstimate estimate_eou(const std::vector<double> &a_row, double psi, double tau_ms) {
    require(!a_row.empty(), PASR_ERR_INVALID_ARGUMENT, "estimate_eou: empty row");
    require(psi > 0.0 && psi <= 1.0, PASR_ERR_INVALID_ARGUMENT, "estimate_eou: psi must be in (0, 1]");
    require(tau_ms > 0.0, PASR_ERR_INVALID_ARGUMENT, "estimate_eou: tau must be positive");
    double a_max = 0.0;
    for (double a : a_row) {
        require(a >= 0.0, PASR_ERR_INVALID_ARGUMENT, "estimate_eou: negative attention score");
        if (a > a_max) a_max = a;
    }
    require(a_max > 0.0, PASR_ERR_DEGENERATE_INPUT, "estimate_eou: all-zero attention row");

    double threshold = psi * a_max;
    int last = -1;
    for (int t = 0; t < static_cast<int>(a_row.size()); ++t) {
        if (a_row[static_cast<size_t>(t)] >= threshold) last = t;
    }
    // a_max itself always qualifies, so last is set.
    EouEstimate est;
    est.frame = last + 1;
    est.t_hat_ms = tau_ms * est.frame;
    est.a_max = a_max;
    est.psi = psi;
    est.tau_ms = tau_ms;
    return est;
}

EouEstimate detect_with_encoder(AsrModel &model, const Mat &enc_values,
                                const std::vector<int> &tokens, double psi, int layer,
                                int head) {
    Tape tape;
    tape.set_grad_enabled(false);
    int enc = tape.constant(enc_values);
    DecodeOut dec = model.decode_teacher_forced(tape, enc, tokens, false, nullptr);
    Mat attn = cross_attention_matrix(tape, dec, layer, head);
    std::vector<double> row(static_cast<size_t>(attn.cols));
    const float *eos_row = attn.row_ptr(attn.rows - 1);
    for (int c = 0; c < attn.cols; ++c) row[static_cast<size_t>(c)] = eos_row[c];
    return estimate_eou(row, psi, kTauMs);
}

EouEstimate detect_from_hypothesis(AsrModel &model, const Mat &masked_features,
                                   const std::vector<int> &tokens, double psi, int layer,
                                   int head) {
    Tape tape;
    tape.set_grad_enabled(false);
    int enc = model.encode(tape, masked_features, false, nullptr);
    return detect_with_encoder(model, tape.value(enc), tokens, psi, layer, head);
}

}  // namespace pasr
