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
#include <string>
#include <vector>

namespace pasr {

struct CorpusConfig {
    int n_train = 2000;
    int n_dev = 200;
    int n_test = 200;
    int feat_dim = 16;
    int vocab_size = 32;
    int hop_ms = 10;
    int min_tokens = 3;
    int max_tokens = 9;
    double mean_tokens = 5.0;
    int min_token_ms = 120;
    int max_token_ms = 400;
    // Per-occurrence deviation around a token's fixed base duration,
    // clipped back into [min_token_ms, max_token_ms].
    int token_jitter_ms = 20;
    double noise_sigma = 0.02;
    // Trailing silence: clipped gamma, right-skewed over [0, silence_max_ms].
    double silence_shape = 2.0;
    double silence_scale_ms = 180.0;
    int silence_max_ms = 1200;
    // Optional silent gap between tokens; 0 keeps alignments contiguous.
    int micro_pause_max_ms = 0;

    bool operator==(const CorpusConfig &) const = default;
};

struct ModelConfig {
    int d_model = 64;
    int heads = 4;
    int enc_layers = 2;
    int dec_layers = 2;
    int ff_dim = 128;
    double dropout = 0.1;
    double ctc_weight = 0.3;
    double label_smoothing = 0.1;

    bool operator==(const ModelConfig &) const = default;
};

struct TrainConfig {
    int steps = 9600;
    int batch_size = 16;
    int warmup_steps = 400;
    // Peak scale for the inverse-sqrt schedule:
    // lr = lr_scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)
    double lr_scale = 1.0;
    double grad_clip = 5.0;
    int log_every = 50;

    bool operator==(const TrainConfig &) const = default;
};

struct MaskConfig {
    int m_max_ms = 500;   // training mask duration upper bound
    int jitter_ms = 200;  // tail length jitter bound

    bool operator==(const MaskConfig &) const = default;
};

struct EvalConfig {
    std::vector<int> sweep_ms = {0, 100, 200, 300, 400, 500};
    std::vector<int> beams = {1, 20};
    double psi = 0.1;
    int fwer_k = 5;
    double length_penalty = 0.0;
    // Attention source for the EOU estimate: layer -1 = final decoder layer,
    // head -1 = average over heads.
    int eou_layer = -1;
    int eou_head = -1;
    // "predicted": estimate from the top decoded hypothesis;
    // "oracle": teacher-force the ground-truth transcript instead.
    std::string eou_source = "predicted";
    // 0 evaluates the whole test split.
    int max_utterances = 0;

    bool operator==(const EvalConfig &) const = default;
};

struct ExperimentConfig {
    uint64_t seed = 1234;
    CorpusConfig corpus;
    ModelConfig model;
    TrainConfig train;
    MaskConfig mask;
    EvalConfig eval;

    bool operator==(const ExperimentConfig &) const = default;
};

ExperimentConfig default_config();

// Overlay a JSON document onto the defaults. Unknown keys, wrong types and
// out-of-range values are all config errors.
ExperimentConfig parse_config_json(const std::string &text);

// Canonical serialization (sorted keys); config_hash covers exactly this.
std::string config_to_json(const ExperimentConfig &cfg);
uint64_t config_hash(const ExperimentConfig &cfg);

void validate_config(const ExperimentConfig &cfg);

}  // namespace pasr
