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

#include "core/corpus.hpp"
#include "core/model.hpp"
#include "core/tensor.hpp"

#include <vector>

namespace pasr {

struct BeamConfig {
    int beam = 10;
    // Ranking divisor is (len + 1) ^ length_penalty; 0 keeps raw summed
    // log-probabilities.
    double length_penalty = 0.0;
    int step_cap = 64;
};

struct Hypothesis {
    std::vector<int> tokens;  // generated continuation; real tokens only
    double score = 0.0;       // sum of generated-step log-probs, eos included
    bool finished = false;    // false means the step budget ran out first
};

// Runs the encoder once and serves next-token distributions for arbitrary
// prefixes against the cached encoder output. Each query replays the decoder
// over the whole prefix; there is no state to invalidate between prefixes.
class DecoderSession {
public:
    DecoderSession(AsrModel &model, const Mat &masked_features);

    const Mat &encoder_output() const { return enc_; }
    int vocab() const;
    // Step budget: twice the encoder length, clipped by the config cap.
    int max_steps(const BeamConfig &cfg) const;
    // Natural-log distribution over the symbol following `prefix`. The blank
    // row is present but is a CTC-only symbol, never a decoding candidate.
    std::vector<double> next_log_probs(const std::vector<int> &prefix);

private:
    AsrModel &model_;
    Mat enc_;
};

// Standard batched-expansion beam search continuing `forced_prefix` (which may
// be empty). Returned hypotheses exclude the prefix, are sorted best first
// (finished before unfinished), and are at most `cfg.beam` long.
std::vector<Hypothesis> beam_search(DecoderSession &session,
                                    const std::vector<int> &forced_prefix,
                                    const BeamConfig &cfg);

// Ranking score used by beam_search.
double normalized_score(const Hypothesis &hyp, double length_penalty);

// A token counts as spoken once its aligned end fits inside the unmasked
// audio, i.e. end_ms <= t_eou - t_mask; everything later is future.
void split_spoken_future(const Utterance &utt, int t_mask_ms, std::vector<int> *spoken,
                         std::vector<int> *future);

}  // namespace pasr
