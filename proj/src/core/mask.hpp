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

#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace pasr {

struct MaskSpec {
    double t_mask_ms = 0.0;
    double delta_ms = 0.0;   // tail length jitter, training only
    int first_masked = -1;   // first zeroed frame index; -1 when nothing is masked
    int total_frames = 0;    // frame count after jitter
    bool delta_clamped = false;
};

// Training-time augmentation: zero the frames covering the final t_mask ms of
// speech plus all trailing silence, then jitter the total length by delta
// zero frames at the tail. t_mask ~ U[0, m_max], delta ~ U[-jitter, jitter].
// The jitter never removes unmasked speech frames; it is clamped instead.
Mat apply_training_mask(const Mat &features, const Utterance &u, const MaskConfig &cfg,
                        Rng &rng, MaskSpec *spec_out);

// Evaluation-time masking. t_mask_ms = 0 returns the features unmodified;
// otherwise frames from floor((t_eou - t_mask)/hop) onward are zeroed and the
// length is kept. t_mask_ms > t_eou_ms is a degenerate-input error.
Mat apply_eval_mask(const Mat &features, const Utterance &u, int t_mask_ms,
                    MaskSpec *spec_out);

}  // namespace pasr
