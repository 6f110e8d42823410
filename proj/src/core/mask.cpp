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

#include "core/mask.hpp"

#include <cmath>

namespace pasr {

namespace {

constexpr int kHopMs = 10;

// ceil((t_eou - t_mask)/hop), clamped to 0: a frame is zeroed only when its
// whole [10f, 10f+10) window lies inside the masked interval, so no signal
// from before the mask boundary is ever destroyed. The straddling frame may
// keep up to one hop of post-boundary signal, which is below the 40 ms
// resolution of an encoder frame.
int mask_start_frame(int t_eou_ms, double t_mask_ms) {
    double start_ms = static_cast<double>(t_eou_ms) - t_mask_ms;
    int frame = static_cast<int>(std::ceil(start_ms / kHopMs));
    return frame < 0 ? 0 : frame;
}

}  // namespace

Mat apply_training_mask(const Mat &features, const Utterance &u, const MaskConfig &cfg,
                        Rng &rng, MaskSpec *spec_out) {
    MaskSpec spec;
    spec.t_mask_ms = rng.uniform(0.0, static_cast<double>(cfg.m_max_ms));
    spec.delta_ms = rng.uniform(-static_cast<double>(cfg.jitter_ms),
                                static_cast<double>(cfg.jitter_ms));
    spec.first_masked = mask_start_frame(u.t_eou_ms, spec.t_mask_ms);

    int delta_frames = static_cast<int>(std::lround(spec.delta_ms / kHopMs));
    int total = features.rows + delta_frames;
    // Shrinking may consume zeroed frames only; at least one frame must stay.
    int floor_frames = spec.first_masked > 1 ? spec.first_masked : 1;
    if (total < floor_frames) {
        total = floor_frames;
        spec.delta_clamped = true;
    }
    spec.total_frames = total;

    Mat out(total, features.cols);
    int copy_rows = spec.first_masked < total ? spec.first_masked : total;
    if (copy_rows > features.rows) copy_rows = features.rows;
    for (int r = 0; r < copy_rows; ++r) {
        const float *src = features.row_ptr(r);
        std::copy(src, src + features.cols, out.row_ptr(r));
    }
    if (spec_out) *spec_out = spec;
    return out;
}

Mat apply_eval_mask(const Mat &features, const Utterance &u, int t_mask_ms,
                    MaskSpec *spec_out) {
    require(t_mask_ms >= 0, PASR_ERR_INVALID_ARGUMENT, "eval mask must be >= 0");
    MaskSpec spec;
    spec.t_mask_ms = t_mask_ms;
    spec.total_frames = features.rows;
    if (t_mask_ms == 0) {
        // Full audio available; nothing is masked, including trailing silence.
        if (spec_out) *spec_out = spec;
        return features;
    }
    require(t_mask_ms <= u.t_eou_ms, PASR_ERR_DEGENERATE_INPUT,
            cat("eval mask ", t_mask_ms, " ms exceeds t_eou ", u.t_eou_ms, " ms for ", u.id));
    spec.first_masked = mask_start_frame(u.t_eou_ms, t_mask_ms);
    Mat out(features.rows, features.cols);
    for (int r = 0; r < spec.first_masked; ++r) {
        const float *src = features.row_ptr(r);
        std::copy(src, src + features.cols, out.row_ptr(r));
    }
    if (spec_out) *spec_out = spec;
    return out;
}

}  // namespace pasr
