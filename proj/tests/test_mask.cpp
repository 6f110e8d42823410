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
#include "core/mask.hpp"
#include "core/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace pasr;

namespace {

struct Fixture {
    Mat features;
    Utterance utt;
};

// Single-token utterance over [0, t_eou) with all-ones features, so any
// masked frame is unmistakable.
Fixture make_fixture(int t_eou_ms, int t_ms) {
    Fixture f;
    f.utt.id = "fix";
    f.utt.tokens = {2};
    f.utt.align_ms = {{0, t_eou_ms}};
    f.utt.t_eou_ms = t_eou_ms;
    f.utt.t_ms = t_ms;
    f.features = Mat((t_ms + 9) / 10, 4);
    f.features.fill(1.0f);
    return f;
}

bool row_is_zero(const Mat &m, int r) {
    for (int c = 0; c < m.cols; ++c) {
        if (m(r, c) != 0.0f) return false;
    }
    return true;
}

bool row_is_ones(const Mat &m, int r) {
    for (int c = 0; c < m.cols; ++c) {
        if (m(r, c) != 1.0f) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("training mask zeroes exactly the tail region") {
    Fixture f = make_fixture(1000, 1400);
    MaskConfig cfg;
    Rng rng(21);
    bool saw_clamp = false;
    for (int i = 0; i < 500; ++i) {
        MaskSpec spec;
        Mat out = apply_training_mask(f.features, f.utt, cfg, rng, &spec);

        CHECK(spec.t_mask_ms >= 0.0);
        CHECK(spec.t_mask_ms <= cfg.m_max_ms);
        CHECK(spec.delta_ms >= -cfg.jitter_ms);
        CHECK(spec.delta_ms <= cfg.jitter_ms);

        int want_first = static_cast<int>(
            std::ceil((f.utt.t_eou_ms - spec.t_mask_ms) / 10.0));
        if (want_first < 0) want_first = 0;
        CHECK(spec.first_masked == want_first);

        REQUIRE(out.rows == spec.total_frames);
        CHECK(out.cols == f.features.cols);
        int floor_frames = spec.first_masked > 1 ? spec.first_masked : 1;
        CHECK(spec.total_frames >= floor_frames);
        if (spec.delta_clamped) {
            saw_clamp = true;
            CHECK(spec.total_frames == floor_frames);
        } else {
            CHECK(spec.total_frames ==
                  f.features.rows + static_cast<int>(std::lround(spec.delta_ms / 10.0)));
        }

        for (int r = 0; r < out.rows; ++r) {
            if (r < spec.first_masked && r < f.features.rows) {
                CHECK(row_is_ones(out, r));
            } else {
                CHECK(row_is_zero(out, r));
            }
        }
    }
    // This fixture has masked regions far longer than the jitter can shrink,
    // so the clamp must never fire here.
    CHECK(!saw_clamp);
}

TEST_CASE("jitter clamp keeps unmasked speech intact on short utterances") {
    // 60 ms of speech, minimal silence: negative jitter frequently tries to
    // cut below the unmasked prefix.
    Fixture f = make_fixture(60, 80);
    MaskConfig cfg;
    Rng rng(22);
    int clamped = 0;
    for (int i = 0; i < 400; ++i) {
        MaskSpec spec;
        Mat out = apply_training_mask(f.features, f.utt, cfg, rng, &spec);
        CHECK(out.rows >= 1);
        CHECK(out.rows >= spec.first_masked);
        clamped += spec.delta_clamped ? 1 : 0;
        for (int r = 0; r < spec.first_masked && r < out.rows; ++r) {
            CHECK(row_is_ones(out, r));
        }
    }
    CHECK(clamped > 0);
}

TEST_CASE("training mask durations are uniform over [0, M]") {
    Fixture f = make_fixture(1000, 1400);
    MaskConfig cfg;
    Rng rng(23);
    std::vector<double> masks, deltas;
    masks.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        MaskSpec spec;
        apply_training_mask(f.features, f.utt, cfg, rng, &spec);
        masks.push_back(spec.t_mask_ms);
        deltas.push_back(spec.delta_ms);
    }
    CHECK(ks_uniform_pvalue(masks, 0.0, cfg.m_max_ms) > 0.01);
    CHECK(ks_uniform_pvalue(deltas, -cfg.jitter_ms, cfg.jitter_ms) > 0.01);
}

TEST_CASE("eval mask zero returns the input untouched") {
    Fixture f = make_fixture(730, 1100);
    MaskSpec spec;
    Mat out = apply_eval_mask(f.features, f.utt, 0, &spec);
    CHECK(out.rows == f.features.rows);
    CHECK(out.v == f.features.v);
    CHECK(spec.first_masked == -1);
}

TEST_CASE("eval mask zeroes from the boundary frame onward") {
    Fixture f = make_fixture(730, 1100);
    for (int t_mask : {100, 200, 300, 400, 500, 730}) {
        MaskSpec spec;
        Mat out = apply_eval_mask(f.features, f.utt, t_mask, &spec);
        REQUIRE(out.rows == f.features.rows);
        int first = (730 - t_mask) / 10;
        CHECK(spec.first_masked == first);
        for (int r = 0; r < out.rows; ++r) {
            if (r < first) {
                CHECK(row_is_ones(out, r));
            } else {
                CHECK(row_is_zero(out, r));
            }
        }
    }
}

TEST_CASE("eval mask rejects degenerate and negative inputs") {
    Fixture f = make_fixture(500, 900);
    try {
        apply_eval_mask(f.features, f.utt, 501, nullptr);
        FAIL("mask beyond t_eou accepted");
    } catch (const Error &e) {
        CHECK(e.status() == PASR_ERR_DEGENERATE_INPUT);
    }
    try {
        apply_eval_mask(f.features, f.utt, -1, nullptr);
        FAIL("negative mask accepted");
    } catch (const Error &e) {
        CHECK(e.status() == PASR_ERR_INVALID_ARGUMENT);
    }
}

TEST_CASE("mask boundary floor never leaks future frames") {
    // t_eou 995, mask 100: boundary at floor(89.5) = frame 89, which starts
    // at 890 ms; frame 89 itself is zeroed even though it begins before
    // t_eou - t_mask.
    Fixture f = make_fixture(995, 1300);
    MaskSpec spec;
    Mat out = apply_eval_mask(f.features, f.utt, 100, &spec);
    CHECK(spec.first_masked == 89);
    CHECK(row_is_ones(out, 88));
    CHECK(row_is_zero(out, 89));
}
