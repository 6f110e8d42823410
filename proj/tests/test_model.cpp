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

#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

using namespace pasr;

namespace {

ModelConfig tiny_config() {
    ModelConfig mc;
    mc.d_model = 16;
    mc.heads = 2;
    mc.enc_layers = 1;
    mc.dec_layers = 2;
    mc.ff_dim = 32;
    mc.dropout = 0.0;
    mc.ctc_weight = 0.3;
    mc.label_smoothing = 0.1;
    return mc;
}

constexpr int kVocab = 8;
constexpr int kFeat = 6;

Mat test_features(int rows, uint64_t seed) {
    Rng rng(seed);
    return randn_mat<float>(rows, kFeat, 0.5f, rng);
}

}  // namespace

TEST_CASE("subsampled_len is two rounds of stride-2 convolution") {
    for (int t = 1; t <= 40; ++t) {
        int once = (t - 1) / 2 + 1;   // kernel 3, stride 2, pad 1
        int twice = (once - 1) / 2 + 1;
        CHECK(AsrModel::subsampled_len(t) == twice);
    }
    CHECK(AsrModel::subsampled_len(20) == 5);
    CHECK(AsrModel::subsampled_len(21) == 6);
}

TEST_CASE("encoder, ctc head and decoder produce the right shapes") {
    AsrModel model(tiny_config(), kVocab, kFeat, 99);
    Mat feats = test_features(20, 1);

    Tape tape;
    tape.set_grad_enabled(false);
    int enc = model.encode(tape, feats, false, nullptr);
    // tape.value() references go stale once more nodes are added; keep the
    // shape, not the reference.
    int enc_rows = tape.value(enc).rows;
    CHECK(enc_rows == AsrModel::subsampled_len(20));
    CHECK(tape.value(enc).cols == tiny_config().d_model);

    const Mat &ctc = tape.value(model.ctc_head(tape, enc));
    CHECK(ctc.rows == enc_rows);
    CHECK(ctc.cols == kVocab);

    std::vector<int> tokens = {2, 5, 3};
    DecodeOut dec = model.decode_teacher_forced(tape, enc, tokens, false, nullptr);
    const Mat &logits = tape.value(dec.logits);
    CHECK(logits.rows == 4);
    CHECK(logits.cols == kVocab);

    REQUIRE(dec.cross_attn.size() == 2);
    for (const auto &layer : dec.cross_attn) {
        REQUIRE(layer.size() == 2);
        for (int node : layer) {
            const Mat &a = tape.value(node);
            CHECK(a.rows == 4);
            CHECK(a.cols == enc_rows);
            for (int r = 0; r < a.rows; ++r) {
                double sum = 0.0;
                for (int c = 0; c < a.cols; ++c) {
                    CHECK(a(r, c) >= 0.0f);
                    sum += a(r, c);
                }
                CHECK(std::abs(sum - 1.0) < 1e-5);
            }
        }
    }
}

TEST_CASE("cross_attention_matrix selects layers and averages heads") {
    AsrModel model(tiny_config(), kVocab, kFeat, 7);
    Mat feats = test_features(18, 2);
    Tape tape;
    tape.set_grad_enabled(false);
    int enc = model.encode(tape, feats, false, nullptr);
    DecodeOut dec = model.decode_teacher_forced(tape, enc, {4, 2}, false, nullptr);

    Mat avg = cross_attention_matrix(tape, dec, -1, -1);
    const Mat &h0 = tape.value(dec.cross_attn.back()[0]);
    const Mat &h1 = tape.value(dec.cross_attn.back()[1]);
    REQUIRE(avg.same_shape(h0));
    for (size_t i = 0; i < avg.v.size(); ++i) {
        CHECK(std::abs(avg.v[i] - 0.5f * (h0.v[i] + h1.v[i])) < 1e-6);
    }

    Mat single = cross_attention_matrix(tape, dec, 0, 1);
    const Mat &want = tape.value(dec.cross_attn[0][1]);
    CHECK(single.v == want.v);

    CHECK_THROWS(cross_attention_matrix(tape, dec, 5, 0));
    CHECK_THROWS(cross_attention_matrix(tape, dec, 0, 9));
}

TEST_CASE("joint loss recombines ctc and attention terms") {
    ModelConfig mc = tiny_config();
    AsrModel model(mc, kVocab, kFeat, 3);
    Mat feats = test_features(24, 3);
    std::vector<int> tokens = {2, 3};

    Tape tape;
    tape.set_grad_enabled(false);
    auto loss = model.joint_loss(tape, feats, tokens, false, nullptr);
    REQUIRE(!loss.ctc_impossible);
    REQUIRE(loss.joint >= 0);
    REQUIRE(loss.ctc >= 0);
    double joint = tape.scalar_value(loss.joint);
    double ctc = tape.scalar_value(loss.ctc);
    double att = tape.scalar_value(loss.att);
    CHECK(std::abs(joint - (0.3 * ctc + 0.7 * att)) < 1e-5);
    CHECK(std::isfinite(joint));

    // Pure attention when the ctc term is disabled.
    ModelConfig att_only = mc;
    att_only.ctc_weight = 0.0;
    AsrModel m2(att_only, kVocab, kFeat, 3);
    Tape t2;
    t2.set_grad_enabled(false);
    auto l2 = m2.joint_loss(t2, feats, tokens, false, nullptr);
    CHECK(l2.ctc == -1);
    CHECK(std::abs(t2.scalar_value(l2.joint) - t2.scalar_value(l2.att)) < 1e-6);
}

TEST_CASE("ctc-impossible samples are flagged, not scored") {
    AsrModel model(tiny_config(), kVocab, kFeat, 5);
    // 6 frames subsample to 2; five labels cannot fit.
    Mat feats = test_features(6, 4);
    Tape tape;
    tape.set_grad_enabled(false);
    auto loss = model.joint_loss(tape, feats, {2, 3, 4, 5, 6}, false, nullptr);
    CHECK(loss.ctc_impossible);
    CHECK(loss.joint == -1);
}

TEST_CASE("parameter init is seed-deterministic") {
    AsrModel a(tiny_config(), kVocab, kFeat, 42);
    AsrModel b(tiny_config(), kVocab, kFeat, 42);
    AsrModel c(tiny_config(), kVocab, kFeat, 43);
    REQUIRE(a.store().size() == b.store().size());
    bool all_equal = true, any_diff = false;
    for (size_t i = 0; i < a.store().size(); ++i) {
        all_equal = all_equal && a.store().at(i).value.v == b.store().at(i).value.v;
        any_diff = any_diff || a.store().at(i).value.v != c.store().at(i).value.v;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("dropout only acts in training mode") {
    ModelConfig mc = tiny_config();
    mc.dropout = 0.2;
    AsrModel model(mc, kVocab, kFeat, 11);
    Mat feats = test_features(20, 5);
    std::vector<int> tokens = {2, 3, 4};

    Tape t1;
    t1.set_grad_enabled(false);
    Tape t2;
    t2.set_grad_enabled(false);
    double eval1 = t1.scalar_value(model.joint_loss(t1, feats, tokens, false, nullptr).att);
    double eval2 = t2.scalar_value(model.joint_loss(t2, feats, tokens, false, nullptr).att);
    CHECK(eval1 == eval2);

    Rng r1(100), r2(200);
    Tape t3, t4;
    double train1 = t3.scalar_value(model.joint_loss(t3, feats, tokens, true, &r1).att);
    double train2 = t4.scalar_value(model.joint_loss(t4, feats, tokens, true, &r2).att);
    CHECK(train1 != train2);
}

TEST_CASE("positional encoding is deterministic and bounded") {
    AsrModel model(tiny_config(), kVocab, kFeat, 1);
    Mat p = model.positional_encoding(12);
    CHECK(p.rows == 12);
    CHECK(p.cols == tiny_config().d_model);
    for (float x : p.v) {
        CHECK(x >= -1.0f);
        CHECK(x <= 1.0f);
    }
    Mat q = model.positional_encoding(12);
    CHECK(p.v == q.v);
    // Distinct rows encode distinct positions.
    CHECK(!(std::equal(p.row_ptr(0), p.row_ptr(0) + p.cols, p.row_ptr(1))));
}

TEST_CASE("meta json round-trips") {
    ModelMeta meta;
    meta.model = tiny_config();
    meta.vocab_size = kVocab;
    meta.feat_dim = kFeat;
    meta.variant = "proposed";
    meta.seed = 321;
    meta.corpus_config_hash = "00ff00ff00ff00ff";
    meta.steps_trained = 77;
    ModelMeta back = model_meta_from_json(model_meta_to_json(meta));
    CHECK(back.model == meta.model);
    CHECK(back.vocab_size == meta.vocab_size);
    CHECK(back.feat_dim == meta.feat_dim);
    CHECK(back.variant == meta.variant);
    CHECK(back.seed == meta.seed);
    CHECK(back.corpus_config_hash == meta.corpus_config_hash);
    CHECK(back.steps_trained == meta.steps_trained);
}

TEST_CASE("save and load restore the exact weights") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "pasr_model_test";
    fs::remove_all(dir);

    AsrModel model(tiny_config(), kVocab, kFeat, 55);
    ModelMeta meta;
    meta.model = tiny_config();
    meta.vocab_size = kVocab;
    meta.feat_dim = kFeat;
    meta.variant = "baseline";
    meta.seed = 55;
    meta.corpus_config_hash = "0123456789abcdef";
    meta.steps_trained = 1;
    model.save(dir, model_meta_to_json(meta));

    ModelMeta got;
    auto loaded = load_model(dir, &got);
    CHECK(got.variant == "baseline");
    CHECK(got.model == tiny_config());
    REQUIRE(loaded->store().size() == model.store().size());
    for (size_t i = 0; i < model.store().size(); ++i) {
        CHECK(loaded->store().at(i).value.v == model.store().at(i).value.v);
    }

    // Same features, same loss.
    Mat feats = test_features(20, 6);
    Tape t1, t2;
    t1.set_grad_enabled(false);
    t2.set_grad_enabled(false);
    double l1 = t1.scalar_value(model.joint_loss(t1, feats, {2, 4}, false, nullptr).joint);
    double l2 = t2.scalar_value(loaded->joint_loss(t2, feats, {2, 4}, false, nullptr).joint);
    CHECK(l1 == l2);

    CHECK_THROWS(load_model(dir / "nope", nullptr));
    fs::remove_all(dir);
}

TEST_CASE("a few adam steps overfit one utterance") {
    ModelConfig mc = tiny_config();
    AsrModel model(mc, kVocab, kFeat, 13);
    Mat feats = test_features(20, 7);
    std::vector<int> tokens = {2, 5, 3};

    auto eval_loss = [&]() {
        Tape t;
        t.set_grad_enabled(false);
        return static_cast<double>(
            t.scalar_value(model.joint_loss(t, feats, tokens, false, nullptr).joint));
    };

    double before = eval_loss();
    AdamConfig ac;
    for (int step = 1; step <= 80; ++step) {
        model.store().zero_grads();
        Tape t;
        auto loss = model.joint_loss(t, feats, tokens, true, nullptr);
        REQUIRE(!loss.ctc_impossible);
        t.backward(loss.joint);
        adam_step(model.store(), 3e-3, ac, step);
    }
    double after = eval_loss();
    CHECK(after < 0.5 * before);
}
