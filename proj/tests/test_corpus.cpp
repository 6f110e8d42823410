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
#include "core/corpus.hpp"
#include "core/io.hpp"
#include "core/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace pasr;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg = default_config();
    cfg.seed = 404;
    cfg.corpus.n_train = 60;
    cfg.corpus.n_dev = 8;
    cfg.corpus.n_test = 8;
    cfg.corpus.feat_dim = 8;
    cfg.corpus.vocab_size = 16;
    return cfg;
}

fs::path temp_dir(const std::string &tag) {
    fs::path dir = fs::temp_directory_path() / ("pasr_corpus_" + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("token count and silence samplers respect their bounds") {
    CorpusConfig cfg = small_config().corpus;
    Rng rng(9);
    double token_sum = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        int k = sample_token_count(cfg, rng);
        CHECK(k >= cfg.min_tokens);
        CHECK(k <= cfg.max_tokens);
        token_sum += k;
    }
    CHECK(std::abs(token_sum / n - cfg.mean_tokens) < 0.2);

    for (int i = 0; i < n; ++i) {
        int s = sample_silence_ms(cfg, rng);
        CHECK(s >= 1);
        CHECK(s <= cfg.silence_max_ms);
    }
}

TEST_CASE("token model exposes zeroed service rows and in-range samples") {
    CorpusConfig cfg = small_config().corpus;
    TokenModel tm(cfg, 11);
    REQUIRE(tm.prototypes().rows == cfg.vocab_size);
    REQUIRE(tm.prototypes().cols == cfg.feat_dim);
    for (int c = 0; c < cfg.feat_dim; ++c) {
        CHECK(tm.prototypes()(kBlankId, c) == 0.0f);
        CHECK(tm.prototypes()(kEosId, c) == 0.0f);
    }
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        int first = tm.sample_first(rng);
        CHECK(first >= kFirstTokenId);
        CHECK(first < cfg.vocab_size);
        int next = tm.sample_next(first, rng);
        CHECK(next >= kFirstTokenId);
        CHECK(next < cfg.vocab_size);
    }
}

TEST_CASE("generated utterances have consistent timing and alignments") {
    ExperimentConfig cfg = small_config();
    TokenModel tm(cfg.corpus, cfg.seed);
    for (int i = 0; i < 40; ++i) {
        std::string id = "u-" + std::to_string(i);
        Rng rng = utterance_rng(cfg.seed, id);
        GeneratedUtterance g = generate_utterance(cfg.corpus, tm, id, rng);
        const Utterance &u = g.meta;

        REQUIRE(!u.tokens.empty());
        REQUIRE(u.tokens.size() == u.align_ms.size());
        CHECK(u.align_ms.front()[0] == 0);
        for (size_t k = 0; k < u.align_ms.size(); ++k) {
            CHECK(u.align_ms[k][1] > u.align_ms[k][0]);
            if (k) CHECK(u.align_ms[k][0] == u.align_ms[k - 1][1]);
            int dur = u.align_ms[k][1] - u.align_ms[k][0];
            CHECK(dur >= cfg.corpus.min_token_ms);
            CHECK(dur <= cfg.corpus.max_token_ms);
            CHECK(u.tokens[k] >= kFirstTokenId);
            CHECK(u.tokens[k] < cfg.corpus.vocab_size);
        }
        CHECK(u.align_ms.back()[1] == u.t_eou_ms);
        CHECK(u.t_eou_ms < u.t_ms);  // trailing silence is never empty
        CHECK(g.features.rows == (u.t_ms + 9) / 10);
        CHECK(g.features.cols == cfg.corpus.feat_dim);

        // Same id, same seed: bit-identical regeneration.
        Rng rng2 = utterance_rng(cfg.seed, id);
        GeneratedUtterance h = generate_utterance(cfg.corpus, tm, id, rng2);
        CHECK(h.features.v == g.features.v);
        CHECK(h.meta.tokens == u.tokens);
        CHECK(h.meta.t_ms == u.t_ms);
    }
}

TEST_CASE("with zero noise every frame equals its prototype or silence") {
    ExperimentConfig cfg = small_config();
    cfg.corpus.noise_sigma = 0.0;
    TokenModel tm(cfg.corpus, cfg.seed);
    Rng rng = utterance_rng(cfg.seed, "clean");
    GeneratedUtterance g = generate_utterance(cfg.corpus, tm, "clean", rng);
    const Utterance &u = g.meta;

    for (int f = 0; f < g.features.rows; ++f) {
        int ms = f * cfg.corpus.hop_ms;
        int owner = -1;
        for (size_t k = 0; k < u.align_ms.size(); ++k) {
            if (ms >= u.align_ms[k][0] && ms < u.align_ms[k][1]) {
                owner = static_cast<int>(k);
                break;
            }
        }
        for (int c = 0; c < g.features.cols; ++c) {
            float want = owner < 0 ? 0.0f
                                   : tm.prototypes()(u.tokens[static_cast<size_t>(owner)], c);
            CHECK(g.features(f, c) == want);
        }
    }
}

TEST_CASE("corpus generation is deterministic and loadable") {
    ExperimentConfig cfg = small_config();
    fs::path dir_a = temp_dir("det_a");
    fs::path dir_b = temp_dir("det_b");
    generate_corpus(cfg, dir_a, false);
    generate_corpus(cfg, dir_b, false);

    for (const char *split : {"train", "dev", "test"}) {
        CHECK(read_text_file(dir_a / (std::string(split) + ".jsonl")) ==
              read_text_file(dir_b / (std::string(split) + ".jsonl")));
    }

    auto train = load_manifest(dir_a, "train");
    auto dev = load_manifest(dir_a, "dev");
    auto test = load_manifest(dir_a, "test");
    CHECK(static_cast<int>(train.size()) == cfg.corpus.n_train);
    CHECK(static_cast<int>(dev.size()) == cfg.corpus.n_dev);
    CHECK(static_cast<int>(test.size()) == cfg.corpus.n_test);

    std::set<std::string> ids;
    for (const auto &u : train) ids.insert(u.id);
    for (const auto &u : dev) ids.insert(u.id);
    for (const auto &u : test) ids.insert(u.id);
    CHECK(ids.size() == train.size() + dev.size() + test.size());

    for (size_t i = 0; i < 5; ++i) {
        CHECK(hash_file(dir_a / train[i].path) == hash_file(dir_b / train[i].path));
        Mat f = load_features(dir_a, train[i]);
        CHECK(f.rows == (train[i].t_ms + 9) / 10);
        CHECK(f.cols == cfg.corpus.feat_dim);
    }

    ExperimentConfig stored = load_corpus_config(dir_a);
    CHECK(stored == cfg);

    // A different seed must change the data.
    ExperimentConfig other = cfg;
    other.seed = 405;
    fs::path dir_c = temp_dir("det_c");
    generate_corpus(other, dir_c, false);
    CHECK(read_text_file(dir_a / "train.jsonl") != read_text_file(dir_c / "train.jsonl"));

    // Overwrite requires force.
    CHECK_THROWS_AS(generate_corpus(cfg, dir_a, false), Error);
    generate_corpus(cfg, dir_a, true);
    CHECK(static_cast<int>(load_manifest(dir_a, "train").size()) == cfg.corpus.n_train);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
}

TEST_CASE("trailing silence in the corpus matches the sampler distribution") {
    ExperimentConfig cfg = small_config();
    cfg.corpus.n_train = 400;
    cfg.corpus.n_dev = 1;
    cfg.corpus.n_test = 1;
    fs::path dir = temp_dir("silence");
    generate_corpus(cfg, dir, false);
    auto train = load_manifest(dir, "train");

    auto bin_of = [&](int ms) {
        int b = ms * 12 / (cfg.corpus.silence_max_ms + 1);
        return b > 11 ? 11 : b;
    };
    std::vector<int> got(12, 0), want(12, 0);
    for (const auto &u : train) ++got[static_cast<size_t>(bin_of(u.t_ms - u.t_eou_ms))];
    Rng rng(777);
    for (size_t i = 0; i < train.size(); ++i) {
        ++want[static_cast<size_t>(bin_of(sample_silence_ms(cfg.corpus, rng)))];
    }
    CHECK(chi_square_two_sample_pvalue(got, want) > 0.001);
    fs::remove_all(dir);
}

TEST_CASE("manifest loader reports missing splits") {
    fs::path dir = temp_dir("missing");
    fs::create_directories(dir);
    CHECK_THROWS_AS(load_manifest(dir, "train"), Error);
    fs::remove_all(dir);
}
