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

#include "core/corpus.hpp"

#include "core/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pasr {

namespace {

using nlohmann::json;

std::string split_file(const std::string &split) { return split + ".jsonl"; }

json utterance_to_json(const Utterance &u) {
    json align = json::array();
    for (const auto &a : u.align_ms) align.push_back({a[0], a[1]});
    return json{{"id", u.id},          {"path", u.path}, {"tokens", u.tokens},
                {"align", align},      {"t_eou_ms", u.t_eou_ms},
                {"t_ms", u.t_ms}};
}

Utterance utterance_from_json(const json &j) {
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.path = j.at("path").get<std::string>();
    u.tokens = j.at("tokens").get<std::vector<int>>();
    for (const auto &a : j.at("align")) {
        u.align_ms.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
    }
    u.t_eou_ms = j.at("t_eou_ms").get<int>();
    u.t_ms = j.at("t_ms").get<int>();
    return u;
}

}  // namespace

TokenModel::TokenModel(const CorpusConfig &cfg, uint64_t seed) {
    int v = cfg.vocab_size;
    int n_real = v - kFirstTokenId;
    Rng proto_rng = Rng(seed).fork("prototypes");
    prototypes_ = Mat(v, cfg.feat_dim);
    for (int k = kFirstTokenId; k < v; ++k) {
        double norm_sq = 0.0;
        for (int f = 0; f < cfg.feat_dim; ++f) {
            double x = proto_rng.normal();
            prototypes_(k, f) = static_cast<float>(x);
            norm_sq += x * x;
        }
        float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        for (int f = 0; f < cfg.feat_dim; ++f) prototypes_(k, f) *= inv;
    }

    // Each vocabulary token gets a fixed base duration, so the length of any
    // token sequence is largely determined by its identities. Without this the
    // time of a future event could never be inferred from predicted tokens.
    Rng dur_rng = Rng(seed).fork("durations");
    base_ms_.assign(static_cast<size_t>(v), 0);
    for (int k = kFirstTokenId; k < v; ++k) {
        base_ms_[static_cast<size_t>(k)] =
            static_cast<int>(dur_rng.uniform_int(cfg.min_token_ms, cfg.max_token_ms));
    }

    // Bigram weights: exp of Gaussian logits, sd 2, so rows are clearly
    // non-uniform and the next token is partly predictable from the previous.
    Rng chain_rng = Rng(seed).fork("bigram");
    init_.resize(static_cast<size_t>(n_real));
    for (auto &w : init_) w = std::exp(chain_rng.normal(0.0, 2.0));
    trans_.resize(static_cast<size_t>(n_real));
    for (auto &row : trans_) {
        row.resize(static_cast<size_t>(n_real));
        for (auto &w : row) w = std::exp(chain_rng.normal(0.0, 2.0));
    }
}

int TokenModel::base_duration_ms(int token) const {
    require(token >= kFirstTokenId && token < static_cast<int>(base_ms_.size()),
            PASR_ERR_INVALID_ARGUMENT, "base_duration_ms: bad token");
    return base_ms_[static_cast<size_t>(token)];
}

int TokenModel::sample_first(Rng &rng) const {
    return kFirstTokenId + rng.categorical(init_);
}

int TokenModel::sample_next(int prev, Rng &rng) const {
    int row = prev - kFirstTokenId;
    require(row >= 0 && row < static_cast<int>(trans_.size()), PASR_ERR_INVALID_ARGUMENT,
            "sample_next: bad previous token");
    return kFirstTokenId + rng.categorical(trans_[static_cast<size_t>(row)]);
}

int sample_silence_ms(const CorpusConfig &cfg, Rng &rng) {
    double s = rng.gamma(cfg.silence_shape, cfg.silence_scale_ms);
    int ms = static_cast<int>(std::lround(s));
    // Floor of 1 ms keeps t_eou strictly before the audio end.
    if (ms < 1) ms = 1;
    if (ms > cfg.silence_max_ms) ms = cfg.silence_max_ms;
    return ms;
}

int sample_token_count(const CorpusConfig &cfg, Rng &rng) {
    int n = cfg.min_tokens + rng.poisson(cfg.mean_tokens - cfg.min_tokens);
    if (n > cfg.max_tokens) n = cfg.max_tokens;
    return n;
}

GeneratedUtterance generate_utterance(const CorpusConfig &cfg, const TokenModel &tm,
                                      const std::string &id, Rng &rng) {
    GeneratedUtterance out;
    Utterance &u = out.meta;
    u.id = id;
    u.path = cat("features/", id, ".pasr");

    int n = sample_token_count(cfg, rng);
    u.tokens.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        u.tokens[static_cast<size_t>(i)] =
            i == 0 ? tm.sample_first(rng) : tm.sample_next(u.tokens[static_cast<size_t>(i - 1)], rng);
    }

    int t = 0;
    for (int i = 0; i < n; ++i) {
        if (i > 0 && cfg.micro_pause_max_ms > 0) {
            t += static_cast<int>(rng.uniform_int(0, cfg.micro_pause_max_ms));
        }
        int dur = tm.base_duration_ms(u.tokens[static_cast<size_t>(i)]);
        if (cfg.token_jitter_ms > 0) {
            dur += static_cast<int>(rng.uniform_int(-cfg.token_jitter_ms, cfg.token_jitter_ms));
        }
        dur = std::clamp(dur, cfg.min_token_ms, cfg.max_token_ms);
        u.align_ms.push_back({t, t + dur});
        t += dur;
    }
    u.t_eou_ms = t;
    u.t_ms = t + sample_silence_ms(cfg, rng);

    int t_feat = (u.t_ms + cfg.hop_ms - 1) / cfg.hop_ms;
    out.features = Mat(t_feat, cfg.feat_dim);
    // A frame belongs to the token whose [start, end) interval contains the
    // frame start; everything else is silence.
    size_t tok = 0;
    for (int f = 0; f < t_feat; ++f) {
        int ms = f * cfg.hop_ms;
        while (tok < u.align_ms.size() && ms >= u.align_ms[tok][1]) ++tok;
        if (tok < u.align_ms.size() && ms >= u.align_ms[tok][0]) {
            const float *proto = tm.prototypes().row_ptr(u.tokens[tok]);
            std::copy(proto, proto + cfg.feat_dim, out.features.row_ptr(f));
        }
    }
    if (cfg.noise_sigma > 0.0) {
        for (auto &x : out.features.v) {
            x += static_cast<float>(rng.normal(0.0, cfg.noise_sigma));
        }
    }
    return out;
}

Rng utterance_rng(uint64_t corpus_seed, const std::string &id) {
    return Rng(mix_seed(corpus_seed, fnv1a(id)));
}

void generate_corpus(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                     bool force) {
    namespace fs = std::filesystem;
    validate_config(cfg);
    prepare_out_dir(out_dir, force);
    fs::create_directories(out_dir / "features");

    TokenModel tm(cfg.corpus, cfg.seed);
    struct SplitDef {
        const char *name;
        int count;
    };
    const SplitDef splits[] = {{"train", cfg.corpus.n_train},
                               {"dev", cfg.corpus.n_dev},
                               {"test", cfg.corpus.n_test}};
    for (const auto &split : splits) {
        std::ofstream manifest(out_dir / split_file(split.name));
        require(manifest.is_open(), PASR_ERR_IO, "cannot write manifest");
        for (int i = 0; i < split.count; ++i) {
            char idbuf[64];
            std::snprintf(idbuf, sizeof(idbuf), "%s-%06d", split.name, i);
            std::string id(idbuf);
            Rng rng = utterance_rng(cfg.seed, id);
            GeneratedUtterance g = generate_utterance(cfg.corpus, tm, id, rng);
            TensorRecord rec;
            rec.name = "features";
            rec.dims = {static_cast<uint32_t>(g.features.rows),
                        static_cast<uint32_t>(g.features.cols)};
            rec.values = g.features.v;
            write_container(out_dir / g.meta.path, {rec});
            append_line(manifest, utterance_to_json(g.meta).dump());
        }
        require(manifest.good(), PASR_ERR_IO, "manifest write failed");
    }
    write_text_file(out_dir / "corpus.json", config_to_json(cfg));
}

std::vector<Utterance> load_manifest(const std::filesystem::path &corpus_dir,
                                     const std::string &split) {
    std::vector<Utterance> out;
    for (const std::string &line : read_lines(corpus_dir / split_file(split))) {
        try {
            out.push_back(utterance_from_json(json::parse(line)));
        } catch (const json::exception &e) {
            fail(PASR_ERR_IO, cat("bad manifest line in ", split, ": ", e.what()));
        }
    }
    require(!out.empty(), PASR_ERR_IO, cat("empty manifest for split ", split));
    return out;
}

Mat load_features(const std::filesystem::path &corpus_dir, const Utterance &utt) {
    auto records = read_container(corpus_dir / utt.path);
    require(records.size() == 1 && records[0].name == "features", PASR_ERR_IO,
            cat("bad feature file: ", utt.path));
    const TensorRecord &rec = records[0];
    require(rec.dims.size() == 2, PASR_ERR_SHAPE, "feature record must be rank 2");
    Mat m(static_cast<int>(rec.dims[0]), static_cast<int>(rec.dims[1]));
    m.v = rec.values;
    return m;
}

ExperimentConfig load_corpus_config(const std::filesystem::path &corpus_dir) {
    return parse_config_json(read_text_file(corpus_dir / "corpus.json"));
}

}  // namespace pasr
