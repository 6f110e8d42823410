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

#include "core/config.hpp"

#include <json.hpp>

#include <set>

namespace pasr {

namespace {

using nlohmann::json;

// Tracks which keys were consumed so leftovers can be rejected.
class Section {
public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), PASR_ERR_INVALID_ARGUMENT, cat("config: ", path_, " must be an object"));
    }

    template <typename T>
    void get(const char *key, T &out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception &) {
            fail(PASR_ERR_INVALID_ARGUMENT, cat("config: bad value type for ", path_, ".", key));
        }
    }

    const json *child(const char *key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            require(seen_.count(it.key()) != 0, PASR_ERR_INVALID_ARGUMENT,
                    cat("config: unknown key ", path_, ".", it.key()));
        }
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_corpus(const json &j, CorpusConfig &c) {
    Section s(j, "corpus");
    s.get("n_train", c.n_train);
    s.get("n_dev", c.n_dev);
    s.get("n_test", c.n_test);
    s.get("feat_dim", c.feat_dim);
    s.get("vocab_size", c.vocab_size);
    s.get("hop_ms", c.hop_ms);
    s.get("min_tokens", c.min_tokens);
    s.get("max_tokens", c.max_tokens);
    s.get("mean_tokens", c.mean_tokens);
    s.get("min_token_ms", c.min_token_ms);
    s.get("max_token_ms", c.max_token_ms);
    s.get("token_jitter_ms", c.token_jitter_ms);
    s.get("noise_sigma", c.noise_sigma);
    s.get("silence_shape", c.silence_shape);
    s.get("silence_scale_ms", c.silence_scale_ms);
    s.get("silence_max_ms", c.silence_max_ms);
    s.get("micro_pause_max_ms", c.micro_pause_max_ms);
    s.finish();
}

void read_model(const json &j, ModelConfig &m) {
    Section s(j, "model");
    s.get("d_model", m.d_model);
    s.get("heads", m.heads);
    s.get("enc_layers", m.enc_layers);
    s.get("dec_layers", m.dec_layers);
    s.get("ff_dim", m.ff_dim);
    s.get("dropout", m.dropout);
    s.get("ctc_weight", m.ctc_weight);
    s.get("label_smoothing", m.label_smoothing);
    s.finish();
}

void read_train(const json &j, TrainConfig &t) {
    Section s(j, "train");
    s.get("steps", t.steps);
    s.get("batch_size", t.batch_size);
    s.get("warmup_steps", t.warmup_steps);
    s.get("lr_scale", t.lr_scale);
    s.get("grad_clip", t.grad_clip);
    s.get("log_every", t.log_every);
    s.finish();
}

void read_mask(const json &j, MaskConfig &m) {
    Section s(j, "mask");
    s.get("m_max_ms", m.m_max_ms);
    s.get("jitter_ms", m.jitter_ms);
    s.finish();
}

void read_eval(const json &j, EvalConfig &e) {
    Section s(j, "eval");
    s.get("sweep_ms", e.sweep_ms);
    s.get("beams", e.beams);
    s.get("psi", e.psi);
    s.get("fwer_k", e.fwer_k);
    s.get("length_penalty", e.length_penalty);
    s.get("eou_layer", e.eou_layer);
    s.get("eou_head", e.eou_head);
    s.get("eou_source", e.eou_source);
    s.get("max_utterances", e.max_utterances);
    s.finish();
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        fail(PASR_ERR_INVALID_ARGUMENT, cat("config: JSON parse error: ", e.what()));
    }
    ExperimentConfig cfg;
    Section root(j, "(root)");
    root.get("seed", cfg.seed);
    if (const json *c = root.child("corpus")) read_corpus(*c, cfg.corpus);
    if (const json *c = root.child("model")) read_model(*c, cfg.model);
    if (const json *c = root.child("train")) read_train(*c, cfg.train);
    if (const json *c = root.child("mask")) read_mask(*c, cfg.mask);
    if (const json *c = root.child("eval")) read_eval(*c, cfg.eval);
    root.finish();
    validate_config(cfg);
    return cfg;
}

std::string config_to_json(const ExperimentConfig &cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["corpus"] = {
        {"n_train", cfg.corpus.n_train},
        {"n_dev", cfg.corpus.n_dev},
        {"n_test", cfg.corpus.n_test},
        {"feat_dim", cfg.corpus.feat_dim},
        {"vocab_size", cfg.corpus.vocab_size},
        {"hop_ms", cfg.corpus.hop_ms},
        {"min_tokens", cfg.corpus.min_tokens},
        {"max_tokens", cfg.corpus.max_tokens},
        {"mean_tokens", cfg.corpus.mean_tokens},
        {"min_token_ms", cfg.corpus.min_token_ms},
        {"max_token_ms", cfg.corpus.max_token_ms},
        {"token_jitter_ms", cfg.corpus.token_jitter_ms},
        {"noise_sigma", cfg.corpus.noise_sigma},
        {"silence_shape", cfg.corpus.silence_shape},
        {"silence_scale_ms", cfg.corpus.silence_scale_ms},
        {"silence_max_ms", cfg.corpus.silence_max_ms},
        {"micro_pause_max_ms", cfg.corpus.micro_pause_max_ms},
    };
    j["model"] = {
        {"d_model", cfg.model.d_model},
        {"heads", cfg.model.heads},
        {"enc_layers", cfg.model.enc_layers},
        {"dec_layers", cfg.model.dec_layers},
        {"ff_dim", cfg.model.ff_dim},
        {"dropout", cfg.model.dropout},
        {"ctc_weight", cfg.model.ctc_weight},
        {"label_smoothing", cfg.model.label_smoothing},
    };
    j["train"] = {
        {"steps", cfg.train.steps},
        {"batch_size", cfg.train.batch_size},
        {"warmup_steps", cfg.train.warmup_steps},
        {"lr_scale", cfg.train.lr_scale},
        {"grad_clip", cfg.train.grad_clip},
        {"log_every", cfg.train.log_every},
    };
    j["mask"] = {
        {"m_max_ms", cfg.mask.m_max_ms},
        {"jitter_ms", cfg.mask.jitter_ms},
    };
    j["eval"] = {
        {"sweep_ms", cfg.eval.sweep_ms},
        {"beams", cfg.eval.beams},
        {"psi", cfg.eval.psi},
        {"fwer_k", cfg.eval.fwer_k},
        {"length_penalty", cfg.eval.length_penalty},
        {"eou_layer", cfg.eval.eou_layer},
        {"eou_head", cfg.eval.eou_head},
        {"eou_source", cfg.eval.eou_source},
        {"max_utterances", cfg.eval.max_utterances},
    };
    return j.dump(2) + "\n";
}

uint64_t config_hash(const ExperimentConfig &cfg) {
    return fnv1a(config_to_json(cfg));
}

void validate_config(const ExperimentConfig &cfg) {
    const CorpusConfig &c = cfg.corpus;
    require(c.n_train >= 1 && c.n_dev >= 1 && c.n_test >= 1, PASR_ERR_INVALID_ARGUMENT,
            "config: split sizes must be >= 1");
    require(c.feat_dim >= 1, PASR_ERR_INVALID_ARGUMENT, "config: feat_dim must be >= 1");
    require(c.vocab_size >= kFirstTokenId + 2, PASR_ERR_INVALID_ARGUMENT,
            "config: vocab_size too small for blank/eos plus tokens");
    require(c.hop_ms == 10, PASR_ERR_INVALID_ARGUMENT, "config: hop_ms is fixed at 10");
    require(c.min_tokens >= 1 && c.min_tokens <= c.max_tokens && c.max_tokens <= 24,
            PASR_ERR_INVALID_ARGUMENT, "config: token count range must satisfy 1 <= min <= max <= 24");
    require(c.mean_tokens >= c.min_tokens && c.mean_tokens <= c.max_tokens,
            PASR_ERR_INVALID_ARGUMENT, "config: mean_tokens outside [min_tokens, max_tokens]");
    require(c.min_token_ms >= 20 && c.min_token_ms <= c.max_token_ms && c.max_token_ms <= 2000,
            PASR_ERR_INVALID_ARGUMENT, "config: token duration range invalid");
    require(c.token_jitter_ms >= 0, PASR_ERR_INVALID_ARGUMENT,
            "config: token_jitter_ms must be >= 0");
    require(c.noise_sigma >= 0.0 && c.noise_sigma <= 0.5, PASR_ERR_INVALID_ARGUMENT,
            "config: noise_sigma must be in [0, 0.5]");
    require(c.silence_shape > 0.0 && c.silence_scale_ms > 0.0, PASR_ERR_INVALID_ARGUMENT,
            "config: silence distribution parameters must be positive");
    require(c.silence_max_ms >= 0 && c.silence_max_ms <= 1200, PASR_ERR_INVALID_ARGUMENT,
            "config: silence_max_ms must be in [0, 1200]");
    require(c.micro_pause_max_ms >= 0, PASR_ERR_INVALID_ARGUMENT,
            "config: micro_pause_max_ms must be >= 0");

    const ModelConfig &m = cfg.model;
    require(m.d_model >= 8 && m.heads >= 1 && m.d_model % m.heads == 0,
            PASR_ERR_INVALID_ARGUMENT, "config: d_model must be divisible by heads");
    require(m.enc_layers >= 1 && m.dec_layers >= 1 && m.ff_dim >= 1,
            PASR_ERR_INVALID_ARGUMENT, "config: layer counts and ff_dim must be >= 1");
    require(m.dropout >= 0.0 && m.dropout < 1.0, PASR_ERR_INVALID_ARGUMENT,
            "config: dropout must be in [0, 1)");
    require(m.ctc_weight >= 0.0 && m.ctc_weight <= 1.0, PASR_ERR_INVALID_ARGUMENT,
            "config: ctc_weight must be in [0, 1]");
    require(m.label_smoothing >= 0.0 && m.label_smoothing < 1.0, PASR_ERR_INVALID_ARGUMENT,
            "config: label_smoothing must be in [0, 1)");

    const TrainConfig &t = cfg.train;
    require(t.steps >= 1 && t.batch_size >= 1 && t.warmup_steps >= 1,
            PASR_ERR_INVALID_ARGUMENT, "config: steps, batch_size, warmup_steps must be >= 1");
    require(t.lr_scale > 0.0 && t.grad_clip > 0.0, PASR_ERR_INVALID_ARGUMENT,
            "config: lr_scale and grad_clip must be positive");
    require(t.log_every >= 1, PASR_ERR_INVALID_ARGUMENT, "config: log_every must be >= 1");

    require(cfg.mask.m_max_ms >= 0 && cfg.mask.jitter_ms >= 0, PASR_ERR_INVALID_ARGUMENT,
            "config: mask durations must be >= 0");

    const EvalConfig &e = cfg.eval;
    require(!e.sweep_ms.empty(), PASR_ERR_INVALID_ARGUMENT, "config: sweep_ms empty");
    for (size_t i = 0; i < e.sweep_ms.size(); ++i) {
        require(e.sweep_ms[i] >= 0, PASR_ERR_INVALID_ARGUMENT, "config: sweep_ms values must be >= 0");
        if (i) {
            require(e.sweep_ms[i] > e.sweep_ms[i - 1], PASR_ERR_INVALID_ARGUMENT,
                    "config: sweep_ms must be strictly ascending");
        }
    }
    require(!e.beams.empty(), PASR_ERR_INVALID_ARGUMENT, "config: beams empty");
    for (size_t i = 0; i < e.beams.size(); ++i) {
        require(e.beams[i] >= 1, PASR_ERR_INVALID_ARGUMENT, "config: beam sizes must be >= 1");
        if (i) {
            require(e.beams[i] > e.beams[i - 1], PASR_ERR_INVALID_ARGUMENT,
                    "config: beams must be strictly ascending");
        }
    }
    require(e.psi > 0.0 && e.psi <= 1.0, PASR_ERR_INVALID_ARGUMENT,
            "config: psi must be in (0, 1]");
    require(e.fwer_k >= 1, PASR_ERR_INVALID_ARGUMENT, "config: fwer_k must be >= 1");
    require(e.length_penalty >= 0.0, PASR_ERR_INVALID_ARGUMENT,
            "config: length_penalty must be >= 0");
    require(e.eou_source == "predicted" || e.eou_source == "oracle", PASR_ERR_INVALID_ARGUMENT,
            "config: eou_source must be 'predicted' or 'oracle'");
    require(e.eou_layer >= -1 && e.eou_head >= -1, PASR_ERR_INVALID_ARGUMENT,
            "config: eou_layer/eou_head must be >= -1");
    if (e.eou_layer >= 0) {
        require(e.eou_layer < cfg.model.dec_layers, PASR_ERR_INVALID_ARGUMENT,
                "config: eou_layer out of range");
    }
    if (e.eou_head >= 0) {
        require(e.eou_head < cfg.model.heads, PASR_ERR_INVALID_ARGUMENT,
                "config: eou_head out of range");
    }
    require(e.max_utterances >= 0, PASR_ERR_INVALID_ARGUMENT,
            "config: max_utterances must be >= 0");
}

}  // namespace pasr
