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

#include "core/train.hpp"

#include "core/corpus.hpp"
#include "core/io.hpp"
#include "core/mask.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <vector>

namespace pasr {

using nlohmann::json;

double noam_lr(const TrainConfig &cfg, int d_model, int step) {
    require(step >= 1, PASR_ERR_INVALID_ARGUMENT, "noam_lr: step is 1-based");
    double s = static_cast<double>(step);
    double w = static_cast<double>(cfg.warmup_steps);
    return cfg.lr_scale / std::sqrt(static_cast<double>(d_model)) *
           std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

namespace {

std::vector<std::vector<float>> snapshot_params(const ParamStore &store) {
    std::vector<std::vector<float>> snap(store.size());
    for (size_t i = 0; i < store.size(); ++i) snap[i] = store.at(i).value.v;
    return snap;
}

void restore_params(ParamStore &store, const std::vector<std::vector<float>> &snap) {
    for (size_t i = 0; i < store.size(); ++i) store.at(i).value.v = snap[i];
}

bool params_finite(const ParamStore &store) {
    for (size_t i = 0; i < store.size(); ++i) {
        for (float x : store.at(i).value.v) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

}  // namespace

TrainResult train_model(const ExperimentConfig &cfg, const std::filesystem::path &corpus_dir,
                        const std::string &variant, const std::filesystem::path &out_dir,
                        bool force) {
    validate_config(cfg);
    require(variant == "baseline" || variant == "proposed", PASR_ERR_INVALID_ARGUMENT,
            cat("unknown variant '", variant, "' (expected baseline or proposed)"));
    ExperimentConfig corpus_cfg = load_corpus_config(corpus_dir);
    require(corpus_cfg.corpus == cfg.corpus, PASR_ERR_INVALID_ARGUMENT,
            cat("corpus at ", corpus_dir.string(),
                " was generated with different corpus settings"));

    std::vector<Utterance> utts = load_manifest(corpus_dir, "train");
    require(!utts.empty(), PASR_ERR_INVALID_ARGUMENT, "train split is empty");
    std::vector<Mat> feats;
    feats.reserve(utts.size());
    for (const Utterance &u : utts) feats.push_back(load_features(corpus_dir, u));

    prepare_out_dir(out_dir, force);
    write_text_file(out_dir / "config.json", config_to_json(cfg));
    std::ofstream log(out_dir / "train_log.jsonl");
    require(log.good(), PASR_ERR_IO, cat("cannot write ", (out_dir / "train_log.jsonl").string()));

    // The init stream is variant-independent on purpose: baseline and
    // proposed start from identical weights.
    uint64_t init_seed = mix_seed(cfg.seed, fnv1a("model-init"));
    AsrModel model(cfg.model, cfg.corpus.vocab_size, cfg.corpus.feat_dim, init_seed);
    Rng train_rng(mix_seed(cfg.seed, fnv1a("train")));
    const bool augment = variant == "proposed";
    AdamConfig adam;

    auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&t0]() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    std::vector<std::vector<float>> last_good = snapshot_params(model.store());
    int last_good_step = 0;
    TrainResult result;
    result.model_dir = out_dir;

    auto meta_json = [&](int steps_trained) {
        ModelMeta meta;
        meta.model = cfg.model;
        meta.vocab_size = cfg.corpus.vocab_size;
        meta.feat_dim = cfg.corpus.feat_dim;
        meta.variant = variant;
        meta.seed = cfg.seed;
        meta.corpus_config_hash = hex_u64(config_hash(corpus_cfg));
        meta.steps_trained = steps_trained;
        return model_meta_to_json(meta);
    };

    for (int step = 1; step <= cfg.train.steps; ++step) {
        Rng step_rng = train_rng.fork("step", static_cast<uint64_t>(step));
        model.store().zero_grads();
        double loss_sum = 0.0;
        int contributed = 0;
        std::vector<double> mask_draws;
        bool bad_loss = false;

        for (int m = 0; m < cfg.train.batch_size; ++m) {
            Rng member_rng = step_rng.fork("member", static_cast<uint64_t>(m));
            size_t idx = static_cast<size_t>(
                member_rng.uniform_int(0, static_cast<int64_t>(utts.size()) - 1));
            const Utterance &utt = utts[idx];
            const Mat *input = &feats[idx];
            Mat masked;
            if (augment) {
                MaskSpec spec;
                masked = apply_training_mask(feats[idx], utt, cfg.mask, member_rng, &spec);
                input = &masked;
                mask_draws.push_back(spec.t_mask_ms);
            }
            Tape tape;
            AsrModel::Loss loss = model.joint_loss(tape, *input, utt.tokens, true, &member_rng);
            if (loss.ctc_impossible) {
                ++result.skipped_members;
                continue;
            }
            // Per-token normalization keeps the scale independent of length.
            int rows = static_cast<int>(utt.tokens.size()) + 1;
            int norm = tape.scale(loss.joint, 1.0 / rows);
            double v = tape.scalar_value(norm);
            if (!std::isfinite(v)) {
                bad_loss = true;
                break;
            }
            loss_sum += v;
            tape.backward(norm);
            ++contributed;
        }

        if (bad_loss) {
            restore_params(model.store(), last_good);
            model.save(out_dir, meta_json(last_good_step));
            fail(PASR_ERR_NUMERIC,
                 cat("non-finite loss at step ", step, "; last good checkpoint (step ",
                     last_good_step, ") saved to ", out_dir.string()));
        }
        if (contributed == 0) continue;

        model.store().scale_grads(1.0 / contributed);
        double gnorm = model.store().grad_norm();
        if (!std::isfinite(gnorm)) {
            restore_params(model.store(), last_good);
            model.save(out_dir, meta_json(last_good_step));
            fail(PASR_ERR_NUMERIC,
                 cat("non-finite gradient at step ", step, "; last good checkpoint (step ",
                     last_good_step, ") saved to ", out_dir.string()));
        }
        if (gnorm > cfg.train.grad_clip) {
            model.store().scale_grads(cfg.train.grad_clip / gnorm);
        }
        double lr = noam_lr(cfg.train, cfg.model.d_model, step);
        adam_step(model.store(), lr, adam, step);

        if (!params_finite(model.store())) {
            restore_params(model.store(), last_good);
            model.save(out_dir, meta_json(last_good_step));
            fail(PASR_ERR_NUMERIC,
                 cat("non-finite parameters after step ", step, "; last good checkpoint (step ",
                     last_good_step, ") saved to ", out_dir.string()));
        }
        last_good = snapshot_params(model.store());
        last_good_step = step;
        result.final_loss = loss_sum / contributed;
        result.steps_done = step;

        if (step == 1 || step % cfg.train.log_every == 0 || step == cfg.train.steps) {
            json rec;
            rec["step"] = step;
            rec["loss"] = result.final_loss;
            rec["lr"] = lr;
            rec["grad_norm"] = gnorm;
            rec["members"] = contributed;
            rec["wall_ms"] = wall_ms();
            if (augment) rec["mask_ms"] = mask_draws;
            append_line(log, rec.dump());
        }
    }

    model.save(out_dir, meta_json(result.steps_done));

    json manifest;
    manifest["kind"] = "train";
    manifest["config_hash"] = hex_u64(config_hash(cfg));
    manifest["seed"] = cfg.seed;
    manifest["variant"] = variant;
    manifest["corpus_dir"] = corpus_dir.string();
    manifest["corpus_config_hash"] = hex_u64(config_hash(corpus_cfg));
    manifest["checkpoint"] = "model.pasr";
    manifest["meta"] = "model.json";
    manifest["log"] = "train_log.jsonl";
    manifest["config"] = "config.json";
    manifest["steps"] = result.steps_done;
    manifest["skipped_members"] = result.skipped_members;
    manifest["final_loss"] = result.final_loss;
    manifest["wall_ms"] = wall_ms();
    write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace pasr
