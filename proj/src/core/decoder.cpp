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

#include "core/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pasr {

DecoderSession::DecoderSession(AsrModel &model, const Mat &masked_features) : model_(model) {
    Tape tape;
    tape.set_grad_enabled(false);
    int enc = model_.encode(tape, masked_features, false, nullptr);
    enc_ = tape.value(enc);
}

int DecoderSession::vocab() const { return model_.vocab(); }

int DecoderSession::max_steps(const BeamConfig &cfg) const {
    return std::min(2 * enc_.rows, cfg.step_cap);
}

std::vector<double> DecoderSession::next_log_probs(const std::vector<int> &prefix) {
    Tape tape;
    tape.set_grad_enabled(false);
    int enc = tape.constant(enc_);
    DecodeOut dec = model_.decode_teacher_forced(tape, enc, prefix, false, nullptr);
    const Mat &logits = tape.value(dec.logits);
    const float *row = logits.row_ptr(logits.rows - 1);
    std::vector<double> lp(static_cast<size_t>(logits.cols));
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
    double log_z = mx + std::log(z);
    for (int c = 0; c < logits.cols; ++c)
        lp[static_cast<size_t>(c)] = static_cast<double>(row[c]) - log_z;
    return lp;
}

double normalized_score(const Hypothesis &hyp, double length_penalty) {
    if (length_penalty == 0.0) return hyp.score;
    return hyp.score / std::pow(static_cast<double>(hyp.tokens.size()) + 1.0, length_penalty);
}

namespace {

struct LiveBeam {
    std::vector<int> tokens;
    double score = 0.0;
};

// Deterministic order: higher score first, then shorter, then lexicographic.
bool beam_before(double sa, const std::vector<int> &ta, double sb, const std::vector<int> &tb) {
    if (sa != sb) return sa > sb;
    if (ta.size() != tb.size()) return ta.size() < tb.size();
    return ta < tb;
}

}  // namespace

std::vector<Hypothesis> beam_search(DecoderSession &session,
                                    const std::vector<int> &forced_prefix,
                                    const BeamConfig &cfg) {
    require(cfg.beam >= 1, PASR_ERR_INVALID_ARGUMENT, "beam width must be >= 1");
    require(cfg.length_penalty >= 0.0, PASR_ERR_INVALID_ARGUMENT, "negative length penalty");
    int vocab = session.vocab();
    int steps = session.max_steps(cfg);
    std::vector<LiveBeam> live;
    live.push_back({});
    std::vector<Hypothesis> finished;

    std::vector<int> query;
    for (int step = 0; step < steps && !live.empty(); ++step) {
        std::vector<LiveBeam> candidates;
        candidates.reserve(live.size() * static_cast<size_t>(vocab));
        for (const LiveBeam &b : live) {
            query = forced_prefix;
            query.insert(query.end(), b.tokens.begin(), b.tokens.end());
            std::vector<double> lp = session.next_log_probs(query);
            finished.push_back({b.tokens, b.score + lp[static_cast<size_t>(kEosId)], true});
            for (int t = kFirstTokenId; t < vocab; ++t) {
                LiveBeam next;
                next.tokens = b.tokens;
                next.tokens.push_back(t);
                next.score = b.score + lp[static_cast<size_t>(t)];
                candidates.push_back(std::move(next));
            }
        }
        std::sort(candidates.begin(), candidates.end(), [](const LiveBeam &a, const LiveBeam &b) {
            return beam_before(a.score, a.tokens, b.score, b.tokens);
        });
        if (static_cast<int>(candidates.size()) > cfg.beam) candidates.resize(cfg.beam);
        live = std::move(candidates);

        if (cfg.length_penalty == 0.0 && static_cast<int>(finished.size()) >= cfg.beam) {
            // Extensions only lower a raw score, so once the beam's best live
            // score cannot reach the current top finished set we are done.
            std::partial_sort(finished.begin(),
                              finished.begin() + cfg.beam, finished.end(),
                              [](const Hypothesis &a, const Hypothesis &b) {
                                  return beam_before(a.score, a.tokens, b.score, b.tokens);
                              });
            double floor = finished[static_cast<size_t>(cfg.beam - 1)].score;
            bool reachable = false;
            for (const LiveBeam &b : live) {
                if (b.score > floor) {
                    reachable = true;
                    break;
                }
            }
            if (!reachable) {
                live.clear();
                break;
            }
        }
    }

    for (const LiveBeam &b : live) finished.push_back({b.tokens, b.score, false});
    double alpha = cfg.length_penalty;
    std::sort(finished.begin(), finished.end(), [alpha](const Hypothesis &a, const Hypothesis &b) {
        if (a.finished != b.finished) return a.finished;
        return beam_before(normalized_score(a, alpha), a.tokens, normalized_score(b, alpha),
                           b.tokens);
    });
    if (static_cast<int>(finished.size()) > cfg.beam) finished.resize(cfg.beam);
    return finished;
}

void split_spoken_future(const Utterance &utt, int t_mask_ms, std::vector<int> *spoken,
                         std::vector<int> *future) {
    require(utt.tokens.size() == utt.align_ms.size(), PASR_ERR_INVALID_ARGUMENT,
            cat("utterance ", utt.id, ": tokens and alignment differ in length"));
    spoken->clear();
    future->clear();
    int cutoff = utt.t_eou_ms - t_mask_ms;
    for (size_t i = 0; i < utt.tokens.size(); ++i) {
        if (utt.align_ms[i][1] <= cutoff) {
            spoken->push_back(utt.tokens[i]);
        } else {
            future->push_back(utt.tokens[i]);
        }
    }
}

}  // namespace pasr
