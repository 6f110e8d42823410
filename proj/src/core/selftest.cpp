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

#include "core/selftest.hpp"

#include "core/decoder.hpp"
#include "core/eou.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace pasr {

namespace {

void add_line(OracleReport &rep, bool verbose, bool ok, const std::string &text) {
    ++rep.suites;
    if (!ok) ++rep.failures;
    std::string line = cat(ok ? "ok   " : "FAIL ", text);
    if (verbose) std::printf("%s\n", line.c_str());
    rep.lines.push_back(std::move(line));
}

// --- EOU: threshold rule vs a literal scan over qualifying indices. ---

int eou_suite(uint64_t seed, int rows) {
    Rng rng = Rng(seed).fork("eou-oracle");
    const double psis[] = {0.1, 0.5, 1.0};
    int bad = 0;
    for (int it = 0; it < rows; ++it) {
        int len = static_cast<int>(rng.uniform_int(1, 80));
        std::vector<double> row(static_cast<size_t>(len));
        for (double &x : row) x = rng.uniform();
        if (rng.uniform() < 0.25 && len >= 2) {
            // Duplicate the max somewhere else: exact threshold ties must
            // still pick the later index.
            size_t mi = static_cast<size_t>(
                std::max_element(row.begin(), row.end()) - row.begin());
            size_t di = static_cast<size_t>(rng.uniform_int(0, len - 1));
            row[di] = row[mi];
        }
        int prev_frame = std::numeric_limits<int>::max();
        for (double psi : psis) {
            EouEstimate est = estimate_eou(row, psi, 40.0);
            double amax = *std::max_element(row.begin(), row.end());
            int last = -1;
            for (int i = 0; i < len; ++i) {
                if (row[static_cast<size_t>(i)] >= psi * amax) last = i;
            }
            int frame = last + 1;
            if (est.frame != frame || est.t_hat_ms != 40.0 * frame) ++bad;
            // Positive rescaling must not move the estimate.
            for (double c : {0.5, 3.0}) {
                std::vector<double> scaled(row);
                for (double &x : scaled) x *= c;
                if (estimate_eou(scaled, psi, 40.0).frame != est.frame) ++bad;
            }
            // Larger psi can only move the chosen frame left.
            if (est.frame > prev_frame) ++bad;
            prev_frame = est.frame;
        }
    }
    return bad;
}

// --- Edit distance vs enumeration of every alignment path. ---

struct PathBest {
    int cost = std::numeric_limits<int>::max();
    int diag = -1;
    EditStats stats;
};

void walk_paths(const std::vector<int> &r, const std::vector<int> &h, size_t i, size_t j,
                EditStats acc, int diag, PathBest &best) {
    if (i == r.size() && j == h.size()) {
        int cost = acc.total();
        if (cost < best.cost || (cost == best.cost && diag > best.diag)) {
            best.cost = cost;
            best.diag = diag;
            best.stats = acc;
        }
        return;
    }
    if (i < r.size() && j < h.size()) {
        EditStats d = acc;
        if (r[i] != h[j]) ++d.sub;
        walk_paths(r, h, i + 1, j + 1, d, diag + 1, best);
    }
    if (i < r.size()) {
        EditStats d = acc;
        ++d.del;
        walk_paths(r, h, i + 1, j, d, diag, best);
    }
    if (j < h.size()) {
        EditStats d = acc;
        ++d.ins;
        walk_paths(r, h, i, j + 1, d, diag, best);
    }
}

int edit_suite(uint64_t seed, int pairs) {
    Rng rng = Rng(seed).fork("edit-oracle");
    int bad = 0;
    for (int it = 0; it < pairs; ++it) {
        std::vector<int> r(static_cast<size_t>(rng.uniform_int(0, 6)));
        std::vector<int> h(static_cast<size_t>(rng.uniform_int(0, 6)));
        for (int &x : r) x = static_cast<int>(rng.uniform_int(0, 2));
        for (int &x : h) x = static_cast<int>(rng.uniform_int(0, 2));
        EditStats got = edit_distance(r, h);
        PathBest best;
        EditStats zero;
        walk_paths(r, h, 0, 0, zero, 0, best);
        if (got.total() != best.cost || got.sub != best.stats.sub ||
            got.ins != best.stats.ins || got.del != best.stats.del) {
            ++bad;
        }
    }
    return bad;
}

// --- CTC vs direct summation over all collapsing symbol sequences. ---

std::vector<int> collapse(const std::vector<int> &path) {
    std::vector<int> out;
    int prev = -1;
    for (int s : path) {
        if (s != prev && s != kBlankId) out.push_back(s);
        prev = s;
    }
    return out;
}

int ctc_suite(uint64_t seed, int cases_per_shape) {
    Rng rng = Rng(seed).fork("ctc-oracle");
    const int V = 4;
    int bad = 0;
    for (int T = 1; T <= 6; ++T) {
        for (int N = 1; N <= 3; ++N) {
            for (int rep = 0; rep < cases_per_shape; ++rep) {
                MatT<double> logits = randn_mat<double>(T, V, 2.0, rng);
                std::vector<int> targets(static_cast<size_t>(N));
                for (int &t : targets) t = static_cast<int>(rng.uniform_int(1, V - 1));

                TapeT<double> tape;
                tape.set_grad_enabled(false);
                double got = tape.scalar_value(tape.ctc_nll(tape.input(logits), targets));

                MatT<double> lp = log_softmax_rows_value(logits);
                double prob = 0.0;
                std::vector<int> path(static_cast<size_t>(T), 0);
                size_t total = 1;
                for (int t = 0; t < T; ++t) total *= static_cast<size_t>(V);
                for (size_t code = 0; code < total; ++code) {
                    size_t c = code;
                    double lsum = 0.0;
                    for (int t = 0; t < T; ++t) {
                        path[static_cast<size_t>(t)] = static_cast<int>(c % V);
                        c /= V;
                        lsum += lp(t, path[static_cast<size_t>(t)]);
                    }
                    if (collapse(path) == targets) prob += std::exp(lsum);
                }
                double want = prob > 0.0 ? -std::log(prob)
                                         : std::numeric_limits<double>::infinity();
                bool both_inf = std::isinf(got) && std::isinf(want);
                if (!both_inf && std::fabs(got - want) > 1e-6) ++bad;
            }
        }
    }
    return bad;
}

// --- Beam search vs exhaustive scoring on a miniature model. ---

double sequence_score(DecoderSession &session, const std::vector<int> &seq) {
    std::vector<int> prefix;
    double score = 0.0;
    for (int tok : seq) {
        score += session.next_log_probs(prefix)[static_cast<size_t>(tok)];
        prefix.push_back(tok);
    }
    score += session.next_log_probs(prefix)[static_cast<size_t>(kEosId)];
    return score;
}

int beam_suite(uint64_t seed) {
    ModelConfig mc;
    mc.d_model = 16;
    mc.heads = 2;
    mc.enc_layers = 1;
    mc.dec_layers = 1;
    mc.ff_dim = 32;
    mc.dropout = 0.0;
    AsrModel model(mc, 5, 6, mix_seed(seed, fnv1a("mini-model")));
    Rng rng = Rng(seed).fork("mini-features");
    Mat features = randn_mat<float>(16, 6, 1.0f, rng);
    DecoderSession session(model, features);

    // Step budget 4 finishes sequences of content length <= 3; enumerate
    // exactly that set.
    BeamConfig wide;
    wide.beam = 40;
    wide.step_cap = 4;
    std::vector<Hypothesis> hyps = beam_search(session, {}, wide);

    std::vector<int> best_seq;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> frontier = {{}};
    for (int len = 0; len <= 3; ++len) {
        std::vector<std::vector<int>> next;
        for (const std::vector<int> &seq : frontier) {
            double s = sequence_score(session, seq);
            if (s > best_score) {
                best_score = s;
                best_seq = seq;
            }
            if (len < 3) {
                for (int tok = kFirstTokenId; tok < 5; ++tok) {
                    std::vector<int> ext = seq;
                    ext.push_back(tok);
                    next.push_back(std::move(ext));
                }
            }
        }
        frontier = std::move(next);
    }

    int bad = 0;
    if (hyps.empty() || !hyps[0].finished) ++bad;
    if (hyps[0].tokens != best_seq || std::fabs(hyps[0].score - best_score) > 1e-9) ++bad;
    BeamConfig narrow;
    narrow.beam = 1;
    narrow.step_cap = 4;
    std::vector<Hypothesis> greedy = beam_search(session, {}, narrow);
    if (greedy[0].score > hyps[0].score + 1e-9) ++bad;
    return bad;
}

}  // namespace

OracleReport run_oracle_tests(uint64_t seed, bool verbose) {
    OracleReport rep;
    int bad = eou_suite(seed, 10000);
    add_line(rep, verbose, bad == 0,
             cat("eou-threshold-oracle: 10000 rows x {0.1,0.5,1.0} psi, ", bad, " mismatches"));
    bad = edit_suite(seed, 1000);
    add_line(rep, verbose, bad == 0,
             cat("edit-distance-oracle: 1000 pairs vs path enumeration, ", bad, " mismatches"));
    bad = ctc_suite(seed, 10);
    add_line(rep, verbose, bad == 0,
             cat("ctc-oracle: T<=6 N<=3 x10 vs collapsing-path sum, ", bad, " mismatches"));
    bad = beam_suite(seed);
    add_line(rep, verbose, bad == 0,
             cat("beam-exhaustive-oracle: miniature argmax search, ", bad, " mismatches"));
    return rep;
}

}  // namespace pasr
