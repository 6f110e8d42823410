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

// Release gate: runs the full default experiment (corpus, paired training,
// mask sweeps, report) plus the standalone numeric gates, and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.
//
// Environment:
//   PASR_ACCEPT_DIR    work directory (default ./acceptance_work)
//   PASR_ACCEPT_REUSE  "1" reuses artifacts from a previous run when their
//                      recorded config hash still matches

#include "core/common.hpp"
#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/decoder.hpp"
#include "core/gradcheck.hpp"
#include "core/io.hpp"
#include "core/mask.hpp"
#include "core/metrics.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "core/selftest.hpp"
#include "core/sweep.hpp"
#include "core/train.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

using namespace pasr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void criterion(int n, bool pass, const std::string &detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", n, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void note(const std::string &msg) {
    std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
    std::fflush(stderr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2) { return format_double(v, prec); }

// A run directory is reusable when its manifest records the same config hash.
bool reusable(const fs::path &dir, const ExperimentConfig &cfg) {
    fs::path mf = dir / "run_manifest.json";
    if (!fs::exists(mf)) return false;
    try {
        json j = json::parse(read_text_file(mf));
        return j.at("config_hash").get<std::string>() == hex_u64(config_hash(cfg));
    } catch (...) {
        return false;
    }
}

bool corpus_reusable(const fs::path &dir, const ExperimentConfig &cfg) {
    if (!fs::exists(dir / "corpus.json")) return false;
    try {
        return config_hash(load_corpus_config(dir)) == config_hash(cfg);
    } catch (...) {
        return false;
    }
}

Utterance stub_utterance(int t_eou_ms, int t_ms) {
    Utterance u;
    u.id = "fixture";
    u.tokens = {kFirstTokenId};
    u.align_ms = {{0, t_eou_ms}};
    u.t_eou_ms = t_eou_ms;
    u.t_ms = t_ms;
    return u;
}

Mat random_features(int rows, int cols, uint64_t seed) {
    Rng rng(seed);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = static_cast<float>(rng.uniform() + 0.25);
    return m;
}

// Criterion 8: masking invariants, self-contained fixtures.
void check_masking() {
    bool zero_ok = true;
    std::string zero_why;
    Mat feat = random_features(90, 12, 99);  // 730 ms speech inside 900 ms audio
    Utterance u = stub_utterance(730, 900);
    for (int m : {100, 200, 300, 400, 500}) {
        MaskSpec spec;
        Mat v = apply_eval_mask(feat, u, m, &spec);
        int first = (730 - m) / 10;
        if (spec.first_masked != first) {
            zero_ok = false;
            zero_why = cat("mask ", m, ": first_masked ", spec.first_masked, " wanted ", first);
            break;
        }
        for (int r = 0; r < v.rows && zero_ok; ++r) {
            for (int c = 0; c < v.cols; ++c) {
                float want = r < first ? feat(r, c) : 0.0f;
                if (v(r, c) != want) {
                    zero_ok = false;
                    zero_why = cat("mask ", m, ": frame ", r, " col ", c, " not exact");
                    break;
                }
            }
        }
        if (!zero_ok) break;
    }

    MaskSpec spec0;
    Mat same = apply_eval_mask(feat, u, 0, &spec0);
    bool identity_ok =
        spec0.first_masked == -1 && same.same_shape(feat) && same.v == feat.v;

    // Draw distribution on a fixture long enough that clamping never bites.
    MaskConfig mc;
    Utterance big = stub_utterance(6000, 7000);
    Mat big_feat = random_features(700, 4, 7);
    Rng rng(20260819);
    std::vector<double> draws, jitters;
    draws.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        MaskSpec spec;
        apply_training_mask(big_feat, big, mc, rng, &spec);
        draws.push_back(spec.t_mask_ms);
        jitters.push_back(spec.delta_ms);
    }
    double p_mask = ks_uniform_pvalue(draws, 0.0, double(mc.m_max_ms));
    double p_jit = ks_uniform_pvalue(jitters, -double(mc.jitter_ms), double(mc.jitter_ms));
    bool ks_ok = p_mask > 0.01 && p_jit > 0.01;

    criterion(8, zero_ok && identity_ok && ks_ok,
              cat("zero-region ", zero_ok ? "exact" : zero_why.c_str(), ", T_mask=0 identity ",
                  identity_ok ? "holds" : "BROKEN", ", KS p(t_mask)=", fmt(p_mask, 4),
                  " p(jitter)=", fmt(p_jit, 4), " over 10k draws"));
}

struct SweepTables {
    // (t_mask, beam) -> row
    std::map<std::pair<int, int>, SummaryRow> rows;
};

SweepTables load_tables(const fs::path &sweep_dir) {
    SweepTables t;
    for (const SummaryRow &r : parse_summary_csv(sweep_dir / "summary.csv")) {
        std::string tail = r.model.substr(r.model.find(".beam") + 5);
        t.rows[{r.t_mask_ms, std::stoi(tail)}] = r;
    }
    return t;
}

struct DecodeLine {
    std::string id;
    int t_mask_ms = 0;
    int beam = 0;
    double top_score = 0.0;
    std::vector<std::vector<int>> future_hyps;
};

std::vector<DecodeLine> load_decodes(const fs::path &sweep_dir) {
    std::vector<DecodeLine> out;
    for (const std::string &text : read_lines(sweep_dir / "decode.jsonl")) {
        json j = json::parse(text);
        DecodeLine d;
        d.id = j.at("id").get<std::string>();
        d.t_mask_ms = j.at("t_mask_ms").get<int>();
        d.beam = j.at("beam").get<int>();
        d.top_score = j.at("hyps").at(0).at("score").get<double>();
        for (const json &h : j.at("future_hyps"))
            d.future_hyps.push_back(h.at("tokens").get<std::vector<int>>());
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace

int main() {
    ExperimentConfig cfg = default_config();
    fs::path work = std::getenv("PASR_ACCEPT_DIR") ? fs::path(std::getenv("PASR_ACCEPT_DIR"))
                                                   : fs::path("acceptance_work");
    bool reuse = std::getenv("PASR_ACCEPT_REUSE") &&
                 std::string(std::getenv("PASR_ACCEPT_REUSE")) == "1";
    fs::create_directories(work);
    note(cat("work dir ", fs::absolute(work).string(), reuse ? " (reuse enabled)" : ""));

    // ----- criterion 1: finite-difference gradient gate -----
    {
        note("running gradcheck");
        auto t0 = std::chrono::steady_clock::now();
        GradcheckResult g = run_gradcheck(7, false, 1e-4);
        double secs = seconds_since(t0);
        criterion(1, g.ok && secs < 120.0,
                  cat(g.checks, " gradient scalars, max rel err ", fmt(g.max_rel_err * 1e6, 3),
                      "e-6 (worst ", g.worst, "), ", fmt(secs, 1), " s"));
    }

    // ----- oracle suites feed criteria 2, 3, 4 and 9 -----
    note("running oracle suites");
    OracleReport oracle = run_oracle_tests(7, false);
    auto suite_ok = [&](size_t i) {
        return i < oracle.lines.size() && oracle.lines[i].rfind("ok", 0) == 0;
    };
    criterion(2, suite_ok(0), oracle.lines.size() > 0 ? oracle.lines[0] : "suite missing");
    criterion(4, suite_ok(2), oracle.lines.size() > 2 ? oracle.lines[2] : "suite missing");

    // ----- criterion 8 needs no trained model -----
    check_masking();

    // ----- pipeline: corpus, paired training, sweeps, report -----
    fs::path corpus = work / "corpus";
    fs::path model_dir[2] = {work / "model_baseline", work / "model_proposed"};
    fs::path sweep_dir[2] = {work / "sweep_baseline", work / "sweep_proposed"};
    const char *variants[2] = {"baseline", "proposed"};
    double train_secs[2] = {0.0, 0.0};
    bool pipeline_ok = true;
    std::string pipeline_err;

    try {
        if (reuse && corpus_reusable(corpus, cfg)) {
            note("reusing corpus");
        } else {
            note("generating corpus");
            generate_corpus(cfg, corpus, true);
        }
        for (int v = 0; v < 2; ++v) {
            if (reuse && reusable(model_dir[v], cfg)) {
                json mf = json::parse(read_text_file(model_dir[v] / "run_manifest.json"));
                train_secs[v] = mf.at("wall_ms").get<double>() / 1000.0;
                note(cat("reusing ", variants[v], " checkpoint (",
                         fmt(train_secs[v], 1), " s recorded)"));
                continue;
            }
            note(cat("training ", variants[v]));
            auto t0 = std::chrono::steady_clock::now();
            train_model(cfg, corpus, variants[v], model_dir[v], true);
            train_secs[v] = seconds_since(t0);
            note(cat(variants[v], " trained in ", fmt(train_secs[v], 1), " s"));
        }
        for (int v = 0; v < 2; ++v) {
            if (reuse && reusable(sweep_dir[v], cfg)) {
                note(cat("reusing ", variants[v], " sweep"));
                continue;
            }
            note(cat("sweeping ", variants[v]));
            auto t0 = std::chrono::steady_clock::now();
            run_sweep(cfg, corpus, model_dir[v], sweep_dir[v], true);
            note(cat(variants[v], " sweep in ", fmt(seconds_since(t0), 1), " s"));
        }
        run_report({sweep_dir[0] / "summary.csv", sweep_dir[1] / "summary.csv"},
                   work / "report", true);
    } catch (const Error &e) {
        pipeline_ok = false;
        pipeline_err = e.what();
    } catch (const std::exception &e) {
        pipeline_ok = false;
        pipeline_err = e.what();
    }

    if (!pipeline_ok) {
        std::string why = cat("pipeline failed: ", pipeline_err);
        criterion(3, false, why);
        criterion(5, false, why);
        criterion(6, false, why);
        criterion(7, false, why);
        criterion(9, false, why);
        std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failures);
        return g_failures;
    }

    SweepTables base = load_tables(sweep_dir[0]);
    SweepTables prop = load_tables(sweep_dir[1]);
    int headline_beam = cfg.eval.beams.back();
    auto brow = [&](int m) { return base.rows.at({m, headline_beam}); };
    auto prow = [&](int m) { return prop.rows.at({m, headline_beam}); };

    std::vector<Utterance> test = load_manifest(corpus, "test");
    std::map<std::string, const Utterance *> by_id;
    for (const Utterance &u : test) by_id[u.id] = &u;

    // ----- criterion 3: edit oracle + per-record FWER@k <= FWER@1 -----
    {
        bool order_ok = true;
        long checked = 0;
        std::string why;
        for (int v = 0; v < 2 && order_ok; ++v) {
            for (const DecodeLine &d : load_decodes(sweep_dir[v])) {
                if (d.t_mask_ms == 0 || d.future_hyps.empty()) continue;
                std::vector<int> spoken, future;
                split_spoken_future(*by_id.at(d.id), d.t_mask_ms, &spoken, &future);
                FwerResult f1 = fwer(future, d.future_hyps[0]);
                FwerAtK fk = fwer_at_k(future, d.future_hyps, cfg.eval.fwer_k);
                if (!f1.defined || !fk.defined) continue;
                ++checked;
                if (fk.stats.rate() > f1.stats.rate() + 1e-12) {
                    order_ok = false;
                    why = cat(variants[v], " ", d.id, " mask ", d.t_mask_ms, " beam ", d.beam,
                              ": @k ", fmt(fk.stats.rate() * 100), "% > @1 ",
                              fmt(f1.stats.rate() * 100), "%");
                    break;
                }
            }
        }
        bool pass = suite_ok(1) && order_ok;
        std::string detail = oracle.lines.size() > 1 ? oracle.lines[1] : "suite missing";
        criterion(3, pass,
                  order_ok ? cat(detail, "; FWER@k <= FWER@1 on ", checked, " records")
                           : cat(detail, "; ", why));
    }

    // ----- criterion 5: EOU quality at the sweep endpoints -----
    {
        double med_b = brow(0).eou_median_ms;
        double med_p = prow(0).eou_median_ms;
        double mae_b = brow(cfg.mask.m_max_ms).eou_mae_ms;
        double mae_p = prow(cfg.mask.m_max_ms).eou_mae_ms;
        bool time_ok = train_secs[0] < 1800.0 && train_secs[1] < 1800.0;
        bool pass = time_ok && med_b <= 40.0 && med_p <= 40.0 && mae_p < mae_b;
        criterion(5, pass,
                  cat("median@0 baseline ", fmt(med_b, 1), " ms / proposed ", fmt(med_p, 1),
                      " ms (gate 40), mae@500 proposed ", fmt(mae_p, 1), " < baseline ",
                      fmt(mae_b, 1), " ms, training ", fmt(train_secs[0], 0), "/",
                      fmt(train_secs[1], 0), " s (gate 1800)"));
    }

    // ----- criterion 6: WER monotone in the mask, proposed wins from 200 -----
    {
        bool mono = true;
        std::string why;
        for (auto table : {&base, &prop}) {
            double prev = -1.0;
            for (int m : cfg.eval.sweep_ms) {
                double w = table->rows.at({m, headline_beam}).wer_pct;
                if (w + 1e-9 < prev) {
                    mono = false;
                    why = cat(table == &base ? "baseline" : "proposed", " WER drops at mask ", m,
                              " (", fmt(prev), " -> ", fmt(w), ")");
                }
                prev = w;
            }
        }
        bool wins = true;
        for (int m : cfg.eval.sweep_ms) {
            if (m < 200) continue;
            if (prow(m).wer_pct > brow(m).wer_pct + 1e-9) {
                wins = false;
                why = cat(why.empty() ? "" : why + "; ", "proposed ", fmt(prow(m).wer_pct),
                          "% > baseline ", fmt(brow(m).wer_pct), "% at mask ", m);
            }
        }
        std::string grid;
        for (int m : cfg.eval.sweep_ms)
            grid += cat(" ", m, ":", fmt(prow(m).wer_pct, 1), "/", fmt(brow(m).wer_pct, 1));
        criterion(6, mono && wins,
                  mono && wins ? cat("WER% proposed/baseline by mask:", grid) : why);
    }

    // ----- criterion 7: FWER wins at deep masks, top-5 beats top-1 -----
    {
        bool wins = true;
        std::string why;
        for (int m : {300, 400, 500}) {
            if (!(prow(m).fwer_pct < brow(m).fwer_pct)) {
                wins = false;
                why = cat(why.empty() ? "" : why + "; ", "proposed FWER ", fmt(prow(m).fwer_pct),
                          "% !< baseline ", fmt(brow(m).fwer_pct), "% at mask ", m);
            }
        }
        bool at5 = true;
        bool strict = false;
        for (int m : cfg.eval.sweep_ms) {
            if (m == 0) continue;
            const SummaryRow &r = prow(m);
            if (std::isnan(r.fwer_pct)) continue;
            if (r.fwer_at5_pct > r.fwer_pct + 1e-9) at5 = false;
            if (m >= 300 && r.fwer_at5_pct < r.fwer_pct - 1e-9) strict = true;
        }
        if (!(at5 && strict)) {
            why = cat(why.empty() ? "" : why + "; ", "proposed FWER@5 ",
                      at5 ? "never strictly below FWER@1 at deep masks"
                          : "exceeds FWER@1 somewhere");
        }
        std::string grid;
        for (int m : {300, 400, 500})
            grid += cat(" ", m, ":", fmt(prow(m).fwer_pct, 1), "/", fmt(brow(m).fwer_pct, 1));
        criterion(7, wins && at5 && strict,
                  wins && at5 && strict
                      ? cat("FWER% proposed/baseline at", grid, ", @5 ",
                            fmt(prow(500).fwer_at5_pct, 1), "% < @1 ",
                            fmt(prow(500).fwer_pct, 1), "% at mask 500")
                      : why);
    }

    // ----- criterion 9: wider beams never score worse; exhaustive oracle -----
    {
        bool beam_ok = true;
        long compared = 0;
        std::string why;
        for (int v = 0; v < 2 && beam_ok; ++v) {
            std::map<std::string, double> s1, s20;
            for (const DecodeLine &d : load_decodes(sweep_dir[v])) {
                if (d.t_mask_ms != 0) continue;
                if (d.beam == 1) s1[d.id] = d.top_score;
                if (d.beam == headline_beam) s20[d.id] = d.top_score;
            }
            int used = 0;
            for (const Utterance &u : test) {
                if (used >= 100) break;
                auto a = s1.find(u.id);
                auto b = s20.find(u.id);
                if (a == s1.end() || b == s20.end()) continue;
                ++used;
                ++compared;
                if (b->second < a->second - 1e-9) {
                    beam_ok = false;
                    why = cat(variants[v], " ", u.id, ": beam", headline_beam, " score ",
                              fmt(b->second, 4), " < beam1 ", fmt(a->second, 4));
                    break;
                }
            }
        }
        bool pass = suite_ok(3) && beam_ok;
        std::string detail = oracle.lines.size() > 3 ? oracle.lines[3] : "suite missing";
        criterion(9, pass,
                  beam_ok ? cat(detail, "; beam", headline_beam, " >= beam1 on ", compared,
                                " utterances")
                          : cat(detail, "; ", why));
    }

    std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failures);
    return g_failures;
}
