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

#include "core/sweep.hpp"

#include "core/corpus.hpp"
#include "core/decoder.hpp"
#include "core/eou.hpp"
#include "core/io.hpp"
#include "core/mask.hpp"
#include "core/model.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace pasr {

using nlohmann::json;

namespace {

std::string fmt_cell(double v) { return std::isfinite(v) ? format_double(v, 3) : ""; }

json hyp_to_json(const Hypothesis &h) {
    json j;
    j["tokens"] = h.tokens;
    j["score"] = h.score;
    j["finished"] = h.finished;
    return j;
}

struct EouPoint {
    double t_hat_ms = 0.0;
    double abs_err_ms = 0.0;
};

struct CellOut {
    std::vector<EvalRecord> records;
    std::vector<std::string> eou_lines;
    std::vector<std::string> decode_lines;
    std::map<std::string, EouPoint> eou_by_id;
    int degenerate = 0;
};

}  // namespace

std::string summary_csv_header() {
    return csv_join({"t_mask_ms", "model", "n", "wer_pct", "fwer_pct", "fwer_at5_pct",
                     "eou_mae_ms", "eou_median_ms", "q1", "q3", "whisker_lo", "whisker_hi"});
}

std::string summary_csv_row(int t_mask_ms, const std::string &model, const Summary &s) {
    if (s.n == 0) {
        return csv_join({std::to_string(t_mask_ms), model, "0", "", "", "", "", "", "", "", "",
                         ""});
    }
    return csv_join({std::to_string(t_mask_ms), model, std::to_string(s.n), fmt_cell(s.wer_pct),
                     fmt_cell(s.fwer_pct), fmt_cell(s.fwer_at_k_pct), fmt_cell(s.eou_mae_ms),
                     fmt_cell(s.eou_median_ms), fmt_cell(s.q1), fmt_cell(s.q3),
                     fmt_cell(s.whisker_lo), fmt_cell(s.whisker_hi)});
}

std::vector<SummaryRow> parse_summary_csv(const std::filesystem::path &path) {
    std::vector<std::string> lines = read_lines(path);
    require(!lines.empty(), PASR_ERR_IO, cat("empty summary csv: ", path.string()));
    require(lines[0] == summary_csv_header(), PASR_ERR_INVALID_ARGUMENT,
            cat(path.string(), ": unexpected summary csv header"));
    std::vector<SummaryRow> rows;
    for (size_t li = 1; li < lines.size(); ++li) {
        std::vector<std::string> cells;
        std::stringstream ss(lines[li]);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (lines[li].back() == ',') cells.push_back("");
        require(cells.size() == 12, PASR_ERR_INVALID_ARGUMENT,
                cat(path.string(), ": bad cell count on line ", li + 1));
        SummaryRow r;
        auto num = [&](const std::string &c) {
            return c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c);
        };
        r.t_mask_ms = std::stoi(cells[0]);
        r.model = cells[1];
        r.n = std::stoi(cells[2]);
        r.wer_pct = num(cells[3]);
        r.fwer_pct = num(cells[4]);
        r.fwer_at5_pct = num(cells[5]);
        r.eou_mae_ms = num(cells[6]);
        r.eou_median_ms = num(cells[7]);
        r.q1 = num(cells[8]);
        r.q3 = num(cells[9]);
        r.whisker_lo = num(cells[10]);
        r.whisker_hi = num(cells[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

SweepResult run_sweep(const ExperimentConfig &cfg, const std::filesystem::path &corpus_dir,
                      const std::filesystem::path &model_dir,
                      const std::filesystem::path &out_dir, bool force) {
    validate_config(cfg);
    ModelMeta meta;
    std::unique_ptr<AsrModel> model = load_model(model_dir, &meta);
    ExperimentConfig corpus_cfg = load_corpus_config(corpus_dir);
    require(meta.corpus_config_hash == hex_u64(config_hash(corpus_cfg)),
            PASR_ERR_INVALID_ARGUMENT,
            cat("checkpoint ", model_dir.string(), " was trained on a different corpus than ",
                corpus_dir.string()));
    require(cfg.eval.eou_layer < meta.model.dec_layers && cfg.eval.eou_head < meta.model.heads,
            PASR_ERR_INVALID_ARGUMENT, "eou_layer/eou_head outside the checkpoint's shape");

    std::vector<Utterance> utts = load_manifest(corpus_dir, "test");
    require(!utts.empty(), PASR_ERR_INVALID_ARGUMENT, "test split is empty");
    if (cfg.eval.max_utterances > 0 &&
        static_cast<int>(utts.size()) > cfg.eval.max_utterances) {
        utts.resize(static_cast<size_t>(cfg.eval.max_utterances));
    }
    std::vector<Mat> feats;
    feats.reserve(utts.size());
    for (const Utterance &u : utts) feats.push_back(load_features(corpus_dir, u));

    prepare_out_dir(out_dir, force);
    auto t0 = std::chrono::steady_clock::now();

    struct Cell {
        int t_mask_ms;
        int beam;
        bool canonical;  // largest beam carries the EOU pass for its T_mask
    };
    std::vector<Cell> cells;
    int max_beam = cfg.eval.beams.back();
    for (int t_mask : cfg.eval.sweep_ms) {
        for (int beam : cfg.eval.beams) cells.push_back({t_mask, beam, beam == max_beam});
    }
    std::vector<CellOut> outs(cells.size());

    auto run_cell = [&](size_t ci) {
        const Cell &cell = cells[ci];
        CellOut &out = outs[ci];
        BeamConfig bc;
        bc.beam = cell.beam;
        bc.length_penalty = cfg.eval.length_penalty;
        for (size_t ui = 0; ui < utts.size(); ++ui) {
            const Utterance &utt = utts[ui];
            if (cell.t_mask_ms > utt.t_eou_ms) {
                ++out.degenerate;
                continue;
            }
            Mat masked = apply_eval_mask(feats[ui], utt, cell.t_mask_ms, nullptr);
            DecoderSession session(*model, masked);
            std::vector<Hypothesis> hyps = beam_search(session, {}, bc);
            std::vector<int> spoken, future;
            split_spoken_future(utt, cell.t_mask_ms, &spoken, &future);
            std::vector<Hypothesis> fhyps = beam_search(session, spoken, bc);
            std::vector<std::vector<int>> future_tokens;
            future_tokens.reserve(fhyps.size());
            for (const Hypothesis &h : fhyps) future_tokens.push_back(h.tokens);

            EvalRecord rec;
            rec.id = utt.id;
            rec.t_mask_ms = cell.t_mask_ms;
            rec.beam = cell.beam;
            rec.t_eou_ms = utt.t_eou_ms;
            rec.psi = cfg.eval.psi;
            rec.wer = edit_distance(utt.tokens, hyps[0].tokens);
            rec.fwer1 = fwer(future, future_tokens[0]);
            rec.fwer_k = fwer_at_k(future, future_tokens, cfg.eval.fwer_k);

            json dj;
            dj["id"] = utt.id;
            dj["t_mask_ms"] = cell.t_mask_ms;
            dj["beam"] = cell.beam;
            dj["hyps"] = json::array();
            for (const Hypothesis &h : hyps) dj["hyps"].push_back(hyp_to_json(h));
            dj["future_hyps"] = json::array();
            for (const Hypothesis &h : fhyps) dj["future_hyps"].push_back(hyp_to_json(h));
            out.decode_lines.push_back(dj.dump());

            if (cell.canonical) {
                const std::vector<int> &eou_tokens =
                    cfg.eval.eou_source == "oracle" ? utt.tokens : hyps[0].tokens;
                EouEstimate est =
                    detect_with_encoder(*model, session.encoder_output(), eou_tokens,
                                        cfg.eval.psi, cfg.eval.eou_layer, cfg.eval.eou_head);
                EouPoint pt;
                pt.t_hat_ms = est.t_hat_ms;
                pt.abs_err_ms = std::fabs(est.t_hat_ms - static_cast<double>(utt.t_eou_ms));
                out.eou_by_id[utt.id] = pt;
                json ej;
                ej["id"] = utt.id;
                ej["t_mask_ms"] = cell.t_mask_ms;
                ej["psi"] = cfg.eval.psi;
                ej["t_hat_ms"] = pt.t_hat_ms;
                ej["t_eou_ms"] = utt.t_eou_ms;
                ej["abs_err_ms"] = pt.abs_err_ms;
                out.eou_lines.push_back(ej.dump());
            }
            out.records.push_back(std::move(rec));
        }
    };

    int n_workers = std::min<int>(worker_threads(), static_cast<int>(cells.size()));
    if (n_workers <= 1) {
        for (size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&]() {
                for (size_t ci = next.fetch_add(1); ci < cells.size(); ci = next.fetch_add(1))
                    run_cell(ci);
            });
        }
        for (std::thread &t : pool) t.join();
    }

    // Copy the canonical EOU estimates into the sibling beam rows.
    std::map<int, const CellOut *> canonical_by_mask;
    for (size_t ci = 0; ci < cells.size(); ++ci) {
        if (cells[ci].canonical) canonical_by_mask[cells[ci].t_mask_ms] = &outs[ci];
    }
    SweepResult result;
    result.out_dir = out_dir;
    result.variant = meta.variant;
    result.cells = static_cast<int>(cells.size());

    std::ofstream eou_out(out_dir / "eou.jsonl");
    std::ofstream decode_out(out_dir / "decode.jsonl");
    std::ofstream csv_out(out_dir / "summary.csv");
    require(eou_out.good() && decode_out.good() && csv_out.good(), PASR_ERR_IO,
            cat("cannot write sweep outputs under ", out_dir.string()));
    csv_out << summary_csv_header() << "\n";

    json degenerate_counts = json::object();
    json extra = json::array();
    for (size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell &cell = cells[ci];
        CellOut &out = outs[ci];
        const CellOut *canon = canonical_by_mask.at(cell.t_mask_ms);
        for (EvalRecord &rec : out.records) {
            const EouPoint &pt = canon->eou_by_id.at(rec.id);
            rec.t_hat_ms = pt.t_hat_ms;
            rec.eou_abs_err_ms = pt.abs_err_ms;
        }
        for (const std::string &line : out.eou_lines) eou_out << line << "\n";
        for (const std::string &line : out.decode_lines) decode_out << line << "\n";
        std::string model_label = cat(meta.variant, ".beam", cell.beam);
        Summary s;
        if (!out.records.empty()) s = aggregate(out.records);
        csv_out << summary_csv_row(cell.t_mask_ms, model_label, s) << "\n";
        result.degenerate_skipped += out.degenerate;
        degenerate_counts[cat(cell.t_mask_ms, ".beam", cell.beam)] = out.degenerate;
        // Cell facts that have no column in the pinned CSV layout.
        json ex;
        ex["model"] = model_label;
        ex["t_mask_ms"] = cell.t_mask_ms;
        ex["beam"] = cell.beam;
        ex["n"] = s.n;
        ex["fwer_records"] = s.fwer_records;
        ex["eou_outliers"] = s.eou_outliers;
        ex["degenerate_skipped"] = out.degenerate;
        extra.push_back(ex);
    }
    eou_out.close();
    decode_out.close();
    csv_out.close();
    write_text_file(out_dir / "summary_extra.json", extra.dump(2) + "\n");

    auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    json manifest;
    manifest["kind"] = "sweep";
    manifest["config_hash"] = hex_u64(config_hash(cfg));
    manifest["seed"] = cfg.seed;
    manifest["variant"] = meta.variant;
    manifest["model_dir"] = model_dir.string();
    manifest["checkpoint"] = (model_dir / "model.pasr").string();
    manifest["corpus_dir"] = corpus_dir.string();
    manifest["results"] = {{"summary", "summary.csv"},
                           {"summary_extra", "summary_extra.json"},
                           {"eou", "eou.jsonl"},
                           {"decode", "decode.jsonl"}};
    manifest["cells"] = result.cells;
    manifest["utterances"] = static_cast<int>(utts.size());
    manifest["degenerate_skipped"] = degenerate_counts;
    manifest["psi"] = cfg.eval.psi;
    manifest["eou_source"] = cfg.eval.eou_source;
    manifest["wall_ms"] = wall_ms;
    write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace pasr
