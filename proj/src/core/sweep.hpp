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

#pragma once

#include "core/config.hpp"
#include "core/metrics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pasr {

struct SweepResult {
    std::filesystem::path out_dir;
    std::string variant;
    int cells = 0;
    int degenerate_skipped = 0;  // summed over cells
};

// Evaluates a checkpoint over every (T_mask, beam) cell of cfg.eval on the
// test split. Cells run in parallel (capped by PASR_THREADS) over the
// immutable checkpoint; files are written afterwards in cell order, so the
// artifacts are byte-deterministic. EOU estimates come from the largest-beam
// cell of each T_mask and are shared by the other beam rows. Writes eou.jsonl,
// decode.jsonl, summary.csv and run_manifest.json.
SweepResult run_sweep(const ExperimentConfig &cfg, const std::filesystem::path &corpus_dir,
                      const std::filesystem::path &model_dir,
                      const std::filesystem::path &out_dir, bool force);

// summary.csv layout, shared with the report reader.
std::string summary_csv_header();
std::string summary_csv_row(int t_mask_ms, const std::string &model, const Summary &s);

struct SummaryRow {
    int t_mask_ms = 0;
    std::string model;
    int n = 0;
    // NaN marks an empty cell (for example FWER at T_mask = 0).
    double wer_pct = 0.0, fwer_pct = 0.0, fwer_at5_pct = 0.0;
    double eou_mae_ms = 0.0, eou_median_ms = 0.0, q1 = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0;
};
std::vector<SummaryRow> parse_summary_csv(const std::filesystem::path &path);

}  // namespace pasr
