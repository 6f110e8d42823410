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

#include "core/report.hpp"

#include "core/io.hpp"
#include "core/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace pasr {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct ModelSeries {
    std::string label;
    std::string variant;  // part before ".beam"
    int beam = 0;
    std::map<int, SummaryRow> by_mask;
};

struct Metric {
    const char *key;
    const char *title;
    double SummaryRow::*field;
};

constexpr Metric kMetrics[] = {
    {"wer_pct", "WER [%]", &SummaryRow::wer_pct},
    {"fwer_pct", "FWER [%]", &SummaryRow::fwer_pct},
    {"fwer_at5_pct", "FWER@5 [%]", &SummaryRow::fwer_at5_pct},
    {"eou_mae_ms", "EOU mean abs error [ms]", &SummaryRow::eou_mae_ms},
    {"eou_median_ms", "EOU median abs error [ms]", &SummaryRow::eou_median_ms},
};

std::string md_cell(double v) { return std::isfinite(v) ? format_double(v, 2) : "-"; }
std::string csv_cell(double v) { return std::isfinite(v) ? format_double(v, 3) : ""; }

}  // namespace

ReportResult run_report(const std::vector<std::filesystem::path> &summary_csvs,
                        const std::filesystem::path &out_dir, bool force) {
    require(!summary_csvs.empty(), PASR_ERR_INVALID_ARGUMENT, "report: no summary csv inputs");

    std::map<std::string, ModelSeries> series;
    for (const std::filesystem::path &path : summary_csvs) {
        for (const SummaryRow &row : parse_summary_csv(path)) {
            ModelSeries &ms = series[row.model];
            if (ms.label.empty()) {
                ms.label = row.model;
                size_t pos = row.model.rfind(".beam");
                if (pos != std::string::npos) {
                    ms.variant = row.model.substr(0, pos);
                    ms.beam = std::atoi(row.model.c_str() + pos + 5);
                } else {
                    ms.variant = row.model;
                }
            }
            require(!ms.by_mask.count(row.t_mask_ms), PASR_ERR_INVALID_ARGUMENT,
                    cat("report: model ", row.model, " appears twice at t_mask ",
                        row.t_mask_ms, " across inputs"));
            ms.by_mask[row.t_mask_ms] = row;
        }
    }

    // Every model must cover the same T_mask grid.
    std::vector<int> masks;
    for (const auto &[label, ms] : series) {
        std::vector<int> grid;
        for (const auto &[m, row] : ms.by_mask) grid.push_back(m);
        if (masks.empty()) {
            masks = grid;
        } else {
            require(grid == masks, PASR_ERR_INVALID_ARGUMENT,
                    cat("report: model ", label, " covers a different T_mask sweep"));
        }
    }

    // Order: variant, then beam, matching the sweep CSV ordering per model.
    std::vector<const ModelSeries *> ordered;
    for (const auto &[label, ms] : series) ordered.push_back(&ms);
    std::sort(ordered.begin(), ordered.end(), [](const ModelSeries *a, const ModelSeries *b) {
        if (a->variant != b->variant) return a->variant < b->variant;
        if (a->beam != b->beam) return a->beam < b->beam;
        return a->label < b->label;
    });

    // Difference rows pair the two variants at equal beam.
    struct DiffPair {
        const ModelSeries *base;
        const ModelSeries *prop;
    };
    std::vector<DiffPair> diffs;
    for (const ModelSeries *p : ordered) {
        if (p->variant != "proposed") continue;
        for (const ModelSeries *b : ordered) {
            if (b->variant == "baseline" && b->beam == p->beam) diffs.push_back({b, p});
        }
    }

    prepare_out_dir(out_dir, force);

    std::ostringstream md;
    md << "# Mask-duration sweep comparison\n";
    std::ostringstream csv;
    std::vector<std::string> head = {"metric", "model"};
    for (int m : masks) head.push_back(cat("t_mask_", m));
    csv << csv_join(head) << "\n";

    for (const Metric &metric : kMetrics) {
        md << "\n## " << metric.title << "\n\n";
        md << "| model |";
        for (int m : masks) md << " " << m << " |";
        md << "\n|---|";
        for (size_t i = 0; i < masks.size(); ++i) md << "---|";
        md << "\n";
        for (const ModelSeries *ms : ordered) {
            md << "| " << ms->label << " |";
            std::vector<std::string> cells = {metric.key, ms->label};
            for (int m : masks) {
                double v = ms->by_mask.at(m).*metric.field;
                md << " " << md_cell(v) << " |";
                cells.push_back(csv_cell(v));
            }
            md << "\n";
            csv << csv_join(cells) << "\n";
        }
        for (const DiffPair &d : diffs) {
            std::string label = cat("proposed-baseline.beam", d.prop->beam);
            md << "| " << label << " |";
            std::vector<std::string> cells = {metric.key, label};
            for (int m : masks) {
                double pv = d.prop->by_mask.at(m).*metric.field;
                double bv = d.base->by_mask.at(m).*metric.field;
                double v = (std::isfinite(pv) && std::isfinite(bv)) ? pv - bv : kNan;
                md << " " << md_cell(v) << " |";
                cells.push_back(csv_cell(v));
            }
            md << "\n";
            csv << csv_join(cells) << "\n";
        }
    }

    write_text_file(out_dir / "report.md", md.str());
    write_text_file(out_dir / "report.csv", csv.str());

    // One EOU box-plot quantile file per mask duration.
    for (int m : masks) {
        std::ostringstream box;
        box << csv_join({"model", "n", "eou_mae_ms", "eou_median_ms", "q1", "q3", "whisker_lo",
                         "whisker_hi"})
            << "\n";
        for (const ModelSeries *ms : ordered) {
            const SummaryRow &row = ms->by_mask.at(m);
            box << csv_join({ms->label, std::to_string(row.n), csv_cell(row.eou_mae_ms),
                             csv_cell(row.eou_median_ms), csv_cell(row.q1), csv_cell(row.q3),
                             csv_cell(row.whisker_lo), csv_cell(row.whisker_hi)})
                << "\n";
        }
        write_text_file(out_dir / cat("boxplot_tmask", m, ".csv"), box.str());
    }

    json manifest;
    manifest["kind"] = "report";
    json inputs = json::array();
    for (const std::filesystem::path &p : summary_csvs) {
        inputs.push_back({{"path", p.string()}, {"fnv1a", hex_u64(hash_file(p))}});
    }
    manifest["inputs"] = inputs;
    json outputs = json::array();
    outputs.push_back("report.md");
    outputs.push_back("report.csv");
    for (int m : masks) outputs.push_back(cat("boxplot_tmask", m, ".csv"));
    manifest["results"] = outputs;
    manifest["models"] = static_cast<int>(ordered.size());
    manifest["masks"] = masks;
    write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

    ReportResult r;
    r.out_dir = out_dir;
    r.models = static_cast<int>(ordered.size());
    r.masks = static_cast<int>(masks.size());
    return r;
}

}  // namespace pasr
