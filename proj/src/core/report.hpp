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

#include <filesystem>
#include <vector>

namespace pasr {

struct ReportResult {
    std::filesystem::path out_dir;
    int models = 0;
    int masks = 0;
};

// Merges one or more sweep summary.csv files into a side-by-side comparison:
// report.md and report.csv hold one row per (metric, model) with a column per
// T_mask, plus a proposed-minus-baseline row wherever both variants share a
// beam; boxplot_tmask<N>.csv files carry the EOU quantiles per mask. Inputs
// whose T_mask grids disagree, or that repeat a model label, are an error.
ReportResult run_report(const std::vector<std::filesystem::path> &summary_csvs,
                        const std::filesystem::path &out_dir, bool force);

}  // namespace pasr
