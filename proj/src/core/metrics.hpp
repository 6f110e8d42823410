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

#include "core/common.hpp"

#include <string>
#include <vector>

namespace pasr {

struct EditStats {
    int sub = 0;
    int ins = 0;
    int del = 0;
    int ref_len = 0;

    int total() const { return sub + ins + del; }
    double rate() const { return static_cast<double>(total()) / (ref_len > 0 ? ref_len : 1); }
};

// Levenshtein with a deterministic tie-break: among minimum-cost alignments
// the one with the most diagonal moves wins, so a substitution always beats
// an insert+delete pair and the (S, I, D) split is stable under swapping the
// arguments (S fixed, I and D exchange).
EditStats edit_distance(const std::vector<int> &ref, const std::vector<int> &hyp);

// WER restricted to future tokens. Both sides empty yields the zero-reference
// sentinel (defined == false); an empty reference against a non-empty
// hypothesis counts every hypothesis token as an insertion.
struct FwerResult {
    EditStats stats;
    bool defined = false;
};
FwerResult fwer(const std::vector<int> &ref_future, const std::vector<int> &hyp_future);

// Minimum FWER over the first k candidates; rank (1-based) reports which one
// won, ties going to the better rank.
struct FwerAtK {
    EditStats stats;
    bool defined = false;
    int rank = 0;
    int candidates = 0;  // how many were actually available
};
FwerAtK fwer_at_k(const std::vector<int> &ref_future,
                  const std::vector<std::vector<int>> &hyp_futures, int k);

struct EvalRecord {
    std::string id;
    int t_mask_ms = 0;
    int beam = 1;
    EditStats wer;
    FwerResult fwer1;
    FwerAtK fwer_k;
    double eou_abs_err_ms = 0.0;
    double t_hat_ms = 0.0;
    double psi = 0.0;
    int t_eou_ms = 0;
};

struct Summary {
    int n = 0;
    double wer_pct = 0.0;       // pooled edit counts over pooled reference lengths
    double fwer_pct = 0.0;      // pooled, zero-reference records excluded
    double fwer_at_k_pct = 0.0;
    int fwer_records = 0;       // records entering the FWER pools
    double eou_mae_ms = 0.0;
    double eou_median_ms = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;    // Tukey 1.5 IQR
    double whisker_hi = 0.0;
    int eou_outliers = 0;
};
Summary aggregate(const std::vector<EvalRecord> &records);

// Quantile with linear interpolation on the inclusive [x_0, x_{n-1}] grid;
// input must be sorted ascending.
double quantile_sorted(const std::vector<double> &sorted, double q);

// Statistical helpers for the property suites.
// One-sample Kolmogorov-Smirnov against U[lo, hi]; returns the p-value.
double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi);
// Two-sample chi-square over aligned histogram bins; returns the p-value.
double chi_square_two_sample_pvalue(const std::vector<int> &bins_a,
                                    const std::vector<int> &bins_b);

}  // namespace pasr
