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

#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pasr {

namespace {

// Regularized upper incomplete gamma Q(a, x), series + continued fraction.
double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, PASR_ERR_INVALID_ARGUMENT, "gamma_q domain");
    if (x == 0.0) return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // Series for P(a, x).
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-14) break;
        }
        double p = sum * std::exp(-x + a * std::log(x) - gln);
        return 1.0 - p;
    }
    // Lentz continued fraction for Q(a, x).
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
        sign = -sign;
    }
    double q = 2.0 * sum;
    if (q < 0.0) q = 0.0;
    if (q > 1.0) q = 1.0;
    return q;
}

}  // namespace

EditStats edit_distance(const std::vector<int> &ref, const std::vector<int> &hyp) {
    int n = static_cast<int>(ref.size());
    int m = static_cast<int>(hyp.size());
    // Per cell: minimal cost, then maximal diagonal-move count at that cost.
    struct Cell {
        int cost;
        int diag;
    };
    std::vector<Cell> prev(static_cast<size_t>(m) + 1), cur(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) prev[static_cast<size_t>(j)] = {j, 0};
    auto better = [](const Cell &a, const Cell &b) {
        return a.cost < b.cost || (a.cost == b.cost && a.diag > b.diag);
    };
    for (int i = 1; i <= n; ++i) {
        cur[0] = {i, 0};
        for (int j = 1; j <= m; ++j) {
            int mismatch = ref[static_cast<size_t>(i - 1)] == hyp[static_cast<size_t>(j - 1)] ? 0 : 1;
            Cell best = {prev[static_cast<size_t>(j - 1)].cost + mismatch,
                         prev[static_cast<size_t>(j - 1)].diag + 1};
            Cell del = {prev[static_cast<size_t>(j)].cost + 1, prev[static_cast<size_t>(j)].diag};
            Cell ins = {cur[static_cast<size_t>(j - 1)].cost + 1, cur[static_cast<size_t>(j - 1)].diag};
            if (better(del, best)) best = del;
            if (better(ins, best)) best = ins;
            cur[static_cast<size_t>(j)] = best;
        }
        std::swap(prev, cur);
    }
    Cell final_cell = prev[static_cast<size_t>(m)];
    // With G diagonal moves, deletions consume the rest of ref and insertions
    // the rest of hyp; substitutions are whatever cost remains.
    EditStats stats;
    stats.ref_len = n;
    stats.del = n - final_cell.diag;
    stats.ins = m - final_cell.diag;
    stats.sub = final_cell.cost - stats.del - stats.ins;
    return stats;
}

FwerResult fwer(const std::vector<int> &ref_future, const std::vector<int> &hyp_future) {
    FwerResult r;
    if (ref_future.empty() && hyp_future.empty()) {
        r.defined = false;
        return r;
    }
    r.stats = edit_distance(ref_future, hyp_future);
    r.defined = true;
    return r;
}

FwerAtK fwer_at_k(const std::vector<int> &ref_future,
                  const std::vector<std::vector<int>> &hyp_futures, int k) {
    require(k >= 1, PASR_ERR_INVALID_ARGUMENT, "fwer_at_k: k must be >= 1");
    require(!hyp_futures.empty(), PASR_ERR_INVALID_ARGUMENT, "fwer_at_k: no hypotheses");
    FwerAtK out;
    out.candidates = std::min<int>(k, static_cast<int>(hyp_futures.size()));
    int best_total = std::numeric_limits<int>::max();
    for (int i = 0; i < out.candidates; ++i) {
        EditStats s = edit_distance(ref_future, hyp_futures[static_cast<size_t>(i)]);
        if (s.total() < best_total) {
            best_total = s.total();
            out.stats = s;
            out.rank = i + 1;
        }
    }
    const std::vector<int> &winner = hyp_futures[static_cast<size_t>(out.rank - 1)];
    out.defined = !(ref_future.empty() && winner.empty());
    return out;
}

double quantile_sorted(const std::vector<double> &sorted, double q) {
    require(!sorted.empty(), PASR_ERR_INVALID_ARGUMENT, "quantile of empty set");
    require(q >= 0.0 && q <= 1.0, PASR_ERR_INVALID_ARGUMENT, "quantile q outside [0,1]");
    double h = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Summary aggregate(const std::vector<EvalRecord> &records) {
    require(!records.empty(), PASR_ERR_INVALID_ARGUMENT, "aggregate: no records");
    Summary s;
    s.n = static_cast<int>(records.size());

    long wer_err = 0, wer_ref = 0;
    long f1_err = 0, f1_ref = 0, fk_err = 0, fk_ref = 0;
    int f1_n = 0, fk_n = 0;
    std::vector<double> errs;
    errs.reserve(records.size());
    double err_sum = 0.0;
    for (const EvalRecord &r : records) {
        wer_err += r.wer.total();
        wer_ref += r.wer.ref_len;
        if (r.fwer1.defined) {
            f1_err += r.fwer1.stats.total();
            f1_ref += r.fwer1.stats.ref_len;
            ++f1_n;
        }
        if (r.fwer_k.defined) {
            fk_err += r.fwer_k.stats.total();
            fk_ref += r.fwer_k.stats.ref_len;
            ++fk_n;
        }
        errs.push_back(r.eou_abs_err_ms);
        err_sum += r.eou_abs_err_ms;
    }
    double nan = std::numeric_limits<double>::quiet_NaN();
    s.wer_pct = 100.0 * static_cast<double>(wer_err) / static_cast<double>(wer_ref > 0 ? wer_ref : 1);
    // No scorable future anywhere (the whole T_mask = 0 column) stays NaN; a
    // pool that has records but zero reference tokens counts raw errors.
    s.fwer_pct = f1_n == 0 ? nan
                           : 100.0 * static_cast<double>(f1_err) /
                                 static_cast<double>(f1_ref > 0 ? f1_ref : 1);
    s.fwer_at_k_pct = fk_n == 0 ? nan
                                : 100.0 * static_cast<double>(fk_err) /
                                      static_cast<double>(fk_ref > 0 ? fk_ref : 1);
    s.fwer_records = f1_n;

    std::sort(errs.begin(), errs.end());
    s.eou_mae_ms = err_sum / static_cast<double>(errs.size());
    s.eou_median_ms = quantile_sorted(errs, 0.5);
    s.q1 = quantile_sorted(errs, 0.25);
    s.q3 = quantile_sorted(errs, 0.75);
    double iqr = s.q3 - s.q1;
    double lo_fence = s.q1 - 1.5 * iqr;
    double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_lo = s.q1;
    s.whisker_hi = s.q3;
    for (double e : errs) {
        if (e >= lo_fence) {
            s.whisker_lo = e;
            break;
        }
    }
    for (auto it = errs.rbegin(); it != errs.rend(); ++it) {
        if (*it <= hi_fence) {
            s.whisker_hi = *it;
            break;
        }
    }
    for (double e : errs) {
        if (e < lo_fence || e > hi_fence) ++s.eou_outliers;
    }
    return s;
}

double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi) {
    require(samples.size() >= 2, PASR_ERR_INVALID_ARGUMENT, "ks test needs >= 2 samples");
    require(hi > lo, PASR_ERR_INVALID_ARGUMENT, "ks test: bad support");
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double f = (samples[i] - lo) / (hi - lo);
        if (f < 0.0) f = 0.0;
        if (f > 1.0) f = 1.0;
        double d_plus = (static_cast<double>(i) + 1.0) / n - f;
        double d_minus = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(d_plus, d_minus));
    }
    double sqrt_n = std::sqrt(n);
    return kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
}

double chi_square_two_sample_pvalue(const std::vector<int> &bins_a,
                                    const std::vector<int> &bins_b) {
    require(bins_a.size() == bins_b.size() && !bins_a.empty(), PASR_ERR_INVALID_ARGUMENT,
            "chi-square: bins must align");
    double ra = 0.0, rb = 0.0;
    for (int x : bins_a) ra += x;
    for (int x : bins_b) rb += x;
    require(ra > 0.0 && rb > 0.0, PASR_ERR_INVALID_ARGUMENT, "chi-square: empty samples");
    double scale_a = std::sqrt(rb / ra);
    double scale_b = std::sqrt(ra / rb);
    double chisq = 0.0;
    int usable = 0;
    for (size_t i = 0; i < bins_a.size(); ++i) {
        double a = bins_a[i], b = bins_b[i];
        if (a == 0.0 && b == 0.0) continue;
        double t = scale_a * a - scale_b * b;
        chisq += t * t / (a + b);
        ++usable;
    }
    // Equal totals add one linear constraint.
    int df = usable - (std::fabs(ra - rb) < 0.5 ? 1 : 0);
    require(df >= 1, PASR_ERR_INVALID_ARGUMENT, "chi-square: not enough usable bins");
    return gamma_q(0.5 * df, 0.5 * chisq);
}

}  // namespace pasr
