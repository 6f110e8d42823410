/* Copyright 2026 The pasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* pasr — predictive speech recognition and end-of-utterance detection.
 *
 * C interface of the pasr shared library. The library trains a small
 * encoder-decoder speech recognizer on a synthetic corpus, optionally with
 * future-masked inputs, and evaluates predictive transcription (WER / FWER)
 * and cross-attention end-of-utterance timing across mask durations.
 *
 * Conventions:
 *   - every fallible call returns a pasr_status; 0 means success
 *   - on failure, pasr_last_error() returns a thread-local message
 *   - objects created by *_open / *_load must be released with the matching
 *     *_close / *_free call
 *   - configuration is passed as a JSON document (UTF-8 string); an empty or
 *     NULL string selects built-in defaults
 */

#ifndef PASR_H
#define PASR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pasr_status {
    PASR_OK = 0,
    PASR_ERR_INVALID_ARGUMENT = 1, /* bad config, bad flag, refused overwrite */
    PASR_ERR_IO = 2,               /* file missing / unreadable / unwritable */
    PASR_ERR_RUNTIME = 3,          /* internal failure, training divergence */
    PASR_ERR_DEGENERATE_INPUT = 4, /* mask would cover the whole utterance */
    PASR_ERR_SHAPE = 5,            /* tensor dimension mismatch */
    PASR_ERR_NUMERIC = 6           /* non-finite values where forbidden */
} pasr_status;

/* Opaque handles. */
typedef struct pasr_corpus pasr_corpus;
typedef struct pasr_model pasr_model;

/* Library identity. */
uint32_t pasr_abi_version(void);
const char *pasr_version_string(void);

/* Name of a status code ("PASR_OK", ...); never NULL. */
const char *pasr_status_name(int status);

/* Message describing the most recent failure on this thread ("" if none). */
const char *pasr_last_error(void);

/* Serialize the built-in default configuration as pretty-printed JSON.
 * Returns the number of bytes required (excluding the terminating NUL);
 * writes at most cap-1 bytes plus a NUL when buf is non-NULL. */
size_t pasr_default_config_json(char *buf, size_t cap);

/* Cap the number of worker threads (0 restores the automatic choice).
 * The PASR_THREADS environment variable imposes an additional cap. */
void pasr_set_max_threads(int n);

/* --- synthetic corpus ---------------------------------------------------- */

/* Generate a corpus under out_dir: per-split JSON-lines manifests plus one
 * binary feature file per utterance. Refuses to overwrite an existing corpus
 * unless force is nonzero. */
pasr_status pasr_corpus_generate(const char *config_json, const char *out_dir,
                                 int force);

pasr_status pasr_corpus_open(const char *dir, pasr_corpus **out);
void pasr_corpus_close(pasr_corpus *corpus);

/* Number of utterances in "train" / "dev" / "test". */
pasr_status pasr_corpus_split_count(const pasr_corpus *corpus,
                                    const char *split, size_t *count);

/* --- training ------------------------------------------------------------ */

/* Train one model. variant is "baseline" (unmasked audio) or "proposed"
 * (future-masked audio). Writes model.pasr, model.json, train_log.jsonl and
 * run_manifest.json under out_dir. Refuses a non-empty out_dir unless force
 * is nonzero. */
pasr_status pasr_train(const char *config_json, const char *corpus_dir,
                       const char *variant, const char *out_dir, int force);

/* --- checkpoints ----------------------------------------------------------- */

pasr_status pasr_model_load(const char *checkpoint_path, pasr_model **out);
void pasr_model_free(pasr_model *model);

/* Metadata of a loaded model (variant, seed, config) as JSON. Same buffer
 * convention as pasr_default_config_json. */
size_t pasr_model_meta_json(const pasr_model *model, char *buf, size_t cap);

/* --- evaluation ----------------------------------------------------------- */

/* Decode and score the test split for every (mask duration x beam size) cell
 * of the configured sweep. Writes per-utterance JSONL records, summary.csv,
 * summary_extra.json and run_manifest.json under out_dir. Refuses a non-empty
 * out_dir unless force is nonzero. */
pasr_status pasr_sweep(const char *config_json, const pasr_model *model,
                       const char *corpus_dir, const char *out_dir, int force);

/* Combine one or more sweep summary.csv files into side-by-side comparison
 * tables (report.md, report.csv) and per-mask box-plot quantile files.
 * Refuses a non-empty out_dir unless force is nonzero. */
pasr_status pasr_report(const char *const *csv_paths, size_t n_paths,
                        const char *out_dir, int force);

/* --- end-of-utterance estimation ------------------------------------------ */

typedef struct pasr_eou_estimate {
    double t_hat_ms;   /* estimated end-of-utterance time */
    double a_max;      /* maximum attention score in the row */
    size_t frame;      /* chosen encoder frame, 1-based */
    double psi;        /* threshold factor used */
    double tau_ms;     /* encoder frame duration used */
} pasr_eou_estimate;

/* Estimate the end-of-utterance time from one attention row: the last
 * (1-based) frame t with row[t-1] >= psi * max(row), scaled by tau_ms.
 * Entries must be non-negative with at least one positive value. */
pasr_status pasr_estimate_eou(const double *row, size_t len, double psi,
                              double tau_ms, pasr_eou_estimate *out);

/* --- self checks ----------------------------------------------------------- */

/* Finite-difference verification of every differentiable operation and of a
 * full miniature model, in 64-bit mode. Reports the worst relative error via
 * max_rel_err (may be NULL) and fails if it reaches 1e-4. */
pasr_status pasr_gradcheck(uint64_t seed, int verbose, double *max_rel_err);

/* Battery of independent-oracle checks (attention-row EOU scan, edit
 * distance, CTC path enumeration, masking invariants, beam search). */
pasr_status pasr_oracle_tests(uint64_t seed, int verbose);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PASR_H */
