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

#include "pasr.h"

#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/eou.hpp"
#include "core/gradcheck.hpp"
#include "core/io.hpp"
#include "core/model.hpp"
#include "core/report.hpp"
#include "core/selftest.hpp"
#include "core/sweep.hpp"
#include "core/train.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

void set_error(const char *msg) { g_last_error = msg ? msg : ""; }

template <typename F>
pasr_status guarded(F &&f) noexcept {
    try {
        f();
        return PASR_OK;
    } catch (const pasr::Error &e) {
        set_error(e.what());
        return e.status();
    } catch (const std::bad_alloc &) {
        set_error("out of memory");
        return PASR_ERR_RUNTIME;
    } catch (const std::exception &e) {
        set_error(e.what());
        return PASR_ERR_RUNTIME;
    } catch (...) {
        set_error("unknown error");
        return PASR_ERR_RUNTIME;
    }
}

pasr::ExperimentConfig config_from(const char *config_json) {
    if (config_json == nullptr || config_json[0] == '\0') return pasr::default_config();
    return pasr::parse_config_json(config_json);
}

const char *require_cstr(const char *s, const char *what) {
    pasr::require(s != nullptr && s[0] != '\0', PASR_ERR_INVALID_ARGUMENT,
                  pasr::cat(what, " must be a non-empty string"));
    return s;
}

// Bytes-needed convention shared by the string getters.
size_t copy_out(const std::string &text, char *buf, size_t cap) {
    if (buf != nullptr && cap > 0) {
        size_t n = std::min(cap - 1, text.size());
        std::memcpy(buf, text.data(), n);
        buf[n] = '\0';
    }
    return text.size();
}

// Accepts either the checkpoint directory or its model.pasr file.
fs::path checkpoint_dir(const char *path) {
    fs::path p(path);
    if (fs::is_regular_file(p)) return p.parent_path();
    return p;
}

}  // namespace

struct pasr_corpus {
    fs::path dir;
};

struct pasr_model {
    fs::path dir;
    pasr::ModelMeta meta;
    std::string meta_json;
};

extern "C" {

uint32_t pasr_abi_version(void) { return 1; }

const char *pasr_version_string(void) { return "pasr 0.1.0"; }

const char *pasr_status_name(int status) {
    switch (status) {
        case PASR_OK: return "PASR_OK";
        case PASR_ERR_INVALID_ARGUMENT: return "PASR_ERR_INVALID_ARGUMENT";
        case PASR_ERR_IO: return "PASR_ERR_IO";
        case PASR_ERR_RUNTIME: return "PASR_ERR_RUNTIME";
        case PASR_ERR_DEGENERATE_INPUT: return "PASR_ERR_DEGENERATE_INPUT";
        case PASR_ERR_SHAPE: return "PASR_ERR_SHAPE";
        case PASR_ERR_NUMERIC: return "PASR_ERR_NUMERIC";
        default: return "PASR_ERR_UNKNOWN";
    }
}

const char *pasr_last_error(void) { return g_last_error.c_str(); }

size_t pasr_default_config_json(char *buf, size_t cap) {
    return copy_out(pasr::config_to_json(pasr::default_config()), buf, cap);
}

void pasr_set_max_threads(int n) { pasr::set_max_threads(n); }

pasr_status pasr_corpus_generate(const char *config_json, const char *out_dir, int force) {
    return guarded([&] {
        pasr::generate_corpus(config_from(config_json), require_cstr(out_dir, "out_dir"),
                              force != 0);
    });
}

pasr_status pasr_corpus_open(const char *dir, pasr_corpus **out) {
    return guarded([&] {
        pasr::require(out != nullptr, PASR_ERR_INVALID_ARGUMENT, "out must not be NULL");
        fs::path p(require_cstr(dir, "dir"));
        pasr::load_corpus_config(p);  // validates the directory
        *out = new pasr_corpus{p};
    });
}

void pasr_corpus_close(pasr_corpus *corpus) { delete corpus; }

pasr_status pasr_corpus_split_count(const pasr_corpus *corpus, const char *split,
                                    size_t *count) {
    return guarded([&] {
        pasr::require(corpus != nullptr && count != nullptr, PASR_ERR_INVALID_ARGUMENT,
                      "corpus and count must not be NULL");
        *count = pasr::load_manifest(corpus->dir, require_cstr(split, "split")).size();
    });
}

pasr_status pasr_train(const char *config_json, const char *corpus_dir, const char *variant,
                       const char *out_dir, int force) {
    return guarded([&] {
        pasr::train_model(config_from(config_json), require_cstr(corpus_dir, "corpus_dir"),
                          require_cstr(variant, "variant"), require_cstr(out_dir, "out_dir"),
                          force != 0);
    });
}

pasr_status pasr_model_load(const char *checkpoint_path, pasr_model **out) {
    return guarded([&] {
        pasr::require(out != nullptr, PASR_ERR_INVALID_ARGUMENT, "out must not be NULL");
        fs::path dir = checkpoint_dir(require_cstr(checkpoint_path, "checkpoint_path"));
        auto handle = std::make_unique<pasr_model>();
        handle->dir = dir;
        pasr::load_model(dir, &handle->meta);  // validates weights against meta
        handle->meta_json = pasr::model_meta_to_json(handle->meta);
        *out = handle.release();
    });
}

void pasr_model_free(pasr_model *model) { delete model; }

size_t pasr_model_meta_json(const pasr_model *model, char *buf, size_t cap) {
    if (model == nullptr) return copy_out("", buf, cap);
    return copy_out(model->meta_json, buf, cap);
}

pasr_status pasr_sweep(const char *config_json, const pasr_model *model,
                       const char *corpus_dir, const char *out_dir, int force) {
    return guarded([&] {
        pasr::require(model != nullptr, PASR_ERR_INVALID_ARGUMENT, "model must not be NULL");
        pasr::run_sweep(config_from(config_json), require_cstr(corpus_dir, "corpus_dir"),
                        model->dir, require_cstr(out_dir, "out_dir"), force != 0);
    });
}

pasr_status pasr_report(const char *const *csv_paths, size_t n_paths, const char *out_dir,
                        int force) {
    return guarded([&] {
        pasr::require(csv_paths != nullptr && n_paths > 0, PASR_ERR_INVALID_ARGUMENT,
                      "csv_paths must name at least one file");
        std::vector<fs::path> paths;
        paths.reserve(n_paths);
        for (size_t i = 0; i < n_paths; ++i) {
            paths.emplace_back(require_cstr(csv_paths[i], "csv_paths[]"));
        }
        pasr::run_report(paths, require_cstr(out_dir, "out_dir"), force != 0);
    });
}

pasr_status pasr_estimate_eou(const double *row, size_t len, double psi, double tau_ms,
                              pasr_eou_estimate *out) {
    return guarded([&] {
        pasr::require(row != nullptr && out != nullptr, PASR_ERR_INVALID_ARGUMENT,
                      "row and out must not be NULL");
        std::vector<double> values(row, row + len);
        pasr::EouEstimate est = pasr::estimate_eou(values, psi, tau_ms);
        out->t_hat_ms = est.t_hat_ms;
        out->a_max = est.a_max;
        out->frame = static_cast<size_t>(est.frame);
        out->psi = est.psi;
        out->tau_ms = est.tau_ms;
    });
}

pasr_status pasr_gradcheck(uint64_t seed, int verbose, double *max_rel_err) {
    return guarded([&] {
        pasr::GradcheckResult r = pasr::run_gradcheck(seed, verbose != 0, 1e-4);
        if (max_rel_err != nullptr) *max_rel_err = r.max_rel_err;
        pasr::require(r.ok, PASR_ERR_NUMERIC,
                      pasr::cat("gradcheck failed: max relative error ", r.max_rel_err, " at ",
                                r.worst));
    });
}

pasr_status pasr_oracle_tests(uint64_t seed, int verbose) {
    return guarded([&] {
        pasr::OracleReport rep = pasr::run_oracle_tests(seed, verbose != 0);
        if (!rep.ok()) {
            std::string msg = "oracle tests failed:";
            for (const std::string &line : rep.lines) {
                if (line.rfind("FAIL", 0) == 0) msg += "\n  " + line;
            }
            pasr::fail(PASR_ERR_RUNTIME, msg);
        }
    });
}

}  // extern "C"
