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

// pasr command-line front end. Talks to the library exclusively through the
// C interface in pasr.h; the only local work is composing the config JSON.

#include "pasr.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

// 0 success, 1 runtime error, 2 user/config error.
int exit_code(pasr_status st) {
    if (st == PASR_OK) return 0;
    return st == PASR_ERR_INVALID_ARGUMENT ? 2 : 1;
}

int report_failure(pasr_status st) {
    std::fprintf(stderr, "error: %s [%s]\n", pasr_last_error(), pasr_status_name(st));
    return exit_code(st);
}

[[noreturn]] void die_usage(const std::string &msg) {
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    std::exit(2);
}

std::string default_config_text() {
    size_t need = pasr_default_config_json(nullptr, 0);
    std::string buf(need + 1, '\0');
    pasr_default_config_json(buf.data(), buf.size());
    buf.resize(need);
    return buf;
}

// Start from --config (or the built-in defaults) and fold in the flag
// overrides; the library re-validates the merged document.
struct ConfigArgs {
    std::string path;
    uint64_t seed = 0;
    bool seed_set = false;
    double psi = 0.0;
    bool psi_set = false;
    std::vector<int> beams;

    std::string compose() const {
        std::string text;
        if (!path.empty()) {
            std::ifstream in(path, std::ios::binary);
            if (!in) die_usage("cannot read config file: " + path);
            std::ostringstream ss;
            ss << in.rdbuf();
            text = ss.str();
        } else {
            text = default_config_text();
        }
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            die_usage("config is not a JSON object: " + (path.empty() ? "<defaults>" : path));
        }
        if (seed_set) j["seed"] = seed;
        if (psi_set) j["eval"]["psi"] = psi;
        if (!beams.empty()) j["eval"]["beams"] = beams;
        return j.dump();
    }

    void attach(CLI::App *cmd, bool with_eval_flags) {
        cmd->add_option("--config", path, "JSON config file (defaults when omitted)");
        auto *seed_opt = cmd->add_option("--seed", seed, "override config seed");
        seed_opt->each([this](const std::string &) { seed_set = true; });
        if (with_eval_flags) {
            auto *psi_opt = cmd->add_option("--psi", psi, "override eval threshold psi");
            psi_opt->each([this](const std::string &) { psi_set = true; });
            cmd->add_option("--beam", beams,
                            "override beam sizes (repeatable, ascending)");
        }
    }
};

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"predictive speech recognition and end-of-utterance detection"};
    app.require_subcommand(1);

    // gen-data
    auto *gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
    ConfigArgs gen_cfg;
    std::string gen_out;
    bool gen_force = false;
    gen_cfg.attach(gen, false);
    gen->add_option("--out-dir", gen_out, "corpus output directory")->required();
    gen->add_flag("--force", gen_force, "overwrite an existing corpus");

    // train
    auto *train = app.add_subcommand("train", "train one variant on a corpus");
    ConfigArgs train_cfg;
    std::string train_corpus, train_variant, train_out;
    bool train_force = false;
    train_cfg.attach(train, false);
    train->add_option("corpus_dir", train_corpus, "corpus directory")->required();
    train->add_option("--variant", train_variant, "baseline or proposed")->required();
    train->add_option("--out-dir", train_out, "checkpoint output directory")->required();
    train->add_flag("--force", train_force, "overwrite an existing checkpoint dir");

    // sweep
    auto *sweep = app.add_subcommand("sweep", "evaluate a checkpoint across mask durations");
    ConfigArgs sweep_cfg;
    std::string sweep_corpus, sweep_model, sweep_out;
    bool sweep_force = false;
    sweep_cfg.attach(sweep, true);
    sweep->add_option("corpus_dir", sweep_corpus, "corpus directory")->required();
    sweep->add_option("model_dir", sweep_model, "checkpoint directory")->required();
    sweep->add_option("--out-dir", sweep_out, "sweep output directory")->required();
    sweep->add_flag("--force", sweep_force, "overwrite an existing sweep dir");

    // report
    auto *report = app.add_subcommand("report", "merge sweep summaries into a comparison");
    std::vector<std::string> report_csvs;
    std::string report_out;
    bool report_force = false;
    report->add_option("summary_csv", report_csvs, "sweep summary.csv files")
        ->required()
        ->expected(-1);
    report->add_option("--out-dir", report_out, "report output directory")->required();
    report->add_flag("--force", report_force, "overwrite an existing report dir");

    // gradcheck
    auto *gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    uint64_t gc_seed = 7;
    bool gc_verbose = false;
    gradcheck->add_option("--seed", gc_seed, "rng seed");
    gradcheck->add_flag("--verbose", gc_verbose, "per-scenario detail");

    // oracle-tests
    auto *oracle = app.add_subcommand("oracle-tests", "brute-force oracle suites");
    uint64_t or_seed = 7;
    bool or_verbose = false;
    oracle->add_option("--seed", or_seed, "rng seed");
    oracle->add_flag("--verbose", or_verbose, "per-suite detail");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        pasr_status st =
            pasr_corpus_generate(gen_cfg.compose().c_str(), gen_out.c_str(), gen_force ? 1 : 0);
        if (st != PASR_OK) return report_failure(st);
        std::printf("corpus written to %s\n", gen_out.c_str());
        return 0;
    }
    if (train->parsed()) {
        pasr_status st = pasr_train(train_cfg.compose().c_str(), train_corpus.c_str(),
                                    train_variant.c_str(), train_out.c_str(),
                                    train_force ? 1 : 0);
        if (st != PASR_OK) return report_failure(st);
        std::printf("checkpoint written to %s\n", train_out.c_str());
        return 0;
    }
    if (sweep->parsed()) {
        pasr_model *model = nullptr;
        pasr_status st = pasr_model_load(sweep_model.c_str(), &model);
        if (st != PASR_OK) return report_failure(st);
        st = pasr_sweep(sweep_cfg.compose().c_str(), model, sweep_corpus.c_str(),
                        sweep_out.c_str(), sweep_force ? 1 : 0);
        pasr_model_free(model);
        if (st != PASR_OK) return report_failure(st);
        std::printf("sweep written to %s\n", sweep_out.c_str());
        return 0;
    }
    if (report->parsed()) {
        std::vector<const char *> paths;
        paths.reserve(report_csvs.size());
        for (const std::string &p : report_csvs) paths.push_back(p.c_str());
        pasr_status st =
            pasr_report(paths.data(), paths.size(), report_out.c_str(), report_force ? 1 : 0);
        if (st != PASR_OK) return report_failure(st);
        std::printf("report written to %s\n", report_out.c_str());
        return 0;
    }
    if (gradcheck->parsed()) {
        double max_rel = 0.0;
        pasr_status st = pasr_gradcheck(gc_seed, gc_verbose ? 1 : 0, &max_rel);
        if (st != PASR_OK) return report_failure(st);
        std::printf("gradcheck ok, max relative error %.3e\n", max_rel);
        return 0;
    }
    if (oracle->parsed()) {
        pasr_status st = pasr_oracle_tests(or_seed, or_verbose ? 1 : 0);
        if (st != PASR_OK) return report_failure(st);
        std::printf("oracle tests ok\n");
        return 0;
    }
    return 2;
}
