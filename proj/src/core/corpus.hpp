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
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace pasr {

struct Utterance {
    std::string id;
    std::string path;  // feature file, relative to the corpus dir
    std::vector<int> tokens;
    std::vector<std::array<int, 2>> align_ms;  // per-token [start, end)
    int t_eou_ms = 0;
    int t_ms = 0;
};

struct GeneratedUtterance {
    Mat features;  // T_feat x F
    Utterance meta;
};

// Fixed per corpus seed: one prototype feature vector per vocabulary entry
// and a non-uniform bigram chain over the real tokens, so transcripts carry
// predictable structure.
class TokenModel {
public:
    TokenModel(const CorpusConfig &cfg, uint64_t seed);

    const Mat &prototypes() const { return prototypes_; }
    // Base duration of a vocabulary token in ms; fixed at corpus-seed time
    // like the prototypes, so a token's length is a property of its identity.
    int base_duration_ms(int token) const;
    int sample_first(Rng &rng) const;
    int sample_next(int prev, Rng &rng) const;

private:
    Mat prototypes_;  // V x F; rows for blank/eos stay zero
    std::vector<int> base_ms_;  // per-vocabulary duration; 0 for blank/eos
    std::vector<double> init_;
    std::vector<std::vector<double>> trans_;  // indexed by prev real token - kFirstTokenId
};

// Samplers are exposed separately so tests can compare generated corpora
// against direct draws.
int sample_silence_ms(const CorpusConfig &cfg, Rng &rng);
int sample_token_count(const CorpusConfig &cfg, Rng &rng);

// Deterministic in (cfg, token model, id): the caller-supplied rng must be
// derived from (corpus seed, id).
GeneratedUtterance generate_utterance(const CorpusConfig &cfg, const TokenModel &tm,
                                      const std::string &id, Rng &rng);

Rng utterance_rng(uint64_t corpus_seed, const std::string &id);

void generate_corpus(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                     bool force);

std::vector<Utterance> load_manifest(const std::filesystem::path &corpus_dir,
                                     const std::string &split);
Mat load_features(const std::filesystem::path &corpus_dir, const Utterance &utt);
ExperimentConfig load_corpus_config(const std::filesystem::path &corpus_dir);

}  // namespace pasr
