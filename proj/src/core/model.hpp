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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace pasr {

// Cross-attention node ids per decoder layer and head; each points at an
// (N+1) x T' softmax matrix captured before any dropout.
template <typename T>
struct DecodeOutT {
    int logits = -1;  // (N+1) x V
    std::vector<std::vector<int>> cross_attn;
};

// Encoder-decoder transformer with a convolutional x4 subsampling frontend,
// sinusoidal positions, pre-norm blocks, a CTC head on the encoder output and
// a decoder whose cross-attention matrices are exposed.
template <typename T>
class AsrModelT {
public:
    AsrModelT(const ModelConfig &cfg, int vocab_size, int feat_dim, uint64_t init_seed);

    // Features must already carry any masking; positions are added inside,
    // after subsampling, so masked frames still encode where they sit.
    int encode(TapeT<T> &tape, const MatT<T> &features, bool train, Rng *drop_rng);
    int ctc_head(TapeT<T> &tape, int enc_out);
    DecodeOutT<T> decode_teacher_forced(TapeT<T> &tape, int enc_out,
                                        const std::vector<int> &tokens, bool train,
                                        Rng *drop_rng);

    struct Loss {
        int joint = -1;
        int ctc = -1;  // -1 when ctc_weight == 0
        int att = -1;
        bool ctc_impossible = false;
        int enc_out = -1;
        DecodeOutT<T> dec;
    };
    // lambda * ctc + (1 - lambda) * label-smoothed cross entropy (targets
    // include the final eos row).
    Loss joint_loss(TapeT<T> &tape, const MatT<T> &features, const std::vector<int> &tokens,
                    bool train, Rng *drop_rng);

    ParamStoreT<T> &store() { return store_; }
    const ParamStoreT<T> &store() const { return store_; }
    const ModelConfig &config() const { return cfg_; }
    int vocab() const { return vocab_; }
    int feat_dim() const { return feat_dim_; }

    static int subsampled_len(int t_feat);
    MatT<T> positional_encoding(int rows) const;

    // Weights to dir/model.pasr, meta JSON (caller-composed) to dir/model.json.
    void save(const std::filesystem::path &dir, const std::string &meta_json) const;

private:
    struct AttnParams {
        ParamT<T> *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    };
    struct FfParams {
        ParamT<T> *w1, *b1, *w2, *b2;
    };
    struct LnParams {
        ParamT<T> *g, *b;
    };

    ParamT<T> &make_matrix(const std::string &name, int rows, int cols, uint64_t seed);
    ParamT<T> &make_zeros(const std::string &name, int rows, int cols);
    ParamT<T> &make_ones(const std::string &name, int cols);
    AttnParams make_attn(const std::string &prefix, uint64_t seed);
    FfParams make_ff(const std::string &prefix, uint64_t seed);
    LnParams make_ln(const std::string &prefix);

    int attention(TapeT<T> &tape, int q_in, int kv_in, const AttnParams &p, int mask_node,
                  std::vector<int> *attn_out, bool train, Rng *rng);
    int feed_forward(TapeT<T> &tape, int x, const FfParams &p, bool train, Rng *rng);
    int maybe_dropout(TapeT<T> &tape, int x, bool train, Rng *rng);

    ModelConfig cfg_;
    int vocab_;
    int feat_dim_;
    ParamStoreT<T> store_;

    ParamT<T> *conv1_w_, *conv1_b_, *conv2_w_, *conv2_b_;
    std::vector<AttnParams> enc_attn_;
    std::vector<FfParams> enc_ff_;
    std::vector<LnParams> enc_ln1_, enc_ln2_;
    LnParams enc_final_ln_;
    ParamT<T> *embed_;
    std::vector<AttnParams> dec_self_, dec_cross_;
    std::vector<FfParams> dec_ff_;
    std::vector<LnParams> dec_ln1_, dec_ln2_, dec_ln3_;
    LnParams dec_final_ln_;
    ParamT<T> *out_w_, *out_b_, *ctc_w_, *ctc_b_;
};

using AsrModel = AsrModelT<float>;
using DecodeOut = DecodeOutT<float>;

// The attention row source for EOU estimation: layer -1 means the final
// decoder layer, head -1 means the head average.
template <typename T>
MatT<T> cross_attention_matrix(const TapeT<T> &tape, const DecodeOutT<T> &dec, int layer,
                               int head);

struct ModelMeta {
    ModelConfig model;
    int vocab_size = 0;
    int feat_dim = 0;
    std::string variant;
    uint64_t seed = 0;
    std::string corpus_config_hash;
    int steps_trained = 0;
};

std::string model_meta_to_json(const ModelMeta &meta);
ModelMeta model_meta_from_json(const std::string &text);

// Reads dir/model.json + dir/model.pasr.
std::unique_ptr<AsrModel> load_model(const std::filesystem::path &dir, ModelMeta *meta_out);

}  // namespace pasr
