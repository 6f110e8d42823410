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

#include "core/model.hpp"

#include "core/io.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace pasr {

namespace {

using nlohmann::json;

constexpr double kAttnMaskValue = -1e9;

}  // namespace

template <typename T>
ParamT<T> &AsrModelT<T>::make_matrix(const std::string &name, int rows, int cols,
                                     uint64_t seed) {
    // Per-name stream: init depends only on (seed, name), not creation order.
    Rng rng(mix_seed(seed, fnv1a(name)));
    T stddev = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rows)));
    return store_.create(name, randn_mat<T>(rows, cols, stddev, rng));
}

template <typename T>
ParamT<T> &AsrModelT<T>::make_zeros(const std::string &name, int rows, int cols) {
    return store_.create(name, MatT<T>(rows, cols));
}

template <typename T>
ParamT<T> &AsrModelT<T>::make_ones(const std::string &name, int cols) {
    MatT<T> m(1, cols);
    m.fill(T(1));
    return store_.create(name, std::move(m));
}

template <typename T>
typename AsrModelT<T>::AttnParams AsrModelT<T>::make_attn(const std::string &prefix,
                                                          uint64_t seed) {
    int d = cfg_.d_model;
    AttnParams p;
    p.wq = &make_matrix(prefix + ".wq", d, d, seed);
    p.bq = &make_zeros(prefix + ".bq", 1, d);
    p.wk = &make_matrix(prefix + ".wk", d, d, seed);
    p.bk = &make_zeros(prefix + ".bk", 1, d);
    p.wv = &make_matrix(prefix + ".wv", d, d, seed);
    p.bv = &make_zeros(prefix + ".bv", 1, d);
    p.wo = &make_matrix(prefix + ".wo", d, d, seed);
    p.bo = &make_zeros(prefix + ".bo", 1, d);
    return p;
}

template <typename T>
typename AsrModelT<T>::FfParams AsrModelT<T>::make_ff(const std::string &prefix,
                                                      uint64_t seed) {
    FfParams p;
    p.w1 = &make_matrix(prefix + ".w1", cfg_.d_model, cfg_.ff_dim, seed);
    p.b1 = &make_zeros(prefix + ".b1", 1, cfg_.ff_dim);
    p.w2 = &make_matrix(prefix + ".w2", cfg_.ff_dim, cfg_.d_model, seed);
    p.b2 = &make_zeros(prefix + ".b2", 1, cfg_.d_model);
    return p;
}

template <typename T>
typename AsrModelT<T>::LnParams AsrModelT<T>::make_ln(const std::string &prefix) {
    LnParams p;
    p.g = &make_ones(prefix + ".g", cfg_.d_model);
    p.b = &make_zeros(prefix + ".b", 1, cfg_.d_model);
    return p;
}

template <typename T>
AsrModelT<T>::AsrModelT(const ModelConfig &cfg, int vocab_size, int feat_dim,
                        uint64_t init_seed)
    : cfg_(cfg), vocab_(vocab_size), feat_dim_(feat_dim) {
    require(cfg_.d_model % cfg_.heads == 0, PASR_ERR_INVALID_ARGUMENT,
            "d_model must be divisible by heads");
    require(vocab_ > kFirstTokenId, PASR_ERR_INVALID_ARGUMENT, "vocab too small");
    int d = cfg_.d_model;
    conv1_w_ = &make_matrix("frontend.conv1.w", 3 * feat_dim_, d, init_seed);
    conv1_b_ = &make_zeros("frontend.conv1.b", 1, d);
    conv2_w_ = &make_matrix("frontend.conv2.w", 3 * d, d, init_seed);
    conv2_b_ = &make_zeros("frontend.conv2.b", 1, d);
    for (int l = 0; l < cfg_.enc_layers; ++l) {
        std::string pre = cat("enc.", l);
        enc_ln1_.push_back(make_ln(pre + ".ln1"));
        enc_attn_.push_back(make_attn(pre + ".attn", init_seed));
        enc_ln2_.push_back(make_ln(pre + ".ln2"));
        enc_ff_.push_back(make_ff(pre + ".ff", init_seed));
    }
    enc_final_ln_ = make_ln("enc.final_ln");
    embed_ = &make_matrix("dec.embed", vocab_, d, init_seed);
    for (int l = 0; l < cfg_.dec_layers; ++l) {
        std::string pre = cat("dec.", l);
        dec_ln1_.push_back(make_ln(pre + ".ln1"));
        dec_self_.push_back(make_attn(pre + ".self", init_seed));
        dec_ln2_.push_back(make_ln(pre + ".ln2"));
        dec_cross_.push_back(make_attn(pre + ".cross", init_seed));
        dec_ln3_.push_back(make_ln(pre + ".ln3"));
        dec_ff_.push_back(make_ff(pre + ".ff", init_seed));
    }
    dec_final_ln_ = make_ln("dec.final_ln");
    out_w_ = &make_matrix("out.w", d, vocab_, init_seed);
    out_b_ = &make_zeros("out.b", 1, vocab_);
    ctc_w_ = &make_matrix("ctc.w", d, vocab_, init_seed);
    ctc_b_ = &make_zeros("ctc.b", 1, vocab_);
}

template <typename T>
int AsrModelT<T>::subsampled_len(int t_feat) {
    int l1 = (t_feat - 1) / 2 + 1;
    return (l1 - 1) / 2 + 1;
}

template <typename T>
MatT<T> AsrModelT<T>::positional_encoding(int rows) const {
    int d = cfg_.d_model;
    MatT<T> pe(rows, d);
    for (int pos = 0; pos < rows; ++pos) {
        for (int c = 0; c + 1 < d; c += 2) {
            double freq = std::pow(10000.0, -static_cast<double>(c) / d);
            pe(pos, c) = static_cast<T>(std::sin(pos * freq));
            pe(pos, c + 1) = static_cast<T>(std::cos(pos * freq));
        }
    }
    return pe;
}

template <typename T>
int AsrModelT<T>::maybe_dropout(TapeT<T> &tape, int x, bool train, Rng *rng) {
    if (!train || cfg_.dropout <= 0.0) return x;
    require(rng != nullptr, PASR_ERR_INVALID_ARGUMENT, "training forward needs an rng");
    return tape.dropout(x, cfg_.dropout, *rng);
}

template <typename T>
int AsrModelT<T>::attention(TapeT<T> &tape, int q_in, int kv_in, const AttnParams &p,
                            int mask_node, std::vector<int> *attn_out, bool train, Rng *rng) {
    int d = cfg_.d_model;
    int dh = d / cfg_.heads;
    T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    int q = tape.add_row_bias(tape.matmul(q_in, tape.param(*p.wq)), tape.param(*p.bq));
    int k = tape.add_row_bias(tape.matmul(kv_in, tape.param(*p.wk)), tape.param(*p.bk));
    int v = tape.add_row_bias(tape.matmul(kv_in, tape.param(*p.wv)), tape.param(*p.bv));
    std::vector<int> ctx;
    ctx.reserve(static_cast<size_t>(cfg_.heads));
    for (int h = 0; h < cfg_.heads; ++h) {
        int c0 = h * dh, c1 = (h + 1) * dh;
        int qh = tape.slice_cols(q, c0, c1);
        int kh = tape.slice_cols(k, c0, c1);
        int vh = tape.slice_cols(v, c0, c1);
        int scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
        if (mask_node >= 0) scores = tape.add(scores, mask_node);
        int attn = tape.softmax_rows(scores);
        if (attn_out) attn_out->push_back(attn);
        ctx.push_back(tape.matmul(attn, vh));
    }
    int cat_ctx = tape.concat_cols(ctx);
    int out = tape.add_row_bias(tape.matmul(cat_ctx, tape.param(*p.wo)), tape.param(*p.bo));
    return maybe_dropout(tape, out, train, rng);
}

template <typename T>
int AsrModelT<T>::feed_forward(TapeT<T> &tape, int x, const FfParams &p, bool train, Rng *rng) {
    int h = tape.relu(tape.add_row_bias(tape.matmul(x, tape.param(*p.w1)), tape.param(*p.b1)));
    h = maybe_dropout(tape, h, train, rng);
    int out = tape.add_row_bias(tape.matmul(h, tape.param(*p.w2)), tape.param(*p.b2));
    return maybe_dropout(tape, out, train, rng);
}

template <typename T>
int AsrModelT<T>::encode(TapeT<T> &tape, const MatT<T> &features, bool train, Rng *drop_rng) {
    require(features.cols == feat_dim_, PASR_ERR_SHAPE,
            cat("encode: expected ", feat_dim_, " features, got ", features.cols));
    require(features.rows >= 4, PASR_ERR_INVALID_ARGUMENT,
            cat("encode: input too short (", features.rows, " frames, need >= 4)"));
    int x = tape.input(features);
    x = tape.relu(tape.add_row_bias(tape.matmul(tape.gather_patches(x, 3, 2, 1),
                                                tape.param(*conv1_w_)),
                                    tape.param(*conv1_b_)));
    x = tape.relu(tape.add_row_bias(tape.matmul(tape.gather_patches(x, 3, 2, 1),
                                                tape.param(*conv2_w_)),
                                    tape.param(*conv2_b_)));
    int t_sub = tape.value(x).rows;
    x = tape.add(x, tape.constant(positional_encoding(t_sub)));
    x = maybe_dropout(tape, x, train, drop_rng);
    for (int l = 0; l < cfg_.enc_layers; ++l) {
        size_t li = static_cast<size_t>(l);
        int h = tape.layer_norm(x, tape.param(*enc_ln1_[li].g), tape.param(*enc_ln1_[li].b));
        x = tape.add(x, attention(tape, h, h, enc_attn_[li], -1, nullptr, train, drop_rng));
        h = tape.layer_norm(x, tape.param(*enc_ln2_[li].g), tape.param(*enc_ln2_[li].b));
        x = tape.add(x, feed_forward(tape, h, enc_ff_[li], train, drop_rng));
    }
    return tape.layer_norm(x, tape.param(*enc_final_ln_.g), tape.param(*enc_final_ln_.b));
}

template <typename T>
int AsrModelT<T>::ctc_head(TapeT<T> &tape, int enc_out) {
    return tape.add_row_bias(tape.matmul(enc_out, tape.param(*ctc_w_)), tape.param(*ctc_b_));
}

template <typename T>
DecodeOutT<T> AsrModelT<T>::decode_teacher_forced(TapeT<T> &tape, int enc_out,
                                                  const std::vector<int> &tokens, bool train,
                                                  Rng *drop_rng) {
    for (int t : tokens) {
        require(t >= kFirstTokenId && t < vocab_, PASR_ERR_INVALID_ARGUMENT,
                cat("decode: token ", t, " outside the real-token range"));
    }
    int n = static_cast<int>(tokens.size()) + 1;
    // Shifted input: eos doubles as the start symbol.
    std::vector<int> ids(static_cast<size_t>(n));
    ids[0] = kEosId;
    std::copy(tokens.begin(), tokens.end(), ids.begin() + 1);

    int x = tape.embed_rows(tape.param(*embed_), ids);
    x = tape.scale(x, static_cast<T>(std::sqrt(static_cast<double>(cfg_.d_model))));
    x = tape.add(x, tape.constant(positional_encoding(n)));
    x = maybe_dropout(tape, x, train, drop_rng);

    MatT<T> causal(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = r + 1; c < n; ++c) causal(r, c) = static_cast<T>(kAttnMaskValue);
    }
    int mask_node = tape.constant(std::move(causal));

    DecodeOutT<T> out;
    out.cross_attn.resize(static_cast<size_t>(cfg_.dec_layers));
    for (int l = 0; l < cfg_.dec_layers; ++l) {
        size_t li = static_cast<size_t>(l);
        int h = tape.layer_norm(x, tape.param(*dec_ln1_[li].g), tape.param(*dec_ln1_[li].b));
        x = tape.add(x, attention(tape, h, h, dec_self_[li], mask_node, nullptr, train, drop_rng));
        h = tape.layer_norm(x, tape.param(*dec_ln2_[li].g), tape.param(*dec_ln2_[li].b));
        x = tape.add(x, attention(tape, h, enc_out, dec_cross_[li], -1, &out.cross_attn[li],
                                  train, drop_rng));
        h = tape.layer_norm(x, tape.param(*dec_ln3_[li].g), tape.param(*dec_ln3_[li].b));
        x = tape.add(x, feed_forward(tape, h, dec_ff_[li], train, drop_rng));
    }
    x = tape.layer_norm(x, tape.param(*dec_final_ln_.g), tape.param(*dec_final_ln_.b));
    out.logits = tape.add_row_bias(tape.matmul(x, tape.param(*out_w_)), tape.param(*out_b_));
    return out;
}

template <typename T>
typename AsrModelT<T>::Loss AsrModelT<T>::joint_loss(TapeT<T> &tape, const MatT<T> &features,
                                                     const std::vector<int> &tokens, bool train,
                                                     Rng *drop_rng) {
    Loss loss;
    loss.enc_out = encode(tape, features, train, drop_rng);
    loss.dec = decode_teacher_forced(tape, loss.enc_out, tokens, train, drop_rng);

    std::vector<int> targets(tokens);
    targets.push_back(kEosId);
    loss.att = tape.cross_entropy_rows(loss.dec.logits, targets, cfg_.label_smoothing);

    T lambda = static_cast<T>(cfg_.ctc_weight);
    if (cfg_.ctc_weight > 0.0 && !tokens.empty()) {
        loss.ctc = tape.ctc_nll(ctc_head(tape, loss.enc_out), tokens);
        if (std::isinf(static_cast<double>(tape.scalar_value(loss.ctc)))) {
            loss.ctc_impossible = true;
            return loss;
        }
        loss.joint = tape.add(tape.scale(loss.ctc, lambda),
                              tape.scale(loss.att, T(1) - lambda));
    } else {
        loss.joint = tape.scale(loss.att, T(1) - lambda);
    }
    return loss;
}

template <typename T>
void AsrModelT<T>::save(const std::filesystem::path &dir, const std::string &meta_json) const {
    std::filesystem::create_directories(dir);
    store_.save(dir / "model.pasr");
    write_text_file(dir / "model.json", meta_json);
}

template <typename T>
MatT<T> cross_attention_matrix(const TapeT<T> &tape, const DecodeOutT<T> &dec, int layer,
                               int head) {
    require(!dec.cross_attn.empty(), PASR_ERR_INVALID_ARGUMENT, "no attention captured");
    int n_layers = static_cast<int>(dec.cross_attn.size());
    int li = layer < 0 ? n_layers - 1 : layer;
    require(li >= 0 && li < n_layers, PASR_ERR_INVALID_ARGUMENT, "attention layer out of range");
    const std::vector<int> &heads = dec.cross_attn[static_cast<size_t>(li)];
    int n_heads = static_cast<int>(heads.size());
    if (head >= 0) {
        require(head < n_heads, PASR_ERR_INVALID_ARGUMENT, "attention head out of range");
        return tape.value(heads[static_cast<size_t>(head)]);
    }
    MatT<T> avg = tape.value(heads[0]);
    for (int h = 1; h < n_heads; ++h) {
        const MatT<T> &m = tape.value(heads[static_cast<size_t>(h)]);
        for (size_t i = 0; i < avg.v.size(); ++i) avg.v[i] += m.v[i];
    }
    T inv = T(1) / static_cast<T>(n_heads);
    for (auto &x : avg.v) x *= inv;
    return avg;
}

std::string model_meta_to_json(const ModelMeta &meta) {
    json j;
    j["model"] = {
        {"d_model", meta.model.d_model},
        {"heads", meta.model.heads},
        {"enc_layers", meta.model.enc_layers},
        {"dec_layers", meta.model.dec_layers},
        {"ff_dim", meta.model.ff_dim},
        {"dropout", meta.model.dropout},
        {"ctc_weight", meta.model.ctc_weight},
        {"label_smoothing", meta.model.label_smoothing},
    };
    j["vocab_size"] = meta.vocab_size;
    j["feat_dim"] = meta.feat_dim;
    j["variant"] = meta.variant;
    j["seed"] = meta.seed;
    j["corpus_config_hash"] = meta.corpus_config_hash;
    j["steps_trained"] = meta.steps_trained;
    return j.dump(2) + "\n";
}

ModelMeta model_meta_from_json(const std::string &text) {
    ModelMeta meta;
    try {
        json j = json::parse(text);
        const json &m = j.at("model");
        meta.model.d_model = m.at("d_model").get<int>();
        meta.model.heads = m.at("heads").get<int>();
        meta.model.enc_layers = m.at("enc_layers").get<int>();
        meta.model.dec_layers = m.at("dec_layers").get<int>();
        meta.model.ff_dim = m.at("ff_dim").get<int>();
        meta.model.dropout = m.at("dropout").get<double>();
        meta.model.ctc_weight = m.at("ctc_weight").get<double>();
        meta.model.label_smoothing = m.at("label_smoothing").get<double>();
        meta.vocab_size = j.at("vocab_size").get<int>();
        meta.feat_dim = j.at("feat_dim").get<int>();
        meta.variant = j.at("variant").get<std::string>();
        meta.seed = j.at("seed").get<uint64_t>();
        meta.corpus_config_hash = j.at("corpus_config_hash").get<std::string>();
        meta.steps_trained = j.at("steps_trained").get<int>();
    } catch (const json::exception &e) {
        fail(PASR_ERR_IO, cat("bad model meta: ", e.what()));
    }
    return meta;
}

std::unique_ptr<AsrModel> load_model(const std::filesystem::path &dir, ModelMeta *meta_out) {
    ModelMeta meta = model_meta_from_json(read_text_file(dir / "model.json"));
    auto model = std::make_unique<AsrModel>(meta.model, meta.vocab_size, meta.feat_dim,
                                            meta.seed);
    model->store().load(dir / "model.pasr");
    if (meta_out) *meta_out = meta;
    return model;
}

template class AsrModelT<float>;
template class AsrModelT<double>;
template MatT<float> cross_attention_matrix<float>(const TapeT<float> &,
                                                   const DecodeOutT<float> &, int, int);
template MatT<double> cross_attention_matrix<double>(const TapeT<double> &,
                                                     const DecodeOutT<double> &, int, int);

}  // namespace pasr
