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
#include "core/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace pasr {

// Dense row-major matrix. Everything in the engine is rank 2: a sequence of
// T frames with D features is a T x D matrix, a scalar is 1 x 1.
template <typename T>
struct MatT {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    MatT() = default;
    MatT(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}

    T &operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    T operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    T *row_ptr(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const T *row_ptr(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

    size_t numel() const { return v.size(); }
    bool same_shape(const MatT &o) const { return rows == o.rows && cols == o.cols; }
    void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

using Mat = MatT<float>;

template <typename U, typename T>
MatT<U> cast_mat(const MatT<T> &a) {
    MatT<U> out(a.rows, a.cols);
    for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = static_cast<U>(a.v[i]);
    return out;
}

template <typename T>
MatT<T> randn_mat(int rows, int cols, T stddev, Rng &rng) {
    MatT<T> out(rows, cols);
    for (auto &x : out.v) x = static_cast<T>(rng.normal(0.0, static_cast<double>(stddev)));
    return out;
}

// Value-side helpers for inference paths that bypass the tape.
template <typename T>
MatT<T> softmax_rows_value(const MatT<T> &a);
template <typename T>
MatT<T> log_softmax_rows_value(const MatT<T> &a);
template <typename T>
int argmax_row(const MatT<T> &a, int row);

// A trainable parameter with its Adam state. Owned by a ParamStoreT; tapes
// reference it and accumulate into grad.
template <typename T>
struct ParamT {
    std::string name;
    MatT<T> value;
    MatT<T> grad;
    MatT<T> m;
    MatT<T> v2;
};

// Parameters in insertion order. The order is part of the contract: gradient
// accumulation, the Adam sweep and checkpoint layout all follow it, which
// keeps runs bit-reproducible.
template <typename T>
class ParamStoreT {
public:
    ParamT<T> &create(const std::string &name, MatT<T> value);
    ParamT<T> &get(const std::string &name);
    const ParamT<T> &get(const std::string &name) const;
    bool contains(const std::string &name) const;

    size_t size() const { return params_.size(); }
    ParamT<T> &at(size_t i) { return *params_[i]; }
    const ParamT<T> &at(size_t i) const { return *params_[i]; }

    size_t scalar_count() const;
    void zero_grads();
    double grad_norm() const;
    void scale_grads(double s);

    // Checkpoints are float32 containers regardless of T.
    void save(const std::filesystem::path &path) const;
    void load(const std::filesystem::path &path);

private:
    std::vector<std::unique_ptr<ParamT<T>>> params_;
    std::map<std::string, size_t> index_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
};

// step is 1-based; bias correction uses beta^step.
template <typename T>
void adam_step(ParamStoreT<T> &store, double lr, const AdamConfig &cfg, int64_t step);

// Eager reverse-mode tape. Ops compute their value immediately and register a
// backward closure; backward() replays the closures in reverse creation
// order. Gradient buffers are allocated on first touch, so untouched branches
// cost nothing.
template <typename T>
class TapeT {
public:
    using MatType = MatT<T>;

    TapeT() = default;
    TapeT(const TapeT &) = delete;
    TapeT &operator=(const TapeT &) = delete;

    // With gradients disabled, param() degrades to a plain constant and no
    // backward closures are recorded; forward values are unchanged. Meant for
    // inference tapes.
    void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
    bool grad_enabled() const { return grad_enabled_; }

    // Leaves. input/constant never receive gradients.
    int input(MatType value);
    int constant(MatType value) { return input(std::move(value)); }
    int param(ParamT<T> &p);

    int matmul(int a, int b);     // A * B
    int matmul_nt(int a, int b);  // A * B^T
    int add(int a, int b);
    int mul(int a, int b);  // elementwise
    int scale(int a, T s);
    int add_row_bias(int a, int bias);  // bias is 1 x C, broadcast over rows
    int relu(int a);
    int softmax_rows(int a);
    int layer_norm(int a, int gain, int bias);  // per-row, eps 1e-5
    int embed_rows(int table, std::vector<int> ids);
    int slice_cols(int a, int c0, int c1);  // half-open [c0, c1)
    int concat_cols(const std::vector<int> &parts);
    // im2col for 1-d conv over rows: (T x F) -> (T_out x kernel*F) with zero
    // padding, T_out = (T + 2*pad - kernel) / stride + 1.
    int gather_patches(int a, int kernel, int stride, int pad);
    int dropout(int a, double rate, Rng &rng);
    int sum_all(int a);

    // Label-smoothed cross entropy, summed over rows. targets[r] indexes the
    // columns of row r's logits.
    int cross_entropy_rows(int logits, const std::vector<int> &targets, double smoothing);

    // Negative log-likelihood of the label sequence under the standard
    // blank-augmented alignment lattice, in log space. Returns +inf with a
    // zero gradient when no alignment fits.
    int ctc_nll(int logits, const std::vector<int> &targets);

    // References returned here are invalidated by the next node-creating
    // call; copy the value (or re-fetch) before growing the tape.
    const MatType &value(int id) const;
    T scalar_value(int id) const;
    bool has_grad(int id) const;
    const MatType &grad(int id) const;

    // loss must be 1 x 1.
    void backward(int loss);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        MatType value;
        MatType grad_buf;
        bool has_grad = false;
        bool requires_grad = false;
        std::function<void()> back;
    };

    int push(MatType value, bool requires_grad, std::function<void()> back);
    bool needs(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
    MatType &grad_ref(int id);

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

using Tape = TapeT<float>;
using ParamStore = ParamStoreT<float>;
using Param = ParamT<float>;

}  // namespace pasr
