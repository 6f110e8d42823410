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

#include "core/tensor.hpp"

#include "core/io.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pasr {

namespace {

template <typename T>
using ERowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<ERowMat<T>> emap(MatT<T> &m) {
    return Eigen::Map<ERowMat<T>>(m.v.data(), m.rows, m.cols);
}

template <typename T>
Eigen::Map<const ERowMat<T>> cmap(const MatT<T> &m) {
    return Eigen::Map<const ERowMat<T>>(m.v.data(), m.rows, m.cols);
}

template <typename T>
T log_add(T a, T b) {
    if (a == -std::numeric_limits<T>::infinity()) return b;
    if (b == -std::numeric_limits<T>::infinity()) return a;
    T hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Blank-augmented label sequence: blank, y1, blank, y2, ..., yN, blank.
std::vector<int> extend_labels(const std::vector<int> &targets) {
    std::vector<int> ext;
    ext.reserve(targets.size() * 2 + 1);
    ext.push_back(kBlankId);
    for (int y : targets) {
        ext.push_back(y);
        ext.push_back(kBlankId);
    }
    return ext;
}

}  // namespace

template <typename T>
MatT<T> softmax_rows_value(const MatT<T> &a) {
    MatT<T> out(a.rows, a.cols);
    for (int r = 0; r < a.rows; ++r) {
        const T *x = a.row_ptr(r);
        T *y = out.row_ptr(r);
        T mx = x[0];
        for (int c = 1; c < a.cols; ++c) mx = std::max(mx, x[c]);
        T sum = T(0);
        for (int c = 0; c < a.cols; ++c) {
            y[c] = std::exp(x[c] - mx);
            sum += y[c];
        }
        T inv = T(1) / sum;
        for (int c = 0; c < a.cols; ++c) y[c] *= inv;
    }
    return out;
}

template <typename T>
MatT<T> log_softmax_rows_value(const MatT<T> &a) {
    MatT<T> out(a.rows, a.cols);
    for (int r = 0; r < a.rows; ++r) {
        const T *x = a.row_ptr(r);
        T *y = out.row_ptr(r);
        T mx = x[0];
        for (int c = 1; c < a.cols; ++c) mx = std::max(mx, x[c]);
        T sum = T(0);
        for (int c = 0; c < a.cols; ++c) sum += std::exp(x[c] - mx);
        T lse = mx + std::log(sum);
        for (int c = 0; c < a.cols; ++c) y[c] = x[c] - lse;
    }
    return out;
}

template <typename T>
int argmax_row(const MatT<T> &a, int row) {
    require(row >= 0 && row < a.rows, PASR_ERR_INVALID_ARGUMENT, "argmax_row: row out of range");
    const T *x = a.row_ptr(row);
    int best = 0;
    for (int c = 1; c < a.cols; ++c) {
        if (x[c] > x[best]) best = c;
    }
    return best;
}

// ---------------------------------------------------------------------------
// ParamStoreT

template <typename T>
ParamT<T> &ParamStoreT<T>::create(const std::string &name, MatT<T> value) {
    require(!index_.count(name), PASR_ERR_INVALID_ARGUMENT, cat("duplicate param: ", name));
    auto p = std::make_unique<ParamT<T>>();
    p->name = name;
    p->grad = MatT<T>(value.rows, value.cols);
    p->m = MatT<T>(value.rows, value.cols);
    p->v2 = MatT<T>(value.rows, value.cols);
    p->value = std::move(value);
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

template <typename T>
ParamT<T> &ParamStoreT<T>::get(const std::string &name) {
    auto it = index_.find(name);
    require(it != index_.end(), PASR_ERR_INVALID_ARGUMENT, cat("unknown param: ", name));
    return *params_[it->second];
}

template <typename T>
const ParamT<T> &ParamStoreT<T>::get(const std::string &name) const {
    auto it = index_.find(name);
    require(it != index_.end(), PASR_ERR_INVALID_ARGUMENT, cat("unknown param: ", name));
    return *params_[it->second];
}

template <typename T>
bool ParamStoreT<T>::contains(const std::string &name) const {
    return index_.count(name) != 0;
}

template <typename T>
size_t ParamStoreT<T>::scalar_count() const {
    size_t n = 0;
    for (const auto &p : params_) n += p->value.numel();
    return n;
}

template <typename T>
void ParamStoreT<T>::zero_grads() {
    for (auto &p : params_) p->grad.fill(T(0));
}

template <typename T>
double ParamStoreT<T>::grad_norm() const {
    double sq = 0.0;
    for (const auto &p : params_) {
        for (T g : p->grad.v) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sq);
}

template <typename T>
void ParamStoreT<T>::scale_grads(double s) {
    for (auto &p : params_) {
        for (T &g : p->grad.v) g = static_cast<T>(g * s);
    }
}

template <typename T>
void ParamStoreT<T>::save(const std::filesystem::path &path) const {
    std::vector<TensorRecord> records;
    records.reserve(params_.size());
    for (const auto &p : params_) {
        TensorRecord rec;
        rec.name = p->name;
        rec.dims = {static_cast<uint32_t>(p->value.rows), static_cast<uint32_t>(p->value.cols)};
        rec.values.resize(p->value.numel());
        for (size_t i = 0; i < rec.values.size(); ++i) {
            rec.values[i] = static_cast<float>(p->value.v[i]);
        }
        records.push_back(std::move(rec));
    }
    write_container(path, records);
}

template <typename T>
void ParamStoreT<T>::load(const std::filesystem::path &path) {
    auto records = read_container_map(path);
    require(records.size() == params_.size(), PASR_ERR_IO,
            cat("checkpoint has ", records.size(), " records, model expects ", params_.size()));
    for (auto &p : params_) {
        auto it = records.find(p->name);
        require(it != records.end(), PASR_ERR_IO, cat("checkpoint missing param: ", p->name));
        const TensorRecord &rec = it->second;
        require(rec.dims.size() == 2 && static_cast<int>(rec.dims[0]) == p->value.rows &&
                    static_cast<int>(rec.dims[1]) == p->value.cols,
                PASR_ERR_SHAPE, cat("checkpoint shape mismatch for ", p->name));
        for (size_t i = 0; i < rec.values.size(); ++i) {
            p->value.v[i] = static_cast<T>(rec.values[i]);
        }
    }
}

template <typename T>
void adam_step(ParamStoreT<T> &store, double lr, const AdamConfig &cfg, int64_t step) {
    require(step >= 1, PASR_ERR_INVALID_ARGUMENT, "adam step must be >= 1");
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < store.size(); ++i) {
        ParamT<T> &p = store.at(i);
        for (size_t j = 0; j < p.value.v.size(); ++j) {
            double g = static_cast<double>(p.grad.v[j]);
            double m = cfg.beta1 * static_cast<double>(p.m.v[j]) + (1.0 - cfg.beta1) * g;
            double v = cfg.beta2 * static_cast<double>(p.v2.v[j]) + (1.0 - cfg.beta2) * g * g;
            p.m.v[j] = static_cast<T>(m);
            p.v2.v[j] = static_cast<T>(v);
            double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
            p.value.v[j] = static_cast<T>(static_cast<double>(p.value.v[j]) - update);
        }
    }
}

// ---------------------------------------------------------------------------
// TapeT

template <typename T>
int TapeT<T>::push(MatType value, bool requires_grad, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
const MatT<T> &TapeT<T>::value(int id) const {
    require(id >= 0 && id < static_cast<int>(nodes_.size()), PASR_ERR_INVALID_ARGUMENT,
            "bad node id");
    return nodes_[static_cast<size_t>(id)].value;
}

template <typename T>
T TapeT<T>::scalar_value(int id) const {
    const MatType &m = value(id);
    require(m.rows == 1 && m.cols == 1, PASR_ERR_SHAPE, "scalar_value: node is not 1x1");
    return m.v[0];
}

template <typename T>
bool TapeT<T>::has_grad(int id) const {
    require(id >= 0 && id < static_cast<int>(nodes_.size()), PASR_ERR_INVALID_ARGUMENT,
            "bad node id");
    return nodes_[static_cast<size_t>(id)].has_grad;
}

template <typename T>
const MatT<T> &TapeT<T>::grad(int id) const {
    require(has_grad(id), PASR_ERR_INVALID_ARGUMENT, "node has no gradient");
    return nodes_[static_cast<size_t>(id)].grad_buf;
}

template <typename T>
MatT<T> &TapeT<T>::grad_ref(int id) {
    Node &n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad) {
        n.grad_buf = MatType(n.value.rows, n.value.cols);
        n.has_grad = true;
    }
    return n.grad_buf;
}

template <typename T>
void TapeT<T>::backward(int loss) {
    require(loss >= 0 && loss < static_cast<int>(nodes_.size()), PASR_ERR_INVALID_ARGUMENT,
            "bad loss node id");
    const MatType &lv = nodes_[static_cast<size_t>(loss)].value;
    require(lv.rows == 1 && lv.cols == 1, PASR_ERR_SHAPE, "backward: loss must be 1x1");
    grad_ref(loss).v[0] = T(1);
    for (int id = loss; id >= 0; --id) {
        Node &n = nodes_[static_cast<size_t>(id)];
        if (n.has_grad && n.back) n.back();
    }
}

template <typename T>
int TapeT<T>::input(MatType value) {
    return push(std::move(value), false, nullptr);
}

template <typename T>
int TapeT<T>::param(ParamT<T> &p) {
    if (!grad_enabled_) return input(p.value);
    int id = static_cast<int>(nodes_.size());
    ParamT<T> *pp = &p;
    auto back = [this, pp, id]() {
        const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
        require(pp->grad.same_shape(g), PASR_ERR_SHAPE, "param grad shape changed");
        for (size_t i = 0; i < g.v.size(); ++i) pp->grad.v[i] += g.v[i];
    };
    return push(p.value, true, std::move(back));
}

template <typename T>
int TapeT<T>::matmul(int a, int b) {
    const MatType &A = value(a);
    const MatType &B = value(b);
    require(A.cols == B.rows, PASR_ERR_SHAPE,
            cat("matmul: ", A.rows, "x", A.cols, " * ", B.rows, "x", B.cols));
    MatType out(A.rows, B.cols);
    emap(out).noalias() = cmap(A) * cmap(B);
    bool rg = needs(a) || needs(b);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, b, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            if (needs(a)) emap(grad_ref(a)).noalias() += cmap(g) * cmap(value(b)).transpose();
            if (needs(b)) emap(grad_ref(b)).noalias() += cmap(value(a)).transpose() * cmap(g);
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::matmul_nt(int a, int b) {
    const MatType &A = value(a);
    const MatType &B = value(b);
    require(A.cols == B.cols, PASR_ERR_SHAPE,
            cat("matmul_nt: ", A.rows, "x", A.cols, " * (", B.rows, "x", B.cols, ")^T"));
    MatType out(A.rows, B.rows);
    emap(out).noalias() = cmap(A) * cmap(B).transpose();
    bool rg = needs(a) || needs(b);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, b, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            if (needs(a)) emap(grad_ref(a)).noalias() += cmap(g) * cmap(value(b));
            if (needs(b)) emap(grad_ref(b)).noalias() += cmap(g).transpose() * cmap(value(a));
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::add(int a, int b) {
    const MatType &A = value(a);
    const MatType &B = value(b);
    require(A.same_shape(B), PASR_ERR_SHAPE, "add: shape mismatch");
    MatType out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] + B.v[i];
    bool rg = needs(a) || needs(b);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, b, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            if (needs(a)) {
                MatType &ga = grad_ref(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            }
            if (needs(b)) {
                MatType &gb = grad_ref(b);
                for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::mul(int a, int b) {
    const MatType &A = value(a);
    const MatType &B = value(b);
    require(A.same_shape(B), PASR_ERR_SHAPE, "mul: shape mismatch");
    MatType out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] * B.v[i];
    bool rg = needs(a) || needs(b);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, b, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            if (needs(a)) {
                MatType &ga = grad_ref(a);
                const MatType &B2 = value(b);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * B2.v[i];
            }
            if (needs(b)) {
                MatType &gb = grad_ref(b);
                const MatType &A2 = value(a);
                for (size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * A2.v[i];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::scale(int a, T s) {
    const MatType &A = value(a);
    MatType out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] * s;
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, s, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            MatType &ga = grad_ref(a);
            for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * s;
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::add_row_bias(int a, int bias) {
    const MatType &A = value(a);
    const MatType &B = value(bias);
    require(B.rows == 1 && B.cols == A.cols, PASR_ERR_SHAPE, "add_row_bias: bias must be 1 x cols");
    MatType out(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r) {
        const T *x = A.row_ptr(r);
        T *y = out.row_ptr(r);
        for (int c = 0; c < A.cols; ++c) y[c] = x[c] + B.v[static_cast<size_t>(c)];
    }
    bool rg = needs(a) || needs(bias);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, bias, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            if (needs(a)) {
                MatType &ga = grad_ref(a);
                for (size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
            }
            if (needs(bias)) {
                MatType &gb = grad_ref(bias);
                for (int r = 0; r < g.rows; ++r) {
                    const T *gr = g.row_ptr(r);
                    for (int c = 0; c < g.cols; ++c) gb.v[static_cast<size_t>(c)] += gr[c];
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::relu(int a) {
    const MatType &A = value(a);
    MatType out(A.rows, A.cols);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = A.v[i] > T(0) ? A.v[i] : T(0);
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            const MatType &A2 = value(a);
            MatType &ga = grad_ref(a);
            for (size_t i = 0; i < g.v.size(); ++i) {
                if (A2.v[i] > T(0)) ga.v[i] += g.v[i];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::softmax_rows(int a) {
    MatType out = softmax_rows_value(value(a));
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, id]() {
            const Node &n = nodes_[static_cast<size_t>(id)];
            const MatType &y = n.value;
            const MatType &g = n.grad_buf;
            MatType &ga = grad_ref(a);
            for (int r = 0; r < y.rows; ++r) {
                const T *yr = y.row_ptr(r);
                const T *gr = g.row_ptr(r);
                T *gar = ga.row_ptr(r);
                T dot = T(0);
                for (int c = 0; c < y.cols; ++c) dot += yr[c] * gr[c];
                for (int c = 0; c < y.cols; ++c) gar[c] += yr[c] * (gr[c] - dot);
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::layer_norm(int a, int gain, int bias) {
    const MatType &A = value(a);
    const MatType &G = value(gain);
    const MatType &B = value(bias);
    require(G.rows == 1 && G.cols == A.cols, PASR_ERR_SHAPE, "layer_norm: gain must be 1 x cols");
    require(B.rows == 1 && B.cols == A.cols, PASR_ERR_SHAPE, "layer_norm: bias must be 1 x cols");
    const T eps = static_cast<T>(1e-5);
    MatType out(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r) {
        const T *x = A.row_ptr(r);
        T *y = out.row_ptr(r);
        T mean = T(0);
        for (int c = 0; c < A.cols; ++c) mean += x[c];
        mean /= static_cast<T>(A.cols);
        T var = T(0);
        for (int c = 0; c < A.cols; ++c) {
            T d = x[c] - mean;
            var += d * d;
        }
        var /= static_cast<T>(A.cols);
        T inv_sigma = T(1) / std::sqrt(var + eps);
        for (int c = 0; c < A.cols; ++c) {
            y[c] = (x[c] - mean) * inv_sigma * G.v[static_cast<size_t>(c)] +
                   B.v[static_cast<size_t>(c)];
        }
    }
    bool rg = needs(a) || needs(gain) || needs(bias);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, gain, bias, id, eps]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            const MatType &A2 = value(a);
            const MatType &G2 = value(gain);
            int cols = A2.cols;
            T invD = T(1) / static_cast<T>(cols);
            std::vector<T> xhat(static_cast<size_t>(cols));
            for (int r = 0; r < A2.rows; ++r) {
                const T *x = A2.row_ptr(r);
                const T *gr = g.row_ptr(r);
                T mean = T(0);
                for (int c = 0; c < cols; ++c) mean += x[c];
                mean *= invD;
                T var = T(0);
                for (int c = 0; c < cols; ++c) {
                    T d = x[c] - mean;
                    var += d * d;
                }
                var *= invD;
                T inv_sigma = T(1) / std::sqrt(var + eps);
                for (int c = 0; c < cols; ++c) xhat[static_cast<size_t>(c)] = (x[c] - mean) * inv_sigma;
                if (needs(gain)) {
                    MatType &gg = grad_ref(gain);
                    for (int c = 0; c < cols; ++c) {
                        gg.v[static_cast<size_t>(c)] += gr[c] * xhat[static_cast<size_t>(c)];
                    }
                }
                if (needs(bias)) {
                    MatType &gb = grad_ref(bias);
                    for (int c = 0; c < cols; ++c) gb.v[static_cast<size_t>(c)] += gr[c];
                }
                if (needs(a)) {
                    MatType &ga = grad_ref(a);
                    T *gar = ga.row_ptr(r);
                    T sum_d = T(0), sum_dx = T(0);
                    for (int c = 0; c < cols; ++c) {
                        T d = gr[c] * G2.v[static_cast<size_t>(c)];
                        sum_d += d;
                        sum_dx += d * xhat[static_cast<size_t>(c)];
                    }
                    sum_d *= invD;
                    sum_dx *= invD;
                    for (int c = 0; c < cols; ++c) {
                        T d = gr[c] * G2.v[static_cast<size_t>(c)];
                        gar[c] += (d - sum_d - xhat[static_cast<size_t>(c)] * sum_dx) * inv_sigma;
                    }
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::embed_rows(int table, std::vector<int> ids) {
    const MatType &Tb = value(table);
    require(!ids.empty(), PASR_ERR_INVALID_ARGUMENT, "embed_rows: empty ids");
    for (int i : ids) {
        require(i >= 0 && i < Tb.rows, PASR_ERR_INVALID_ARGUMENT, "embed_rows: id out of range");
    }
    MatType out(static_cast<int>(ids.size()), Tb.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
        const T *src = Tb.row_ptr(ids[r]);
        std::copy(src, src + Tb.cols, out.row_ptr(static_cast<int>(r)));
    }
    bool rg = needs(table);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, table, ids, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            MatType &gt = grad_ref(table);
            for (size_t r = 0; r < ids.size(); ++r) {
                const T *gr = g.row_ptr(static_cast<int>(r));
                T *dst = gt.row_ptr(ids[r]);
                for (int c = 0; c < g.cols; ++c) dst[c] += gr[c];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::slice_cols(int a, int c0, int c1) {
    const MatType &A = value(a);
    require(0 <= c0 && c0 < c1 && c1 <= A.cols, PASR_ERR_SHAPE, "slice_cols: bad range");
    MatType out(A.rows, c1 - c0);
    for (int r = 0; r < A.rows; ++r) {
        const T *x = A.row_ptr(r);
        std::copy(x + c0, x + c1, out.row_ptr(r));
    }
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, c0, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            MatType &ga = grad_ref(a);
            for (int r = 0; r < g.rows; ++r) {
                const T *gr = g.row_ptr(r);
                T *gar = ga.row_ptr(r) + c0;
                for (int c = 0; c < g.cols; ++c) gar[c] += gr[c];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::concat_cols(const std::vector<int> &parts) {
    require(!parts.empty(), PASR_ERR_INVALID_ARGUMENT, "concat_cols: no parts");
    int rows = value(parts[0]).rows;
    int cols = 0;
    bool rg = false;
    for (int p : parts) {
        const MatType &P = value(p);
        require(P.rows == rows, PASR_ERR_SHAPE, "concat_cols: row mismatch");
        cols += P.cols;
        rg = rg || needs(p);
    }
    MatType out(rows, cols);
    int off = 0;
    for (int p : parts) {
        const MatType &P = value(p);
        for (int r = 0; r < rows; ++r) {
            std::copy(P.row_ptr(r), P.row_ptr(r) + P.cols, out.row_ptr(r) + off);
        }
        off += P.cols;
    }
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        std::vector<int> parts_copy = parts;
        back = [this, parts_copy, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            int off2 = 0;
            for (int p : parts_copy) {
                const MatType &P = value(p);
                if (needs(p)) {
                    MatType &gp = grad_ref(p);
                    for (int r = 0; r < g.rows; ++r) {
                        const T *gr = g.row_ptr(r) + off2;
                        T *gpr = gp.row_ptr(r);
                        for (int c = 0; c < P.cols; ++c) gpr[c] += gr[c];
                    }
                }
                off2 += P.cols;
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::gather_patches(int a, int kernel, int stride, int pad) {
    const MatType &A = value(a);
    require(kernel >= 1 && stride >= 1 && pad >= 0, PASR_ERR_INVALID_ARGUMENT,
            "gather_patches: bad geometry");
    int t_out = (A.rows + 2 * pad - kernel) / stride + 1;
    require(t_out >= 1, PASR_ERR_SHAPE, "gather_patches: input too short");
    MatType out(t_out, kernel * A.cols);
    for (int t = 0; t < t_out; ++t) {
        T *y = out.row_ptr(t);
        for (int j = 0; j < kernel; ++j) {
            int src = t * stride - pad + j;
            if (src >= 0 && src < A.rows) {
                const T *x = A.row_ptr(src);
                std::copy(x, x + A.cols, y + j * A.cols);
            }
        }
    }
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, kernel, stride, pad, id]() {
            const MatType &g = nodes_[static_cast<size_t>(id)].grad_buf;
            MatType &ga = grad_ref(a);
            int fcols = ga.cols;
            for (int t = 0; t < g.rows; ++t) {
                const T *gr = g.row_ptr(t);
                for (int j = 0; j < kernel; ++j) {
                    int src = t * stride - pad + j;
                    if (src >= 0 && src < ga.rows) {
                        T *dst = ga.row_ptr(src);
                        const T *part = gr + j * fcols;
                        for (int c = 0; c < fcols; ++c) dst[c] += part[c];
                    }
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::dropout(int a, double rate, Rng &rng) {
    require(rate >= 0.0 && rate < 1.0, PASR_ERR_INVALID_ARGUMENT, "dropout: bad rate");
    const MatType &A = value(a);
    // Inverted dropout as an elementwise product with a sampled constant.
    MatType mask(A.rows, A.cols);
    T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (auto &x : mask.v) x = rng.uniform() < rate ? T(0) : keep_scale;
    int m = input(std::move(mask));
    return mul(a, m);
}

template <typename T>
int TapeT<T>::sum_all(int a) {
    const MatType &A = value(a);
    MatType out(1, 1);
    T s = T(0);
    for (T x : A.v) s += x;
    out.v[0] = s;
    bool rg = needs(a);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        back = [this, a, id]() {
            T go = nodes_[static_cast<size_t>(id)].grad_buf.v[0];
            MatType &ga = grad_ref(a);
            for (T &x : ga.v) x += go;
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::cross_entropy_rows(int logits, const std::vector<int> &targets, double smoothing) {
    const MatType &L = value(logits);
    require(static_cast<int>(targets.size()) == L.rows, PASR_ERR_SHAPE,
            "cross_entropy_rows: one target per row required");
    require(smoothing >= 0.0 && smoothing < 1.0, PASR_ERR_INVALID_ARGUMENT,
            "cross_entropy_rows: bad smoothing");
    for (int t : targets) {
        require(t >= 0 && t < L.cols, PASR_ERR_INVALID_ARGUMENT,
                "cross_entropy_rows: target out of range");
    }
    MatType lp = log_softmax_rows_value(L);
    // Smoothed target: (1-eps) on the label plus eps spread uniformly over
    // the whole vocabulary.
    T eps = static_cast<T>(smoothing);
    T unif = eps / static_cast<T>(L.cols);
    T on = T(1) - eps + unif;
    MatType out(1, 1);
    T total = T(0);
    for (int r = 0; r < L.rows; ++r) {
        const T *lpr = lp.row_ptr(r);
        T row_loss = T(0);
        if (eps > T(0)) {
            for (int c = 0; c < L.cols; ++c) row_loss -= unif * lpr[c];
            row_loss -= (on - unif) * lpr[targets[static_cast<size_t>(r)]];
        } else {
            row_loss = -lpr[targets[static_cast<size_t>(r)]];
        }
        total += row_loss;
    }
    out.v[0] = total;
    bool rg = needs(logits);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        std::vector<int> tg = targets;
        back = [this, logits, tg, on, unif, id]() {
            T go = nodes_[static_cast<size_t>(id)].grad_buf.v[0];
            MatType p = softmax_rows_value(value(logits));
            MatType &gl = grad_ref(logits);
            for (int r = 0; r < p.rows; ++r) {
                const T *pr = p.row_ptr(r);
                T *gr = gl.row_ptr(r);
                int y = tg[static_cast<size_t>(r)];
                for (int c = 0; c < p.cols; ++c) {
                    T q = (c == y) ? on : unif;
                    gr[c] += go * (pr[c] - q);
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <typename T>
int TapeT<T>::ctc_nll(int logits, const std::vector<int> &targets) {
    const MatType &L = value(logits);
    require(!targets.empty(), PASR_ERR_INVALID_ARGUMENT, "ctc_nll: empty targets");
    for (int t : targets) {
        require(t != kBlankId && t >= 0 && t < L.cols, PASR_ERR_INVALID_ARGUMENT,
                "ctc_nll: target out of range or blank");
    }
    const T ninf = -std::numeric_limits<T>::infinity();
    std::vector<int> ext = extend_labels(targets);
    int S = static_cast<int>(ext.size());
    int Tn = L.rows;

    MatType lp = log_softmax_rows_value(L);
    // Forward lattice in log space.
    MatType alpha(Tn, S);
    alpha.fill(ninf);
    alpha(0, 0) = lp(0, ext[0]);
    if (S > 1) alpha(0, 1) = lp(0, ext[1]);
    for (int t = 1; t < Tn; ++t) {
        for (int s = 0; s < S; ++s) {
            T best = alpha(t - 1, s);
            if (s >= 1) best = log_add(best, alpha(t - 1, s - 1));
            if (s >= 2 && ext[s] != kBlankId && ext[s] != ext[s - 2]) {
                best = log_add(best, alpha(t - 1, s - 2));
            }
            if (best != ninf) alpha(t, s) = best + lp(t, ext[s]);
        }
    }
    T log_z = alpha(Tn - 1, S - 1);
    if (S > 1) log_z = log_add(log_z, alpha(Tn - 1, S - 2));

    MatType out(1, 1);
    if (log_z == ninf) {
        // No alignment fits in Tn frames; surface +inf and keep gradients
        // untouched so callers can skip the example.
        out.v[0] = std::numeric_limits<T>::infinity();
        return push(std::move(out), false, nullptr);
    }
    out.v[0] = -log_z;

    bool rg = needs(logits);
    std::function<void()> back;
    if (rg) {
        int id = static_cast<int>(nodes_.size());
        std::vector<int> tg = targets;
        back = [this, logits, tg, id, ninf]() {
            T go = nodes_[static_cast<size_t>(id)].grad_buf.v[0];
            const MatType &L2 = value(logits);
            std::vector<int> ext2 = extend_labels(tg);
            int S2 = static_cast<int>(ext2.size());
            int T2 = L2.rows;
            MatType lp2 = log_softmax_rows_value(L2);

            MatType al(T2, S2);
            al.fill(ninf);
            al(0, 0) = lp2(0, ext2[0]);
            if (S2 > 1) al(0, 1) = lp2(0, ext2[1]);
            for (int t = 1; t < T2; ++t) {
                for (int s = 0; s < S2; ++s) {
                    T acc = al(t - 1, s);
                    if (s >= 1) acc = log_add(acc, al(t - 1, s - 1));
                    if (s >= 2 && ext2[s] != kBlankId && ext2[s] != ext2[s - 2]) {
                        acc = log_add(acc, al(t - 1, s - 2));
                    }
                    if (acc != ninf) al(t, s) = acc + lp2(t, ext2[s]);
                }
            }
            T lz = al(T2 - 1, S2 - 1);
            if (S2 > 1) lz = log_add(lz, al(T2 - 1, S2 - 2));

            // Backward lattice; beta includes the emission at t, so the path
            // posterior through (t, s) is alpha + beta - lp(t, label).
            MatType be(T2, S2);
            be.fill(ninf);
            be(T2 - 1, S2 - 1) = lp2(T2 - 1, ext2[static_cast<size_t>(S2 - 1)]);
            if (S2 > 1) be(T2 - 1, S2 - 2) = lp2(T2 - 1, ext2[static_cast<size_t>(S2 - 2)]);
            for (int t = T2 - 2; t >= 0; --t) {
                for (int s = S2 - 1; s >= 0; --s) {
                    T acc = be(t + 1, s);
                    if (s + 1 < S2) acc = log_add(acc, be(t + 1, s + 1));
                    if (s + 2 < S2 && ext2[s + 2] != kBlankId && ext2[s + 2] != ext2[s]) {
                        acc = log_add(acc, be(t + 1, s + 2));
                    }
                    if (acc != ninf) be(t, s) = acc + lp2(t, ext2[s]);
                }
            }

            MatType p = softmax_rows_value(L2);
            MatType &gl = grad_ref(logits);
            for (int t = 0; t < T2; ++t) {
                // occupancy(t, k): posterior of emitting symbol k at time t.
                std::vector<T> occ(static_cast<size_t>(L2.cols), T(0));
                for (int s = 0; s < S2; ++s) {
                    T a2 = al(t, s);
                    T b2 = be(t, s);
                    if (a2 == ninf || b2 == ninf) continue;
                    occ[static_cast<size_t>(ext2[s])] +=
                        std::exp(a2 + b2 - lp2(t, ext2[s]) - lz);
                }
                const T *pt = p.row_ptr(t);
                T *gt = gl.row_ptr(t);
                for (int k = 0; k < L2.cols; ++k) {
                    gt[k] += go * (pt[k] - occ[static_cast<size_t>(k)]);
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template struct MatT<float>;
template struct MatT<double>;
template MatT<float> cast_mat<float, double>(const MatT<double> &);
template MatT<double> cast_mat<double, float>(const MatT<float> &);
template MatT<float> softmax_rows_value<float>(const MatT<float> &);
template MatT<double> softmax_rows_value<double>(const MatT<double> &);
template MatT<float> log_softmax_rows_value<float>(const MatT<float> &);
template MatT<double> log_softmax_rows_value<double>(const MatT<double> &);
template int argmax_row<float>(const MatT<float> &, int);
template int argmax_row<double>(const MatT<double> &, int);
template class ParamStoreT<float>;
template class ParamStoreT<double>;
template void adam_step<float>(ParamStoreT<float> &, double, const AdamConfig &, int64_t);
template void adam_step<double>(ParamStoreT<double> &, double, const AdamConfig &, int64_t);
template class TapeT<float>;
template class TapeT<double>;

}  // namespace pasr
