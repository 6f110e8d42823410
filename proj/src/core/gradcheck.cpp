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

#include "core/gradcheck.hpp"

#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

namespace pasr {

namespace {

using DMat = MatT<double>;
using DTape = TapeT<double>;
using DStore = ParamStoreT<double>;

constexpr double kStep = 1e-5;
constexpr double kDenomFloor = 1e-3;

struct Harness {
    bool verbose = false;
    double tol = 1e-4;
    int checks = 0;
    double max_rel = 0.0;
    std::string worst;
    bool ok = true;

    void check(const std::string &name, DStore &store,
               const std::function<int(DTape &)> &build) {
        DTape tape;
        int loss = build(tape);
        store.zero_grads();
        tape.backward(loss);
        std::vector<DMat> grads;
        grads.reserve(store.size());
        for (size_t i = 0; i < store.size(); ++i) grads.push_back(store.at(i).grad);

        double scenario_max = 0.0;
        for (size_t pi = 0; pi < store.size(); ++pi) {
            ParamT<double> &p = store.at(pi);
            for (size_t k = 0; k < p.value.v.size(); ++k) {
                double old = p.value.v[k];
                p.value.v[k] = old + kStep;
                double fp;
                {
                    DTape t;
                    t.set_grad_enabled(false);
                    fp = t.scalar_value(build(t));
                }
                p.value.v[k] = old - kStep;
                double fm;
                {
                    DTape t;
                    t.set_grad_enabled(false);
                    fm = t.scalar_value(build(t));
                }
                p.value.v[k] = old;
                double num = (fp - fm) / (2.0 * kStep);
                double ana = grads[pi].v[k];
                double rel = std::fabs(num - ana) /
                             std::max({std::fabs(num), std::fabs(ana), kDenomFloor});
                ++checks;
                if (rel > scenario_max) scenario_max = rel;
                if (rel > max_rel) {
                    max_rel = rel;
                    worst = cat(name, "/", p.name, "[", k, "]");
                }
            }
        }
        if (scenario_max > tol) ok = false;
        if (verbose) {
            std::printf("gradcheck %-18s max_rel %.3e %s\n", name.c_str(), scenario_max,
                        scenario_max <= tol ? "ok" : "FAIL");
        }
    }
};

DMat randn(Rng &rng, int rows, int cols, double sd = 1.0) {
    return randn_mat<double>(rows, cols, sd, rng);
}

// loss = sum(W (.) f(X)) with a fixed random W, so every output element gets
// its own well-conditioned weight.
int weighted_sum(DTape &tape, int node, const DMat &w) {
    return tape.sum_all(tape.mul(node, tape.constant(w)));
}

}  // namespace

GradcheckResult run_gradcheck(uint64_t seed, bool verbose, double tol) {
    Rng rng(mix_seed(seed, fnv1a("gradcheck")));
    Harness h;
    h.verbose = verbose;
    h.tol = tol;

    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 4));
        ParamT<double> &b = s.create("b", randn(rng, 4, 2));
        DMat w = randn(rng, 3, 2);
        h.check("matmul", s,
                [&](DTape &t) { return weighted_sum(t, t.matmul(t.param(a), t.param(b)), w); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 4));
        ParamT<double> &b = s.create("b", randn(rng, 2, 4));
        DMat w = randn(rng, 3, 2);
        h.check("matmul_nt", s, [&](DTape &t) {
            return weighted_sum(t, t.matmul_nt(t.param(a), t.param(b)), w);
        });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 5));
        ParamT<double> &b = s.create("b", randn(rng, 3, 5));
        DMat w = randn(rng, 3, 5);
        h.check("add_mul_scale", s, [&](DTape &t) {
            int x = t.add(t.param(a), t.scale(t.mul(t.param(a), t.param(b)), 0.7));
            return weighted_sum(t, x, w);
        });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 4, 3));
        ParamT<double> &b = s.create("bias", randn(rng, 1, 3));
        DMat w = randn(rng, 4, 3);
        h.check("add_row_bias", s, [&](DTape &t) {
            return weighted_sum(t, t.add_row_bias(t.param(a), t.param(b)), w);
        });
    }
    {
        DStore s;
        DMat init = randn(rng, 3, 4);
        // Keep values away from the relu kink so finite differences are valid.
        for (double &x : init.v) x += x >= 0.0 ? 0.2 : -0.2;
        ParamT<double> &a = s.create("a", init);
        DMat w = randn(rng, 3, 4);
        h.check("relu", s, [&](DTape &t) { return weighted_sum(t, t.relu(t.param(a)), w); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 5));
        DMat w = randn(rng, 3, 5);
        h.check("softmax_rows", s,
                [&](DTape &t) { return weighted_sum(t, t.softmax_rows(t.param(a)), w); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 6));
        ParamT<double> &g = s.create("gain", randn(rng, 1, 6));
        ParamT<double> &b = s.create("bias", randn(rng, 1, 6));
        DMat w = randn(rng, 3, 6);
        h.check("layer_norm", s, [&](DTape &t) {
            return weighted_sum(t, t.layer_norm(t.param(a), t.param(g), t.param(b)), w);
        });
    }
    {
        DStore s;
        ParamT<double> &table = s.create("table", randn(rng, 7, 4));
        DMat w = randn(rng, 4, 4);
        // A repeated id exercises the scatter-add in the backward pass.
        std::vector<int> ids = {2, 0, 5, 2};
        h.check("embed_rows", s,
                [&](DTape &t) { return weighted_sum(t, t.embed_rows(t.param(table), ids), w); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 3, 8));
        DMat w = randn(rng, 3, 5);
        h.check("slice_concat", s, [&](DTape &t) {
            int left = t.slice_cols(t.param(a), 0, 2);
            int right = t.slice_cols(t.param(a), 5, 8);
            return weighted_sum(t, t.concat_cols({left, right}), w);
        });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 7, 3));
        DMat w = randn(rng, 4, 9);
        h.check("gather_patches", s, [&](DTape &t) {
            return weighted_sum(t, t.gather_patches(t.param(a), 3, 2, 1), w);
        });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("a", randn(rng, 4, 6));
        DMat w = randn(rng, 4, 6);
        uint64_t drop_seed = rng.next_u64();
        h.check("dropout", s, [&](DTape &t) {
            // Fresh stream per rebuild keeps the mask identical across the
            // perturbed forwards.
            Rng local(drop_seed);
            return weighted_sum(t, t.dropout(t.param(a), 0.4, local), w);
        });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("logits", randn(rng, 4, 6));
        std::vector<int> targets = {1, 3, 5, 0};
        h.check("cross_entropy", s,
                [&](DTape &t) { return t.cross_entropy_rows(t.param(a), targets, 0.1); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("logits", randn(rng, 6, 5));
        std::vector<int> targets = {2, 4, 2};
        h.check("ctc_nll", s, [&](DTape &t) { return t.ctc_nll(t.param(a), targets); });
    }
    {
        DStore s;
        ParamT<double> &a = s.create("logits", randn(rng, 5, 4));
        // Repeated label: the lattice needs the separating blank.
        std::vector<int> targets = {3, 3};
        h.check("ctc_repeat", s, [&](DTape &t) { return t.ctc_nll(t.param(a), targets); });
    }

    {
        // The complete model under the joint loss, every parameter scalar.
        ModelConfig mc;
        mc.d_model = 16;
        mc.heads = 2;
        mc.enc_layers = 2;
        mc.dec_layers = 1;
        mc.ff_dim = 32;
        mc.dropout = 0.0;
        mc.ctc_weight = 0.3;
        mc.label_smoothing = 0.1;
        AsrModelT<double> model(mc, 12, 8, mix_seed(seed, fnv1a("tiny-model")));
        DMat features = randn(rng, 18, 8, 0.5);
        std::vector<int> tokens = {2, 5, 3};
        h.check("tiny_model", model.store(), [&](DTape &t) {
            auto loss = model.joint_loss(t, features, tokens, true, nullptr);
            require(!loss.ctc_impossible, PASR_ERR_RUNTIME, "tiny model ctc infeasible");
            return loss.joint;
        });
    }

    GradcheckResult result;
    result.checks = h.checks;
    result.max_rel_err = h.max_rel;
    result.worst = h.worst;
    result.ok = h.ok;
    return result;
}

}  // namespace pasr
