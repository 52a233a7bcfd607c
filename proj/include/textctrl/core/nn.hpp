#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "textctrl/core/ops.hpp"
#include "textctrl/core/tape.hpp"

// Layer structs. Each one registers its params in a ParamStore at build time
// and pulls them onto the tape at call time, so the same model object serves
// training and checkpoint-loaded inference.
namespace textctrl::nn {

namespace init {

inline ParamStore::InitFn zeros() {
    return [](Tensor& t, Rng&) { t.zero_(); };
}
inline ParamStore::InitFn ones() {
    return [](Tensor& t, Rng&) { t.fill_(1.0f); };
}
inline ParamStore::InitFn constant(float v) {
    return [v](Tensor& t, Rng&) { t.fill_(v); };
}
inline ParamStore::InitFn normal(float stddev) {
    return [stddev](Tensor& t, Rng& r) {
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = stddev * r.normal_f();
    };
}
inline ParamStore::InitFn uniform(float a) {
    return [a](Tensor& t, Rng& r) {
        for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = float(r.uniform(-a, a));
    };
}
inline ParamStore::InitFn xavier(int fan_in, int fan_out) {
    return uniform(std::sqrt(6.0f / float(fan_in + fan_out)));
}
inline ParamStore::InitFn kaiming(int fan_in) {
    return normal(std::sqrt(2.0f / float(fan_in)));
}

} // namespace init

struct Linear {
    Param* w = nullptr;
    Param* b = nullptr;

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int din, int dout, uint64_t seed) {
        w = &ps.create(name + ".w", Shape({din, dout}), init::xavier(din, dout), seed);
        b = &ps.create(name + ".b", Shape({dout}), init::zeros(), seed);
    }
    Var operator()(Tape& t, Var x) const {
        return ops::add_row(ops::matmul(x, t.param(*w)), t.param(*b));
    }
};

struct Conv2d {
    Param* w = nullptr;
    Param* b = nullptr;
    int stride = 1, pad = 0;

    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride_,
           int pad_, uint64_t seed)
        : stride(stride_), pad(pad_) {
        w = &ps.create(name + ".w", Shape({cout, cin, k, k}), init::kaiming(cin * k * k), seed);
        b = &ps.create(name + ".b", Shape({cout}), init::zeros(), seed);
    }
    Var operator()(Tape& t, Var x) const {
        return ops::conv2d(x, t.param(*w), t.param(*b), stride, pad);
    }
    // zeroed output head: the block contributes nothing until trained
    void zero_() {
        w->value.zero_();
        b->value.zero_();
    }
};

struct LayerNorm {
    Param* g = nullptr;
    Param* b = nullptr;

    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& name, int d, uint64_t seed) {
        g = &ps.create(name + ".g", Shape({d}), init::ones(), seed);
        b = &ps.create(name + ".b", Shape({d}), init::zeros(), seed);
    }
    Var operator()(Tape& t, Var x) const {
        return ops::layernorm(x, t.param(*g), t.param(*b));
    }
};

struct GroupNorm {
    Param* g = nullptr;
    Param* b = nullptr;
    int groups = 1;

    GroupNorm() = default;
    GroupNorm(ParamStore& ps, const std::string& name, int channels, int groups_, uint64_t seed)
        : groups(groups_) {
        g = &ps.create(name + ".g", Shape({channels}), init::ones(), seed);
        b = &ps.create(name + ".b", Shape({channels}), init::zeros(), seed);
    }
    Var operator()(Tape& t, Var x) const {
        return ops::groupnorm(x, groups, t.param(*g), t.param(*b));
    }
};

// scaled dot-product over token rows; q:[Tq,d], k/v:[Tk,d]
inline Var attention_rows(Var q, Var k, Var v, float scale) {
    Var scores = ops::smul(ops::matmul_nt(q, k), scale);
    return ops::matmul(ops::softmax_rows(scores), v);
}

// Per-site controller for attention K/V rewiring during guided sampling.
// Record captures each site's K/V in call order; Blend mixes the captured
// source K/V into the current pass with weight lambda (mu = 1 - lambda).
struct AttnCtrl {
    enum class Mode { Off, Record, Blend };
    Mode mode = Mode::Off;
    float lambda = 0.0f;
    std::vector<Tensor> ks, vs;
    size_t cursor = 0;

    void start_record() {
        mode = Mode::Record;
        ks.clear();
        vs.clear();
        cursor = 0;
    }
    void start_blend(float l) {
        mode = Mode::Blend;
        lambda = l;
        cursor = 0;
    }
    void stop() { mode = Mode::Off; }
};

struct Mha {
    Linear wq, wk, wv, wo;
    int d = 0, heads = 1;

    Mha() = default;
    Mha(ParamStore& ps, const std::string& name, int d_, int heads_, uint64_t seed)
        : wq(ps, name + ".q", d_, d_, seed),
          wk(ps, name + ".k", d_, d_, seed),
          wv(ps, name + ".v", d_, d_, seed),
          wo(ps, name + ".o", d_, d_, seed),
          d(d_), heads(heads_) {
        TC_CHECK(d_ % heads_ == 0, "mha: d not divisible by heads");
    }

    // xq:[Tq,d], xkv:[Tk,d]; self-attention when xq==xkv
    Var operator()(Tape& t, Var xq, Var xkv, AttnCtrl* ctrl = nullptr) const {
        Var q = wq(t, xq);
        Var k = wk(t, xkv);
        Var v = wv(t, xkv);
        if (ctrl && ctrl->mode == AttnCtrl::Mode::Record) {
            ctrl->ks.push_back(k.val().clone());
            ctrl->vs.push_back(v.val().clone());
        } else if (ctrl && ctrl->mode == AttnCtrl::Mode::Blend) {
            TC_CHECK(ctrl->cursor < ctrl->ks.size(), "attn ctrl: more sites than recorded");
            Var ks = t.constant(ctrl->ks[ctrl->cursor]);
            Var vs = t.constant(ctrl->vs[ctrl->cursor]);
            ++ctrl->cursor;
            float l = ctrl->lambda, m = 1.0f - l;
            k = ops::add(ops::smul(ks, l), ops::smul(k, m));
            v = ops::add(ops::smul(vs, l), ops::smul(v, m));
        }
        int dh = d / heads;
        float scale = 1.0f / std::sqrt(float(dh));
        std::vector<Var> outs;
        outs.reserve(size_t(heads));
        for (int h = 0; h < heads; ++h) {
            Var qh = ops::slice_cols(q, h * dh, (h + 1) * dh);
            Var kh = ops::slice_cols(k, h * dh, (h + 1) * dh);
            Var vh = ops::slice_cols(v, h * dh, (h + 1) * dh);
            outs.push_back(attention_rows(qh, kh, vh, scale));
        }
        return wo(t, ops::concat_cols(outs));
    }
};

struct Ffn {
    Linear a, b;

    Ffn() = default;
    Ffn(ParamStore& ps, const std::string& name, int d, int hidden, uint64_t seed)
        : a(ps, name + ".a", d, hidden, seed), b(ps, name + ".b", hidden, d, seed) {}
    Var operator()(Tape& t, Var x) const { return b(t, ops::gelu(a(t, x))); }
};

// pre-norm transformer encoder block
struct TransformerBlock {
    LayerNorm ln1, ln2;
    Mha attn;
    Ffn ffn;

    TransformerBlock() = default;
    TransformerBlock(ParamStore& ps, const std::string& name, int d, int heads, uint64_t seed)
        : ln1(ps, name + ".ln1", d, seed),
          ln2(ps, name + ".ln2", d, seed),
          attn(ps, name + ".attn", d, heads, seed),
          ffn(ps, name + ".ffn", d, 4 * d, seed) {}

    Var operator()(Tape& t, Var x, AttnCtrl* ctrl = nullptr) const {
        Var h = ln1(t, x);
        x = ops::add(x, attn(t, h, h, ctrl));
        return ops::add(x, ffn(t, ln2(t, x)));
    }
};

} // namespace textctrl::nn
