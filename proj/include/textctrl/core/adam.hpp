#pragma once

#include <cmath>

#include "textctrl/core/tape.hpp"

namespace textctrl {

struct AdamConfig {
    float lr = 1e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float clip = 0.0f;  // global grad-norm clip, 0 = off
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    int64_t steps() const { return step_; }
    void set_steps(int64_t s) { step_ = s; }  // checkpoint resume
    void set_lr(float lr) { cfg_.lr = lr; }
    float lr() const { return cfg_.lr; }

    // One update over every trainable param with an accumulated grad.
    // Returns the pre-clip global gradient norm.
    float step(ParamStore& ps) {
        ++step_;
        double sq = 0;
        for (auto& [name, p] : ps) {
            if (!p.trainable || !p.grad.defined()) continue;
            const float* g = p.grad.data();
            for (int64_t i = 0; i < p.grad.numel(); ++i) sq += double(g[i]) * g[i];
        }
        float norm = float(std::sqrt(sq));
        float scale = 1.0f;
        if (cfg_.clip > 0.0f && norm > cfg_.clip) scale = cfg_.clip / norm;

        float bc1 = 1.0f - std::pow(cfg_.beta1, float(step_));
        float bc2 = 1.0f - std::pow(cfg_.beta2, float(step_));
        for (auto& [name, p] : ps) {
            if (!p.trainable || !p.grad.defined()) continue;
            if (!p.adam_m.defined()) {
                p.adam_m = Tensor(p.value.shape());
                p.adam_v = Tensor(p.value.shape());
            }
            float* w = p.value.data();
            const float* g = p.grad.data();
            float* m = p.adam_m.data();
            float* v = p.adam_v.data();
            for (int64_t i = 0; i < p.value.numel(); ++i) {
                float gi = g[i] * scale;
                m[i] = cfg_.beta1 * m[i] + (1.0f - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0f - cfg_.beta2) * gi * gi;
                float mh = m[i] / bc1;
                float vh = v[i] / bc2;
                w[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
            }
        }
        return norm;
    }

private:
    AdamConfig cfg_;
    int64_t step_ = 0;
};

} // namespace textctrl
