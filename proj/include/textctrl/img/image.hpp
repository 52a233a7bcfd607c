#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "textctrl/core/tensor.hpp"

namespace textctrl::img {

// Planar CHW float image, values in [0,1]. c is 1 (mask/gray) or 3 (RGB).
struct Image {
    int c = 0, h = 0, w = 0;
    std::vector<float> px;

    Image() = default;
    Image(int c_, int h_, int w_, float fill = 0.0f)
        : c(c_), h(h_), w(w_), px(size_t(c_) * h_ * w_, fill) {}

    bool empty() const { return px.empty(); }
    int64_t numel() const { return int64_t(c) * h * w; }

    float& at(int ch, int y, int x) { return px[(size_t(ch) * h + y) * w + x]; }
    float at(int ch, int y, int x) const { return px[(size_t(ch) * h + y) * w + x]; }

    float* plane(int ch) { return px.data() + size_t(ch) * h * w; }
    const float* plane(int ch) const { return px.data() + size_t(ch) * h * w; }

    Tensor to_tensor() const {  // [C,H,W]
        return Tensor::from(Shape({c, h, w}), px);
    }
    static Image from_tensor(const Tensor& t) {
        TC_CHECK(t.shape().ndim() == 3, "image tensor must be [C,H,W], got " + t.shape().str());
        Image im(t.shape()[0], t.shape()[1], t.shape()[2]);
        std::copy(t.data(), t.data() + t.numel(), im.px.begin());
        return im;
    }
};

inline Image luminance(const Image& rgb) {
    TC_CHECK(rgb.c == 3, "luminance: need RGB");
    Image g(1, rgb.h, rgb.w);
    for (int i = 0; i < rgb.h * rgb.w; ++i)
        g.px[size_t(i)] = 0.299f * rgb.px[size_t(i)] + 0.587f * rgb.px[size_t(i) + size_t(rgb.h) * rgb.w] +
                          0.114f * rgb.px[size_t(i) + 2 * size_t(rgb.h) * rgb.w];
    return g;
}

inline Image gray_to_rgb(const Image& g) {
    TC_CHECK(g.c == 1, "gray_to_rgb: need 1 channel");
    Image rgb(3, g.h, g.w);
    for (int ch = 0; ch < 3; ++ch)
        std::copy(g.px.begin(), g.px.end(), rgb.px.begin() + size_t(ch) * g.h * g.w);
    return rgb;
}

// separate resize from the autograd op: plain bilinear with half-pixel centers
Image resize_bilinear(const Image& src, int h2, int w2);

inline bool bit_equal(const Image& a, const Image& b) {
    return a.c == b.c && a.h == b.h && a.w == b.w && a.px == b.px;
}

// 8-bit quantization used by PNG I/O; exposed so in-memory checks can mirror files
inline uint8_t to_byte(float v) {
    return uint8_t(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void save_png(const std::string& path, const Image& im);
Image load_png(const std::string& path);

} // namespace textctrl::img
