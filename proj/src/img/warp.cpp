#include "textctrl/img/warp.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace textctrl::img {

double Quad::area() const {
    double s = 0;
    for (int i = 0; i < 4; ++i) {
        int j = (i + 1) % 4;
        s += x(i) * y(j) - x(j) * y(i);
    }
    return std::fabs(0.5 * s);
}

bool Quad::valid() const {
    if (area() < 4.0) return false;
    // clockwise in image coords => every consecutive cross product >= 0,
    // and strict somewhere (convexity + orientation in one sweep)
    bool strict = false;
    for (int i = 0; i < 4; ++i) {
        int j = (i + 1) % 4, k = (i + 2) % 4;
        double ax = x(j) - x(i), ay = y(j) - y(i);
        double bx = x(k) - x(j), by = y(k) - y(j);
        double cr = ax * by - ay * bx;
        if (cr < -1e-9) return false;
        if (cr > 1e-9) strict = true;
    }
    return strict;
}

bool Quad::contains(double px, double py) const {
    for (int i = 0; i < 4; ++i) {
        int j = (i + 1) % 4;
        double cr = (x(j) - x(i)) * (py - y(i)) - (y(j) - y(i)) * (px - x(i));
        if (cr < 0) return false;  // clockwise: inside points have cr >= 0
    }
    return true;
}

void Homography::apply(double x, double y, double& u, double& v) const {
    double w = h[6] * x + h[7] * y + h[8];
    u = (h[0] * x + h[1] * y + h[2]) / w;
    v = (h[3] * x + h[4] * y + h[5]) / w;
}

Homography Homography::inverse() const {
    Eigen::Matrix3d m;
    m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    Eigen::Matrix3d inv = m.inverse();
    Homography out;
    for (int i = 0; i < 9; ++i) out.h[size_t(i)] = inv(i / 3, i % 3);
    return out;
}

Homography Homography::from_points(const std::array<double, 8>& src,
                                   const std::array<double, 8>& dst) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        double x = src[size_t(2 * i)], y = src[size_t(2 * i) + 1];
        double u = dst[size_t(2 * i)], v = dst[size_t(2 * i) + 1];
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    Eigen::Matrix<double, 8, 1> sol = a.fullPivLu().solve(b);
    Homography out;
    for (int i = 0; i < 8; ++i) out.h[size_t(i)] = sol(i);
    out.h[8] = 1.0;
    return out;
}

namespace {

float sample_bilinear(const Image& im, int c, double x, double y) {
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto cl = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    int xa = cl(x0, im.w - 1), xb = cl(x0 + 1, im.w - 1);
    int ya = cl(y0, im.h - 1), yb = cl(y0 + 1, im.h - 1);
    return float((1 - fy) * ((1 - fx) * im.at(c, ya, xa) + fx * im.at(c, ya, xb)) +
                 fy * ((1 - fx) * im.at(c, yb, xa) + fx * im.at(c, yb, xb)));
}

} // namespace

Image crop_perspective(const Image& full, const Quad& quad, int out_w, int out_h) {
    TC_CHECK(quad.valid(), "crop_perspective: degenerate quad");
    TC_CHECK(out_w >= 2 && out_h >= 2, "crop_perspective: output too small");
    std::array<double, 8> rect = {0, 0, double(out_w - 1), 0, double(out_w - 1),
                                  double(out_h - 1), 0, double(out_h - 1)};
    Homography h = Homography::from_points(rect, quad.xy);
    Image out(full.c, out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double u, v;
            h.apply(double(x), double(y), u, v);
            for (int c = 0; c < full.c; ++c) out.at(c, y, x) = sample_bilinear(full, c, u, v);
        }
    return out;
}

Image paste_back(const Image& full, const Quad& quad, const Image& patch) {
    TC_CHECK(quad.valid(), "paste_back: degenerate quad");
    std::array<double, 8> rect = {0, 0, double(patch.w - 1), 0, double(patch.w - 1),
                                  double(patch.h - 1), 0, double(patch.h - 1)};
    Homography quad_to_patch = Homography::from_points(quad.xy, rect);
    Image out = full;
    int x0 = full.w, x1 = 0, y0 = full.h, y1 = 0;
    for (int i = 0; i < 4; ++i) {
        x0 = std::min(x0, int(std::floor(quad.x(i))));
        x1 = std::max(x1, int(std::ceil(quad.x(i))));
        y0 = std::min(y0, int(std::floor(quad.y(i))));
        y1 = std::max(y1, int(std::ceil(quad.y(i))));
    }
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, full.w - 1);
    y1 = std::min(y1, full.h - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!quad.contains(double(x), double(y))) continue;
            double u, v;
            quad_to_patch.apply(double(x), double(y), u, v);
            for (int c = 0; c < full.c; ++c) out.at(c, y, x) = sample_bilinear(patch, c, u, v);
        }
    return out;
}

} // namespace textctrl::img
