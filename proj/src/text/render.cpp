#include "textctrl/text/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace textctrl::text {
namespace {

constexpr float kPi = 3.14159265358979323846f;
constexpr float kLetterSpacing = 0.07f;  // em between glyphs

struct Seg {
    float ax, ay, bx, by;
};

struct PlacedGlyph {
    std::vector<Seg> segs;
    float x0, y0, x1, y1;  // em bbox expanded by ink radius
};

float seg_dist2(float px, float py, const Seg& s) {
    float vx = s.bx - s.ax, vy = s.by - s.ay;
    float wx = px - s.ax, wy = py - s.ay;
    float vv = vx * vx + vy * vy;
    float t = vv > 1e-12f ? (vx * wx + vy * wy) / vv : 0.f;
    t = std::clamp(t, 0.f, 1.f);
    float dx = wx - t * vx, dy = wy - t * vy;
    return dx * dx + dy * dy;
}

} // namespace

img::Image composite(const img::Image& bg, const img::Image& fg, const img::Image& mask) {
    TC_CHECK(bg.c == fg.c && bg.h == fg.h && bg.w == fg.w, "composite: fg/bg shape");
    TC_CHECK(mask.c == 1 && mask.h == bg.h && mask.w == bg.w, "composite: mask shape");
    img::Image out(bg.c, bg.h, bg.w);
    int hw = bg.h * bg.w;
    for (int ch = 0; ch < bg.c; ++ch) {
        const float* b = bg.px.data() + ch * hw;
        const float* f = fg.px.data() + ch * hw;
        const float* m = mask.px.data();
        float* o = out.px.data() + ch * hw;
        for (int i = 0; i < hw; ++i) o[i] = m[i] * f[i] + (1.f - m[i]) * b[i];
    }
    return out;
}

TextLayer rasterize_text(const Font& font, const std::string& text, int W, int H,
                         const TextGeom& geom, const TextInk& ink) {
    TC_CHECK(!text.empty(), "rasterize_text: empty text");
    TC_CHECK(W > 0 && H > 0, "rasterize_text: canvas dims");

    float rf = font.params().weight * 0.5f;  // fill radius, em

    // ---- layout: place glyph segments along the pen, track ink bbox
    std::vector<PlacedGlyph> placed;
    float pen = 0.f;
    float bx0 = std::numeric_limits<float>::max(), by0 = bx0;
    float bx1 = -bx0, by1 = -by0;
    for (char ch : text) {
        const GlyphOutline& g = font.glyph(ch);
        PlacedGlyph pg;
        pg.x0 = pg.y0 = std::numeric_limits<float>::max();
        pg.x1 = pg.y1 = -pg.x0;
        for (const auto& st : g.strokes) {
            for (size_t i = 0; i + 1 < st.pts.size(); ++i) {
                Seg s{st.pts[i][0] + pen, st.pts[i][1],
                      st.pts[i + 1][0] + pen, st.pts[i + 1][1]};
                pg.x0 = std::min({pg.x0, s.ax, s.bx});
                pg.x1 = std::max({pg.x1, s.ax, s.bx});
                pg.y0 = std::min({pg.y0, s.ay, s.by});
                pg.y1 = std::max({pg.y1, s.ay, s.by});
                pg.segs.push_back(s);
            }
        }
        pen += g.adv + kLetterSpacing;
        if (pg.segs.empty()) continue;  // space
        bx0 = std::min(bx0, pg.x0);
        by0 = std::min(by0, pg.y0);
        bx1 = std::max(bx1, pg.x1);
        by1 = std::max(by1, pg.y1);
        placed.push_back(std::move(pg));
    }
    TC_CHECK(!placed.empty(), "rasterize_text: no ink (whitespace-only text)");

    // nominal ink margin; outline width in em depends on the final scale, so
    // fit with the requested size first and fold the ring into the margin
    float s = geom.font_size;
    TC_CHECK(s > 1.f, "rasterize_text: font_size");
    for (int pass = 0; pass < 2; ++pass) {
        float ro = ink.outline_px > 0 ? ink.outline_px / s : 0.f;
        float margin = rf + ro + 0.02f;
        float ew = (bx1 - bx0) + 2 * margin, eh = (by1 - by0) + 2 * margin;
        float th = geom.rotation_deg * kPi / 180.f;
        float rw = ew * s * std::fabs(std::cos(th)) + eh * s * std::fabs(std::sin(th));
        float rh = ew * s * std::fabs(std::sin(th)) + eh * s * std::fabs(std::cos(th));
        float availW = float(W) - 2 * geom.padding - 2;
        float availH = float(H) - 2 * geom.padding - 2;
        TC_CHECK(availW > 4 && availH > 4, "rasterize_text: padding leaves no room");
        float k = std::min({1.f, availW / rw, availH / rh});
        s *= k;
        if (k >= 1.f) break;  // second pass only refines the outline margin
    }
    float ro = ink.outline_px > 0 ? ink.outline_px / s : 0.f;
    float margin = rf + ro + 0.02f;
    float ex0 = bx0 - margin, ey0 = by0 - margin;
    float ex1 = bx1 + margin, ey1 = by1 + margin;

    // quad: rotate the scaled ink box about the canvas anchor, add clamped jitter
    float cx = geom.center_x >= 0 ? geom.center_x : float(W) * 0.5f;
    float cy = geom.center_y >= 0 ? geom.center_y : float(H) * 0.5f;
    float hw = (ex1 - ex0) * s * 0.5f, hh = (ey1 - ey0) * s * 0.5f;
    float th = geom.rotation_deg * kPi / 180.f;
    float ct = std::cos(th), st = std::sin(th);
    std::array<double, 8> q{};
    const float sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};  // cw from TL
    for (int i = 0; i < 4; ++i) {
        float x = sx[i] * hw, y = sy[i] * hh;
        float rx = cx + x * ct - y * st + geom.corner_jitter[size_t(2 * i)];
        float ry = cy + x * st + y * ct + geom.corner_jitter[size_t(2 * i) + 1];
        q[size_t(2 * i)] = std::clamp(rx, geom.padding, float(W - 1) - geom.padding);
        q[size_t(2 * i) + 1] = std::clamp(ry, geom.padding, float(H - 1) - geom.padding);
    }
    img::Quad quad{q};
    if (!quad.valid()) {
        // jitter collapsed the quad; fall back to the plain rotated box
        for (int i = 0; i < 4; ++i) {
            float x = sx[i] * hw, y = sy[i] * hh;
            q[size_t(2 * i)] = std::clamp(cx + x * ct - y * st, geom.padding, float(W - 1) - geom.padding);
            q[size_t(2 * i) + 1] = std::clamp(cy + x * st + y * ct, geom.padding, float(H - 1) - geom.padding);
        }
        quad = img::Quad{q};
        TC_CHECK(quad.valid(), "rasterize_text: degenerate placement");
    }

    // canvas -> em homography pins quad corners to the expanded ink box
    std::array<double, 8> dst{ex0, ey0, ex1, ey0, ex1, ey1, ex0, ey1};
    img::Homography inv = img::Homography::from_points(quad.xy, dst);

    TextLayer out;
    out.color = img::Image(3, H, W);
    out.mask = img::Image(1, H, W);
    out.quad = quad;
    out.scale_px = s;

    double qx0 = quad.x(0), qx1 = qx0, qy0 = quad.y(0), qy1 = qy0;
    for (int i = 1; i < 4; ++i) {
        qx0 = std::min(qx0, quad.x(i));
        qx1 = std::max(qx1, quad.x(i));
        qy0 = std::min(qy0, quad.y(i));
        qy1 = std::max(qy1, quad.y(i));
    }
    int px0 = std::max(0, int(std::floor(qx0)));
    int px1 = std::min(W - 1, int(std::ceil(qx1)));
    int py0 = std::max(0, int(std::floor(qy0)));
    int py1 = std::min(H - 1, int(std::ceil(qy1)));
    float rf2 = rf * rf, rt = rf + ro, rt2 = rt * rt;
    for (int y = py0; y <= py1; ++y) {
        for (int x = px0; x <= px1; ++x) {
            double ex, ey;
            inv.apply(double(x), double(y), ex, ey);
            float exf = float(ex), eyf = float(ey);
            float best = std::numeric_limits<float>::max();
            for (const auto& pg : placed) {
                if (exf < pg.x0 - rt || exf > pg.x1 + rt || eyf < pg.y0 - rt || eyf > pg.y1 + rt)
                    continue;
                for (const auto& sg : pg.segs) {
                    float d2 = seg_dist2(exf, eyf, sg);
                    if (d2 < best) best = d2;
                }
                if (best <= rf2) break;  // already fill ink
            }
            if (best <= rt2) {
                bool fill = best <= rf2;
                const auto& col = fill ? ink.fill : ink.outline;
                int hw_ = H * W;
                out.mask.px[y * W + x] = 1.f;
                for (int ch = 0; ch < 3; ++ch) out.color.px[ch * hw_ + y * W + x] = col[ch];
            }
        }
    }
    return out;
}

img::Image render_black_on_white(const Font& font, const std::string& text,
                                 int W, int H, float padding) {
    TextGeom geom;
    geom.font_size = float(H);  // fit logic shrinks to the padded box
    geom.padding = padding;
    TextInk ink;  // black fill, no outline
    TextLayer layer = rasterize_text(font, text, W, H, geom, ink);
    img::Image white(3, H, W, 1.f);
    return composite(white, layer.color, layer.mask);
}

} // namespace textctrl::text
