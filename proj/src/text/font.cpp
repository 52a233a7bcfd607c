#include "textctrl/text/font.hpp"

#include <cmath>
#include <map>

namespace textctrl::text {
namespace {

constexpr float kPi = 3.14159265358979323846f;

struct Builder {
    GlyphOutline g;
    Builder& adv(float a) { g.adv = a; return *this; }
    Builder& poly(std::vector<std::array<float, 2>> p) {
        g.strokes.push_back({std::move(p)});
        return *this;
    }
    // circular/elliptic arc sampled as a polyline; angles in degrees,
    // 0 points +x and increasing angle sweeps through +y (down on screen)
    Builder& arc(float cx, float cy, float rx, float ry, float a0, float a1) {
        int n = std::max(6, int(std::fabs(a1 - a0) / 24.f));
        Stroke s;
        for (int i = 0; i <= n; ++i) {
            float a = (a0 + (a1 - a0) * float(i) / float(n)) * kPi / 180.f;
            s.pts.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
        }
        g.strokes.push_back(std::move(s));
        return *this;
    }
    Builder& circle(float cx, float cy, float r) { return arc(cx, cy, r, r, 0, 360); }
    Builder& dot(float x, float y) { return poly({{x, y - 0.02f}, {x, y + 0.03f}}); }
};

std::map<char, GlyphOutline> build_base_glyphs() {
    std::map<char, GlyphOutline> m;
    auto put = [&](char c, const Builder& b) { m[c] = b.g; };

    // ---- uppercase, cap height 0..1, default advance 0.72
    float T = 0.f, B = 1.f;
    put('A', Builder{}.adv(0.70f)
                 .poly({{0.00f, B}, {0.30f, T}, {0.60f, B}})
                 .poly({{0.13f, 0.62f}, {0.47f, 0.62f}}));
    put('B', Builder{}.adv(0.70f)
                 .poly({{0, T}, {0, B}})
                 .poly({{0, T}, {0.40f, T}, {0.52f, 0.10f}, {0.52f, 0.36f}, {0.40f, 0.47f}, {0, 0.47f}})
                 .poly({{0, 0.47f}, {0.44f, 0.47f}, {0.58f, 0.59f}, {0.58f, 0.86f}, {0.44f, B}, {0, B}}));
    put('C', Builder{}.adv(0.70f).arc(0.32f, 0.50f, 0.30f, 0.50f, 38, 322));
    put('D', Builder{}.adv(0.72f)
                 .poly({{0, T}, {0, B}})
                 .poly({{0, T}, {0.32f, T}, {0.55f, 0.18f}, {0.55f, 0.82f}, {0.32f, B}, {0, B}}));
    put('E', Builder{}.adv(0.66f)
                 .poly({{0.55f, T}, {0, T}, {0, B}, {0.55f, B}})
                 .poly({{0, 0.50f}, {0.44f, 0.50f}}));
    put('F', Builder{}.adv(0.62f)
                 .poly({{0.55f, T}, {0, T}, {0, B}})
                 .poly({{0, 0.50f}, {0.42f, 0.50f}}));
    put('G', Builder{}.adv(0.74f)
                 .arc(0.32f, 0.50f, 0.30f, 0.50f, 38, 318)
                 .poly({{0.62f, 0.58f}, {0.34f, 0.58f}})
                 .poly({{0.62f, 0.58f}, {0.62f, 0.84f}}));
    put('H', Builder{}.adv(0.72f)
                 .poly({{0, T}, {0, B}})
                 .poly({{0.60f, T}, {0.60f, B}})
                 .poly({{0, 0.50f}, {0.60f, 0.50f}}));
    put('I', Builder{}.adv(0.34f).poly({{0.11f, T}, {0.11f, B}}));
    put('J', Builder{}.adv(0.56f)
                 .poly({{0.46f, T}, {0.46f, 0.78f}})
                 .arc(0.24f, 0.78f, 0.22f, 0.22f, 0, 160));
    put('K', Builder{}.adv(0.68f)
                 .poly({{0, T}, {0, B}})
                 .poly({{0.56f, T}, {0.00f, 0.56f}})
                 .poly({{0.20f, 0.42f}, {0.58f, B}}));
    put('L', Builder{}.adv(0.60f).poly({{0, T}, {0, B}, {0.54f, B}}));
    put('M', Builder{}.adv(0.86f)
                 .poly({{0, B}, {0, T}, {0.36f, 0.62f}, {0.72f, T}, {0.72f, B}}));
    put('N', Builder{}.adv(0.74f).poly({{0, B}, {0, T}, {0.62f, B}, {0.62f, T}}));
    put('O', Builder{}.adv(0.76f).arc(0.33f, 0.50f, 0.31f, 0.50f, 0, 360));
    put('P', Builder{}.adv(0.66f)
                 .poly({{0, B}, {0, T}, {0.42f, T}, {0.56f, 0.12f}, {0.56f, 0.38f}, {0.42f, 0.50f}, {0, 0.50f}}));
    put('Q', Builder{}.adv(0.78f)
                 .arc(0.33f, 0.50f, 0.31f, 0.50f, 0, 360)
                 .poly({{0.42f, 0.72f}, {0.66f, 1.04f}}));
    put('R', Builder{}.adv(0.70f)
                 .poly({{0, B}, {0, T}, {0.42f, T}, {0.56f, 0.12f}, {0.56f, 0.38f}, {0.42f, 0.50f}, {0, 0.50f}})
                 .poly({{0.30f, 0.50f}, {0.60f, B}}));
    put('S', Builder{}.adv(0.64f)
                 .poly({{0.54f, 0.12f}, {0.42f, 0.02f}, {0.15f, 0.02f}, {0.03f, 0.14f},
                        {0.03f, 0.33f}, {0.15f, 0.45f}, {0.43f, 0.55f}, {0.55f, 0.67f},
                        {0.55f, 0.86f}, {0.43f, 0.98f}, {0.14f, 0.98f}, {0.02f, 0.87f}}));
    put('T', Builder{}.adv(0.64f)
                 .poly({{0, T}, {0.58f, T}})
                 .poly({{0.29f, T}, {0.29f, B}}));
    put('U', Builder{}.adv(0.72f)
                 .poly({{0, T}, {0, 0.72f}})
                 .poly({{0.60f, T}, {0.60f, 0.72f}})
                 .arc(0.30f, 0.72f, 0.30f, 0.28f, 0, 180));
    put('V', Builder{}.adv(0.68f).poly({{0, T}, {0.30f, B}, {0.60f, T}}));
    put('W', Builder{}.adv(0.92f)
                 .poly({{0, T}, {0.19f, B}, {0.38f, 0.28f}, {0.57f, B}, {0.76f, T}}));
    put('X', Builder{}.adv(0.68f)
                 .poly({{0, T}, {0.60f, B}})
                 .poly({{0.60f, T}, {0, B}}));
    put('Y', Builder{}.adv(0.66f)
                 .poly({{0, T}, {0.30f, 0.50f}, {0.60f, T}})
                 .poly({{0.30f, 0.50f}, {0.30f, B}}));
    put('Z', Builder{}.adv(0.66f).poly({{0.02f, T}, {0.58f, T}, {0.02f, B}, {0.58f, B}}));

    // ---- lowercase, x-height band 0.3..1
    float X = 0.30f;
    put('a', Builder{}.adv(0.60f)
                 .circle(0.26f, 0.655f, 0.235f)
                 .poly({{0.50f, 0.42f}, {0.50f, B}}));
    put('b', Builder{}.adv(0.62f)
                 .poly({{0, 0.02f}, {0, B}})
                 .circle(0.27f, 0.655f, 0.235f));
    put('c', Builder{}.adv(0.54f).arc(0.27f, 0.655f, 0.24f, 0.325f, 40, 320));
    put('d', Builder{}.adv(0.62f)
                 .circle(0.26f, 0.655f, 0.235f)
                 .poly({{0.50f, 0.02f}, {0.50f, B}}));
    put('e', Builder{}.adv(0.58f)
                 .poly({{0.035f, 0.60f}, {0.50f, 0.60f}})
                 .arc(0.27f, 0.655f, 0.24f, 0.33f, -14, 300));
    put('f', Builder{}.adv(0.44f)
                 .poly({{0.42f, 0.10f}, {0.33f, 0.02f}, {0.22f, 0.08f}, {0.22f, B}})
                 .poly({{0.04f, 0.34f}, {0.40f, 0.34f}}));
    put('g', Builder{}.adv(0.60f)
                 .circle(0.26f, 0.64f, 0.225f)
                 .poly({{0.49f, 0.42f}, {0.49f, 1.06f}, {0.40f, 1.22f}, {0.20f, 1.28f}, {0.04f, 1.20f}}));
    put('h', Builder{}.adv(0.60f)
                 .poly({{0, 0.02f}, {0, B}})
                 .poly({{0, 0.50f}, {0.14f, 0.34f}, {0.34f, 0.34f}, {0.48f, 0.50f}, {0.48f, B}}));
    put('i', Builder{}.adv(0.24f).poly({{0.09f, X + 0.05f}, {0.09f, B}}).dot(0.09f, 0.12f));
    put('j', Builder{}.adv(0.30f)
                 .poly({{0.18f, X + 0.05f}, {0.18f, 1.06f}, {0.10f, 1.24f}, {0.00f, 1.27f}})
                 .dot(0.18f, 0.12f));
    put('k', Builder{}.adv(0.56f)
                 .poly({{0, 0.02f}, {0, B}})
                 .poly({{0.44f, X + 0.05f}, {0.00f, 0.70f}})
                 .poly({{0.16f, 0.58f}, {0.46f, B}}));
    put('l', Builder{}.adv(0.24f).poly({{0.09f, 0.02f}, {0.09f, B}}));
    put('m', Builder{}.adv(0.90f)
                 .poly({{0, X + 0.04f}, {0, B}})
                 .poly({{0, 0.48f}, {0.10f, 0.345f}, {0.245f, 0.345f}, {0.345f, 0.48f}, {0.345f, B}})
                 .poly({{0.345f, 0.48f}, {0.445f, 0.345f}, {0.59f, 0.345f}, {0.69f, 0.48f}, {0.69f, B}}));
    put('n', Builder{}.adv(0.60f)
                 .poly({{0, X + 0.04f}, {0, B}})
                 .poly({{0, 0.48f}, {0.13f, 0.34f}, {0.33f, 0.34f}, {0.46f, 0.48f}, {0.46f, B}}));
    put('o', Builder{}.adv(0.60f).circle(0.255f, 0.655f, 0.24f));
    put('p', Builder{}.adv(0.62f)
                 .poly({{0, X + 0.05f}, {0, 1.28f}})
                 .circle(0.27f, 0.655f, 0.235f));
    put('q', Builder{}.adv(0.62f)
                 .circle(0.255f, 0.655f, 0.235f)
                 .poly({{0.49f, X + 0.05f}, {0.49f, 1.28f}}));
    put('r', Builder{}.adv(0.42f)
                 .poly({{0, X + 0.04f}, {0, B}})
                 .poly({{0, 0.52f}, {0.12f, 0.37f}, {0.28f, 0.34f}, {0.40f, 0.42f}}));
    put('s', Builder{}.adv(0.50f)
                 .poly({{0.42f, 0.43f}, {0.32f, 0.345f}, {0.12f, 0.345f}, {0.035f, 0.43f},
                        {0.035f, 0.52f}, {0.125f, 0.60f}, {0.325f, 0.67f}, {0.415f, 0.75f},
                        {0.415f, 0.875f}, {0.325f, 0.965f}, {0.10f, 0.965f}, {0.02f, 0.88f}}));
    put('t', Builder{}.adv(0.44f)
                 .poly({{0.19f, 0.08f}, {0.19f, 0.88f}, {0.27f, 0.99f}, {0.41f, 0.96f}})
                 .poly({{0.03f, 0.34f}, {0.38f, 0.34f}}));
    put('u', Builder{}.adv(0.60f)
                 .poly({{0, X + 0.05f}, {0, 0.86f}, {0.10f, 0.985f}, {0.30f, 0.985f}, {0.46f, 0.85f}})
                 .poly({{0.46f, X + 0.05f}, {0.46f, B}}));
    put('v', Builder{}.adv(0.54f).poly({{0, X + 0.05f}, {0.23f, B}, {0.46f, X + 0.05f}}));
    put('w', Builder{}.adv(0.76f)
                 .poly({{0, X + 0.05f}, {0.145f, B}, {0.29f, 0.56f}, {0.435f, B}, {0.58f, X + 0.05f}}));
    put('x', Builder{}.adv(0.54f)
                 .poly({{0, X + 0.05f}, {0.44f, B}})
                 .poly({{0.44f, X + 0.05f}, {0, B}}));
    put('y', Builder{}.adv(0.54f)
                 .poly({{0, X + 0.05f}, {0.235f, B}})
                 .poly({{0.47f, X + 0.05f}, {0.155f, 1.28f}}));
    put('z', Builder{}.adv(0.54f)
                 .poly({{0.02f, X + 0.05f}, {0.46f, X + 0.05f}, {0.02f, B}, {0.46f, B}}));

    // ---- digits, full cap height
    put('0', Builder{}.adv(0.66f).arc(0.28f, 0.50f, 0.26f, 0.49f, 0, 360));
    put('1', Builder{}.adv(0.50f)
                 .poly({{0.08f, 0.20f}, {0.30f, 0.02f}, {0.30f, B}}));
    put('2', Builder{}.adv(0.62f)
                 .poly({{0.04f, 0.18f}, {0.13f, 0.04f}, {0.40f, 0.04f}, {0.52f, 0.17f},
                        {0.52f, 0.34f}, {0.02f, B}, {0.55f, B}}));
    put('3', Builder{}.adv(0.62f)
                 .poly({{0.05f, 0.12f}, {0.18f, 0.02f}, {0.42f, 0.02f}, {0.52f, 0.14f},
                        {0.52f, 0.32f}, {0.38f, 0.45f}, {0.20f, 0.45f}})
                 .poly({{0.38f, 0.45f}, {0.54f, 0.58f}, {0.54f, 0.82f}, {0.42f, 0.97f},
                        {0.17f, 0.97f}, {0.04f, 0.86f}}));
    put('4', Builder{}.adv(0.64f)
                 .poly({{0.44f, B}, {0.44f, T}, {0.02f, 0.68f}, {0.58f, 0.68f}}));
    put('5', Builder{}.adv(0.62f)
                 .poly({{0.50f, 0.02f}, {0.08f, 0.02f}, {0.055f, 0.44f}, {0.30f, 0.38f},
                        {0.50f, 0.49f}, {0.555f, 0.68f}, {0.46f, 0.92f}, {0.20f, 1.00f},
                        {0.04f, 0.90f}}));
    put('6', Builder{}.adv(0.64f)
                 .circle(0.285f, 0.70f, 0.255f)
                 .poly({{0.455f, 0.04f}, {0.20f, 0.30f}, {0.062f, 0.60f}}));
    put('7', Builder{}.adv(0.60f)
                 .poly({{0.02f, 0.02f}, {0.56f, 0.02f}, {0.22f, B}}));
    put('8', Builder{}.adv(0.64f)
                 .arc(0.28f, 0.255f, 0.215f, 0.235f, 0, 360)
                 .arc(0.28f, 0.745f, 0.25f, 0.245f, 0, 360));
    put('9', Builder{}.adv(0.64f)
                 .circle(0.285f, 0.295f, 0.245f)
                 .poly({{0.505f, 0.40f}, {0.375f, 0.70f}, {0.155f, 0.96f}}));

    // ---- punctuation
    put('.', Builder{}.adv(0.26f).poly({{0.09f, 0.93f}, {0.09f, B}}));
    put(',', Builder{}.adv(0.26f).poly({{0.11f, 0.92f}, {0.07f, 1.12f}}));
    put('!', Builder{}.adv(0.28f)
                 .poly({{0.10f, 0.02f}, {0.10f, 0.68f}})
                 .poly({{0.10f, 0.92f}, {0.10f, B}}));
    put('?', Builder{}.adv(0.54f)
                 .poly({{0.03f, 0.16f}, {0.12f, 0.03f}, {0.34f, 0.03f}, {0.45f, 0.16f},
                        {0.45f, 0.33f}, {0.25f, 0.50f}, {0.25f, 0.66f}})
                 .poly({{0.25f, 0.92f}, {0.25f, B}}));
    put('-', Builder{}.adv(0.46f).poly({{0.03f, 0.58f}, {0.39f, 0.58f}}));
    put('\'', Builder{}.adv(0.20f).poly({{0.08f, 0.00f}, {0.08f, 0.20f}}));
    put('"', Builder{}.adv(0.34f)
                 .poly({{0.08f, 0.00f}, {0.08f, 0.20f}})
                 .poly({{0.22f, 0.00f}, {0.22f, 0.20f}}));
    put(':', Builder{}.adv(0.26f)
                 .poly({{0.09f, 0.46f}, {0.09f, 0.53f}})
                 .poly({{0.09f, 0.93f}, {0.09f, B}}));
    put(';', Builder{}.adv(0.26f)
                 .poly({{0.10f, 0.46f}, {0.10f, 0.53f}})
                 .poly({{0.11f, 0.92f}, {0.07f, 1.12f}}));
    put(' ', Builder{}.adv(0.44f));
    return m;
}

const std::map<char, GlyphOutline>& base_glyphs() {
    static const std::map<char, GlyphOutline> m = build_base_glyphs();
    return m;
}

} // namespace

FontParams Font::preset(int font_id) {
    FontParams p;
    if (font_id == 0) return p;  // canonical template
    Rng rng(0x466f6e74ull ^ (uint64_t(font_id) * 0x9e3779b97f4a7c15ull));
    p.weight = float(rng.uniform(0.055, 0.165));
    p.width = float(rng.uniform(0.80, 1.26));
    p.serif = rng.bernoulli(0.35);
    if (rng.bernoulli(0.5)) {
        double mag = rng.uniform(0.08, 0.22);
        p.slant = float(rng.bernoulli(0.8) ? mag : -mag);
    }
    p.jitter = float(rng.bernoulli(0.55) ? rng.uniform(0.008, 0.034) : 0.0);
    return p;
}

int Font::registry_size() { return 24; }

Font::Font(int font_id) : id_(font_id), params_(preset(font_id)) {
    glyphs_.resize(128);
    present_.assign(128, false);
    // fallback box for unmapped characters
    box_.adv = 0.66f;
    box_.strokes = {{{{0.04f, 0.04f}, {0.56f, 0.04f}, {0.56f, 0.96f}, {0.04f, 0.96f}, {0.04f, 0.04f}}}};

    for (const auto& [ch, base] : base_glyphs()) {
        GlyphOutline g = base;
        // deterministic per-(font, char) control point noise keeps presets distinct
        Rng jrng(hash64("glyph") ^ (uint64_t(id_) << 32) ^ uint64_t(uint8_t(ch)));
        for (auto& st : g.strokes) {
            for (size_t i = 0; i < st.pts.size(); ++i) {
                auto& p = st.pts[i];
                if (params_.jitter > 0) {
                    p[0] += float(jrng.uniform(-1, 1)) * params_.jitter;
                    p[1] += float(jrng.uniform(-1, 1)) * params_.jitter;
                }
                p[0] *= params_.width;
                p[0] += params_.slant * (1.0f - p[1]);  // shear about baseline
            }
        }
        g.adv = base.adv * params_.width + 0.02f;
        if (params_.serif) {
            // short horizontal feet/caps on near-vertical stroke endpoints
            float sl = 1.6f * params_.weight;
            std::vector<Stroke> serifs;
            for (const auto& st : g.strokes) {
                if (st.pts.size() < 2) continue;
                auto tap = [&](std::array<float, 2> e, std::array<float, 2> n) {
                    float dx = e[0] - n[0], dy = e[1] - n[1];
                    if (std::fabs(dy) > 2.5f * std::fabs(dx) && std::fabs(dy) > 0.18f)
                        serifs.push_back({{{e[0] - sl, e[1]}, {e[0] + sl, e[1]}}});
                };
                tap(st.pts.front(), st.pts[1]);
                tap(st.pts.back(), st.pts[st.pts.size() - 2]);
            }
            for (auto& s : serifs) g.strokes.push_back(std::move(s));
        }
        glyphs_[uint8_t(ch)] = std::move(g);
        present_[uint8_t(ch)] = true;
    }
}

bool Font::has(char ch) const {
    uint8_t u = uint8_t(ch);
    return u < 128 && present_[u];
}

const GlyphOutline& Font::glyph(char ch) const {
    uint8_t u = uint8_t(ch);
    if (u < 128 && present_[u]) return glyphs_[u];
    return box_;
}

} // namespace textctrl::text
