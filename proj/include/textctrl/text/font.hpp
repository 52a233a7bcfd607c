#pragma once

#include <array>
#include <string>
#include <vector>

#include "textctrl/core/rng.hpp"
#include "textctrl/core/tensor.hpp"

namespace textctrl::text {

// Glyph geometry lives in em space: x >= 0 grows right, y grows down,
// y=0 cap top, y=1 baseline; lowercase bodies start at the x-height 0.3,
// descenders reach ~1.28.
struct Stroke {
    std::vector<std::array<float, 2>> pts;  // polyline
};

struct GlyphOutline {
    float adv = 0.6f;  // pen advance in em
    std::vector<Stroke> strokes;
};

// Parametric letterform variation; font_id 0 is the fixed canonical template.
struct FontParams {
    float weight = 0.10f;  // stroke width in em
    float slant = 0.0f;    // shear dx per unit y (about the baseline)
    float width = 1.0f;    // horizontal scale
    float jitter = 0.0f;   // control-point noise amplitude in em
    bool serif = false;
};

class Font {
public:
    explicit Font(int font_id);

    int id() const { return id_; }
    const FontParams& params() const { return params_; }

    bool has(char ch) const;
    // missing glyphs substitute a box outline (callers may warn)
    const GlyphOutline& glyph(char ch) const;

    static int registry_size();  // number of parametric presets
    static FontParams preset(int font_id);

private:
    int id_ = 0;
    FontParams params_;
    std::vector<GlyphOutline> glyphs_;  // indexed by char, transformed
    std::vector<bool> present_;
    GlyphOutline box_;
};

} // namespace textctrl::text
