#pragma once

#include <array>
#include <string>

#include "textctrl/img/image.hpp"
#include "textctrl/img/warp.hpp"
#include "textctrl/text/font.hpp"

namespace textctrl::text {

// Placement request for a line of text on a canvas. The requested em size in
// px may shrink so the rotated, jittered quad always fits inside the padded
// canvas; corner jitter is clamped rather than allowed to push corners out.
struct TextGeom {
    float font_size = 40.0f;               // px per em, upper bound
    float rotation_deg = 0.0f;             // [-30, 30]
    std::array<float, 8> corner_jitter{};  // px offsets, corners clockwise from TL
    float padding = 4.0f;                  // px margin kept clear on every side
    float center_x = -1.0f;                // canvas px; negative = canvas center
    float center_y = -1.0f;
};

struct TextInk {
    std::array<float, 3> fill{0, 0, 0};
    std::array<float, 3> outline{0, 0, 0};
    float outline_px = 0.0f;  // ring width outside the stroke; 0 disables
};

struct TextLayer {
    img::Image color;  // 3ch; ink color where mask=1, zero elsewhere
    img::Image mask;   // 1ch hard {0,1}: glyph-covered pixels incl. outline
    img::Quad quad;    // canvas-space corners of the ink box, cw from TL
    float scale_px = 0.0f;  // resolved px per em after fitting
};

TextLayer rasterize_text(const Font& font, const std::string& text, int W, int H,
                         const TextGeom& geom, const TextInk& ink);

// Upright black-on-white render used as the canonical shape reference
// (recognizer text embeddings, glyph/font pretraining targets).
img::Image render_black_on_white(const Font& font, const std::string& text,
                                 int W, int H, float padding = 6.0f);

// composite = mask*fg + (1-mask)*bg, exact for hard masks
img::Image composite(const img::Image& bg, const img::Image& fg, const img::Image& mask);

} // namespace textctrl::text
