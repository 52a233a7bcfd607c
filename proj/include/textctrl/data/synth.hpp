#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "textctrl/core/rng.hpp"
#include "textctrl/img/image.hpp"
#include "textctrl/img/warp.hpp"

namespace textctrl::data {

// Procedural background recipe; the rendered patch is a pure function of this
// struct, so manifests can store the recipe instead of a texture file.
struct BgSpec {
    int kind = 0;  // 0 flat, 1 h-gradient, 2 v-gradient, 3 stripes, 4 checker, 5 noise
    std::array<float, 3> c0{1, 1, 1};
    std::array<float, 3> c1{1, 1, 1};
    float freq = 12.0f;   // stripe period / checker cell in px
    float angle = 0.0f;   // stripe direction, degrees
    float amp = 0.06f;    // noise amplitude
    uint64_t seed = 0;    // noise stream
};

img::Image render_background(const BgSpec& bg, int W, int H);

// Full rendering recipe for one text instance.
struct StyleSpec {
    int font_id = 0;
    float font_size = 40.0f;  // px per em before fit shrinking
    std::array<float, 3> fill_color{0, 0, 0};
    std::array<float, 3> stroke_color{0, 0, 0};
    float stroke_width = 0.0f;  // outline ring in px, 0 = none
    BgSpec background;
    float rotation_deg = 0.0f;              // [-30, 30]
    std::array<float, 8> perspective_jitter{};  // corner offsets in px, cw from TL
    float padding = 4.0f;
};

struct PairedSample {
    img::Image source_image;      // 3xHxW
    img::Image target_image;      // 3xHxW
    img::Image target_mask;       // 1xHxW hard {0,1}
    img::Image background_image;  // 3xHxW, shared by source and target
    std::string source_text, target_text;
    StyleSpec style;
};

// Supervision bundle for the style pre-training heads.
struct PretrainTargets {
    img::Image color_in;    // 1xHxW, luminance of color_gt
    img::Image color_gt;    // 3xHxW, the styled target image
    img::Image font_in;     // canonical-font render of the text, black on white
    img::Image font_gt;     // style-font render of the same text
    img::Image removal_gt;  // background
    img::Image seg_gt;      // target mask
};

struct SynthConfig {
    int width = 256, height = 64;
    int min_text_len = 3, max_text_len = 10;
};

// All samplers are deterministic in their seed.
StyleSpec sample_style(uint64_t seed);
std::string sample_text(Rng& rng, int min_len, int max_len);

// mask is exactly the glyph-covered pixel set; image = composite(bg, ink, mask)
std::pair<img::Image, img::Image> render_text_image(const std::string& text,
                                                    const StyleSpec& style, int W, int H);

PairedSample render_pair(const StyleSpec& style, const std::string& text_a,
                         const std::string& text_b, int W, int H);

PairedSample make_sample(uint64_t seed, const SynthConfig& cfg);

PretrainTargets make_pretrain_targets(const PairedSample& sample);

nlohmann::json style_to_json(const StyleSpec& s);
StyleSpec style_from_json(const nlohmann::json& j);

// Writes images/*.png and manifest.jsonl under dir; returns the manifest path.
std::string write_dataset(const std::vector<PairedSample>& samples, const std::string& dir);

struct ManifestEntry {
    std::string source, target, mask, background;  // paths relative to dir
    std::string source_text, target_text;
    StyleSpec style;
};

std::vector<ManifestEntry> read_manifest(const std::string& dir);
PairedSample load_sample(const std::string& dir, const ManifestEntry& e);

} // namespace textctrl::data
