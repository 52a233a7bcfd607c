#include "textctrl/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "textctrl/text/font.hpp"
#include "textctrl/text/render.hpp"
#include "textctrl/text/vocab.hpp"

namespace fs = std::filesystem;

namespace textctrl::data {
namespace {

constexpr float kPi = 3.14159265358979323846f;

float lum(const std::array<float, 3>& c) {
    return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2];
}

std::array<float, 3> sample_color(Rng& rng) {
    return {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
}

// color whose luminance clears `gap` against every reference luminance
std::array<float, 3> sample_contrasting(Rng& rng, std::initializer_list<float> refs, float gap) {
    for (int tries = 0; tries < 40; ++tries) {
        auto c = sample_color(rng);
        float l = lum(c);
        bool ok = true;
        for (float r : refs)
            if (std::fabs(l - r) < gap) ok = false;
        if (ok) return c;
    }
    // fall back to whichever extreme is farther from the references
    float hi = 0.f;
    for (float r : refs) hi = std::max(hi, r);
    return hi > 0.5f ? std::array<float, 3>{0, 0, 0} : std::array<float, 3>{1, 1, 1};
}

} // namespace

img::Image render_background(const BgSpec& bg, int W, int H) {
    img::Image out(3, H, W);
    auto put = [&](int y, int x, const std::array<float, 3>& c) {
        for (int ch = 0; ch < 3; ++ch) out.px[size_t(ch) * H * W + size_t(y) * W + x] = c[ch];
    };
    switch (bg.kind) {
    case 0:
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) put(y, x, bg.c0);
        break;
    case 1:
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float t = W > 1 ? float(x) / float(W - 1) : 0.f;
                put(y, x, {bg.c0[0] + t * (bg.c1[0] - bg.c0[0]),
                           bg.c0[1] + t * (bg.c1[1] - bg.c0[1]),
                           bg.c0[2] + t * (bg.c1[2] - bg.c0[2])});
            }
        break;
    case 2:
        for (int y = 0; y < H; ++y) {
            float t = H > 1 ? float(y) / float(H - 1) : 0.f;
            std::array<float, 3> c{bg.c0[0] + t * (bg.c1[0] - bg.c0[0]),
                                   bg.c0[1] + t * (bg.c1[1] - bg.c0[1]),
                                   bg.c0[2] + t * (bg.c1[2] - bg.c0[2])};
            for (int x = 0; x < W; ++x) put(y, x, c);
        }
        break;
    case 3: {
        float a = bg.angle * kPi / 180.f, ca = std::cos(a), sa = std::sin(a);
        float p = std::max(2.f, bg.freq);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float t = (float(x) * ca + float(y) * sa) / p;
                long band = long(std::floor(t));
                put(y, x, (band & 1) ? bg.c1 : bg.c0);
            }
        break;
    }
    case 4: {
        int p = std::max(2, int(bg.freq));
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                put(y, x, ((x / p + y / p) & 1) ? bg.c1 : bg.c0);
        break;
    }
    case 5: {
        Rng rng(bg.seed);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float n = float(rng.uniform(-1, 1)) * bg.amp;
                put(y, x, {std::clamp(bg.c0[0] + n, 0.f, 1.f),
                           std::clamp(bg.c0[1] + n, 0.f, 1.f),
                           std::clamp(bg.c0[2] + n, 0.f, 1.f)});
            }
        break;
    }
    default:
        TC_CHECK(false, "render_background: unknown kind " + std::to_string(bg.kind));
    }
    return out;
}

StyleSpec sample_style(uint64_t seed) {
    Rng rng(seed ^ 0x5374796c65ull);
    StyleSpec s;
    int nfonts = text::Font::registry_size();
    TC_CHECK(nfonts > 0, "sample_style: empty font registry");
    s.font_id = int(rng.below(uint64_t(nfonts)));
    s.font_size = float(rng.uniform(30, 56));

    // background first so ink colors can be forced to contrast with it
    s.background.kind = int(rng.below(6));
    s.background.c0 = sample_color(rng);
    s.background.c1 = s.background.kind >= 1 && s.background.kind <= 4
                          ? sample_color(rng)
                          : s.background.c0;
    s.background.freq = float(rng.uniform(6, 26));
    s.background.angle = float(rng.uniform(0, 180));
    s.background.amp = float(rng.uniform(0.02, 0.10));
    s.background.seed = rng.next_u64();

    float l0 = lum(s.background.c0), l1 = lum(s.background.c1);
    s.fill_color = sample_contrasting(rng, {l0, l1}, 0.25f);
    if (rng.bernoulli(0.3)) {
        s.stroke_width = float(rng.uniform(1.0, 2.8));
        s.stroke_color = sample_contrasting(rng, {lum(s.fill_color)}, 0.2f);
    }

    s.rotation_deg = rng.bernoulli(0.55) ? float(rng.uniform(-8, 8))
                                         : float(rng.uniform(-30, 30));
    if (rng.bernoulli(0.5))
        for (auto& j : s.perspective_jitter) j = float(rng.uniform(-4, 4));
    s.padding = float(rng.uniform(2, 6));
    return s;
}

std::string sample_text(Rng& rng, int min_len, int max_len) {
    static const std::string cons = "bcdfghjklmnpqrstvwz";
    static const std::string vow = "aeiou";
    int len = min_len + int(rng.below(uint64_t(max_len - min_len + 1)));
    std::string w;
    double mode = rng.uniform();
    if (mode < 0.08) {  // digits
        for (int i = 0; i < len; ++i) w += char('0' + rng.below(10));
        return w;
    }
    bool vowel = rng.bernoulli(0.3);
    while (int(w.size()) < len) {
        const std::string& src = vowel ? vow : cons;
        w += src[size_t(rng.below(src.size()))];
        vowel = !vowel;
    }
    if (mode < 0.23) {  // Capitalized
        w[0] = char(std::toupper(w[0]));
    } else if (mode < 0.33) {  // UPPER
        for (auto& c : w) c = char(std::toupper(c));
    } else if (mode < 0.38 && int(w.size()) < max_len) {
        static const std::string punct = ".,!?";
        w += punct[size_t(rng.below(punct.size()))];
    }
    return w;
}

std::pair<img::Image, img::Image> render_text_image(const std::string& text,
                                                    const StyleSpec& style, int W, int H) {
    TC_CHECK(!text.empty(), "render_text_image: empty text");
    const auto& vocab = text::CharVocab::instance();
    TC_CHECK(int(text.size()) <= vocab.max_len(),
             "render_text_image: text overflows " + std::to_string(vocab.max_len()) + " chars");
    TC_CHECK(style.font_id >= 0 && style.font_id < text::Font::registry_size(),
             "render_text_image: font_id out of registry");
    TC_CHECK(style.rotation_deg >= -30.f && style.rotation_deg <= 30.f,
             "render_text_image: rotation out of range");

    text::Font font(style.font_id);
    text::TextGeom geom;
    geom.font_size = style.font_size;
    geom.rotation_deg = style.rotation_deg;
    geom.corner_jitter = style.perspective_jitter;
    geom.padding = style.padding;
    text::TextInk ink;
    ink.fill = style.fill_color;
    ink.outline = style.stroke_color;
    ink.outline_px = style.stroke_width;

    text::TextLayer layer = text::rasterize_text(font, text, W, H, geom, ink);
    img::Image bg = render_background(style.background, W, H);
    img::Image image = text::composite(bg, layer.color, layer.mask);
    return {std::move(image), std::move(layer.mask)};
}

PairedSample render_pair(const StyleSpec& style, const std::string& text_a,
                         const std::string& text_b, int W, int H) {
    PairedSample p;
    p.style = style;
    p.source_text = text_a;
    p.target_text = text_b;
    p.background_image = render_background(style.background, W, H);
    auto [src, src_mask] = render_text_image(text_a, style, W, H);
    auto [tgt, tgt_mask] = render_text_image(text_b, style, W, H);
    (void)src_mask;
    p.source_image = std::move(src);
    p.target_image = std::move(tgt);
    p.target_mask = std::move(tgt_mask);
    return p;
}

PairedSample make_sample(uint64_t seed, const SynthConfig& cfg) {
    StyleSpec style = sample_style(seed);
    Rng trng(hash64("text") ^ seed);
    std::string a = sample_text(trng, cfg.min_text_len, cfg.max_text_len);
    std::string b = sample_text(trng, cfg.min_text_len, cfg.max_text_len);
    for (int tries = 0; b == a && tries < 8; ++tries)
        b = sample_text(trng, cfg.min_text_len, cfg.max_text_len);
    return render_pair(style, a, b, cfg.width, cfg.height);
}

PretrainTargets make_pretrain_targets(const PairedSample& sample) {
    PretrainTargets t;
    t.color_gt = sample.target_image;
    t.color_in = img::luminance(sample.target_image);
    int H = sample.target_image.h, W = sample.target_image.w;
    text::Font canonical(0), styled(sample.style.font_id);
    t.font_in = text::render_black_on_white(canonical, sample.target_text, W, H);
    t.font_gt = text::render_black_on_white(styled, sample.target_text, W, H);
    t.removal_gt = sample.background_image;
    t.seg_gt = sample.target_mask;
    return t;
}

nlohmann::json style_to_json(const StyleSpec& s) {
    return nlohmann::json{
        {"font_id", s.font_id},
        {"font_size", s.font_size},
        {"fill_color", s.fill_color},
        {"stroke_color", s.stroke_color},
        {"stroke_width", s.stroke_width},
        {"rotation", s.rotation_deg},
        {"perspective_jitter", s.perspective_jitter},
        {"padding", s.padding},
        {"background",
         {{"kind", s.background.kind},
          {"c0", s.background.c0},
          {"c1", s.background.c1},
          {"freq", s.background.freq},
          {"angle", s.background.angle},
          {"amp", s.background.amp},
          {"seed", s.background.seed}}},
    };
}

StyleSpec style_from_json(const nlohmann::json& j) {
    StyleSpec s;
    s.font_id = j.at("font_id").get<int>();
    s.font_size = j.at("font_size").get<float>();
    s.fill_color = j.at("fill_color").get<std::array<float, 3>>();
    s.stroke_color = j.at("stroke_color").get<std::array<float, 3>>();
    s.stroke_width = j.at("stroke_width").get<float>();
    s.rotation_deg = j.at("rotation").get<float>();
    s.perspective_jitter = j.at("perspective_jitter").get<std::array<float, 8>>();
    s.padding = j.at("padding").get<float>();
    const auto& b = j.at("background");
    s.background.kind = b.at("kind").get<int>();
    s.background.c0 = b.at("c0").get<std::array<float, 3>>();
    s.background.c1 = b.at("c1").get<std::array<float, 3>>();
    s.background.freq = b.at("freq").get<float>();
    s.background.angle = b.at("angle").get<float>();
    s.background.amp = b.at("amp").get<float>();
    s.background.seed = b.at("seed").get<uint64_t>();
    return s;
}

std::string write_dataset(const std::vector<PairedSample>& samples, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
    std::ofstream mf(manifest_path, std::ios::binary | std::ios::trunc);
    TC_CHECK(mf.good(), "write_dataset: cannot open " + manifest_path);
    char name[64];
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        auto rel = [&](const char* tag) {
            std::snprintf(name, sizeof(name), "images/%06zu_%s.png", i, tag);
            return std::string(name);
        };
        std::string src = rel("src"), tgt = rel("tgt"), msk = rel("mask"), bg = rel("bg");
        img::save_png((fs::path(dir) / src).string(), s.source_image);
        img::save_png((fs::path(dir) / tgt).string(), s.target_image);
        img::save_png((fs::path(dir) / msk).string(), s.target_mask);
        img::save_png((fs::path(dir) / bg).string(), s.background_image);
        nlohmann::json line{
            {"source", src},       {"target", tgt},
            {"mask", msk},         {"background", bg},
            {"source_text", s.source_text},
            {"target_text", s.target_text},
            {"style", style_to_json(s.style)},
        };
        mf << line.dump() << '\n';
    }
    mf.close();
    TC_CHECK(mf.good(), "write_dataset: failed writing " + manifest_path);
    return manifest_path;
}

std::vector<ManifestEntry> read_manifest(const std::string& dir) {
    std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
    std::ifstream mf(manifest_path, std::ios::binary);
    TC_CHECK(mf.good(), "read_manifest: cannot open " + manifest_path);
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ManifestEntry e;
        e.source = j.at("source").get<std::string>();
        e.target = j.at("target").get<std::string>();
        e.mask = j.at("mask").get<std::string>();
        e.background = j.at("background").get<std::string>();
        e.source_text = j.at("source_text").get<std::string>();
        e.target_text = j.at("target_text").get<std::string>();
        e.style = style_from_json(j.at("style"));
        out.push_back(std::move(e));
    }
    return out;
}

PairedSample load_sample(const std::string& dir, const ManifestEntry& e) {
    PairedSample s;
    s.source_image = img::load_png((fs::path(dir) / e.source).string());
    s.target_image = img::load_png((fs::path(dir) / e.target).string());
    s.target_mask = img::load_png((fs::path(dir) / e.mask).string());
    s.background_image = img::load_png((fs::path(dir) / e.background).string());
    s.source_text = e.source_text;
    s.target_text = e.target_text;
    s.style = e.style;
    return s;
}

} // namespace textctrl::data
