#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "textctrl/data/synth.hpp"
#include "textctrl/text/font.hpp"
#include "textctrl/text/render.hpp"
#include "textctrl/text/vocab.hpp"

using namespace textctrl;
using namespace textctrl::data;

namespace {

int count_nonzero(const img::Image& m) {
    int n = 0;
    for (float v : m.px) n += v != 0.f;
    return n;
}

} // namespace

TEST_CASE("vocab is bijective with pad at zero") {
    const auto& v = text::CharVocab::instance();
    CHECK(v.pad() == 0);
    CHECK(v.max_len() == 24);
    std::set<int> seen;
    for (int i = 1; i < v.size(); ++i) {
        char c = v.symbol(i);
        CHECK(v.index(c) == i);
        seen.insert(i);
    }
    CHECK(int(seen.size()) == v.size() - 1);
    CHECK_THROWS(v.index('\t'));

    auto ids = v.tokenize("Sifted");
    REQUIRE(int(ids.size()) == 24);
    for (int i = 0; i < 6; ++i) CHECK(ids[size_t(i)] != 0);
    for (int i = 6; i < 24; ++i) CHECK(ids[size_t(i)] == 0);
    CHECK(v.detokenize(ids) == "Sifted");

    auto empty = v.tokenize("");
    for (int id : empty) CHECK(id == 0);
}

TEST_CASE("tokenize is injective over random vocab strings") {
    const auto& v = text::CharVocab::instance();
    Rng rng(99);
    std::set<std::string> texts;
    std::set<std::vector<int>> tokens;
    for (int i = 0; i < 1000; ++i) {
        int len = 1 + int(rng.below(24));
        std::string s;
        for (int k = 0; k < len; ++k) s += v.symbol(1 + int(rng.below(uint64_t(v.size() - 1))));
        texts.insert(s);
        tokens.insert(v.tokenize(s));
    }
    CHECK(texts.size() == tokens.size());
}

TEST_CASE("font registry has at least 20 distinct presets") {
    REQUIRE(text::Font::registry_size() >= 20);
    std::set<std::string> keys;
    for (int id = 0; id < text::Font::registry_size(); ++id) {
        auto p = text::Font::preset(id);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.4f|%.4f|%.4f|%.4f|%d", double(p.weight),
                      double(p.slant), double(p.width), double(p.jitter), int(p.serif));
        keys.insert(buf);
        CHECK(p.weight > 0.03f);
        CHECK(p.weight < 0.25f);
    }
    CHECK(int(keys.size()) == text::Font::registry_size());
    // canonical template is the neutral upright font
    auto c = text::Font::preset(0);
    CHECK(c.slant == 0.f);
    CHECK(c.jitter == 0.f);
    CHECK(!c.serif);
}

TEST_CASE("every vocab symbol has a glyph in every font") {
    const auto& v = text::CharVocab::instance();
    for (int id : {0, 1, 7, 19}) {
        text::Font f(id);
        for (int i = 1; i < v.size(); ++i) CHECK(f.has(v.symbol(i)));
    }
}

TEST_CASE("rasterize produces ink inside the quad only") {
    text::Font f(0);
    text::TextGeom g;
    g.font_size = 40;
    g.rotation_deg = 12;
    text::TextInk ink;
    ink.fill = {1, 0, 0};
    auto layer = text::rasterize_text(f, "Hello", 256, 64, g, ink);
    REQUIRE(layer.quad.valid());
    int on = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 256; ++x)
            if (layer.mask.at(0, y, x) != 0.f) {
                ++on;
                CHECK(layer.mask.at(0, y, x) == 1.f);  // hard mask
                // ink must stay within (slightly inflated) quad bounds
                bool near = false;
                for (double dx : {-1.5, 0.0, 1.5})
                    for (double dy : {-1.5, 0.0, 1.5})
                        near = near || layer.quad.contains(x + dx, y + dy);
                CHECK(near);
            }
    CHECK(on > 100);
}

TEST_CASE("sample_style is deterministic and diverse") {
    auto a = sample_style(0), b = sample_style(0);
    CHECK(style_to_json(a).dump() == style_to_json(b).dump());
    std::set<std::string> distinct;
    for (uint64_t s = 0; s < 100; ++s) {
        auto st = sample_style(s);
        CHECK(st.rotation_deg >= -30.f);
        CHECK(st.rotation_deg <= 30.f);
        CHECK(st.font_id >= 0);
        CHECK(st.font_id < text::Font::registry_size());
        distinct.insert(style_to_json(st).dump());
    }
    CHECK(distinct.size() >= 99);
}

TEST_CASE("style rotations stay in range over many seeds") {
    for (uint64_t s = 1000; s < 3000; ++s) {
        auto st = sample_style(s);
        CHECK(st.rotation_deg >= -30.f);
        CHECK(st.rotation_deg <= 30.f);
    }
}

TEST_CASE("render_text_image composition identity on flat background") {
    StyleSpec st;  // defaults: black fill, flat white bg, canonical font
    st.background.c0 = {1, 1, 1};
    auto [image, mask] = render_text_image("A", st, 256, 64);
    CHECK(count_nonzero(mask) > 0);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 256; ++x) {
                if (mask.at(0, y, x) == 0.f)
                    CHECK(image.at(ch, y, x) == 1.f);  // untouched background
                else
                    CHECK(image.at(ch, y, x) == 0.f);  // black fill
            }
}

TEST_CASE("render is deterministic and fill==bg hides ink but keeps mask") {
    StyleSpec st = sample_style(42);
    auto [i1, m1] = render_text_image("ab", st, 256, 64);
    auto [i2, m2] = render_text_image("ab", st, 256, 64);
    CHECK(img::bit_equal(i1, i2));
    CHECK(img::bit_equal(m1, m2));

    StyleSpec hidden = st;
    hidden.background.kind = 0;
    hidden.background.c0 = {0.4f, 0.5f, 0.6f};
    hidden.fill_color = hidden.background.c0;
    hidden.stroke_width = 0;
    auto [iv, mv] = render_text_image("ab", hidden, 256, 64);
    auto [ih, mh] = render_text_image("ab", hidden, 256, 64);
    CHECK(img::bit_equal(mv, mh));
    // zero visible contrast: image equals the flat background everywhere
    for (float v : iv.px) CHECK((v == 0.4f || v == 0.5f || v == 0.6f));
    (void)ih;

    StyleSpec visible = hidden;
    visible.fill_color = {1, 1, 1};
    auto [ii, mi] = render_text_image("ab", visible, 256, 64);
    CHECK(img::bit_equal(mi, mv));  // mask independent of ink color
    (void)ii;
}

TEST_CASE("text overflow and empty text are rejected") {
    StyleSpec st;
    CHECK_THROWS(render_text_image("", st, 256, 64));
    CHECK_THROWS(render_text_image("abcdefghijklmnopqrstuvwxyz", st, 256, 64));
}

TEST_CASE("render_pair invariants") {
    StyleSpec st = sample_style(7);
    auto p = render_pair(st, "cat", "dog", 256, 64);
    // identity pair
    auto q = render_pair(st, "x", "x", 256, 64);
    CHECK(img::bit_equal(q.source_image, q.target_image));

    // shared background and reconstruction through the stored mask
    CHECK(!p.background_image.empty());
    auto [src_img, src_mask] = render_text_image("cat", st, 256, 64);
    CHECK(img::bit_equal(src_img, p.source_image));
    // outside both ink regions source == target == background
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 256; ++x)
                if (src_mask.at(0, y, x) == 0.f && p.target_mask.at(0, y, x) == 0.f) {
                    CHECK(p.source_image.at(ch, y, x) == p.target_image.at(ch, y, x));
                    CHECK(p.source_image.at(ch, y, x) == p.background_image.at(ch, y, x));
                }
}

TEST_CASE("composite reconstruction holds over a generated batch") {
    SynthConfig cfg;
    int bad = 0;
    for (uint64_t seed = 0; seed < 60; ++seed) {
        auto p = make_sample(seed, cfg);
        // re-render the ink layer from the stored style and texts
        text::Font font(p.style.font_id);
        text::TextGeom g;
        g.font_size = p.style.font_size;
        g.rotation_deg = p.style.rotation_deg;
        g.corner_jitter = p.style.perspective_jitter;
        g.padding = p.style.padding;
        text::TextInk ink;
        ink.fill = p.style.fill_color;
        ink.outline = p.style.stroke_color;
        ink.outline_px = p.style.stroke_width;
        auto layer = text::rasterize_text(font, p.target_text, 256, 64, g, ink);
        img::Image rebuilt = text::composite(p.background_image, layer.color, layer.mask);
        if (!img::bit_equal(rebuilt, p.target_image)) ++bad;
        if (!img::bit_equal(layer.mask, p.target_mask)) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("pretrain targets satisfy their definitions") {
    auto p = make_sample(5, SynthConfig{});
    auto t = make_pretrain_targets(p);
    // luminance match, channelwise definition
    img::Image lum = img::luminance(t.color_gt);
    CHECK(img::bit_equal(lum, t.color_in));
    CHECK(img::bit_equal(t.seg_gt, p.target_mask));
    CHECK(img::bit_equal(t.removal_gt, p.background_image));
    CHECK(img::bit_equal(t.color_gt, p.target_image));
    // both font renders carry ink
    CHECK(count_nonzero(img::luminance(t.font_in)) > 0);
    int dark_in = 0, dark_gt = 0;
    for (float v : t.font_in.px) dark_in += v < 0.5f;
    for (float v : t.font_gt.px) dark_gt += v < 0.5f;
    CHECK(dark_in > 50);
    CHECK(dark_gt > 50);
}

TEST_CASE("dataset write/read round trip") {
    namespace fs = std::filesystem;
    auto dir = (fs::temp_directory_path() / "tc_ds_test").string();
    fs::remove_all(dir);

    std::vector<PairedSample> samples;
    for (uint64_t s = 0; s < 4; ++s) samples.push_back(make_sample(s, SynthConfig{}));
    auto manifest = write_dataset(samples, dir);
    CHECK(fs::exists(manifest));

    auto entries = read_manifest(dir);
    REQUIRE(entries.size() == 4);
    for (size_t i = 0; i < entries.size(); ++i) {
        auto loaded = load_sample(dir, entries[i]);
        CHECK(loaded.source_text == samples[i].source_text);
        CHECK(loaded.target_text == samples[i].target_text);
        CHECK(style_to_json(loaded.style).dump() == style_to_json(samples[i].style).dump());
        // loaded pixels are the 8-bit quantization of what was generated
        REQUIRE(loaded.target_image.numel() == samples[i].target_image.numel());
        for (size_t k = 0; k < loaded.target_image.px.size(); ++k)
            CHECK(loaded.target_image.px[k] ==
                  float(img::to_byte(samples[i].target_image.px[k])) / 255.f);
        CHECK(img::bit_equal(loaded.target_mask, samples[i].target_mask));  // 0/1 exact
    }

    // empty set -> empty manifest, no error
    auto dir2 = (fs::temp_directory_path() / "tc_ds_empty").string();
    fs::remove_all(dir2);
    write_dataset({}, dir2);
    CHECK(read_manifest(dir2).empty());

    // determinism end to end: regenerate and rewrite, compare manifest bytes
    std::vector<PairedSample> again;
    for (uint64_t s = 0; s < 4; ++s) again.push_back(make_sample(s, SynthConfig{}));
    auto dir3 = (fs::temp_directory_path() / "tc_ds_test2").string();
    fs::remove_all(dir3);
    write_dataset(again, dir3);
    std::ifstream f1(manifest, std::ios::binary), f3(dir3 + "/manifest.jsonl", std::ios::binary);
    std::string s1{std::istreambuf_iterator<char>(f1), std::istreambuf_iterator<char>()};
    std::string s3{std::istreambuf_iterator<char>(f3), std::istreambuf_iterator<char>()};
    CHECK(s1 == s3);
    std::ifstream b1(dir + "/images/000002_tgt.png", std::ios::binary);
    std::ifstream b3(dir3 + "/images/000002_tgt.png", std::ios::binary);
    std::string p1{std::istreambuf_iterator<char>(b1), std::istreambuf_iterator<char>()};
    std::string p3{std::istreambuf_iterator<char>(b3), std::istreambuf_iterator<char>()};
    CHECK(!p1.empty());
    CHECK(p1 == p3);

    fs::remove_all(dir);
    fs::remove_all(dir2);
    fs::remove_all(dir3);
}

TEST_CASE("black-on-white canonical render is upright and centered-ish") {
    text::Font f(0);
    img::Image im = text::render_black_on_white(f, "Test", 192, 32);
    REQUIRE(im.c == 3);
    int dark = 0;
    for (float v : im.px) dark += v < 0.5f;
    CHECK(dark > 100);
    // corners stay white
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(im.at(ch, 0, 0) == 1.f);
        CHECK(im.at(ch, 31, 191) == 1.f);
    }
}
