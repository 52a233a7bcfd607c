#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "textctrl/core/rng.hpp"
#include "textctrl/img/image.hpp"
#include "textctrl/img/warp.hpp"

using namespace textctrl;
using img::Image;
using img::Quad;

namespace {

Image random_image(int c, int h, int w, uint64_t seed) {
    Image im(c, h, w);
    Rng rng(seed);
    for (auto& v : im.px) v = float(rng.uniform());
    return im;
}

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_bytes(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

float linf(const Image& a, const Image& b) {
    REQUIRE(a.numel() == b.numel());
    float m = 0;
    for (size_t i = 0; i < a.px.size(); ++i) m = std::max(m, std::fabs(a.px[i] - b.px[i]));
    return m;
}

} // namespace

TEST_CASE("png round trip quantizes once and is byte-deterministic") {
    Image im = random_image(3, 21, 33, 7);
    auto p1 = tmp_path("tc_rt1.png"), p2 = tmp_path("tc_rt2.png");
    img::save_png(p1, im);
    Image back = img::load_png(p1);
    REQUIRE(back.c == 3);
    REQUIRE(back.h == 21);
    REQUIRE(back.w == 33);
    // loaded value is the quantized original
    for (size_t i = 0; i < im.px.size(); ++i)
        CHECK(back.px[i] == doctest::Approx(float(img::to_byte(im.px[i])) / 255.f).epsilon(1e-7));
    // saving the loaded image reproduces values exactly (quantization is idempotent)
    img::save_png(p2, back);
    Image back2 = img::load_png(p2);
    CHECK(img::bit_equal(back, back2));
    // identical content twice -> identical bytes (no timestamps, fixed encoder)
    img::save_png(p2, im);
    CHECK(read_bytes(p1) == read_bytes(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("gray png keeps single channel") {
    Image m(1, 9, 14);
    for (int i = 0; i < 9 * 14; ++i) m.px[size_t(i)] = (i % 3 == 0) ? 1.f : 0.f;
    auto p = tmp_path("tc_gray.png");
    img::save_png(p, m);
    Image back = img::load_png(p);
    CHECK(back.c == 1);
    CHECK(img::bit_equal(m, back));  // 0/1 survive 8-bit exactly
    std::remove(p.c_str());
}

TEST_CASE("resize_bilinear preserves constants and endpoints") {
    Image c(3, 5, 7, 0.37f);
    Image up = img::resize_bilinear(c, 16, 24);
    for (float v : up.px) CHECK(v == doctest::Approx(0.37f));

    // horizontal ramp stays monotone after resize
    Image ramp(1, 4, 8);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(0, y, x) = float(x) / 7.f;
    Image r2 = img::resize_bilinear(ramp, 4, 17);
    for (int x = 1; x < 17; ++x) CHECK(r2.at(0, 2, x) >= r2.at(0, 2, x - 1) - 1e-6f);
}

TEST_CASE("quad validity and area") {
    Quad r = Quad::rect(10, 5, 50, 25);
    CHECK(r.valid());
    CHECK(r.area() == doctest::Approx(40 * 20));
    CHECK(r.contains(11, 6));
    CHECK(!r.contains(9, 6));

    Quad degenerate{{0, 0, 1, 0, 1, 0.5, 0, 0.5}};  // area 0.5 < 4 px^2
    CHECK(!degenerate.valid());
    Quad ccw{{0, 0, 0, 20, 30, 20, 30, 0}};  // counter-clockwise winding
    CHECK(!ccw.valid());
}

TEST_CASE("axis-aligned integer rect crop is pixel-identical") {
    Image full = random_image(3, 40, 60, 11);
    Quad q = Quad::rect(12, 8, 12 + 19, 8 + 14);  // corners at pixel centers
    Image crop = img::crop_perspective(full, q, 20, 15);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 15; ++y)
            for (int x = 0; x < 20; ++x)
                CHECK(crop.at(ch, y, x) == full.at(ch, y + 8, x + 12));
}

TEST_CASE("crop/paste round trips stay within 2/255") {
    // smooth field: bilinear resampling is exact on locally linear content, so
    // the double-resample residual is curvature-bound and inside the tolerance
    Image full(3, 48, 80);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 80; ++x)
                full.at(ch, y, x) = 0.5f + 0.35f * std::sin(0.19f * float(x) + 0.7f * float(ch)) *
                                                std::cos(0.16f * float(y) - 0.3f * float(ch));
    Quad q{{14.3, 9.2, 66.8, 12.1, 64.5, 38.7, 12.9, 35.4}};
    REQUIRE(q.valid());
    Image patch = img::crop_perspective(full, q, 56, 28);

    // paste onto the original scene (the editing situation): boundary samples
    // blend with surroundings that agree with the patch, full-patch bound holds
    Image pasted_scene = img::paste_back(full, q, patch);
    Image rt_scene = img::crop_perspective(pasted_scene, q, 56, 28);
    CHECK(linf(patch, rt_scene) <= 2.f / 255.f);

    // paste into a blank canvas: pixels outside the quad stay blank by the
    // bit-preservation contract, so boundary samples of the second crop mix
    // with blank; the resampling tolerance applies to the interior ring
    Image blank(3, 48, 80);
    Image pasted_blank = img::paste_back(blank, q, patch);
    Image rt_blank = img::crop_perspective(pasted_blank, q, 56, 28);
    float m = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 2; y < 26; ++y)
            for (int x = 2; x < 54; ++x)
                m = std::max(m, std::fabs(patch.at(ch, y, x) - rt_blank.at(ch, y, x)));
    CHECK(m <= 2.f / 255.f);
}

TEST_CASE("paste_back preserves outside pixels bit-exactly") {
    Image full = random_image(3, 36, 64, 31);
    Quad q{{10.5, 6.5, 40.2, 8.1, 38.9, 28.3, 9.4, 26.0}};
    Image patch = random_image(3, 16, 32, 5);
    Image pasted = img::paste_back(full, q, patch);
    int changed = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 36; ++y)
            for (int x = 0; x < 64; ++x) {
                bool inside = q.contains(x, y);
                if (!inside)
                    CHECK(pasted.at(ch, y, x) == full.at(ch, y, x));
                else if (pasted.at(ch, y, x) != full.at(ch, y, x))
                    ++changed;
            }
    CHECK(changed > 0);  // the patch actually landed
}

TEST_CASE("degenerate quad is rejected") {
    Image full = random_image(3, 20, 20, 3);
    Quad bad{{5, 5, 6, 5, 6, 5.5, 5, 5.5}};
    CHECK_THROWS(img::crop_perspective(full, bad, 8, 8));
    CHECK_THROWS(img::paste_back(full, bad, full));
}

TEST_CASE("homography from_points maps corners and inverts") {
    std::array<double, 8> src{0, 0, 31, 0, 31, 15, 0, 15};
    std::array<double, 8> dst{4.2, 3.1, 58.7, 6.4, 55.2, 33.9, 2.8, 30.5};
    img::Homography H = img::Homography::from_points(src, dst);
    for (int i = 0; i < 4; ++i) {
        double u, v;
        H.apply(src[size_t(2 * i)], src[size_t(2 * i) + 1], u, v);
        CHECK(u == doctest::Approx(dst[size_t(2 * i)]).epsilon(1e-9));
        CHECK(v == doctest::Approx(dst[size_t(2 * i) + 1]).epsilon(1e-9));
    }
    img::Homography Hi = H.inverse();
    double u, v, x, y;
    H.apply(10.7, 8.3, u, v);
    Hi.apply(u, v, x, y);
    CHECK(x == doctest::Approx(10.7).epsilon(1e-9));
    CHECK(y == doctest::Approx(8.3).epsilon(1e-9));
}
