#include <png.h>

#include <cstdio>
#include <vector>

#include "textctrl/img/image.hpp"

namespace textctrl::img {

// Fixed compression settings and no ancillary chunks (no tIME), so identical
// pixels always produce identical bytes.
void save_png(const std::string& path, const Image& im) {
    TC_CHECK(im.c == 1 || im.c == 3, "save_png: 1 or 3 channels");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    TC_CHECK(f, "save_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    TC_CHECK(png && info, "save_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        TC_CHECK(false, "save_png: libpng error writing " + path);
    }
    png_init_io(png, f);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, png_uint_32(im.w), png_uint_32(im.h), 8,
                 im.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(size_t(im.w) * im.c);
    for (int y = 0; y < im.h; ++y) {
        for (int x = 0; x < im.w; ++x)
            for (int ch = 0; ch < im.c; ++ch) row[size_t(x) * im.c + ch] = to_byte(im.at(ch, y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

Image load_png(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    TC_CHECK(f, "load_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    TC_CHECK(png && info, "load_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(f);
        TC_CHECK(false, "load_png: libpng error reading " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);
    // normalize everything to 8-bit RGB or gray
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int w = int(png_get_image_width(png, info));
    int h = int(png_get_image_height(png, info));
    int ch = int(png_get_channels(png, info));
    TC_CHECK(ch == 1 || ch == 3, "load_png: unsupported channel count in " + path);

    Image im(ch, h, w);
    std::vector<uint8_t> row(size_t(w) * ch);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) im.at(c, y, x) = float(row[size_t(x) * ch + c]) / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    return im;
}

Image resize_bilinear(const Image& src, int h2, int w2) {
    Image dst(src.c, h2, w2);
    float sy = float(src.h) / float(h2), sx = float(src.w) / float(w2);
    for (int y = 0; y < h2; ++y) {
        float py = (float(y) + 0.5f) * sy - 0.5f;
        int y0 = int(std::floor(py));
        float fy = py - float(y0);
        int ya = std::clamp(y0, 0, src.h - 1), yb = std::clamp(y0 + 1, 0, src.h - 1);
        for (int x = 0; x < w2; ++x) {
            float pxx = (float(x) + 0.5f) * sx - 0.5f;
            int x0 = int(std::floor(pxx));
            float fx = pxx - float(x0);
            int xa = std::clamp(x0, 0, src.w - 1), xb = std::clamp(x0 + 1, 0, src.w - 1);
            for (int c = 0; c < src.c; ++c) {
                float v = (1 - fy) * ((1 - fx) * src.at(c, ya, xa) + fx * src.at(c, ya, xb)) +
                          fy * ((1 - fx) * src.at(c, yb, xa) + fx * src.at(c, yb, xb));
                dst.at(c, y, x) = v;
            }
        }
    }
    return dst;
}

} // namespace textctrl::img
