#pragma once

#include <array>

#include "textctrl/img/image.hpp"

namespace textctrl::img {

// Quadrilateral in pixel coordinates, corners clockwise from top-left
// (image y grows downward). Convex with nonzero area.
struct Quad {
    std::array<double, 8> xy{};  // x0,y0, x1,y1, x2,y2, x3,y3

    double x(int i) const { return xy[size_t(2 * i)]; }
    double y(int i) const { return xy[size_t(2 * i) + 1]; }

    static Quad rect(double x0, double y0, double x1, double y1) {
        return Quad{{x0, y0, x1, y0, x1, y1, x0, y1}};
    }
    double area() const;      // shoelace magnitude
    bool valid() const;       // convex, clockwise, area >= 4 px^2
    bool contains(double px, double py) const;
};

// Plane projective map u = (h0 x + h1 y + h2) / (h6 x + h7 y + 1), likewise v.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    void apply(double x, double y, double& u, double& v) const;
    Homography inverse() const;
    // maps src[i] -> dst[i] for 4 point pairs
    static Homography from_points(const std::array<double, 8>& src,
                                  const std::array<double, 8>& dst);
};

// Resamples the quad region to an out_w x out_h patch; quad corners map to the
// patch corner pixel centers. Bilinear, border-clamped.
Image crop_perspective(const Image& full, const Quad& quad, int out_w, int out_h);

// Writes the patch into the quad region of a copy of `full`; every pixel whose
// center lies outside the quad is preserved bit-exactly.
Image paste_back(const Image& full, const Quad& quad, const Image& patch);

} // namespace textctrl::img
