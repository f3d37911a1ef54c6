#pragma once

#include <array>
#include <cmath>

#include "tensor.hpp"

namespace superfill {

/// CIELAB image (sRGB primaries, D65 white). Slices 0, 1, 2 hold l, a, b.
struct LabImage {
    Tensor3 values;

    Index height() const { return values.rows(); }
    Index width() const { return values.cols(); }
    Index pixel_count() const { return height() * width(); }
    std::array<double, 3> at(Index row, Index col) const {
        return {values(row, col, 0), values(row, col, 1), values(row, col, 2)};
    }
};

namespace detail {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// linear sRGB -> XYZ (D65), IEC 61966-2-1.
inline constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

} // namespace detail

/// Converts one sRGB triple in [0, 1] to (l, a, b).
///
/// The reference white is the XYZ image of sRGB (1, 1, 1), so white maps to
/// exactly (100, 0, 0).
inline std::array<double, 3> srgb_to_lab(double r, double g, double b) {
    using detail::kRgbToXyz;
    const double lin[3] = {detail::srgb_to_linear(r), detail::srgb_to_linear(g), detail::srgb_to_linear(b)};
    double xyz[3];
    double white[3];
    for (int i = 0; i < 3; ++i) {
        xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
        white[i] = kRgbToXyz[i][0] + kRgbToXyz[i][1] + kRgbToXyz[i][2];
    }
    const double fx = detail::lab_f(xyz[0] / white[0]);
    const double fy = detail::lab_f(xyz[1] / white[1]);
    const double fz = detail::lab_f(xyz[2] / white[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// H x W x 3 sRGB image with values in [0, 1] to CIELAB.
inline LabImage rgb_to_lab(const Tensor3& rgb) {
    if (rgb.slices() != 3)
        throw DimensionError("rgb_to_lab: expected 3 channels, got " + std::to_string(rgb.slices()));
    LabImage out{Tensor3(rgb.rows(), rgb.cols(), 3)};
    for (Index j = 0; j < rgb.cols(); ++j)
        for (Index i = 0; i < rgb.rows(); ++i) {
            const auto lab = srgb_to_lab(std::clamp(rgb(i, j, 0), 0.0, 1.0), std::clamp(rgb(i, j, 1), 0.0, 1.0),
                                         std::clamp(rgb(i, j, 2), 0.0, 1.0));
            for (int c = 0; c < 3; ++c)
                out.values(i, j, c) = lab[c];
        }
    return out;
}

/// Lab image used to segment an arbitrary tensor: RGB tensors are converted
/// directly; anything else is segmented on its first slice read as gray.
inline LabImage segmentation_lab(const Tensor3& image) {
    if (image.slices() == 3)
        return rgb_to_lab(image);
    Tensor3 gray(image.rows(), image.cols(), 3);
    for (Index c = 0; c < 3; ++c)
        gray.slice(c) = image.slice(0);
    return rgb_to_lab(gray);
}

} // namespace superfill
