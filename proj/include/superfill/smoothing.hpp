#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace superfill {

/// Normalized 1-D Gaussian taps of length 2 * ceil(2 sigma) + 1.
inline std::vector<double> gaussian_kernel_1d(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ParameterError("gaussian_kernel_1d: sigma must be positive, got " + std::to_string(sigma));
    const auto half = static_cast<Index>(std::ceil(2.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (Index i = -half; i <= half; ++i) {
        const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(i + half)] = v;
        sum += v;
    }
    for (double& v : taps)
        v /= sum;
    return taps;
}

/// Per-slice 2-D Gaussian filter with replicate border handling. The 2-D
/// kernel is the outer product of the 1-D taps, applied separably.
inline Tensor3 gaussian_smooth(const Tensor3& x, double sigma) {
    const auto taps = gaussian_kernel_1d(sigma);
    const auto half = static_cast<Index>(taps.size() / 2);
    const Index h = x.rows(), w = x.cols();
    Tensor3 out(x.dims());
    Matrix tmp(h, w);
    for (Index k = 0; k < x.slices(); ++k) {
        const auto src = x.slice(k);
        // Columns are contiguous, so filter along rows first.
        for (Index j = 0; j < w; ++j)
            for (Index i = 0; i < h; ++i) {
                double acc = 0.0;
                for (Index t = -half; t <= half; ++t)
                    acc += taps[static_cast<std::size_t>(t + half)] * src(std::clamp<Index>(i + t, 0, h - 1), j);
                tmp(i, j) = acc;
            }
        auto dst = out.slice(k);
        for (Index j = 0; j < w; ++j)
            for (Index i = 0; i < h; ++i) {
                double acc = 0.0;
                for (Index t = -half; t <= half; ++t)
                    acc += taps[static_cast<std::size_t>(t + half)] * tmp(i, std::clamp<Index>(j + t, 0, w - 1));
                dst(i, j) = acc;
            }
    }
    return out;
}

} // namespace superfill
