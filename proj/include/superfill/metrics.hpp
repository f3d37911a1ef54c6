#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <cstdio>

#include "tensor.hpp"

namespace superfill {

struct MetricReport {
    double psnr_db = 0.0;  ///< +inf when the images are identical
    double ssim = 0.0;
    std::vector<double> ssim_per_channel;
};

namespace detail {

inline void require_same_dims(const Tensor3& x, const Tensor3& y, const char* who) {
    if (x.dims() != y.dims())
        throw DimensionError(std::string(who) + ": " + to_string(x.dims()) + " vs " + to_string(y.dims()));
}

/// Valid-mode separable correlation with a square window given by 1-D taps.
inline Matrix filter_valid(const Matrix& m, const std::vector<double>& taps) {
    const auto n = static_cast<Index>(taps.size());
    const Index oh = m.rows() - n + 1, ow = m.cols() - n + 1;
    Matrix tmp(oh, m.cols());
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < oh; ++i) {
            double acc = 0.0;
            for (Index t = 0; t < n; ++t)
                acc += taps[static_cast<std::size_t>(t)] * m(i + t, j);
            tmp(i, j) = acc;
        }
    Matrix out(oh, ow);
    for (Index j = 0; j < ow; ++j)
        for (Index i = 0; i < oh; ++i) {
            double acc = 0.0;
            for (Index t = 0; t < n; ++t)
                acc += taps[static_cast<std::size_t>(t)] * tmp(i, j + t);
            out(i, j) = acc;
        }
    return out;
}

} // namespace detail

/// 10 log10(peak^2 / MSE) over all entries; +inf for identical inputs.
inline double psnr(const Tensor3& x, const Tensor3& y, double peak = 1.0) {
    detail::require_same_dims(x, y, "psnr");
    if (!(peak > 0.0))
        throw ParameterError("psnr: peak must be positive");
    const double mse = (x.array() - y.array()).square().mean();
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean SSIM of one channel pair over all valid 11 x 11 Gaussian windows.
inline double ssim_channel(const Matrix& x, const Matrix& y, double peak = 1.0) {
    if (x.rows() < kSsimWindow || x.cols() < kSsimWindow)
        throw ParameterError("ssim: images must be at least 11x11");
    // 11 taps at sigma 1.5, unlike the 2*ceil(2 sigma)+1 smoothing kernel.
    std::vector<double> taps(kSsimWindow);
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[i];
    }
    for (double& v : taps)
        v /= sum;

    const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
    const Matrix mx = detail::filter_valid(x, taps), my = detail::filter_valid(y, taps);
    const Matrix sxx = detail::filter_valid(x.cwiseProduct(x), taps) - mx.cwiseProduct(mx);
    const Matrix syy = detail::filter_valid(y.cwiseProduct(y), taps) - my.cwiseProduct(my);
    const Matrix sxy = detail::filter_valid(x.cwiseProduct(y), taps) - mx.cwiseProduct(my);
    const auto num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
    const auto den = (mx.cwiseProduct(mx).array() + my.cwiseProduct(my).array() + c1) * (sxx.array() + syy.array() + c2);
    return (num / den).mean();
}

/// Mean over channels of the per-channel SSIM (11 x 11 Gaussian window,
/// sigma 1.5, K1 = 0.01, K2 = 0.03, valid windows only).
inline double ssim(const Tensor3& x, const Tensor3& y, double peak = 1.0) {
    detail::require_same_dims(x, y, "ssim");
    double total = 0.0;
    for (Index k = 0; k < x.slices(); ++k)
        total += ssim_channel(x.slice(k), y.slice(k), peak);
    return total / static_cast<double>(x.slices());
}

inline MetricReport evaluate(const Tensor3& reference, const Tensor3& estimate, double peak = 1.0) {
    MetricReport r;
    r.psnr_db = psnr(reference, estimate, peak);
    detail::require_same_dims(reference, estimate, "evaluate");
    for (Index k = 0; k < reference.slices(); ++k)
        r.ssim_per_channel.push_back(ssim_channel(reference.slice(k), estimate.slice(k), peak));
    double total = 0.0;
    for (double v : r.ssim_per_channel)
        total += v;
    r.ssim = total / static_cast<double>(r.ssim_per_channel.size());
    return r;
}

/// PSNR as text; identical images print as "inf".
inline std::string format_psnr(double db) {
    if (std::isinf(db))
        return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return buf;
}

} // namespace superfill
