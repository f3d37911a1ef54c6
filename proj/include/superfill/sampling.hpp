#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "slic.hpp"

namespace superfill {

/// Binary observation pattern over an H x W grid, shared by every frontal slice.
class SampleMask {
public:
    SampleMask() = default;
    SampleMask(Index height, Index width, bool observed = false)
        : height_(height), width_(width),
          flags_(static_cast<std::size_t>(height * width), observed ? std::uint8_t{1} : std::uint8_t{0}),
          observed_count_(observed ? height * width : 0) {
        if (height <= 0 || width <= 0)
            throw DimensionError("SampleMask: extents must be positive");
    }

    Index height() const { return height_; }
    Index width() const { return width_; }
    Index pixel_count() const { return height_ * width_; }
    Index observed_count() const { return observed_count_; }
    Index missing_count() const { return pixel_count() - observed_count_; }
    double observed_ratio() const { return static_cast<double>(observed_count_) / static_cast<double>(pixel_count()); }

    bool observed(Index row, Index col) const { return flags_[index(row, col)] != 0; }
    bool observed(Index pixel) const { return flags_[static_cast<std::size_t>(pixel)] != 0; }

    void set(Index row, Index col, bool value) {
        auto& f = flags_[index(row, col)];
        observed_count_ += static_cast<Index>(value) - static_cast<Index>(f);
        f = value ? 1 : 0;
    }

    /// Row-major flags, 1 = observed.
    const std::vector<std::uint8_t>& flags() const { return flags_; }

    friend bool operator==(const SampleMask&, const SampleMask&) = default;

private:
    std::size_t index(Index row, Index col) const { return static_cast<std::size_t>(row * width_ + col); }

    Index height_ = 0;
    Index width_ = 0;
    std::vector<std::uint8_t> flags_;
    Index observed_count_ = 0;
};

/// How the representative pixels are chosen.
struct SamplingStrategy {
    enum class Kind { Centroid, Boundary, MultiStage, UniformRandom };
    Kind kind = Kind::Centroid;
    int stages = 2;                   ///< MultiStage only, >= 2
    double per_stage_fraction = 0.5;  ///< MultiStage only
    std::uint64_t seed = 0;           ///< UniformRandom only
};

/// Shapes of removed pixels for structured-missing experiments.
struct StructuredPattern {
    enum class Kind { Circles, Lines, Scratches };
    enum class Orientation { Horizontal, Vertical };
    Kind kind = Kind::Circles;
    int count = 1;
    int radius = 5;     ///< Circles
    int thickness = 1;  ///< Lines and Scratches
    Orientation orientation = Orientation::Horizontal;  ///< Lines
    int length = 32;    ///< Scratches, in unit steps
    std::uint64_t seed = 0;
};

namespace detail {

/// Uniform integer in [0, n) from a 64-bit engine, identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do
        v = rng();
    while (v >= limit);
    return v % n;
}

/// Uniform double in [0, 1).
inline double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void require_ratio(double ratio, const char* who) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw ParameterError(std::string(who) + ": ratio must be in (0, 1], got " + std::to_string(ratio));
}

/// Member pixel nearest to the spatial centroid of `pixels` (row-major
/// indices), ties to the lexicographically smallest (row, col).
inline Index nearest_to_centroid(const std::vector<Index>& pixels, Index width) {
    double sr = 0.0, sc = 0.0;
    for (Index p : pixels) {
        sr += static_cast<double>(p / width);
        sc += static_cast<double>(p % width);
    }
    const double cr = sr / static_cast<double>(pixels.size()), cc = sc / static_cast<double>(pixels.size());
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index p : pixels) {
        const double dr = static_cast<double>(p / width) - cr, dc = static_cast<double>(p % width) - cc;
        const double d = dr * dr + dc * dc;
        if (d < best_d || (d == best_d && p < best)) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

inline std::vector<std::vector<Index>> cluster_members(const LabelMap& labels) {
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(labels.cluster_count()));
    for (Index p = 0; p < static_cast<Index>(labels.labels.size()); ++p)
        if (labels.labels[p] >= 0)
            members[labels.labels[p]].push_back(p);
    return members;
}

} // namespace detail

/// Superpixel count giving the requested sampling ratio with one pixel per cluster.
inline Index k_for_ratio(Index pixel_count, double ratio) {
    detail::require_ratio(ratio, "k_for_ratio");
    const auto k = static_cast<Index>(std::llround(ratio * static_cast<double>(pixel_count)));
    return std::clamp<Index>(k, 1, pixel_count);
}

/// One pixel per cluster: the member nearest the cluster's spatial centroid.
inline SampleMask sample_centroid(const LabelMap& labels) {
    SampleMask mask(labels.height, labels.width);
    for (const auto& members : detail::cluster_members(labels))
        if (!members.empty()) {
            const Index p = detail::nearest_to_centroid(members, labels.width);
            mask.set(p / labels.width, p % labels.width, true);
        }
    return mask;
}

/// One pixel per cluster: the lexicographically first pixel that touches
/// another cluster or the image border (4-neighbourhood).
inline SampleMask sample_boundary(const LabelMap& labels) {
    const Index h = labels.height, w = labels.width;
    SampleMask mask(h, w);
    std::vector<bool> done(static_cast<std::size_t>(labels.cluster_count()), false);
    Index found = 0;
    for (Index r = 0; r < h && found < labels.cluster_count(); ++r)
        for (Index c = 0; c < w; ++c) {
            const auto l = labels.at(r, c);
            if (l < 0 || done[l])
                continue;
            const bool border = r == 0 || c == 0 || r == h - 1 || c == w - 1 || labels.at(r - 1, c) != l ||
                                labels.at(r + 1, c) != l || labels.at(r, c - 1) != l || labels.at(r, c + 1) != l;
            if (border) {
                done[l] = true;
                ++found;
                mask.set(r, c, true);
            }
        }
    if (found != labels.cluster_count())
        throw InternalError("sample_boundary: a cluster has no boundary pixel");
    return mask;
}

namespace detail {

inline void refine_region(const LabImage& lab, const std::vector<Index>& pixels, int depth, int stages,
                          double fraction, const SlicParams& base, SampleMask& mask) {
    const Index w = lab.width();
    const auto size = static_cast<Index>(pixels.size());
    const Index k_sub = std::clamp<Index>(static_cast<Index>(std::llround(fraction * static_cast<double>(size))), 1, size);
    if (depth >= stages || k_sub <= 1) {
        const Index p = nearest_to_centroid(pixels, w);
        mask.set(p / w, p % w, true);
        return;
    }
    Index r0 = std::numeric_limits<Index>::max(), c0 = r0, r1 = -1, c1 = -1;
    for (Index p : pixels) {
        r0 = std::min(r0, p / w);
        r1 = std::max(r1, p / w);
        c0 = std::min(c0, p % w);
        c1 = std::max(c1, p % w);
    }
    const Index bh = r1 - r0 + 1, bw = c1 - c0 + 1;
    LabImage crop{Tensor3(bh, bw, 3)};
    for (Index ch = 0; ch < 3; ++ch)
        crop.values.slice(ch) = lab.values.slice(ch).block(r0, c0, bh, bw);
    std::vector<std::uint8_t> region(static_cast<std::size_t>(bh * bw), 0);
    for (Index p : pixels)
        region[static_cast<std::size_t>((p / w - r0) * bw + (p % w - c0))] = 1;

    SlicParams params = base;
    params.superpixels = k_sub;
    const LabelMap sub = slic_segment_region(crop, params, region);
    std::vector<std::vector<Index>> children(static_cast<std::size_t>(sub.cluster_count()));
    for (Index q = 0; q < bh * bw; ++q)
        if (sub.labels[q] >= 0)
            children[sub.labels[q]].push_back((q / bw + r0) * w + (q % bw + c0));
    for (const auto& child : children)
        if (!child.empty())
            refine_region(lab, child, depth + 1, stages, fraction, base, mask);
}

} // namespace detail

/// Re-clusters every superpixel with K_sub = max(1, round(fraction * size)),
/// recursively down to `stages` levels, and observes the centroid pixel of each
/// leaf cluster. Sub-clustering runs full SLIC restricted to the cluster.
inline SampleMask sample_multistage(const LabImage& lab, const LabelMap& labels, int stages, double per_stage_fraction,
                                    const SlicParams& slic = {}) {
    if (stages < 2)
        throw ParameterError("sample_multistage: stages must be >= 2, got " + std::to_string(stages));
    if (!(per_stage_fraction > 0.0 && per_stage_fraction <= 1.0))
        throw ParameterError("sample_multistage: per_stage_fraction must be in (0, 1]");
    if (lab.height() != labels.height || lab.width() != labels.width)
        throw DimensionError("sample_multistage: image and label map sizes differ");
    SampleMask mask(labels.height, labels.width);
    for (const auto& members : detail::cluster_members(labels))
        if (!members.empty())
            detail::refine_region(lab, members, 1, stages, per_stage_fraction, slic, mask);
    return mask;
}

/// Exactly floor(ratio * H * W) pixels drawn without replacement.
inline SampleMask sample_uniform_random(Index height, Index width, double ratio, std::uint64_t seed) {
    detail::require_ratio(ratio, "sample_uniform_random");
    const Index n = height * width;
    const auto keep = std::clamp<Index>(static_cast<Index>(std::floor(ratio * static_cast<double>(n) + 1e-9)), 0, n);
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    SampleMask mask(height, width);
    for (Index i = 0; i < keep; ++i) {
        const auto j = i + static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(n - i)));
        std::swap(order[i], order[j]);
        mask.set(order[i] / width, order[i] % width, true);
    }
    return mask;
}

/// All-observed mask with the pattern's shapes removed.
inline SampleMask structured_mask(Index height, Index width, const StructuredPattern& pattern) {
    if (pattern.count < 0)
        throw ParameterError("structured_mask: count must be non-negative");
    SampleMask mask(height, width, true);
    std::mt19937_64 rng(pattern.seed);
    auto pick = [&](Index lo, Index hi) {  // inclusive range
        return lo + static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
    };
    auto remove = [&](Index r, Index c) {
        if (r >= 0 && r < height && c >= 0 && c < width)
            mask.set(r, c, false);
    };

    for (int s = 0; s < pattern.count; ++s) {
        switch (pattern.kind) {
        case StructuredPattern::Kind::Circles: {
            const Index r = std::max(pattern.radius, 0);
            // Keep the disc inside the image when it fits; otherwise it is clipped.
            const Index cy = 2 * r + 1 <= height ? pick(r, height - 1 - r) : pick(0, height - 1);
            const Index cx = 2 * r + 1 <= width ? pick(r, width - 1 - r) : pick(0, width - 1);
            for (Index dy = -r; dy <= r; ++dy)
                for (Index dx = -r; dx <= r; ++dx)
                    if (dy * dy + dx * dx <= r * r)
                        remove(cy + dy, cx + dx);
            break;
        }
        case StructuredPattern::Kind::Lines: {
            const bool horizontal = pattern.orientation == StructuredPattern::Orientation::Horizontal;
            const Index extent = horizontal ? height : width;
            const Index t = std::clamp<Index>(pattern.thickness, 1, extent);
            const Index start = pick(0, extent - t);
            for (Index i = start; i < start + t; ++i)
                for (Index j = 0; j < (horizontal ? width : height); ++j)
                    horizontal ? remove(i, j) : remove(j, i);
            break;
        }
        case StructuredPattern::Kind::Scratches: {
            double y = static_cast<double>(pick(0, height - 1));
            double x = static_cast<double>(pick(0, width - 1));
            double angle = 2.0 * std::numbers::pi * detail::uniform_unit(rng);
            const Index t = std::max(pattern.thickness, 1);
            for (int step = 0; step < pattern.length; ++step) {
                const auto ry = static_cast<Index>(std::llround(y)), rx = static_cast<Index>(std::llround(x));
                for (Index dy = 0; dy < t; ++dy)
                    for (Index dx = 0; dx < t; ++dx)
                        remove(ry + dy - t / 2, rx + dx - t / 2);
                angle += 0.6 * (detail::uniform_unit(rng) - 0.5);
                y += std::sin(angle);
                x += std::cos(angle);
            }
            break;
        }
        }
    }
    return mask;
}

namespace detail {

inline void require_mask_fits(const Tensor3& x, const SampleMask& mask, const char* who) {
    if (x.rows() != mask.height() || x.cols() != mask.width())
        throw DimensionError(std::string(who) + ": mask is " + std::to_string(mask.height()) + "x" +
                             std::to_string(mask.width()) + ", tensor is " + to_string(x.dims()));
}

} // namespace detail

/// P_Omega: keeps observed entries in every slice, zeros the rest.
inline Tensor3 apply_mask(const Tensor3& x, const SampleMask& mask) {
    detail::require_mask_fits(x, mask, "apply_mask");
    Tensor3 out(x.dims());
    for (Index k = 0; k < x.slices(); ++k)
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i)
                if (mask.observed(i, j))
                    out(i, j, k) = x(i, j, k);
    return out;
}

/// P_Omega-perp: keeps missing entries, zeros observed ones.
inline Tensor3 apply_complement(const Tensor3& x, const SampleMask& mask) {
    detail::require_mask_fits(x, mask, "apply_complement");
    Tensor3 out(x.dims());
    for (Index k = 0; k < x.slices(); ++k)
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i)
                if (!mask.observed(i, j))
                    out(i, j, k) = x(i, j, k);
    return out;
}

} // namespace superfill
