#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "color.hpp"

namespace superfill {

/// Parameters of SLIC superpixel segmentation.
struct SlicParams {
    Index superpixels = 100;         ///< requested cluster count K
    double compactness = 10.0;       ///< m; the usual range is [1, 20]
    int max_iters = 10;
    double residual_threshold = 1.0; ///< stop when summed L1 center movement drops below this
    int perturb_window = 3;          ///< n, odd; seeds move to the lowest gradient in an n x n window
    bool enforce_connectivity = true;

    bool compactness_in_recommended_range() const { return compactness >= 1.0 && compactness <= 20.0; }
};

/// A cluster center in (l, a, b, x, y); x is the column, y the row.
struct ClusterCenter {
    double l = 0, a = 0, b = 0, x = 0, y = 0;
};

/// Per-pixel cluster assignment produced by slic_segment.
struct LabelMap {
    Index height = 0;
    Index width = 0;
    std::vector<std::int32_t> labels;  ///< row-major, in [0, cluster_count()); -1 outside a region
    std::vector<ClusterCenter> centers;
    double grid_step = 0.0;            ///< S
    std::vector<double> residuals;     ///< L1 center movement after each iteration
    int iterations = 0;

    Index cluster_count() const { return static_cast<Index>(centers.size()); }
    std::int32_t at(Index row, Index col) const { return labels[static_cast<std::size_t>(row * width + col)]; }
};

/// SLIC distance D_s = d_lab + (m / S) * d_xy with Euclidean d_lab and d_xy.
inline double slic_distance(const ClusterCenter& pixel, const ClusterCenter& center, double m, double step) {
    if (!(step > 0.0))
        throw ParameterError("slic_distance: grid step must be positive");
    const double dl = pixel.l - center.l, da = pixel.a - center.a, db = pixel.b - center.b;
    const double dx = pixel.x - center.x, dy = pixel.y - center.y;
    return std::sqrt(dl * dl + da * da + db * db) + (m / step) * std::sqrt(dx * dx + dy * dy);
}

/// Squared central differences of the lab vector, borders clamped.
inline double image_gradient(const LabImage& lab, Index row, Index col) {
    const Index h = lab.height(), w = lab.width();
    const Index up = std::max<Index>(row - 1, 0), down = std::min(row + 1, h - 1);
    const Index left = std::max<Index>(col - 1, 0), right = std::min(col + 1, w - 1);
    double g = 0.0;
    for (Index c = 0; c < 3; ++c) {
        const double dx = lab.values(row, right, c) - lab.values(row, left, c);
        const double dy = lab.values(down, col, c) - lab.values(up, col, c);
        g += dx * dx + dy * dy;
    }
    return g;
}

namespace detail {

/// Grid of rows x cols seeds whose count is closest to `target`, with cells as
/// square as possible. Ties go to more columns.
inline std::pair<Index, Index> seed_grid(Index target, Index height, Index width) {
    Index best_rows = 1, best_cols = 1;
    Index best_miss = std::numeric_limits<Index>::max();
    double best_aspect = std::numeric_limits<double>::infinity();
    for (Index r = 1; r <= std::min(target, height); ++r) {
        const Index c = std::clamp<Index>(static_cast<Index>(std::llround(static_cast<double>(target) / r)), 1, width);
        const Index miss = std::abs(r * c - target);
        const double aspect = std::abs(std::log((static_cast<double>(height) / r) / (static_cast<double>(width) / c)));
        const bool better = miss < best_miss || (miss == best_miss && aspect < best_aspect - 1e-12) ||
                            (miss == best_miss && std::abs(aspect - best_aspect) <= 1e-12 && c > best_cols);
        if (better) {
            best_rows = r;
            best_cols = c;
            best_miss = miss;
            best_aspect = aspect;
        }
    }
    return {best_rows, best_cols};
}

struct UnionFind {
    std::vector<Index> parent;
    explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    Index find(Index i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void merge_into(Index from, Index to) { parent[find(from)] = find(to); }
};

/// Relabels `labels` so every cluster is 4-connected. Fragments smaller than
/// `min_size` merge into the neighbouring component they share most edges
/// with; larger fragments become clusters of their own. Returns the new count.
inline Index enforce_connectivity(std::vector<std::int32_t>& labels, Index height, Index width, double min_size) {
    const Index n = height * width;
    std::vector<Index> comp(static_cast<std::size_t>(n), -1);
    std::vector<Index> comp_size;
    std::vector<std::int32_t> comp_label;
    std::vector<Index> queue;
    for (Index p = 0; p < n; ++p) {
        if (labels[p] < 0 || comp[p] >= 0)
            continue;
        const Index id = static_cast<Index>(comp_size.size());
        const std::int32_t lab = labels[p];
        queue.assign(1, p);
        comp[p] = id;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const Index q = queue[head];
            const Index r = q / width, c = q % width;
            const Index nbrs[4] = {r > 0 ? q - width : -1, r + 1 < height ? q + width : -1, c > 0 ? q - 1 : -1,
                                   c + 1 < width ? q + 1 : -1};
            for (Index nb : nbrs)
                if (nb >= 0 && comp[nb] < 0 && labels[nb] == lab) {
                    comp[nb] = id;
                    queue.push_back(nb);
                }
        }
        comp_size.push_back(static_cast<Index>(queue.size()));
        comp_label.push_back(lab);
    }
    const Index ncomp = static_cast<Index>(comp_size.size());

    std::int32_t max_label = -1;
    for (auto l : comp_label)
        max_label = std::max(max_label, l);
    std::vector<Index> main_comp(static_cast<std::size_t>(max_label + 1), -1);
    for (Index c = 0; c < ncomp; ++c) {
        Index& m = main_comp[comp_label[c]];
        if (m < 0 || comp_size[c] > comp_size[m])
            m = c;
    }

    std::vector<Index> orphans;
    for (Index c = 0; c < ncomp; ++c)
        if (main_comp[comp_label[c]] != c && static_cast<double>(comp_size[c]) < min_size)
            orphans.push_back(c);

    UnionFind uf(ncomp);
    if (!orphans.empty()) {
        std::vector<std::vector<std::pair<Index, Index>>> edges(static_cast<std::size_t>(ncomp));
        auto add_edge = [&](Index a, Index b) {
            for (auto& [other, count] : edges[a])
                if (other == b) {
                    ++count;
                    return;
                }
            edges[a].push_back({b, 1});
        };
        for (Index p = 0; p < n; ++p) {
            if (comp[p] < 0)
                continue;
            const Index r = p / width, c = p % width;
            if (c + 1 < width && comp[p + 1] >= 0 && comp[p + 1] != comp[p]) {
                add_edge(comp[p], comp[p + 1]);
                add_edge(comp[p + 1], comp[p]);
            }
            if (r + 1 < height && comp[p + width] >= 0 && comp[p + width] != comp[p]) {
                add_edge(comp[p], comp[p + width]);
                add_edge(comp[p + width], comp[p]);
            }
        }
        std::stable_sort(orphans.begin(), orphans.end(),
                         [&](Index a, Index b) { return comp_size[a] < comp_size[b]; });
        std::vector<std::pair<Index, Index>> votes;
        for (Index o : orphans) {
            const Index self = uf.find(o);
            votes.clear();
            for (const auto& [other, count] : edges[o]) {
                const Index root = uf.find(other);
                if (root == self)
                    continue;
                auto it = std::find_if(votes.begin(), votes.end(), [&](const auto& v) { return v.first == root; });
                if (it == votes.end())
                    votes.push_back({root, count});
                else
                    it->second += count;
            }
            if (votes.empty())
                continue;
            auto best = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
                return a.second < b.second || (a.second == b.second && a.first > b.first);
            });
            uf.merge_into(o, best->first);
        }
    }

    std::vector<std::int32_t> compact(static_cast<std::size_t>(ncomp), -1);
    std::int32_t next = 0;
    for (Index p = 0; p < n; ++p) {
        if (comp[p] < 0)
            continue;
        const Index root = uf.find(comp[p]);
        if (compact[root] < 0)
            compact[root] = next++;
        labels[p] = compact[root];
    }
    return next;
}

/// Mean (l, a, b, x, y) of every label; clusters without members keep `previous`.
inline std::vector<ClusterCenter> cluster_means(const LabImage& lab, std::span<const std::int32_t> labels, Index count,
                                                const std::vector<ClusterCenter>* previous = nullptr) {
    const Index w = lab.width();
    std::vector<std::array<double, 5>> sums(static_cast<std::size_t>(count), {0, 0, 0, 0, 0});
    std::vector<Index> sizes(static_cast<std::size_t>(count), 0);
    for (Index p = 0; p < static_cast<Index>(labels.size()); ++p) {
        const auto k = labels[p];
        if (k < 0)
            continue;
        const Index r = p / w, c = p % w;
        auto& s = sums[k];
        s[0] += lab.values(r, c, 0);
        s[1] += lab.values(r, c, 1);
        s[2] += lab.values(r, c, 2);
        s[3] += static_cast<double>(c);
        s[4] += static_cast<double>(r);
        ++sizes[k];
    }
    std::vector<ClusterCenter> centers(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        if (sizes[k] == 0) {
            if (previous)
                centers[k] = (*previous)[k];
            continue;
        }
        const auto& s = sums[k];
        const double inv = 1.0 / static_cast<double>(sizes[k]);
        centers[k] = {s[0] * inv, s[1] * inv, s[2] * inv, s[3] * inv, s[4] * inv};
    }
    return centers;
}

/// SLIC over the pixels where `region` is nonzero (all pixels when empty).
inline LabelMap slic_core(const LabImage& lab, const SlicParams& params, std::span<const std::uint8_t> region) {
    const Index h = lab.height(), w = lab.width(), n = h * w;
    auto member = [&](Index r, Index c) { return region.empty() || region[static_cast<std::size_t>(r * w + c)] != 0; };
    const Index members = region.empty() ? n : static_cast<Index>(std::count_if(region.begin(), region.end(),
                                                                                [](std::uint8_t v) { return v != 0; }));
    const Index k_req = params.superpixels;
    if (k_req < 1 || k_req > members)
        throw ParameterError("slic_segment: superpixel count must be in [1, " + std::to_string(members) + "], got " +
                             std::to_string(k_req));
    if (params.max_iters < 1)
        throw ParameterError("slic_segment: max_iters must be positive");
    if (params.perturb_window < 1 || params.perturb_window % 2 == 0)
        throw ParameterError("slic_segment: perturb_window must be a positive odd integer");
    if (!(params.residual_threshold > 0.0))
        throw ParameterError("slic_segment: residual_threshold must be positive");
    if (!(params.compactness >= 0.0))
        throw ParameterError("slic_segment: compactness must be non-negative");

    const double step = std::sqrt(static_cast<double>(members) / static_cast<double>(k_req));
    auto pixel_at = [&](Index r, Index c) {
        return ClusterCenter{lab.values(r, c, 0), lab.values(r, c, 1), lab.values(r, c, 2), static_cast<double>(c),
                             static_cast<double>(r)};
    };

    // Seeds on a regular grid. Inside a region the grid is scaled so that about
    // k_req cells intersect it, and each seed snaps to the member nearest its cell center.
    // Seeds on a regular grid over the bounding box of the pixels to segment.
    // Inside a sparse region the grid is refined so that about k_req cells
    // intersect it; each seed snaps to the member nearest its cell center.
    Index y0 = 0, x0 = 0, y1 = h - 1, x1 = w - 1;
    if (!region.empty()) {
        y0 = h, x0 = w, y1 = -1, x1 = -1;
        for (Index r = 0; r < h; ++r)
            for (Index c = 0; c < w; ++c)
                if (member(r, c)) {
                    y0 = std::min(y0, r), y1 = std::max(y1, r);
                    x0 = std::min(x0, c), x1 = std::max(x1, c);
                }
    }
    const Index bh = y1 - y0 + 1, bw = x1 - x0 + 1;
    const Index target_cells = std::max<Index>(
        k_req, static_cast<Index>(std::llround(static_cast<double>(k_req) * static_cast<double>(bh * bw) /
                                               static_cast<double>(members))));
    const auto [grid_rows, grid_cols] = seed_grid(target_cells, bh, bw);
    const double cell_h = static_cast<double>(bh) / grid_rows, cell_w = static_cast<double>(bw) / grid_cols;
    std::vector<ClusterCenter> centers;
    const Index half = params.perturb_window / 2;
    for (Index gr = 0; gr < grid_rows; ++gr)
        for (Index gc = 0; gc < grid_cols; ++gc) {
            // Cells partition the box, so seeds stay distinct.
            const Index r0 = y0 + static_cast<Index>(std::floor(gr * cell_h));
            const Index r1 = y0 + static_cast<Index>(std::floor((gr + 1) * cell_h)) - 1;
            const Index c0 = x0 + static_cast<Index>(std::floor(gc * cell_w));
            const Index c1 = x0 + static_cast<Index>(std::floor((gc + 1) * cell_w)) - 1;
            double cy = y0 + (gr + 0.5) * cell_h - 0.5, cx = x0 + (gc + 0.5) * cell_w - 0.5;
            Index pr = std::clamp<Index>(static_cast<Index>(std::llround(cy)), r0, r1);
            Index pc = std::clamp<Index>(static_cast<Index>(std::llround(cx)), c0, c1);
            if (!member(pr, pc)) {
                double best = std::numeric_limits<double>::infinity();
                Index br = -1, bc = -1;
                for (Index r = r0; r <= r1; ++r)
                    for (Index c = c0; c <= c1; ++c)
                        if (member(r, c)) {
                            const double d = (r - cy) * (r - cy) + (c - cx) * (c - cx);
                            if (d < best) {
                                best = d;
                                br = r;
                                bc = c;
                            }
                        }
                if (br < 0)
                    continue;
                pr = br;
                pc = bc;
                cy = static_cast<double>(pr);
                cx = static_cast<double>(pc);
            }
            double best_grad = image_gradient(lab, pr, pc);
            Index mr = pr, mc = pc;
            for (Index r = std::max(pr - half, r0); r <= std::min(pr + half, r1); ++r)
                for (Index c = std::max(pc - half, c0); c <= std::min(pc + half, c1); ++c) {
                    if (!member(r, c))
                        continue;
                    const double g = image_gradient(lab, r, c);
                    if (g < best_grad) {
                        best_grad = g;
                        mr = r;
                        mc = c;
                    }
                }
            ClusterCenter seed = pixel_at(mr, mc);
            if (mr == pr && mc == pc) {
                seed.x = cx;
                seed.y = cy;
            }
            centers.push_back(seed);
        }

    LabelMap out;
    out.height = h;
    out.width = w;
    out.grid_step = step;
    out.labels.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> dist(static_cast<std::size_t>(n));
    const Index nc = static_cast<Index>(centers.size());
    const double m = params.compactness;

    for (int iter = 0; iter < params.max_iters; ++iter) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        std::fill(out.labels.begin(), out.labels.end(), -1);
        for (Index k = 0; k < nc; ++k) {
            const auto& ck = centers[k];
            const Index r0 = std::max<Index>(static_cast<Index>(std::ceil(ck.y - step)), 0);
            const Index r1 = std::min<Index>(static_cast<Index>(std::floor(ck.y + step)), h - 1);
            const Index c0 = std::max<Index>(static_cast<Index>(std::ceil(ck.x - step)), 0);
            const Index c1 = std::min<Index>(static_cast<Index>(std::floor(ck.x + step)), w - 1);
            for (Index r = r0; r <= r1; ++r)
                for (Index c = c0; c <= c1; ++c) {
                    if (!member(r, c))
                        continue;
                    const double d = slic_distance(pixel_at(r, c), ck, m, step);
                    const auto p = static_cast<std::size_t>(r * w + c);
                    if (d < dist[p]) {
                        dist[p] = d;
                        out.labels[p] = static_cast<std::int32_t>(k);
                    }
                }
        }
        // Pixels outside every search window go to the globally nearest center.
        for (Index r = 0; r < h; ++r)
            for (Index c = 0; c < w; ++c) {
                const auto p = static_cast<std::size_t>(r * w + c);
                if (out.labels[p] >= 0 || !member(r, c))
                    continue;
                for (Index k = 0; k < nc; ++k) {
                    const double d = slic_distance(pixel_at(r, c), centers[k], m, step);
                    if (d < dist[p]) {
                        dist[p] = d;
                        out.labels[p] = static_cast<std::int32_t>(k);
                    }
                }
            }
        auto updated = cluster_means(lab, out.labels, nc, &centers);
        // A center that won no pixels restarts at the worst-fitting pixel of its window.
        std::vector<bool> occupied(static_cast<std::size_t>(nc), false);
        for (auto l : out.labels)
            if (l >= 0)
                occupied[l] = true;
        std::vector<bool> reseeded(static_cast<std::size_t>(n), false);
        for (Index k = 0; k < nc; ++k) {
            if (occupied[k])
                continue;
            const auto& ck = centers[k];
            Index best = -1;
            double worst = -1.0;
            for (Index r = std::max<Index>(static_cast<Index>(std::ceil(ck.y - step)), 0);
                 r <= std::min<Index>(static_cast<Index>(std::floor(ck.y + step)), h - 1); ++r)
                for (Index c = std::max<Index>(static_cast<Index>(std::ceil(ck.x - step)), 0);
                     c <= std::min<Index>(static_cast<Index>(std::floor(ck.x + step)), w - 1); ++c) {
                    const Index p = r * w + c;
                    if (member(r, c) && !reseeded[p] && dist[p] > worst) {
                        worst = dist[p];
                        best = p;
                    }
                }
            if (best >= 0) {
                reseeded[best] = true;
                updated[k] = pixel_at(best / w, best % w);
            }
        }
        double residual = 0.0;
        for (Index k = 0; k < nc; ++k) {
            const auto &a = centers[k], &b = updated[k];
            residual += std::abs(a.l - b.l) + std::abs(a.a - b.a) + std::abs(a.b - b.b) + std::abs(a.x - b.x) +
                        std::abs(a.y - b.y);
        }
        centers = std::move(updated);
        out.residuals.push_back(residual);
        out.iterations = iter + 1;
        if (residual < params.residual_threshold)
            break;
    }

    Index count = 0;
    if (params.enforce_connectivity) {
        // Single-pixel fragments always merge, even when S^2 / 4 < 1.
        count = enforce_connectivity(out.labels, h, w, std::max(step * step / 4.0, 2.0));
    } else {
        // Drop empty clusters and renumber in order of first appearance.
        std::vector<std::int32_t> remap(static_cast<std::size_t>(nc), -1);
        for (auto& l : out.labels) {
            if (l < 0)
                continue;
            if (remap[l] < 0)
                remap[l] = static_cast<std::int32_t>(count++);
            l = remap[l];
        }
    }
    out.centers = cluster_means(lab, out.labels, count);
    return out;
}

} // namespace detail

/// SLIC superpixels: grid seeds at step S = sqrt(HW / K), gradient perturbation,
/// then alternating windowed assignment (2S x 2S around each center) and center
/// updates until the L1 center residual drops below the threshold or max_iters
/// is reached. Orphaned fragments are merged afterwards unless disabled.
inline LabelMap slic_segment(const LabImage& lab, const SlicParams& params) {
    return detail::slic_core(lab, params, {});
}

/// SLIC restricted to the pixels where `region` is nonzero; other pixels get label -1.
inline LabelMap slic_segment_region(const LabImage& lab, const SlicParams& params,
                                    std::span<const std::uint8_t> region) {
    if (static_cast<Index>(region.size()) != lab.pixel_count())
        throw DimensionError("slic_segment_region: region mask size does not match the image");
    return detail::slic_core(lab, params, region);
}

/// Copy of an RGB image with superpixel borders painted in `color`.
inline Tensor3 boundary_overlay(const Tensor3& rgb, const LabelMap& labels, std::array<double, 3> color = {1, 0, 0}) {
    if (rgb.rows() != labels.height || rgb.cols() != labels.width)
        throw DimensionError("boundary_overlay: image and label map sizes differ");
    Tensor3 out = rgb;
    for (Index r = 0; r < labels.height; ++r)
        for (Index c = 0; c < labels.width; ++c) {
            const auto l = labels.at(r, c);
            const bool edge = (c + 1 < labels.width && labels.at(r, c + 1) != l) ||
                              (r + 1 < labels.height && labels.at(r + 1, c) != l);
            if (!edge)
                continue;
            for (Index ch = 0; ch < out.slices(); ++ch)
                out(r, c, ch) = color[static_cast<std::size_t>(std::min<Index>(ch, 2))];
        }
    return out;
}

} // namespace superfill
