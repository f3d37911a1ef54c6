#pragma once

#include <string>
#include <string_view>

#include "admm.hpp"
#include "color.hpp"
#include "sampling.hpp"

namespace superfill {

enum class Algorithm { Smnn, Stnn };

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "smnn")
        return Algorithm::Smnn;
    if (s == "stnn")
        return Algorithm::Stnn;
    throw ParameterError("unknown algorithm '" + std::string(s) + "' (expected smnn or stnn)");
}

inline std::string to_string(Algorithm a) { return a == Algorithm::Smnn ? "smnn" : "stnn"; }

inline SamplingStrategy::Kind parse_strategy(std::string_view s) {
    using K = SamplingStrategy::Kind;
    if (s == "centroid")
        return K::Centroid;
    if (s == "boundary")
        return K::Boundary;
    if (s == "multistage")
        return K::MultiStage;
    if (s == "uniform")
        return K::UniformRandom;
    throw ParameterError("unknown strategy '" + std::string(s) +
                         "' (expected centroid, boundary, multistage or uniform)");
}

inline std::string to_string(SamplingStrategy::Kind k) {
    switch (k) {
    case SamplingStrategy::Kind::Centroid: return "centroid";
    case SamplingStrategy::Kind::Boundary: return "boundary";
    case SamplingStrategy::Kind::MultiStage: return "multistage";
    case SamplingStrategy::Kind::UniformRandom: return "uniform";
    }
    return "?";
}

inline TransformKind parse_transform(std::string_view s) {
    if (s == "dft")
        return TransformKind::Dft;
    if (s == "dct")
        return TransformKind::DctUnitary;
    throw ParameterError("unknown transform '" + std::string(s) + "' (expected dft or dct)");
}

struct SampleResult {
    SampleMask mask;
    Index clusters = 0;  ///< K' of the first-stage segmentation; 0 for uniform sampling
};

/// Stage one: pick the transmitted pixels of `image` at the target ratio.
/// `slic.superpixels` is overwritten with k_for_ratio(H*W, ratio).
inline SampleResult sample_image(const Tensor3& image, const SamplingStrategy& strategy, double ratio,
                                 SlicParams slic = {}) {
    if (strategy.kind == SamplingStrategy::Kind::UniformRandom)
        return {sample_uniform_random(image.rows(), image.cols(), ratio, strategy.seed), 0};
    slic.superpixels = k_for_ratio(image.rows() * image.cols(), ratio);
    const LabImage lab = segmentation_lab(image);
    const LabelMap labels = slic_segment(lab, slic);
    switch (strategy.kind) {
    case SamplingStrategy::Kind::Boundary:
        return {sample_boundary(labels), labels.cluster_count()};
    case SamplingStrategy::Kind::MultiStage:
        return {sample_multistage(lab, labels, strategy.stages, strategy.per_stage_fraction, slic),
                labels.cluster_count()};
    default:
        return {sample_centroid(labels), labels.cluster_count()};
    }
}

/// Stage two: reconstruct from the observed pixels.
inline CompletionReport complete(const Tensor3& observed, const SampleMask& mask, Algorithm algorithm,
                                 const AdmmParams& params = {}, const AdmmObserver& observer = {}) {
    return algorithm == Algorithm::Smnn ? smnn_complete(observed, mask, params, observer)
                                        : stnn_complete(observed, mask, params, observer);
}

} // namespace superfill
