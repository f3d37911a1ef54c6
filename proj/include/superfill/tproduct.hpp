#pragma once

#include <algorithm>

#include <Eigen/SVD>

#include "svt.hpp"

namespace superfill {

/// t-product of an I1 x I2 x I3 tensor with an I2 x I4 x I3 tensor: slice-wise
/// matrix products in the transform domain. With the DFT this is the block
/// circulant product fold(circ(x) * unfold(y)).
inline Tensor3 t_product(const Tensor3& x, const Tensor3& y, TransformKind kind = TransformKind::Dft) {
    if (x.cols() != y.rows() || x.slices() != y.slices())
        throw DimensionError("t_product: " + to_string(x.dims()) + " * " + to_string(y.dims()));
    const SpectralTensor3 xs = mode3_transform(x, kind);
    const SpectralTensor3 ys = mode3_transform(y, kind);
    SpectralTensor3 out({x.rows(), y.cols(), x.slices()}, kind);
    for (Index k = 0; k < out.independent_slices(); ++k)
        out.slice(k).noalias() = xs.slice(k) * ys.slice(k);
    out.mirror_conjugate_slices();
    return mode3_inverse(out);
}

/// Tensor transpose: every frontal slice transposed, slices 2..I3 in reverse order.
inline Tensor3 t_transpose(const Tensor3& x) {
    const Index n = x.slices();
    Tensor3 t(x.cols(), x.rows(), n);
    t.slice(0) = x.slice(0).transpose();
    for (Index k = 1; k < n; ++k)
        t.slice(k) = x.slice(n - k).transpose();
    return t;
}

/// Identity for the DFT t-product: identity first slice, zeros elsewhere.
inline Tensor3 t_identity(Index n, Index slices) {
    Tensor3 t(n, n, slices);
    t.slice(0).setIdentity();
    return t;
}

/// Truncated t-SVD x ~ U * S * V^T with f-diagonal S.
struct TSvdFactors {
    Tensor3 u; ///< I1 x R x I3
    Tensor3 s; ///< R x R x I3
    Tensor3 v; ///< I2 x R x I3
    Index rank = 0;

    /// U * S * V^T.
    Tensor3 reconstruct() const { return t_product(t_product(u, s), t_transpose(v)); }
};

inline TSvdFactors t_svd(const Tensor3& x, Index rank) {
    const Index full = std::min(x.rows(), x.cols());
    if (rank < 1 || rank > full)
        throw ParameterError("t_svd: rank must be in [1, " + std::to_string(full) + "], got " +
                             std::to_string(rank));
    const Index n = x.slices();
    const SpectralTensor3 xs = mode3_transform(x, TransformKind::Dft);
    SpectralTensor3 us({x.rows(), rank, n}, TransformKind::Dft);
    SpectralTensor3 ss({rank, rank, n}, TransformKind::Dft);
    SpectralTensor3 vs({x.cols(), rank, n}, TransformKind::Dft);
    for (Index k = 0; k < xs.independent_slices(); ++k) {
        Eigen::BDCSVD<ComplexMatrix> svd(ComplexMatrix(xs.slice(k)), Eigen::ComputeThinU | Eigen::ComputeThinV);
        us.slice(k) = svd.matrixU().leftCols(rank);
        vs.slice(k) = svd.matrixV().leftCols(rank);
        ss.slice(k).setZero();
        ss.slice(k).diagonal() = svd.singularValues().head(rank).cast<Complex>();
    }
    us.mirror_conjugate_slices();
    ss.mirror_conjugate_slices();
    vs.mirror_conjugate_slices();
    return {mode3_inverse(us), mode3_inverse(ss), mode3_inverse(vs), rank};
}

namespace detail {

/// Singular values of every independent DFT-domain slice.
inline std::vector<Eigen::VectorXd> spectral_singular_values(const Tensor3& x) {
    const SpectralTensor3 xs = mode3_transform(x, TransformKind::Dft);
    std::vector<Eigen::VectorXd> out;
    for (Index k = 0; k < xs.independent_slices(); ++k) {
        if (slice_is_real(TransformKind::Dft, k, x.slices()))
            out.push_back(Eigen::BDCSVD<Matrix>(Matrix(xs.slice(k).real())).singularValues());
        else
            out.push_back(Eigen::BDCSVD<ComplexMatrix>(ComplexMatrix(xs.slice(k))).singularValues());
    }
    return out;
}

} // namespace detail

/// Relative threshold below which a transform-domain singular value counts as zero.
inline constexpr double kTubalRankTolerance = 1e-8;

/// Largest slice rank of the t-SVD core, counting singular values above
/// kTubalRankTolerance times the largest singular value over all slices.
inline Index tubal_rank(const Tensor3& x) {
    const auto sigmas = detail::spectral_singular_values(x);
    double sigma_max = 0.0;
    for (const auto& s : sigmas)
        if (s.size() > 0)
            sigma_max = std::max(sigma_max, s.maxCoeff());
    if (sigma_max == 0.0)
        return 0;
    const double cutoff = kTubalRankTolerance * sigma_max;
    Index rank = 0;
    for (const auto& s : sigmas)
        rank = std::max(rank, static_cast<Index>((s.array() > cutoff).count()));
    return rank;
}

/// Tensor nuclear norm: nuclear norm of the first DFT-domain slice, which is
/// the sum of the frontal slices. Equals the sum of traces of the t-SVD core.
/// No 1/I3 scaling.
inline double tnn(const Tensor3& x) {
    Matrix first = x.slice(0);
    for (Index k = 1; k < x.slices(); ++k)
        first += x.slice(k);
    return Eigen::BDCSVD<Matrix>(first).singularValues().sum();
}

} // namespace superfill
