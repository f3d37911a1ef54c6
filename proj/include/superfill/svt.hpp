#pragma once

#include <string>

#include <Eigen/SVD>

#include "transform.hpp"

namespace superfill {

namespace detail {

inline void require_nonnegative_threshold(double beta, const char* who) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw ParameterError(std::string(who) + ": threshold must be finite and >= 0, got " + std::to_string(beta));
}

/// Soft-thresholds the singular values of a dense real or complex matrix.
template <class Mat>
Mat shrink_singular_values(const Mat& m, double beta) {
    if (beta == 0.0)
        return m;
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    Index keep = 0;
    while (keep < sigma.size() && sigma(keep) > beta)
        ++keep;
    if (keep == 0)
        return Mat::Zero(m.rows(), m.cols());
    const Eigen::VectorXd shrunk = sigma.head(keep).array() - beta;
    return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
}

/// Whether transform-domain slice k of a real tensor is itself real.
inline bool slice_is_real(TransformKind kind, Index k, Index n) {
    if (kind == TransformKind::DctUnitary)
        return true;
    return k == 0 || (n % 2 == 0 && k == n / 2);
}

/// Calls f(slice_map, is_real) for every independent slice, then mirrors.
template <class F>
void transform_independent_slices(SpectralTensor3& s, F&& f) {
    const Index n = s.slices();
    for (Index k = 0; k < s.independent_slices(); ++k)
        f(s.slice(k), slice_is_real(s.kind(), k, n));
    s.mirror_conjugate_slices();
}

} // namespace detail

/// Singular value thresholding D_beta(M) = U diag(max(sigma - beta, 0)) V^T,
/// the proximal operator of beta * ||.||_*.
inline Matrix matrix_svt(const Matrix& m, double beta) {
    detail::require_nonnegative_threshold(beta, "matrix_svt");
    return detail::shrink_singular_values(m, beta);
}

/// Slice-wise SVT in the transform domain followed by the inverse transform.
inline Tensor3 tensor_svt(const Tensor3& x, double beta, TransformKind kind = TransformKind::Dft) {
    detail::require_nonnegative_threshold(beta, "tensor_svt");
    if (beta == 0.0)
        return x;
    SpectralTensor3 s = mode3_transform(x, kind);
    detail::transform_independent_slices(s, [beta](auto slice, bool is_real) {
        if (is_real) {
            const Matrix shrunk = detail::shrink_singular_values(Matrix(slice.real()), beta);
            slice = shrunk.cast<Complex>();
        } else {
            slice = detail::shrink_singular_values(ComplexMatrix(slice), beta);
        }
    });
    return mode3_inverse(s);
}

} // namespace superfill
