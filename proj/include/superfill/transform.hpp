#pragma once

#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "tensor.hpp"

namespace superfill {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Transform applied along every tube (mode 3) before slice-wise algebra.
enum class TransformKind {
    Dft,        ///< discrete Fourier transform; the classic t-product
    DctUnitary, ///< orthonormal DCT-II
};

inline std::string to_string(TransformKind k) { return k == TransformKind::Dft ? "dft" : "dct"; }

/// Unitary n x n transform matrix W (rows are basis functions), W^H W = I.
///
/// For the DFT this is F / sqrt(n). The tube transform actually applied by
/// mode3_transform uses the unnormalized F (forward) and conj(F) / n (inverse)
/// so that the t-product is exactly circular convolution.
inline ComplexMatrix transform_matrix(TransformKind kind, Index n) {
    ComplexMatrix w(n, n);
    const double pi = std::numbers::pi;
    if (kind == TransformKind::Dft) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < n; ++c) {
                // Reduce the exponent mod n first so large products keep full precision.
                const double angle = -2.0 * pi * static_cast<double>((r * c) % n) / static_cast<double>(n);
                w(r, c) = std::polar(scale, angle);
            }
    } else {
        for (Index r = 0; r < n; ++r) {
            const double scale = std::sqrt((r == 0 ? 1.0 : 2.0) / static_cast<double>(n));
            for (Index c = 0; c < n; ++c)
                w(r, c) = scale * std::cos(pi * (2.0 * static_cast<double>(c) + 1.0) * static_cast<double>(r) /
                                           (2.0 * static_cast<double>(n)));
        }
    }
    return w;
}

namespace detail {

inline ComplexMatrix forward_matrix(TransformKind kind, Index n) {
    ComplexMatrix w = transform_matrix(kind, n);
    if (kind == TransformKind::Dft)
        w *= std::sqrt(static_cast<double>(n));
    return w;
}

inline ComplexMatrix inverse_matrix(TransformKind kind, Index n) {
    ComplexMatrix w = transform_matrix(kind, n).adjoint();
    if (kind == TransformKind::Dft)
        w /= std::sqrt(static_cast<double>(n));
    return w;
}

} // namespace detail

/// Complex 3-way array in the mode-3 transform domain. Same layout as Tensor3.
class SpectralTensor3 {
public:
    using SliceMap = Eigen::Map<ComplexMatrix>;
    using ConstSliceMap = Eigen::Map<const ComplexMatrix>;

    SpectralTensor3() = default;
    SpectralTensor3(const Dims& d, TransformKind kind)
        : dims_(d), kind_(kind), tubes_(ComplexMatrix::Zero(d.rows * d.cols, d.slices)) {}

    const Dims& dims() const { return dims_; }
    TransformKind kind() const { return kind_; }
    Index rows() const { return dims_.rows; }
    Index cols() const { return dims_.cols; }
    Index slices() const { return dims_.slices; }

    SliceMap slice(Index k) { return {tubes_.col(k).data(), dims_.rows, dims_.cols}; }
    ConstSliceMap slice(Index k) const { return {tubes_.col(k).data(), dims_.rows, dims_.cols}; }

    ComplexMatrix& tubes() { return tubes_; }
    const ComplexMatrix& tubes() const { return tubes_; }

    /// Number of leading slices that carry independent information. For a DFT of
    /// real data slices k and n-k are conjugates, so only 0..floor(n/2) are needed.
    Index independent_slices() const {
        return kind_ == TransformKind::Dft ? dims_.slices / 2 + 1 : dims_.slices;
    }

    /// Fills slices beyond independent_slices() from their conjugate partners.
    void mirror_conjugate_slices() {
        if (kind_ != TransformKind::Dft)
            return;
        const Index n = dims_.slices;
        for (Index k = independent_slices(); k < n; ++k)
            tubes_.col(k) = tubes_.col(n - k).conjugate();
    }

private:
    Dims dims_{};
    TransformKind kind_ = TransformKind::Dft;
    ComplexMatrix tubes_;
};

/// Applies the transform independently to every tube x(i, j, :).
inline SpectralTensor3 mode3_transform(const Tensor3& x, TransformKind kind = TransformKind::Dft) {
    SpectralTensor3 s(x.dims(), kind);
    if (x.slices() == 1) {
        s.tubes() = x.tubes().cast<Complex>();
        return s;
    }
    s.tubes().noalias() = x.tubes().cast<Complex>() * detail::forward_matrix(kind, x.slices()).transpose();
    return s;
}

/// Inverse tube transform. The imaginary residue left by a real-valued
/// round trip is dropped; a residue above 1e-8 of the real part's norm means
/// the spectrum was not the transform of a real tensor.
inline Tensor3 mode3_inverse(const SpectralTensor3& s) {
    Tensor3 x(s.dims());
    if (s.slices() == 1) {
        x.tubes() = s.tubes().real();
        if (s.tubes().imag().norm() > 1e-8 * x.tubes().norm() + 1e-12)
            throw InternalError("mode3_inverse: complex values in a length-1 spectrum");
        return x;
    }
    const ComplexMatrix back = s.tubes() * detail::inverse_matrix(s.kind(), s.slices()).transpose();
    x.tubes() = back.real();
    const double residue = back.imag().norm();
    if (residue > 1e-8 * x.tubes().norm() + 1e-12)
        throw InternalError("mode3_inverse: imaginary residue " + std::to_string(residue) +
                            " exceeds tolerance; spectrum is not conjugate-symmetric");
    return x;
}

} // namespace superfill
