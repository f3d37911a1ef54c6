#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace superfill {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;

/// Extents of a 3-way array: rows (I1), columns (I2) and frontal slices (I3).
struct Dims {
    Index rows = 0;
    Index cols = 0;
    Index slices = 0;

    Index size() const { return rows * cols * slices; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
    return std::to_string(d.rows) + "x" + std::to_string(d.cols) + "x" + std::to_string(d.slices);
}

/// Dense real 3-way array.
///
/// Storage is column-major with frontal slices contiguous: entry (i, j, k) lives
/// at offset i + rows * (j + cols * k). A frontal slice is therefore an ordinary
/// column-major matrix, and the whole tensor viewed as a (rows*cols) x slices
/// matrix has one tube per row.
class Tensor3 {
public:
    using SliceMap = Eigen::Map<Matrix>;
    using ConstSliceMap = Eigen::Map<const Matrix>;

    Tensor3() = default;

    Tensor3(Index rows, Index cols, Index slices) : dims_{rows, cols, slices} {
        if (rows <= 0 || cols <= 0 || slices <= 0)
            throw DimensionError("Tensor3: extents must be positive, got " + to_string(dims_));
        data_.assign(static_cast<std::size_t>(dims_.size()), 0.0);
    }

    explicit Tensor3(const Dims& d) : Tensor3(d.rows, d.cols, d.slices) {}

    /// Takes ownership of `values` laid out as described above. Rejects NaN/Inf.
    Tensor3(const Dims& d, std::vector<double> values) : Tensor3(d) {
        if (static_cast<Index>(values.size()) != d.size())
            throw DimensionError("Tensor3: expected " + std::to_string(d.size()) + " values, got " +
                                 std::to_string(values.size()));
        for (double v : values)
            if (!std::isfinite(v))
                throw ParameterError("Tensor3: non-finite value on construction");
        data_ = std::move(values);
    }

    static Tensor3 constant(const Dims& d, double value) {
        Tensor3 t(d);
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    /// Single-slice tensor holding a copy of `m`.
    static Tensor3 from_matrix(const Matrix& m) {
        Tensor3 t(m.rows(), m.cols(), 1);
        t.slice(0) = m;
        return t;
    }

    const Dims& dims() const { return dims_; }
    Index rows() const { return dims_.rows; }
    Index cols() const { return dims_.cols; }
    Index slices() const { return dims_.slices; }
    Index size() const { return dims_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
    double operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    SliceMap slice(Index k) { return {data_.data() + k * dims_.rows * dims_.cols, dims_.rows, dims_.cols}; }
    ConstSliceMap slice(Index k) const {
        return {data_.data() + k * dims_.rows * dims_.cols, dims_.rows, dims_.cols};
    }

    /// (rows*cols) x slices view; row p is the tube at pixel p.
    SliceMap tubes() { return {data_.data(), dims_.rows * dims_.cols, dims_.slices}; }
    ConstSliceMap tubes() const { return {data_.data(), dims_.rows * dims_.cols, dims_.slices}; }

    auto array() { return Eigen::Map<Eigen::ArrayXd>(data_.data(), size()); }
    auto array() const { return Eigen::Map<const Eigen::ArrayXd>(data_.data(), size()); }

    Tensor3& operator+=(const Tensor3& o) {
        require_same(o, "+=");
        array() += o.array();
        return *this;
    }
    Tensor3& operator-=(const Tensor3& o) {
        require_same(o, "-=");
        array() -= o.array();
        return *this;
    }
    Tensor3& operator*=(double s) {
        array() *= s;
        return *this;
    }

    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
    friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

private:
    std::size_t offset(Index i, Index j, Index k) const {
        return static_cast<std::size_t>(i + dims_.rows * (j + dims_.cols * k));
    }

    void require_same(const Tensor3& o, const char* op) const {
        if (o.dims_ != dims_)
            throw DimensionError(std::string("Tensor3 ") + op + ": " + to_string(dims_) + " vs " +
                                 to_string(o.dims_));
    }

    Dims dims_{};
    std::vector<double> data_;
};

/// Mode-n matricization with the Kolda column ordering.
///
///   mode 1: I1 x (I2*I3), column j + I2*k
///   mode 2: I2 x (I1*I3), column i + I1*k
///   mode 3: I3 x (I1*I2), column i + I1*j
inline Matrix unfold(const Tensor3& x, int mode) {
    const Index n1 = x.rows(), n2 = x.cols(), n3 = x.slices();
    switch (mode) {
    case 1: {
        // Slices are contiguous column-major blocks, so this is a straight copy.
        return Eigen::Map<const Matrix>(x.data(), n1, n2 * n3);
    }
    case 2: {
        Matrix m(n2, n1 * n3);
        for (Index k = 0; k < n3; ++k)
            m.middleCols(k * n1, n1) = x.slice(k).transpose();
        return m;
    }
    case 3:
        return x.tubes().transpose();
    default:
        throw DimensionError("unfold: mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
}

inline Tensor3 fold(const Matrix& m, int mode, const Dims& dims) {
    const Index n1 = dims.rows, n2 = dims.cols, n3 = dims.slices;
    Index want_rows = 0, want_cols = 0;
    switch (mode) {
    case 1: want_rows = n1; want_cols = n2 * n3; break;
    case 2: want_rows = n2; want_cols = n1 * n3; break;
    case 3: want_rows = n3; want_cols = n1 * n2; break;
    default:
        throw DimensionError("fold: mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
    if (m.rows() != want_rows || m.cols() != want_cols)
        throw DimensionError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             ", mode-" + std::to_string(mode) + " unfolding of " + to_string(dims) +
                             " needs " + std::to_string(want_rows) + "x" + std::to_string(want_cols));
    Tensor3 x(dims);
    switch (mode) {
    case 1:
        Eigen::Map<Matrix>(x.data(), n1, n2 * n3) = m;
        break;
    case 2:
        for (Index k = 0; k < n3; ++k)
            x.slice(k) = m.middleCols(k * n1, n1).transpose();
        break;
    default:
        x.tubes() = m.transpose();
        break;
    }
    return x;
}

inline double inner(const Tensor3& x, const Tensor3& y) {
    if (x.dims() != y.dims())
        throw DimensionError("inner: " + to_string(x.dims()) + " vs " + to_string(y.dims()));
    return (x.array() * y.array()).sum();
}

inline double fro_norm(const Tensor3& x) { return std::sqrt(inner(x, x)); }

} // namespace superfill
