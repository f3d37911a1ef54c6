#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sampling.hpp"
#include "smoothing.hpp"
#include "svt.hpp"

namespace superfill {

/// Gaussian filtering of Z inside the ADMM loop.
struct SmoothingParams {
    bool enabled = true;
    double sigma = 0.5;
    int every_n_iters = 1;
};

struct AdmmParams {
    std::optional<double> lambda;  ///< unset: 1 / sqrt(max(I1, I2) * I3)
    double mu0 = 0.1;
    double alpha = 1.05;
    double mu_max = 1e4;
    double tol = 1e-5;
    int max_iters = 500;
    SmoothingParams smoothing;
    TransformKind transform = TransformKind::Dft;  ///< STNN only
    int unfold_mode = 1;                           ///< SMNN only

    double lambda_for(const Dims& d) const {
        return lambda ? *lambda : 1.0 / std::sqrt(static_cast<double>(std::max(d.rows, d.cols) * d.slices));
    }

    void validate() const {
        if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda)))
            throw ParameterError("admm: lambda must be finite and >= 0");
        if (!(mu0 > 0.0))
            throw ParameterError("admm: mu0 must be positive");
        if (!(alpha > 1.0))
            throw ParameterError("admm: alpha must be > 1");
        if (!(mu_max >= mu0))
            throw ParameterError("admm: mu_max must be >= mu0");
        if (!(tol > 0.0))
            throw ParameterError("admm: tol must be positive");
        if (max_iters < 1)
            throw ParameterError("admm: max_iters must be positive");
        if (smoothing.enabled && !(smoothing.sigma > 0.0))
            throw ParameterError("admm: smoothing sigma must be positive");
        if (smoothing.enabled && smoothing.every_n_iters < 1)
            throw ParameterError("admm: smoothing cadence must be positive");
        if (unfold_mode < 1 || unfold_mode > 3)
            throw ParameterError("admm: unfold_mode must be 1, 2 or 3");
    }
};

struct IterationRecord {
    int iter = 0;
    double criterion = 0.0;  ///< ||X_{k+1} - X_k||_F / max(1, ||X_k||_F)
    double data_fit = 0.0;   ///< ||P_Omega(Z - Y)||_F at the end of the iteration
    double mu = 0.0;         ///< penalty used in the iteration
};

using History = std::vector<IterationRecord>;

/// Iterates after an iteration has completed. mu is already the next penalty.
struct AdmmState {
    Tensor3 x, z, t;
    double mu = 0.0;
    int iter = 0;
    const History* history = nullptr;
};

struct CompletionReport {
    Tensor3 reconstruction;
    int iterations_run = 0;
    bool converged = false;
    History history;
    double wall_time = 0.0;  ///< seconds
};

/// Raised when the iteration blows up; carries the history up to the failure.
struct DivergenceError : NumericalError {
    DivergenceError(const std::string& what, History h) : NumericalError(what), history(std::move(h)) {}
    History history;
};

using AdmmObserver = std::function<void(const AdmmState&)>;

/// X = D_{lambda/mu}(Z - T/mu).
inline Matrix x_update_matrix(const Matrix& z, const Matrix& t, double mu, double lambda) {
    if (!(mu > 0.0))
        throw ParameterError("x_update_matrix: mu must be positive");
    return matrix_svt(z - t / mu, lambda / mu);
}

/// X = tensor SVT of Z - T/mu at lambda/mu.
inline Tensor3 x_update_tensor(const Tensor3& z, const Tensor3& t, double mu, double lambda,
                               TransformKind kind = TransformKind::Dft) {
    if (!(mu > 0.0))
        throw ParameterError("x_update_tensor: mu must be positive");
    Tensor3 arg(z.dims());
    arg.array() = z.array() - t.array() / mu;
    return tensor_svt(arg, lambda / mu, kind);
}

/// Z = P_Omega-perp(X + T/mu) + P_Omega(Y).
inline Tensor3 z_update(const Tensor3& x, const Tensor3& t, double mu, const Tensor3& y, const SampleMask& mask) {
    if (x.dims() != t.dims() || x.dims() != y.dims())
        throw DimensionError("z_update: " + to_string(x.dims()) + ", " + to_string(t.dims()) + ", " +
                             to_string(y.dims()));
    detail::require_mask_fits(x, mask, "z_update");
    Tensor3 z(x.dims());
    for (Index k = 0; k < x.slices(); ++k)
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i)
                z(i, j, k) = mask.observed(i, j) ? y(i, j, k) : x(i, j, k) + t(i, j, k) / mu;
    return z;
}

/// T' = T + mu (X - Z).
inline Tensor3 t_update(const Tensor3& t, const Tensor3& x, const Tensor3& z, double mu) {
    if (t.dims() != x.dims() || t.dims() != z.dims())
        throw DimensionError("t_update: operand dims differ");
    Tensor3 out = t;
    out.array() += mu * (x.array() - z.array());
    return out;
}

/// mu' = min(alpha mu, mu_max).
inline double mu_update(double mu, double alpha, double mu_max) { return std::min(alpha * mu, mu_max); }

namespace detail {

inline constexpr double kDivergenceLimit = 1e6;

template <class XUpdate>
CompletionReport admm_loop(const Tensor3& y, const SampleMask& mask, const AdmmParams& params, XUpdate&& x_update,
                           const AdmmObserver& observer) {
    params.validate();
    require_mask_fits(y, mask, "complete");
    if (mask.observed_count() == 0)
        throw ParameterError("complete: the mask has no observed pixels");
    const auto start = std::chrono::steady_clock::now();
    const double lambda = params.lambda_for(y.dims());

    const Tensor3 yo = apply_mask(y, mask);
    Tensor3 x = yo, z = yo, t(y.dims());
    double mu = params.mu0;
    CompletionReport report;
    for (int k = 1; k <= params.max_iters; ++k) {
        Tensor3 x_next = x_update(z, t, mu, lambda);
        z = z_update(x_next, t, mu, yo, mask);
        if (params.smoothing.enabled && k % params.smoothing.every_n_iters == 0)
            z = gaussian_smooth(z, params.smoothing.sigma);
        t = t_update(t, x_next, z, mu);

        const double criterion = fro_norm(x_next - x) / std::max(1.0, fro_norm(x));
        const double data_fit = fro_norm(apply_mask(z - yo, mask));
        report.history.push_back({k, criterion, data_fit, mu});
        report.iterations_run = k;
        if (!std::isfinite(criterion) || criterion > kDivergenceLimit || !std::isfinite(data_fit))
            throw DivergenceError("complete: iteration diverged at step " + std::to_string(k) +
                                      " (criterion " + std::to_string(criterion) + ")",
                                  report.history);
        // While lambda/mu exceeds every singular value X stays at zero; that
        // is a stall, not convergence.
        const bool stalled_at_zero = x_next.array().abs().maxCoeff() == 0.0;
        mu = mu_update(mu, params.alpha, params.mu_max);
        x = std::move(x_next);
        if (observer)
            observer(AdmmState{x, z, t, mu, k, &report.history});
        if (criterion <= params.tol && !stalled_at_zero) {
            report.converged = true;
            break;
        }
    }
    report.reconstruction = yo + apply_complement(x, mask);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace detail

/// Smoothed matrix nuclear norm completion on the mode-`unfold_mode` unfolding.
/// Iterates are kept in tensor shape; the X-update unfolds, thresholds and folds
/// back, which is equivalent to running the loop on the unfolded matrices.
inline CompletionReport smnn_complete(const Tensor3& y, const SampleMask& mask, const AdmmParams& params = {},
                                      const AdmmObserver& observer = {}) {
    const int mode = params.unfold_mode;
    return detail::admm_loop(
        y, mask, params,
        [mode](const Tensor3& z, const Tensor3& t, double mu, double lambda) {
            return fold(x_update_matrix(unfold(z, mode), unfold(t, mode), mu, lambda), mode, z.dims());
        },
        observer);
}

/// Smoothed tensor nuclear norm completion via transform-domain tensor SVT.
inline CompletionReport stnn_complete(const Tensor3& y, const SampleMask& mask, const AdmmParams& params = {},
                                      const AdmmObserver& observer = {}) {
    const TransformKind kind = params.transform;
    return detail::admm_loop(
        y, mask, params,
        [kind](const Tensor3& z, const Tensor3& t, double mu, double lambda) {
            return x_update_tensor(z, t, mu, lambda, kind);
        },
        observer);
}

/// History as CSV: `iter,criterion,data_fit,mu`.
inline void write_history_csv(std::ostream& out, const History& history) {
    out << "iter,criterion,data_fit,mu\n";
    char buf[128];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.10e,%.10e,%.10e\n", r.iter, r.criterion, r.data_fit, r.mu);
        out << buf;
    }
}

} // namespace superfill
