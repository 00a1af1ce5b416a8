#pragma once

#include "qde/errors.hpp"
#include "qde/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

namespace qde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + ": non-finite input");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Laplace(0,1): dither distribution of the one-bit encoder.

/// G(x): CDF of Lap(0,1).
inline double laplace_cdf(double x) {
    detail::require_finite(x, "laplace_cdf");
    return x <= 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
}

/// g(x): density of Lap(0,1).
inline double laplace_pdf(double x) {
    detail::require_finite(x, "laplace_pdf");
    return 0.5 * std::exp(-std::abs(x));
}

/// Inverse of laplace_cdf on (0,1).
inline double laplace_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("laplace_quantile: u must lie in (0,1)");
    }
    return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
}

/// One Lap(0,1) draw by inverse CDF; consumes exactly one uniform.
template <class Gen>
double sample_laplace(Gen& gen) {
    return laplace_quantile(uniform_open(gen));
}

// ---------------------------------------------------------------------------
// Standard normal helpers.

inline double normal_cdf(double x) {
    detail::require_finite(x, "normal_cdf");
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
}

inline double normal_pdf(double x) {
    detail::require_finite(x, "normal_pdf");
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// Inverse standard normal CDF. Acklam's rational approximation followed by
/// one Halley correction against erfc, giving close to full double accuracy.
inline double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("normal_quantile: u must lie in (0,1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - u;
    const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - step / (1.0 + 0.5 * x * step);
}

// ---------------------------------------------------------------------------
// Measurement noise.

struct GaussianNoise {
    double mean = 0.0;
    double std = 1.0;

    friend bool operator==(const GaussianNoise&, const GaussianNoise&) = default;
};

/// Conditional distribution of the measurement noise. Time-invariant.
/// Only the Gaussian alternative exists today; add new kinds to the variant.
using NoiseModel = std::variant<GaussianNoise>;

inline void validate(const NoiseModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                if (!(m.std > 0.0) || !std::isfinite(m.std) || !std::isfinite(m.mean)) {
                    throw ConfigError("noise.std", "gaussian std must be finite and > 0");
                }
            }
        },
        model);
}

inline double noise_cdf(const NoiseModel& model, double x) {
    return std::visit(
        [x](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                return normal_cdf((x - m.mean) / m.std);
            } else {
                throw ConfigError("noise.kind", "unknown noise kind");
            }
        },
        model);
}

inline double noise_pdf(const NoiseModel& model, double x) {
    return std::visit(
        [x](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                return normal_pdf((x - m.mean) / m.std) / m.std;
            } else {
                throw ConfigError("noise.kind", "unknown noise kind");
            }
        },
        model);
}

/// One noise draw by inverse CDF; consumes exactly one uniform.
template <class Gen>
double sample_noise(const NoiseModel& model, Gen& gen) {
    const double u = uniform_open(gen);
    return std::visit(
        [u](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                return m.mean + m.std * normal_quantile(u);
            } else {
                throw ConfigError("noise.kind", "unknown noise kind");
            }
        },
        model);
}

/// Infimum of the noise density over the interval [lo, hi].
inline double noise_pdf_inf(const NoiseModel& model, double lo, double hi) {
    return std::visit(
        [lo, hi](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianNoise>) {
                // unimodal: the minimum sits at the endpoint farthest from the mean
                const double far = std::abs(lo - m.mean) > std::abs(hi - m.mean) ? lo : hi;
                return normal_pdf((far - m.mean) / m.std) / m.std;
            } else {
                throw ConfigError("noise.kind", "unknown noise kind");
            }
        },
        model);
}

// ---------------------------------------------------------------------------
// Axis-aligned parameter box.

struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size()) {
            throw DomainError("Box: lo and hi differ in length");
        }
        for (Eigen::Index j = 0; j < lo.size(); ++j) {
            if (!(lo[j] <= hi[j])) {
                throw DomainError("Box: lo[" + std::to_string(j) + "] > hi[" + std::to_string(j) + "]");
            }
        }
    }

    Eigen::Index dim() const noexcept { return lo.size(); }

    bool contains(const Eigen::Ref<const Vector>& x) const {
        return x.size() == dim() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    /// sup over the box of the Euclidean norm.
    double max_norm() const { return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm(); }
};

inline void project_box_inplace(Eigen::Ref<Vector> x, const Box& box) {
    if (x.size() != box.dim()) {
        throw DomainError("project_box: dimension mismatch");
    }
    x = x.cwiseMax(box.lo).cwiseMin(box.hi);
}

/// Euclidean projection onto the box (componentwise clamp).
inline Vector project_box(const Eigen::Ref<const Vector>& x, const Box& box) {
    Vector r = x;
    project_box_inplace(r, box);
    return r;
}

} // namespace qde
