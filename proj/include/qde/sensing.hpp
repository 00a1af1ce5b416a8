#pragma once

#include "qde/errors.hpp"
#include "qde/math.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace qde {

/// The six-sensor, three-parameter regressor family of the reference experiment:
/// each sensor excites a single coordinate with a sign and a geometric transient.
struct PaperExampleRegressor {
    friend bool operator==(const PaperExampleRegressor&, const PaperExampleRegressor&) = default;
};

struct ConstantRegressor {
    Vector phi;
};

/// phi_k = rows[(k-1) mod rows.size()].
struct TableRegressor {
    std::vector<Vector> rows;
};

using RegressorFamily = std::variant<PaperExampleRegressor, ConstantRegressor, TableRegressor>;

struct SensorModel {
    RegressorFamily regressor = PaperExampleRegressor{};
    double threshold = 0.0;
    NoiseModel noise = GaussianNoise{};
};

namespace detail {

struct PaperExampleRow {
    Eigen::Index coord;
    double sign;
    double base;
};

// phi_{k,i}[coord] = sign * (1 - base^{-k})
inline constexpr PaperExampleRow paper_example_rows[6] = {
    {0, +1.0, 3.0}, {1, -1.0, 4.0}, {2, +1.0, 2.0},
    {0, -1.0, 2.0}, {1, +1.0, 2.0}, {2, -1.0, 5.0},
};

} // namespace detail

inline constexpr std::size_t paper_example_sensors = 6;
inline constexpr Eigen::Index paper_example_dim = 3;

/// Regressor length produced by the family; `0` when it cannot be inferred.
inline Eigen::Index regressor_dim(const RegressorFamily& family) {
    return std::visit(
        [](const auto& f) -> Eigen::Index {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PaperExampleRegressor>) {
                return paper_example_dim;
            } else if constexpr (std::is_same_v<T, ConstantRegressor>) {
                return f.phi.size();
            } else {
                return f.rows.empty() ? 0 : f.rows.front().size();
            }
        },
        family);
}

/// Writes phi_{k,i} into `out` (k >= 1, i is the 0-based sensor index).
inline void regressor_into(const RegressorFamily& family, std::uint64_t k, std::size_t i,
                           Eigen::Ref<Vector> out) {
    if (k < 1) {
        throw DomainError("regressor: step must be >= 1");
    }
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PaperExampleRegressor>) {
                if (i >= paper_example_sensors) {
                    throw DomainError("regressor: paper_example defines sensors 1..6 only, got " +
                                      std::to_string(i + 1));
                }
                if (out.size() != paper_example_dim) {
                    throw DomainError("regressor: paper_example is three-dimensional");
                }
                const auto& row = detail::paper_example_rows[i];
                out.setZero();
                // base^{-k} underflows to 0 long before k overflows a double exponent
                out[row.coord] = row.sign * (1.0 - std::pow(row.base, -static_cast<double>(k)));
            } else if constexpr (std::is_same_v<T, ConstantRegressor>) {
                if (out.size() != f.phi.size()) throw DomainError("regressor: dimension mismatch");
                out = f.phi;
            } else {
                if (f.rows.empty()) throw DomainError("regressor: empty table");
                const auto& row = f.rows[(k - 1) % f.rows.size()];
                if (out.size() != row.size()) throw DomainError("regressor: dimension mismatch");
                out = row;
            }
        },
        family);
}

inline Vector regressor(const RegressorFamily& family, std::uint64_t k, std::size_t i) {
    Vector out(regressor_dim(family));
    regressor_into(family, k, i, out);
    return out;
}

/// Declared bound phi_bar >= sup_k ||phi_{k,i}||.
inline double regressor_bound(const RegressorFamily& family) {
    return std::visit(
        [](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PaperExampleRegressor>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, ConstantRegressor>) {
                return f.phi.norm();
            } else {
                double b = 0.0;
                for (const auto& r : f.rows) b = std::max(b, r.norm());
                return b;
            }
        },
        family);
}

/// The unknown system: parameter, prior box and the sensor array.
struct TrueSystem {
    Vector theta;
    Box box;
    std::vector<SensorModel> sensors;

    std::size_t sensor_count() const noexcept { return sensors.size(); }
    Eigen::Index dim() const noexcept { return theta.size(); }

    void validate() const {
        if (theta.size() == 0) throw ConfigError("system.theta", "must be non-empty");
        if (box.dim() != theta.size()) throw ConfigError("system.box", "dimension differs from theta");
        if (!box.contains(theta)) throw ConfigError("system.theta", "true parameter lies outside the box");
        if (sensors.empty()) throw ConfigError("system.sensors", "at least one sensor required");
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            const auto& s = sensors[i];
            const std::string prefix = "system.sensors[" + std::to_string(i + 1) + "]";
            if (std::holds_alternative<PaperExampleRegressor>(s.regressor) && i >= paper_example_sensors) {
                throw ConfigError(prefix + ".regressor", "paper_example defines sensors 1..6 only");
            }
            if (regressor_dim(s.regressor) != theta.size()) {
                throw ConfigError(prefix + ".regressor", "regressor dimension differs from theta");
            }
            if (!std::isfinite(s.threshold)) throw ConfigError(prefix + ".threshold", "must be finite");
            qde::validate(s.noise);
        }
    }
};

/// s = 1{phi^T theta + d <= C} for a given regressor. Consumes one noise draw.
template <class Gen>
int measure_with(const Eigen::Ref<const Vector>& phi, const Eigen::Ref<const Vector>& theta,
                 const SensorModel& sensor, Gen& noise_rng) {
    const double y = phi.dot(theta) + sample_noise(sensor.noise, noise_rng);
    return y <= sensor.threshold ? 1 : 0;
}

/// Binary threshold measurement of sensor i (0-based) at step k.
template <class Gen>
int measure(const TrueSystem& system, std::uint64_t k, std::size_t i, Gen& noise_rng) {
    if (i >= system.sensor_count()) throw DomainError("measure: sensor index out of range");
    const auto& sensor = system.sensors[i];
    Vector phi(system.dim());
    regressor_into(sensor.regressor, k, i, phi);
    return measure_with(phi, system.theta, sensor, noise_rng);
}

/// 0-based index of the active basis vector of the cyclic coding rule.
inline Eigen::Index coding_index(std::uint64_t k, Eigen::Index n) {
    if (k < 1 || n < 1) throw DomainError("coding_vector: need k >= 1 and n >= 1");
    return static_cast<Eigen::Index>((k - 1) % static_cast<std::uint64_t>(n));
}

/// psi_k = e_{((k-1) mod n) + 1}.
inline Vector coding_vector(std::uint64_t k, Eigen::Index n) {
    return Vector::Unit(n, coding_index(k, n));
}

} // namespace qde
