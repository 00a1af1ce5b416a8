#pragma once

#include "qde/config.hpp"

#include <cstdint>

namespace fixtures {

/// The reference experiment with a shorter horizon and fewer repetitions.
inline qde::ExperimentConfig reference(std::uint64_t horizon, std::uint64_t reps, double nu = 0.1,
                                       std::uint64_t seed = 1) {
    qde::Json j = qde::reference_experiment_json();
    j["experiment"]["horizon"] = horizon;
    j["experiment"]["repetitions"] = reps;
    j["experiment"]["seed"] = seed;
    j["algorithm"]["nu"] = nu;
    return qde::parse_config(j);
}

} // namespace fixtures
