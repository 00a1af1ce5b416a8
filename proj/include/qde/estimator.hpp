#pragma once

#include "qde/errors.hpp"
#include "qde/graph.hpp"
#include "qde/math.hpp"
#include "qde/protocol.hpp"
#include "qde/sensing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>

namespace qde {

struct AlgorithmConfig {
    double alpha = 20.0;     ///< consensus step coefficient
    double beta = 70.0;      ///< innovation step coefficient
    double nu = 0.1;         ///< trigger growth exponent, in [0,1)
    double p_assumed = 0.1;  ///< loss rate used by the reconstruction
    Box box;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("algorithm.alpha", "must be > 0");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("algorithm.beta", "must be > 0");
        if (!(nu >= 0.0 && nu < 1.0)) throw ConfigError("algorithm.nu", "must lie in [0,1)");
        if (!(p_assumed >= 0.0 && p_assumed < 1.0)) throw ConfigError("algorithm.p_assumed", "must lie in [0,1)");
        if (box.dim() == 0) throw ConfigError("system.box", "must be non-empty");
    }
};

/// Estimate of one sensor. `k` is the step the next update applies (starts at 1).
struct SensorState {
    Vector theta_hat;
    std::uint64_t k = 1;
};

/// Consensus input from one neighbor: a_ij and the reconstructed bit s_hat_ij.
struct NeighborSignal {
    double weight = 0.0;
    double s_hat = 0.0;
};

/// Step-dependent quantities shared by every sensor in one round.
struct StepSchedule {
    double innovation_gain;  ///< beta / k
    double consensus_gain;   ///< alpha / k^{1-nu}
    double c_hat;            ///< nu ln k

    static StepSchedule at(std::uint64_t k, const AlgorithmConfig& cfg) {
        const double kd = static_cast<double>(k);
        return {cfg.beta / kd, cfg.alpha / std::pow(kd, 1.0 - cfg.nu), cfg.nu * std::log(kd)};
    }
};

namespace detail {

inline void check_update_inputs(const SensorState& state, const Eigen::Ref<const Vector>& phi,
                                const Eigen::Ref<const Vector>& psi, const AlgorithmConfig& cfg) {
    if (state.k < 1) throw DomainError("fusion_update: step counter must be >= 1");
    const auto n = state.theta_hat.size();
    if (phi.size() != n || psi.size() != n || cfg.box.dim() != n) {
        throw DomainError("fusion_update: dimension mismatch");
    }
}

} // namespace detail

/// In-place fusion update for step state.k:
///   theta <- Proj( theta + beta/k phi (F_hat - s) + alpha/k^{1-nu} sum_j a_ij psi (s_hat_ij - G_hat) )
/// where F_hat and G_hat are evaluated at the sensor's own pre-update estimate.
inline void apply_fusion_update(SensorState& state, int s, std::span<const NeighborSignal> neighbors,
                                const Eigen::Ref<const Vector>& phi, const Eigen::Ref<const Vector>& psi,
                                const AlgorithmConfig& cfg, const NoiseModel& noise, double c_threshold,
                                const StepSchedule& sched) {
    detail::check_update_inputs(state, phi, psi, cfg);
    const double innovation = f_hat(state.theta_hat, phi, c_threshold, noise) - static_cast<double>(s);
    double consensus = 0.0;
    if (!neighbors.empty()) {
        const double gk = g_hat(state.theta_hat, psi, sched.c_hat);
        for (const auto& nb : neighbors) consensus += nb.weight * (nb.s_hat - gk);
    }
    state.theta_hat += (sched.innovation_gain * innovation) * phi + (sched.consensus_gain * consensus) * psi;
    project_box_inplace(state.theta_hat, cfg.box);
    ++state.k;
}

inline SensorState fusion_update(SensorState state, int s, std::span<const NeighborSignal> neighbors,
                                 const Eigen::Ref<const Vector>& phi, const Eigen::Ref<const Vector>& psi,
                                 const AlgorithmConfig& cfg, const NoiseModel& noise, double c_threshold,
                                 double c_hat) {
    if (state.k < 1) throw DomainError("fusion_update: step counter must be >= 1");
    StepSchedule sched = StepSchedule::at(state.k, cfg);
    sched.c_hat = c_hat;
    apply_fusion_update(state, s, neighbors, phi, psi, cfg, noise, c_threshold, sched);
    return state;
}

/// Same update without the consensus term: each sensor on its own.
inline SensorState noncooperative_update(SensorState state, int s, const Eigen::Ref<const Vector>& phi,
                                         const AlgorithmConfig& cfg, const NoiseModel& noise,
                                         double c_threshold) {
    if (state.k < 1) throw DomainError("noncooperative_update: step counter must be >= 1");
    const Vector psi = Vector::Zero(state.theta_hat.size());
    apply_fusion_update(state, s, {}, phi, psi, cfg, noise, c_threshold, StepSchedule::at(state.k, cfg));
    return state;
}

/// Worst-case step length of one fusion update at step k.
inline double update_bound(std::uint64_t k, const AlgorithmConfig& cfg, double phi_bar, double psi_bar,
                           double weight_sum) {
    const double kd = static_cast<double>(k);
    return cfg.beta * phi_bar / kd +
           cfg.alpha * psi_bar / std::pow(kd, 1.0 - cfg.nu) * weight_sum * (1.0 / (1.0 - cfg.p_assumed) + 1.0);
}

// ---------------------------------------------------------------------------
// Convergence constants.

struct TheoryConstants {
    unsigned h = 0;              ///< excitation window (length of the coding cycle)
    double delta_phi_sq = 0.0;   ///< min_k lambda_min( sum_i sum_{l=k}^{k+h-1} phi phi^T )
    double delta_psi_sq = 0.0;   ///< min_k lambda_min( (1/h) sum_{l=k}^{k+h-1} psi psi^T )
    double phi_bar = 0.0;
    double psi_bar = 0.0;
    double theta_bar = 0.0;
    double f_lower = 0.0;
    double g_lower = 0.0;
    double lambda2 = 0.0;
    double sigma = 0.0;
    double nu = 0.0;

    /// The rate condition 2 sigma >= 1 - nu.
    bool rate_condition() const noexcept { return 2.0 * sigma >= 1.0 - nu; }

    std::string report() const {
        std::ostringstream os;
        os.precision(17);
        os << "h = " << h << '\n'
           << "delta_phi_sq = " << delta_phi_sq << '\n'
           << "delta_psi_sq = " << delta_psi_sq << '\n'
           << "phi_bar = " << phi_bar << '\n'
           << "psi_bar = " << psi_bar << '\n'
           << "theta_bar = " << theta_bar << '\n'
           << "f_lower = " << f_lower << '\n'
           << "g_lower = " << g_lower << '\n'
           << "lambda2 = " << lambda2 << '\n'
           << "sigma = " << sigma << '\n'
           << "two_sigma = " << 2.0 * sigma << '\n'
           << "one_minus_nu = " << 1.0 - nu << '\n'
           << "rate_condition = " << (rate_condition() ? "satisfied" : "violated") << '\n';
        return os.str();
    }
};

/// sigma from the step coefficients, excitation levels, connectivity and density bounds.
inline double convergence_sigma(double alpha, double beta, unsigned h, double lambda2, double f_lower,
                                double g_lower, double delta_psi_sq, double delta_phi_sq, double phi_bar) {
    const double hd = static_cast<double>(h);
    const double num = alpha * beta * hd * lambda2 * f_lower * g_lower * delta_psi_sq * delta_phi_sq;
    const double den = 2.0 * beta * phi_bar * phi_bar * f_lower + alpha * g_lower * hd * lambda2 * delta_psi_sq;
    return num / den;
}

/// Integer steps 1..1000, then geometric spacing (ratio 1.01) up to k_max.
inline std::vector<double> g_lower_step_grid(std::uint64_t k_max) {
    std::vector<double> ks;
    const double kmax = static_cast<double>(std::max<std::uint64_t>(k_max, 1));
    for (double k = 1.0; k <= std::min(kmax, 1000.0); k += 1.0) ks.push_back(k);
    for (double k = 1000.0 * 1.01; k < kmax; k *= 1.01) ks.push_back(std::floor(k));
    if (ks.back() != kmax) ks.push_back(kmax);
    return ks;
}

/// inf over k in [1,k_max], |x| <= bound of k^nu (g(x - c_k) + g(-x - c_k)), on an x grid of step <= 0.01.
inline double g_lower_bound(double x_bound, double nu, std::uint64_t k_max, double grid_step = 0.01) {
    if (!(x_bound >= 0.0)) throw DomainError("g_lower_bound: bound must be >= 0");
    const auto cells = static_cast<long>(std::ceil(2.0 * x_bound / grid_step));
    const auto ks = g_lower_step_grid(k_max);
    double best = std::numeric_limits<double>::infinity();
    for (double k : ks) {
        const double c = nu * std::log(k);
        const double scale = std::pow(k, nu);
        for (long t = 0; t <= cells; ++t) {
            const double x = cells == 0 ? 0.0 : -x_bound + 2.0 * x_bound * static_cast<double>(t) / static_cast<double>(cells);
            best = std::min(best, scale * (laplace_pdf(x - c) + laplace_pdf(-x - c)));
        }
    }
    return best;
}

/// Smallest eigenvalue of sum_i sum_{l=k}^{k+h-1} phi_{l,i} phi_{l,i}^T, minimized over k in [1, k_scan].
inline double cooperative_excitation(const TrueSystem& system, unsigned h, std::uint64_t k_scan) {
    const auto n = system.dim();
    Vector phi(n);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 1; k <= k_scan; ++k) {
        Matrix acc = Matrix::Zero(n, n);
        for (std::uint64_t l = k; l < k + h; ++l) {
            for (std::size_t i = 0; i < system.sensor_count(); ++i) {
                regressor_into(system.sensors[i].regressor, l, i, phi);
                acc.noalias() += phi * phi.transpose();
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(acc, Eigen::EigenvaluesOnly);
        best = std::min(best, es.eigenvalues()[0]);
    }
    return best;
}

/// Evaluates every bound feeding sigma for the given system, graph and step coefficients.
/// Excitation is checked over k in [1, excitation_scan]; the g infimum over k in [1, k_max_for_inf].
inline TheoryConstants compute_theory_constants(const TrueSystem& system, const NetworkGraph& graph,
                                                const AlgorithmConfig& cfg,
                                                std::uint64_t k_max_for_inf = 1'000'000,
                                                std::uint64_t excitation_scan = 1000) {
    if (!is_connected(graph)) throw PreconditionError("compute_theory_constants: graph is disconnected");
    if (graph.size() != system.sensor_count()) {
        throw DomainError("compute_theory_constants: graph size differs from sensor count");
    }
    const auto n = system.dim();

    TheoryConstants tc;
    tc.nu = cfg.nu;
    tc.h = static_cast<unsigned>(n);
    tc.lambda2 = lambda2(graph);

    tc.phi_bar = 0.0;
    for (const auto& s : system.sensors) tc.phi_bar = std::max(tc.phi_bar, regressor_bound(s.regressor));
    tc.psi_bar = 1.0;
    tc.theta_bar = cfg.box.max_norm();

    // unit-basis cycling: each window of length n sums to I, so (1/h) sum = I / n
    tc.delta_psi_sq = 1.0 / static_cast<double>(tc.h);
    tc.delta_phi_sq = cooperative_excitation(system, tc.h, excitation_scan);

    tc.f_lower = std::numeric_limits<double>::infinity();
    const double reach = tc.phi_bar * tc.theta_bar;
    for (const auto& s : system.sensors) {
        tc.f_lower = std::min(tc.f_lower, noise_pdf_inf(s.noise, s.threshold - reach, s.threshold + reach));
    }
    tc.g_lower = g_lower_bound(tc.psi_bar * tc.theta_bar, cfg.nu, k_max_for_inf);

    const double checks[] = {tc.delta_phi_sq, tc.delta_psi_sq, tc.phi_bar, tc.theta_bar, tc.f_lower, tc.g_lower};
    const char* names[] = {"delta_phi_sq", "delta_psi_sq", "phi_bar", "theta_bar", "f_lower", "g_lower"};
    for (std::size_t t = 0; t < std::size(checks); ++t) {
        if (!(checks[t] > 0.0)) {
            throw PreconditionError(std::string("compute_theory_constants: ") + names[t] + " is not positive");
        }
    }
    tc.sigma = convergence_sigma(cfg.alpha, cfg.beta, tc.h, tc.lambda2, tc.f_lower, tc.g_lower,
                                 tc.delta_psi_sq, tc.delta_phi_sq, tc.phi_bar);
    return tc;
}

} // namespace qde
