#pragma once

#include "qde/errors.hpp"
#include "qde/math.hpp"

#include <cmath>
#include <cstdint>

namespace qde {

/// psi^T theta_hat + omega, together with the dither that produced it.
/// The same dither feeds both the encoder and the trigger.
struct DitheredSignal {
    double inner = 0.0;
    double dither = 0.0;
};

inline DitheredSignal dither_signal(const Eigen::Ref<const Vector>& theta_hat,
                                    const Eigen::Ref<const Vector>& psi, double omega) {
    if (theta_hat.size() != psi.size()) throw DomainError("dither_signal: dimension mismatch");
    return {psi.dot(theta_hat) + omega, omega};
}

/// One-bit encoder: +1 if the dithered projection is positive, -1 otherwise (ties go to -1).
inline int encode(double dithered) noexcept { return dithered > 0.0 ? 1 : -1; }

inline int encode(const Eigen::Ref<const Vector>& theta_hat, const Eigen::Ref<const Vector>& psi,
                  double omega) {
    return encode(dither_signal(theta_hat, psi, omega).inner);
}

/// C_k = nu * ln k.
inline double trigger_threshold(double k, double nu) {
    if (!(k >= 1.0)) throw DomainError("trigger_threshold: k must be >= 1");
    if (!(nu >= 0.0)) throw DomainError("trigger_threshold: nu must be >= 0");
    return nu * std::log(k);
}

inline bool should_trigger(double dithered, double c_hat) noexcept {
    return std::abs(dithered) > c_hat;
}

inline bool should_trigger(const Eigen::Ref<const Vector>& theta_hat, const Eigen::Ref<const Vector>& psi,
                           double omega, double c_hat) {
    if (!(c_hat >= 0.0)) throw DomainError("should_trigger: threshold must be >= 0");
    return should_trigger(dither_signal(theta_hat, psi, omega).inner, c_hat);
}

/// P(|x + omega| > c) for omega ~ Lap(0,1).
inline double trigger_probability(double x, double c_hat) {
    return laplace_cdf(x - c_hat) + laplace_cdf(-x - c_hat);
}

/// Bernoulli erasure channel; each directed channel draws independently every step.
struct ChannelModel {
    double p_true = 0.1;
};

/// What a receiver sees: gamma = delivered-and-triggered, payload = gamma * z.
struct ReceivedPacket {
    int gamma = 0;
    int payload = 0;

    friend bool operator==(const ReceivedPacket&, const ReceivedPacket&) = default;
};

/// Packet-arrival draw gamma^d: 0 with probability p.
template <class Gen>
int channel_arrival(const ChannelModel& channel, Gen& edge_rng) {
    return uniform_open(edge_rng) < channel.p_true ? 0 : 1;
}

/// Resolves one directed transmission. Always consumes exactly one channel draw,
/// triggered or not.
template <class Gen>
ReceivedPacket transmit(const ChannelModel& channel, int z, bool triggered, Gen& edge_rng) {
    const int arrived = channel_arrival(channel, edge_rng);
    const int gamma = triggered ? arrived : 0;
    return {gamma, gamma * z};
}

/// s_hat = gamma z / (1 - p): unbiased against erasures with known loss rate.
inline double reconstruct(int gamma, int payload, double p_assumed) {
    if (!(p_assumed >= 0.0 && p_assumed < 1.0)) {
        throw ConfigError("algorithm.p_assumed", "must lie in [0,1)");
    }
    if ((gamma == 0) != (payload == 0)) {
        throw DomainError("reconstruct: payload inconsistent with gamma");
    }
    return static_cast<double>(payload) / (1.0 - p_assumed);
}

inline double reconstruct(const ReceivedPacket& packet, double p_assumed) {
    return reconstruct(packet.gamma, packet.payload, p_assumed);
}

/// G_k(x) = G(x - c) - G(-x - c): expected value of gamma^e z given psi^T theta_hat = x.
inline double g_hat(double x, double c_hat) {
    return laplace_cdf(x - c_hat) - laplace_cdf(-x - c_hat);
}

inline double g_hat(const Eigen::Ref<const Vector>& theta_hat, const Eigen::Ref<const Vector>& psi,
                    double c_hat) {
    if (theta_hat.size() != psi.size()) throw DomainError("g_hat: dimension mismatch");
    return g_hat(psi.dot(theta_hat), c_hat);
}

/// F(C - phi^T theta_hat): predicted probability that the measurement is 1.
inline double f_hat(const Eigen::Ref<const Vector>& theta_hat, const Eigen::Ref<const Vector>& phi,
                    double c_threshold, const NoiseModel& noise) {
    if (theta_hat.size() != phi.size()) throw DomainError("f_hat: dimension mismatch");
    return noise_cdf(noise, c_threshold - phi.dot(theta_hat));
}

} // namespace qde
