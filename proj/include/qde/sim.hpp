#pragma once

#include "qde/errors.hpp"
#include "qde/estimator.hpp"
#include "qde/graph.hpp"
#include "qde/math.hpp"
#include "qde/protocol.hpp"
#include "qde/random.hpp"
#include "qde/sensing.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace qde {

enum class Mode { cooperative, noncooperative };

struct ExperimentConfig {
    TrueSystem system;
    Vector initial_estimate;
    NetworkGraph graph;
    AlgorithmConfig algorithm;
    ChannelModel channel;
    std::uint64_t repetitions = 100;
    std::uint64_t horizon = 10'000;
    std::vector<std::uint64_t> checkpoints;  ///< sorted, unique, within [1, horizon]
    std::uint64_t seed = 1;
    Mode mode = Mode::cooperative;

    void validate() const {
        system.validate();
        algorithm.validate();
        if (algorithm.box.lo != system.box.lo || algorithm.box.hi != system.box.hi) {
            throw ConfigError("algorithm.box", "must equal system.box");
        }
        if (initial_estimate.size() != system.dim()) {
            throw ConfigError("system.initial_estimate", "dimension differs from theta");
        }
        if (graph.size() != system.sensor_count()) {
            throw ConfigError("graph.nodes", "node count differs from sensor count");
        }
        if (!(channel.p_true >= 0.0 && channel.p_true < 1.0)) {
            throw ConfigError("channel.p_true", "loss probability must lie in [0,1)");
        }
        if (repetitions < 1) throw ConfigError("experiment.repetitions", "must be >= 1");
        if (horizon < 1) throw ConfigError("experiment.horizon", "must be >= 1");
        if (checkpoints.empty()) throw ConfigError("experiment.checkpoints", "must be non-empty");
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            if (checkpoints[c] < 1 || checkpoints[c] > horizon) {
                throw ConfigError("experiment.checkpoints", "entries must lie in [1, horizon]");
            }
            if (c > 0 && checkpoints[c] <= checkpoints[c - 1]) {
                throw ConfigError("experiment.checkpoints", "must be strictly increasing");
            }
        }
        if (mode == Mode::cooperative && !is_connected(graph)) {
            throw ConfigError("graph.edges", "graph must be connected in cooperative mode");
        }
    }
};

/// Roughly `per_decade` log-spaced integer steps per decade, always ending at the horizon.
inline std::vector<std::uint64_t> log_checkpoints(std::uint64_t horizon, unsigned per_decade = 10) {
    std::vector<std::uint64_t> out;
    for (unsigned t = 0;; ++t) {
        const double v = std::round(std::pow(10.0, static_cast<double>(t) / per_decade));
        const auto k = static_cast<std::uint64_t>(v);
        if (k > horizon) break;
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    if (out.empty() || out.back() != horizon) out.push_back(horizon);
    return out;
}

/// A directed channel i -> j.
struct DirectedEdge {
    std::size_t from;
    std::size_t to;
    double weight;
};

inline std::vector<DirectedEdge> directed_edges(const NetworkGraph& g) {
    std::vector<DirectedEdge> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j : g.neighbors(i)) out.push_back({i, j, g.weight(i, j)});
    return out;
}

/// Cumulative bit counts at checkpoints, summed over channels (and over runs when aggregated).
struct BitCounts {
    std::vector<std::uint64_t> checkpoints;
    std::vector<std::uint64_t> sent;
    std::vector<std::uint64_t> delivered;
    std::uint64_t runs = 0;
    std::size_t total_degree = 0;
};

/// kappa(k) = bits sent over [1,k] / (runs * k * sum_i d_i). Zero for edgeless graphs.
inline double comm_bit_rate(const BitCounts& bits, std::uint64_t k) {
    const auto it = std::lower_bound(bits.checkpoints.begin(), bits.checkpoints.end(), k);
    if (it == bits.checkpoints.end() || *it != k) {
        throw DomainError("comm_bit_rate: step " + std::to_string(k) + " is not a recorded checkpoint");
    }
    if (bits.total_degree == 0 || bits.runs == 0) return 0.0;
    const auto c = static_cast<std::size_t>(it - bits.checkpoints.begin());
    return static_cast<double>(bits.sent[c]) /
           (static_cast<double>(bits.runs) * static_cast<double>(k) * static_cast<double>(bits.total_degree));
}

struct RunTrace {
    std::vector<std::uint64_t> checkpoints;
    std::size_t sensors = 0;
    std::vector<DirectedEdge> edges;
    std::vector<double> sq_error;               ///< [checkpoint * sensors + i] = ||theta_hat - theta||^2
    std::vector<std::uint64_t> bits_sent;       ///< [checkpoint * edges + e], cumulative
    std::vector<std::uint64_t> bits_delivered;  ///< [checkpoint * edges + e], cumulative

    double sq_error_at(std::size_t c, std::size_t i) const { return sq_error[c * sensors + i]; }
    std::uint64_t sent_at(std::size_t c, std::size_t e) const { return bits_sent[c * edges.size() + e]; }
    std::uint64_t delivered_at(std::size_t c, std::size_t e) const { return bits_delivered[c * edges.size() + e]; }

    double mean_sq_error(std::size_t c) const {
        double s = 0.0;
        for (std::size_t i = 0; i < sensors; ++i) s += sq_error_at(c, i);
        return s / static_cast<double>(sensors);
    }

    BitCounts bit_counts() const {
        BitCounts b{checkpoints, std::vector<std::uint64_t>(checkpoints.size(), 0),
                    std::vector<std::uint64_t>(checkpoints.size(), 0), 1, edges.size()};
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            for (std::size_t e = 0; e < edges.size(); ++e) {
                b.sent[c] += sent_at(c, e);
                b.delivered[c] += delivered_at(c, e);
            }
        }
        return b;
    }

    friend bool operator==(const RunTrace& a, const RunTrace& b) {
        return a.checkpoints == b.checkpoints && a.sensors == b.sensors && a.sq_error == b.sq_error &&
               a.bits_sent == b.bits_sent && a.bits_delivered == b.bits_delivered;
    }
};

/// Executes one Monte Carlo run. Randomness for (role, entity, step) comes from its own
/// counter stream, so the run depends only on (seed, run_index) and the config.
inline RunTrace run_single(const ExperimentConfig& cfg, std::uint64_t run_index) {
    cfg.validate();
    const TrueSystem& sys = cfg.system;
    const AlgorithmConfig& alg = cfg.algorithm;
    const std::size_t m = sys.sensor_count();
    const Eigen::Index n = sys.dim();
    const bool cooperative = cfg.mode == Mode::cooperative;

    RunTrace trace;
    trace.checkpoints = cfg.checkpoints;
    trace.sensors = m;
    if (cooperative) trace.edges = directed_edges(cfg.graph);
    const std::size_t ne = trace.edges.size();
    trace.sq_error.assign(cfg.checkpoints.size() * m, 0.0);
    trace.bits_sent.assign(cfg.checkpoints.size() * ne, 0);
    trace.bits_delivered.assign(cfg.checkpoints.size() * ne, 0);

    std::vector<SensorState> states(m, SensorState{cfg.initial_estimate, 1});
    std::vector<std::vector<NeighborSignal>> inbox(m);
    for (auto& box : inbox) box.reserve(m);
    std::vector<int> z(m, 0);
    std::vector<char> triggered(m, 0);
    std::vector<std::uint64_t> sent(ne, 0), delivered(ne, 0);
    Vector phi(n);
    const Vector zero_psi = Vector::Zero(n);
    Vector psi(n);

    std::size_t next_cp = 0;
    for (std::uint64_t k = 1; k <= cfg.horizon; ++k) {
        const StepSchedule sched = StepSchedule::at(k, alg);
        const Eigen::Index active = coding_index(k, n);

        for (auto& box : inbox) box.clear();
        if (cooperative) {
            psi.setZero();
            psi[active] = 1.0;
            // 1. dither, encode, trigger
            for (std::size_t i = 0; i < m; ++i) {
                CounterStream dither_rng(cfg.seed, run_index, StreamRole::dither, i, k);
                const double dithered = states[i].theta_hat[active] + sample_laplace(dither_rng);
                z[i] = encode(dithered);
                triggered[i] = should_trigger(dithered, sched.c_hat) ? 1 : 0;
            }
            // 2. channels: one draw per directed edge per step
            for (std::size_t e = 0; e < ne; ++e) {
                const auto& de = trace.edges[e];
                CounterStream edge_rng(cfg.seed, run_index, StreamRole::channel, de.from * m + de.to, k);
                const ReceivedPacket pkt = transmit(cfg.channel, z[de.from], triggered[de.from] != 0, edge_rng);
                sent[e] += static_cast<std::uint64_t>(triggered[de.from]);
                delivered[e] += static_cast<std::uint64_t>(pkt.gamma);
                inbox[de.to].push_back({de.weight, reconstruct(pkt, alg.p_assumed)});
            }
        }
        // 3. measure, 4. synchronous fusion (inputs above were taken from pre-update estimates)
        for (std::size_t i = 0; i < m; ++i) {
            const SensorModel& sensor = sys.sensors[i];
            regressor_into(sensor.regressor, k, i, phi);
            CounterStream noise_rng(cfg.seed, run_index, StreamRole::noise, i, k);
            const int s = measure_with(phi, sys.theta, sensor, noise_rng);
            apply_fusion_update(states[i], s, inbox[i], phi, cooperative ? psi : zero_psi, alg, sensor.noise,
                                sensor.threshold, sched);
        }

        if (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == k) {
            for (std::size_t i = 0; i < m; ++i) {
                trace.sq_error[next_cp * m + i] = (states[i].theta_hat - sys.theta).squaredNorm();
            }
            std::copy(sent.begin(), sent.end(), trace.bits_sent.begin() + static_cast<std::ptrdiff_t>(next_cp * ne));
            std::copy(delivered.begin(), delivered.end(),
                      trace.bits_delivered.begin() + static_cast<std::ptrdiff_t>(next_cp * ne));
            ++next_cp;
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Log-log slope fitting.

struct SlopeFit {
    double slope = 0.0;
    double half_width = 0.0;  ///< 95% confidence half-width of the slope
    double intercept = 0.0;
    std::size_t points = 0;
};

/// OLS fit of ln(value) on ln(k) over points with k in [k_min, k_max].
inline SlopeFit fit_loglog_slope(std::span<const double> ks, std::span<const double> values, double k_min,
                                 double k_max) {
    if (ks.size() != values.size()) throw DomainError("fit_loglog_slope: length mismatch");
    std::vector<double> x, y;
    for (std::size_t t = 0; t < ks.size(); ++t) {
        if (ks[t] < k_min || ks[t] > k_max) continue;
        if (!(values[t] > 0.0) || !(ks[t] > 0.0)) {
            throw DomainError("fit_loglog_slope: values must be positive");
        }
        x.push_back(std::log(ks[t]));
        y.push_back(std::log(values[t]));
    }
    if (x.size() < 5) throw DomainError("fit_loglog_slope: need at least 5 points in range");

    const double npts = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / npts;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / npts;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        sxx += (x[t] - mx) * (x[t] - mx);
        sxy += (x[t] - mx) * (y[t] - my);
    }
    SlopeFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double r = y[t] - fit.intercept - fit.slope * x[t];
        sse += r * r;
    }
    const double dof = npts - 2.0;
    const double se = std::sqrt(sse / dof / sxx);
    const boost::math::students_t dist(dof);
    fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    return fit;
}

inline SlopeFit fit_loglog_slope(std::span<const std::uint64_t> ks, std::span<const double> values,
                                 double k_min, double k_max) {
    std::vector<double> kd(ks.begin(), ks.end());
    return fit_loglog_slope(std::span<const double>(kd), values, k_min, k_max);
}

/// With the rate exponent pinned at -(1-nu), least-squares coefficient b of ln ln k in
/// ln MSE + (1-nu) ln k = c + b ln ln k; returns tau = b - 1. Needs k >= 3.
inline double fit_log_exponent(std::span<const std::uint64_t> ks, std::span<const double> mse, double nu,
                               double k_min, double k_max) {
    std::vector<double> x, y;
    for (std::size_t t = 0; t < ks.size(); ++t) {
        const double k = static_cast<double>(ks[t]);
        if (k < std::max(k_min, 3.0) || k > k_max || !(mse[t] > 0.0)) continue;
        x.push_back(std::log(std::log(k)));
        y.push_back(std::log(mse[t]) + (1.0 - nu) * std::log(k));
    }
    if (x.size() < 3) return std::nan("");
    const double npts = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / npts;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / npts;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        sxx += (x[t] - mx) * (x[t] - mx);
        sxy += (x[t] - mx) * (y[t] - my);
    }
    return sxy / sxx - 1.0;
}

// ---------------------------------------------------------------------------
// Monte Carlo aggregation.

struct NamedSlope {
    std::string series;
    double k_min = 0.0;
    double k_max = 0.0;
    SlopeFit fit;
};

struct MetricsSummary {
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> mse;         ///< mean over runs and sensors
    std::vector<double> mse_stderr;  ///< standard error over runs of the per-run sensor mean
    std::vector<std::vector<double>> sensor_mse;  ///< [i][checkpoint], mean over runs
    std::vector<double> kappa;
    BitCounts bits;
    std::vector<NamedSlope> slopes;
    double tau = std::nan("");  ///< log-factor nuisance exponent of the MSE fit

    std::size_t index_of(std::uint64_t k) const {
        const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), k);
        if (it == checkpoints.end() || *it != k) {
            throw DomainError("MetricsSummary: step " + std::to_string(k) + " is not a checkpoint");
        }
        return static_cast<std::size_t>(it - checkpoints.begin());
    }
};

struct MonteCarloOptions {
    unsigned threads = 0;                      ///< 0 = hardware concurrency
    std::optional<std::vector<std::uint64_t>> order;  ///< execution order of run indices (a permutation)
};

/// Default fit windows: MSE over the last two decades, kappa over the last three.
inline std::pair<double, double> default_mse_fit_range(std::uint64_t horizon) {
    return {std::max(1.0, static_cast<double>(horizon) / 100.0), static_cast<double>(horizon)};
}
inline std::pair<double, double> default_kappa_fit_range(std::uint64_t horizon) {
    return {std::max(1.0, static_cast<double>(horizon) / 1000.0), static_cast<double>(horizon)};
}

/// Reduces traces in run-index order; the result doesn't depend on how they were produced.
inline MetricsSummary summarize(const ExperimentConfig& cfg, std::span<const RunTrace> traces) {
    const std::size_t nc = cfg.checkpoints.size();
    const std::size_t m = cfg.system.sensor_count();
    const double r = static_cast<double>(traces.size());

    MetricsSummary out;
    out.checkpoints = cfg.checkpoints;
    out.mse.assign(nc, 0.0);
    out.mse_stderr.assign(nc, 0.0);
    out.sensor_mse.assign(m, std::vector<double>(nc, 0.0));
    out.bits = BitCounts{cfg.checkpoints, std::vector<std::uint64_t>(nc, 0), std::vector<std::uint64_t>(nc, 0),
                         traces.size(), cfg.mode == Mode::cooperative ? cfg.graph.total_degree() : 0};

    for (std::size_t c = 0; c < nc; ++c) {
        double sum = 0.0, sumsq = 0.0;
        for (const auto& t : traces) {
            const double v = t.mean_sq_error(c);
            sum += v;
            sumsq += v * v;
            for (std::size_t i = 0; i < m; ++i) out.sensor_mse[i][c] += t.sq_error_at(c, i) / r;
            for (std::size_t e = 0; e < t.edges.size(); ++e) {
                out.bits.sent[c] += t.sent_at(c, e);
                out.bits.delivered[c] += t.delivered_at(c, e);
            }
        }
        out.mse[c] = sum / r;
        if (traces.size() > 1) {
            const double var = std::max(0.0, (sumsq - sum * sum / r) / (r - 1.0));
            out.mse_stderr[c] = std::sqrt(var / r);
        }
    }
    out.kappa.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) out.kappa[c] = comm_bit_rate(out.bits, cfg.checkpoints[c]);

    const auto [mlo, mhi] = default_mse_fit_range(cfg.horizon);
    try {
        out.slopes.push_back({"mse", mlo, mhi, fit_loglog_slope(out.checkpoints, out.mse, mlo, mhi)});
        out.tau = fit_log_exponent(out.checkpoints, out.mse, cfg.algorithm.nu, mlo, mhi);
    } catch (const DomainError&) {
        // too few checkpoints or a zero MSE: no fit
    }
    const auto [klo, khi] = default_kappa_fit_range(cfg.horizon);
    try {
        out.slopes.push_back({"kappa", klo, khi, fit_loglog_slope(out.checkpoints, out.kappa, klo, khi)});
    } catch (const DomainError&) {
    }
    return out;
}

/// Runs cfg.repetitions independent runs, possibly on several threads.
inline std::vector<RunTrace> run_traces(const ExperimentConfig& cfg, const MonteCarloOptions& opts = {}) {
    cfg.validate();
    const std::uint64_t reps = cfg.repetitions;
    std::vector<std::uint64_t> order(reps);
    std::iota(order.begin(), order.end(), 0);
    if (opts.order) {
        std::vector<std::uint64_t> sorted = *opts.order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != order) throw DomainError("run_monte_carlo: order must be a permutation of run indices");
        order = *opts.order;
    }

    std::vector<RunTrace> traces(reps);
    unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, reps));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t slot; (slot = next.fetch_add(1)) < order.size();) {
            try {
                traces[order[slot]] = run_single(cfg, order[slot]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return traces;
}

inline MetricsSummary run_monte_carlo(const ExperimentConfig& cfg, const MonteCarloOptions& opts = {}) {
    const auto traces = run_traces(cfg, opts);
    return summarize(cfg, traces);
}

} // namespace qde
