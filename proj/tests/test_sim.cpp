#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "qde/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace qde;
using Catch::Approx;

TEST_CASE("log checkpoints", "[sim][checkpoints]") {
    const auto cps = log_checkpoints(1000);
    CHECK(cps.front() == 1);
    CHECK(cps.back() == 1000);
    CHECK(std::is_sorted(cps.begin(), cps.end()));
    CHECK(std::adjacent_find(cps.begin(), cps.end()) == cps.end());
    CHECK(std::find(cps.begin(), cps.end(), 100) != cps.end());
    CHECK(log_checkpoints(1) == std::vector<std::uint64_t>{1});
    CHECK(log_checkpoints(37).back() == 37);
}

TEST_CASE("horizon zero is rejected", "[sim][errors]") {
    auto cfg = fixtures::reference(10, 1);
    cfg.horizon = 0;
    cfg.checkpoints = {};
    CHECK_THROWS_AS(run_single(cfg, 0), ConfigError);
}

TEST_CASE("a single round", "[sim]") {
    auto cfg = fixtures::reference(1, 1);
    const RunTrace t = run_single(cfg, 0);
    REQUIRE(t.checkpoints == std::vector<std::uint64_t>{1});
    CHECK(t.edges.size() == 12);
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
        CHECK(t.sent_at(0, e) <= 1);
        CHECK(t.delivered_at(0, e) <= t.sent_at(0, e));
    }
    for (std::size_t i = 0; i < 6; ++i) CHECK(t.sq_error_at(0, i) > 0.0);
}

TEST_CASE("nu = 0 always triggers", "[sim][bits]") {
    const auto cfg = fixtures::reference(500, 1, 0.0);
    const RunTrace t = run_single(cfg, 3);
    for (std::size_t c = 0; c < t.checkpoints.size(); ++c)
        for (std::size_t e = 0; e < t.edges.size(); ++e) CHECK(t.sent_at(c, e) == t.checkpoints[c]);
    const BitCounts b = t.bit_counts();
    for (auto k : t.checkpoints) CHECK(comm_bit_rate(b, k) == 1.0);
}

TEST_CASE("lossless always-on channels deliver every bit", "[sim][bits]") {
    auto j = reference_experiment_json();
    j["experiment"]["horizon"] = 300;
    j["experiment"]["repetitions"] = 2;
    j["algorithm"]["nu"] = 0.0;
    j["channel"]["p_true"] = 0.0;
    j["algorithm"]["p_assumed"] = 0.0;
    const auto t = run_single(parse_config(j), 1);
    CHECK(t.bits_sent == t.bits_delivered);
}

TEST_CASE("bit counters are monotone and bounded by k", "[sim][bits][property]") {
    for (double nu : {0.1, 0.4}) {
        const RunTrace t = run_single(fixtures::reference(2000, 1, nu), 0);
        for (std::size_t e = 0; e < t.edges.size(); ++e) {
            for (std::size_t c = 0; c < t.checkpoints.size(); ++c) {
                CHECK(t.sent_at(c, e) <= t.checkpoints[c]);
                CHECK(t.delivered_at(c, e) <= t.sent_at(c, e));
                if (c > 0) CHECK(t.sent_at(c, e) >= t.sent_at(c - 1, e));
            }
        }
        const BitCounts b = t.bit_counts();
        for (auto k : t.checkpoints) {
            const double kappa = comm_bit_rate(b, k);
            CHECK(kappa >= 0.0);
            CHECK(kappa <= 1.0);
        }
    }
}

TEST_CASE("comm_bit_rate arithmetic", "[sim][bits]") {
    // C6: total degree 12; every channel carries a bit at l = 1 only
    BitCounts b{{1, 2}, {12, 12}, {12, 12}, 1, 12};
    CHECK(comm_bit_rate(b, 1) == 1.0);
    CHECK(comm_bit_rate(b, 2) == 0.5);
    BitCounts silent{{1, 2}, {0, 0}, {0, 0}, 1, 12};
    CHECK(comm_bit_rate(silent, 2) == 0.0);
    CHECK_THROWS_AS(comm_bit_rate(b, 3), DomainError);
}

TEST_CASE("runs are reproducible and distinct across indices", "[sim][determinism]") {
    const auto cfg = fixtures::reference(1000, 1);
    const RunTrace a = run_single(cfg, 5), b = run_single(cfg, 5), c = run_single(cfg, 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("a run depends only on its own streams", "[sim][determinism]") {
    // changing nu changes trigger decisions, but the measurement noise stream is untouched:
    // the non-cooperative runs for two nu values must coincide exactly
    auto a = fixtures::reference(500, 1, 0.1);
    auto b = fixtures::reference(500, 1, 0.5);
    a.mode = b.mode = Mode::noncooperative;
    CHECK(run_single(a, 2).sq_error == run_single(b, 2).sq_error);
}

TEST_CASE("Monte Carlo with one run equals the trace", "[sim][monte_carlo]") {
    const auto cfg = fixtures::reference(300, 1);
    const RunTrace t = run_single(cfg, 0);
    const MetricsSummary s = run_monte_carlo(cfg);
    for (std::size_t c = 0; c < t.checkpoints.size(); ++c) {
        CHECK(s.mse[c] == Approx(t.mean_sq_error(c)).epsilon(1e-15));
        CHECK(s.mse_stderr[c] == 0.0);
    }
    CHECK(s.bits.sent == t.bit_counts().sent);
}

TEST_CASE("execution order and thread count do not change the summary", "[sim][monte_carlo][determinism]") {
    const auto cfg = fixtures::reference(400, 8);
    const MetricsSummary base = run_monte_carlo(cfg, {1, std::nullopt});
    std::vector<std::uint64_t> order(8);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 3; ++trial) {
        std::shuffle(order.begin(), order.end(), gen);
        const MetricsSummary s = run_monte_carlo(cfg, {static_cast<unsigned>(1 + trial), order});
        CHECK(s.mse == base.mse);
        CHECK(s.mse_stderr == base.mse_stderr);
        CHECK(s.kappa == base.kappa);
        CHECK(s.bits.sent == base.bits.sent);
    }
    CHECK_THROWS_AS(run_monte_carlo(cfg, {1, std::vector<std::uint64_t>{0, 1, 2}}), DomainError);
}

TEST_CASE("the first-step MSE respects the box", "[sim][monte_carlo]") {
    const auto cfg = fixtures::reference(1, 20);
    const MetricsSummary s = run_monte_carlo(cfg);
    double corner = 0.0;
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double d = std::max(cfg.system.theta[j] - cfg.system.box.lo[j], cfg.system.box.hi[j] - cfg.system.theta[j]);
        corner += d * d;
    }
    CHECK(s.mse[0] <= corner);
}

TEST_CASE("non-cooperative error never drops below the unexcited floor", "[sim][noncoop]") {
    auto cfg = fixtures::reference(3000, 4);
    cfg.mode = Mode::noncooperative;
    const MetricsSummary s = run_monte_carlo(cfg);
    for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
        for (std::size_t i = 0; i < 6; ++i) CHECK(s.sensor_mse[i][c] >= 0.5);
        CHECK(s.kappa[c] == 0.0);
    }
}

TEST_CASE("cooperative MSE decreases across decades", "[sim][monte_carlo]") {
    const MetricsSummary s = run_monte_carlo(fixtures::reference(10000, 20));
    auto median_in = [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<double> v;
        for (std::size_t c = 0; c < s.checkpoints.size(); ++c)
            if (s.checkpoints[c] >= lo && s.checkpoints[c] < hi) v.push_back(s.mse[c]);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median_in(10, 100) > median_in(100, 1000));
    CHECK(median_in(100, 1000) > median_in(1000, 10001));
}

TEST_CASE("log-log slope fits", "[sim][fit]") {
    std::vector<double> ks, power, flat, logcorr;
    for (int t = 0; t <= 20; ++t) {
        const double k = std::pow(10.0, 3.0 + t / 10.0);
        ks.push_back(k);
        power.push_back(std::pow(k, -0.9));
        flat.push_back(4.2);
        logcorr.push_back(std::log(k) / k);
    }
    const auto p = fit_loglog_slope(std::span<const double>(ks), power, 1e3, 1e5);
    CHECK(std::abs(p.slope + 0.9) < 1e-9);
    CHECK(p.half_width < 1e-9);
    CHECK(p.points == 21);
    CHECK(std::abs(fit_loglog_slope(std::span<const double>(ks), flat, 1e3, 1e5).slope) < 1e-12);
    const double s = fit_loglog_slope(std::span<const double>(ks), logcorr, 1e3, 1e5).slope;
    CHECK(s > -1.0);
    CHECK(s < -0.85);

    const std::vector<double> few{1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(fit_loglog_slope(std::span<const double>(few), few, 0, 10), DomainError);
    std::vector<double> bad = power;
    bad[3] = 0.0;
    CHECK_THROWS_AS(fit_loglog_slope(std::span<const double>(ks), bad, 1e3, 1e5), DomainError);
}

TEST_CASE("log exponent nuisance fit recovers a planted tau", "[sim][fit]") {
    std::vector<std::uint64_t> ks;
    std::vector<double> v;
    for (int t = 0; t <= 20; ++t) {
        const double k = std::round(std::pow(10.0, 3.0 + t / 10.0));
        ks.push_back(static_cast<std::uint64_t>(k));
        v.push_back(std::pow(std::log(k), 1.3) / std::pow(k, 0.9));
    }
    CHECK(fit_log_exponent(ks, v, 0.1, 1e3, 1e5) == Approx(0.3).margin(1e-9));
}
