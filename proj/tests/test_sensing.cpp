#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qde/random.hpp"
#include "qde/sensing.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace qde;
using Catch::Approx;

namespace {

TrueSystem reference_system(Vector theta = Vector{{1.0, -1.0, 1.0}}) {
    TrueSystem sys;
    sys.theta = std::move(theta);
    sys.box = Box(Vector{{0.0, -2.0, 0.0}}, Vector{{2.0, 0.0, 2.0}});
    sys.sensors.assign(6, SensorModel{});
    return sys;
}

TrueSystem single_sensor(Vector theta, Vector phi, double threshold) {
    TrueSystem sys;
    sys.theta = std::move(theta);
    sys.box = Box(Vector::Constant(3, -1e9), Vector::Constant(3, 1e9));
    sys.sensors = {SensorModel{ConstantRegressor{std::move(phi)}, threshold, GaussianNoise{}}};
    return sys;
}

double frequency_of_one(const TrueSystem& sys, int draws, std::uint64_t seed) {
    int ones = 0;
    for (int k = 1; k <= draws; ++k) {
        CounterStream rng(seed, 0, StreamRole::noise, 0, static_cast<std::uint64_t>(k));
        ones += measure(sys, static_cast<std::uint64_t>(k), 0, rng);
        REQUIRE(rng.draws() == 1);
    }
    return static_cast<double>(ones) / draws;
}

} // namespace

TEST_CASE("reference regressor family", "[sensing][regressor]") {
    const RegressorFamily f = PaperExampleRegressor{};
    CHECK(regressor(f, 1, 0).isApprox(Vector{{2.0 / 3.0, 0.0, 0.0}}, 1e-15));
    CHECK(regressor(f, 1, 3).isApprox(Vector{{-0.5, 0.0, 0.0}}, 1e-15));
    CHECK(regressor(f, 2, 1).isApprox(Vector{{0.0, -1.0 + 1.0 / 16.0, 0.0}}, 1e-15));
    CHECK(regressor(f, 1, 5).isApprox(Vector{{0.0, 0.0, -0.8}}, 1e-15));
    CHECK(regressor(f, 200, 1).isApprox(Vector{{0.0, -1.0, 0.0}}, 1e-15));
    for (std::uint64_t k = 1; k < 2000; k += 7)
        for (std::size_t i = 0; i < 6; ++i) CHECK(regressor(f, k, i).norm() <= 1.0);
    CHECK_THROWS_AS(regressor(f, 1, 6), DomainError);
    CHECK_THROWS_AS(regressor(f, 0, 0), DomainError);
}

TEST_CASE("constant and table regressor families", "[sensing][regressor]") {
    const RegressorFamily c = ConstantRegressor{Vector{{3.0, 4.0}}};
    CHECK(regressor(c, 17, 2) == Vector{{3.0, 4.0}});
    CHECK(regressor_bound(c) == 5.0);
    const RegressorFamily t = TableRegressor{{Vector{{1.0, 0.0}}, Vector{{0.0, 2.0}}}};
    CHECK(regressor(t, 1, 0) == Vector{{1.0, 0.0}});
    CHECK(regressor(t, 2, 0) == Vector{{0.0, 2.0}});
    CHECK(regressor(t, 3, 0) == Vector{{1.0, 0.0}});
    CHECK(regressor_bound(t) == 2.0);
}

TEST_CASE("cooperative excitation of the reference family", "[sensing][property]") {
    const RegressorFamily f = PaperExampleRegressor{};
    std::mt19937_64 gen(23);
    std::uniform_int_distribution<std::uint64_t> pick(1, 1'000'000);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t k = trial < 5 ? static_cast<std::uint64_t>(trial + 1) : pick(gen);
        Matrix acc = Matrix::Zero(3, 3);
        for (std::size_t i = 0; i < 6; ++i) {
            const Vector phi = regressor(f, k, i);
            acc += phi * phi.transpose();
        }
        // diagonal: the regressors are axis-aligned
        CHECK((acc - Matrix(acc.diagonal().asDiagonal())).norm() == 0.0);
        CHECK(acc.diagonal().minCoeff() >= 0.25);
        Eigen::SelfAdjointEigenSolver<Matrix> es(acc);
        CHECK(es.eigenvalues()[0] >= 0.25);
    }
}

TEST_CASE("no single reference sensor is excited", "[sensing][property]") {
    const RegressorFamily f = PaperExampleRegressor{};
    for (std::size_t i = 0; i < 6; ++i) {
        Matrix acc = Matrix::Zero(3, 3);
        for (std::uint64_t k = 1; k <= 300; ++k) {
            const Vector phi = regressor(f, k, i);
            acc += phi * phi.transpose();
            if (k % 50 == 0) {
                Eigen::FullPivLU<Matrix> lu(acc);
                lu.setThreshold(1e-12);
                CHECK(lu.rank() == 1);
            }
        }
    }
}

TEST_CASE("measurement frequencies", "[sensing][measure][statistical]") {
    SECTION("zero parameter and zero threshold is a fair coin") {
        const auto sys = single_sensor(Vector::Zero(3), Vector{{0.3, -0.2, 0.9}}, 0.0);
        CHECK(std::abs(frequency_of_one(sys, 100000, 1) - 0.5) < 0.005);
    }
    SECTION("a huge threshold always reads one") {
        const auto sys = single_sensor(Vector{{1.0, -1.0, 1.0}}, Vector{{1.0, 1.0, 1.0}}, 1e6);
        CHECK(frequency_of_one(sys, 100000, 2) > 0.9999);
    }
    SECTION("frequency equals the noise cdf at C - phi^T theta") {
        const auto sys = single_sensor(Vector{{1.0, -1.0, 1.0}}, Vector{{1.0, 0.0, 0.0}}, 0.0);
        const double expected = oracle::std_normal_cdf_quadrature(-1.0);
        CHECK(expected == Approx(0.1587).margin(1e-4));
        CHECK(std::abs(frequency_of_one(sys, 100000, 3) - expected) < 0.005);
    }
}

TEST_CASE("true system validation", "[sensing][errors]") {
    CHECK_NOTHROW(reference_system().validate());
    CHECK_THROWS_AS(reference_system(Vector{{3.0, 0.0, 0.0}}).validate(), ConfigError);
    auto sys = reference_system();
    sys.sensors.push_back(SensorModel{});
    CHECK_THROWS_AS(sys.validate(), ConfigError);
}

TEST_CASE("cyclic coding vectors", "[sensing][coding]") {
    CHECK(coding_vector(1, 3) == Vector{{1.0, 0.0, 0.0}});
    CHECK(coding_vector(2, 3) == Vector{{0.0, 1.0, 0.0}});
    CHECK(coding_vector(4, 3) == Vector{{1.0, 0.0, 0.0}});
    for (std::uint64_t k = 1; k < 50; ++k) {
        Matrix acc = Matrix::Zero(3, 3);
        for (std::uint64_t l = k; l < k + 3; ++l) {
            const Vector psi = coding_vector(l, 3);
            acc += psi * psi.transpose();
        }
        CHECK(acc == Matrix::Identity(3, 3));
    }
    CHECK_THROWS_AS(coding_vector(0, 3), DomainError);
}
