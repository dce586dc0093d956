#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dnt/forecast.hpp"
#include "dnt/rng.hpp"

using namespace dnt;

namespace {

ForecastModel random_model(Rng& rng, int w) {
    ForecastModel m = ForecastModel::zeros(w);
    for (auto& v : m.weights) v = rng.uniform(-1, 1);
    m.bias = rng.uniform(-1, 1);
    return m;
}

std::vector<Sample> random_samples(Rng& rng, int w, int n) {
    std::vector<Sample> s(static_cast<std::size_t>(n));
    for (auto& smp : s) {
        smp.window.resize(static_cast<std::size_t>(w));
        for (auto& v : smp.window) v = rng.uniform(-2, 2);
        smp.target = rng.uniform(-2, 2);
    }
    return s;
}

}  // namespace

TEST_CASE("predict examples") {
    ForecastModel m = ForecastModel::zeros(3);
    m.bias = 3.0;
    std::vector<double> w{9.0, 4.0, 1.0};
    CHECK(predict(m, w) == doctest::Approx(3.0));

    m.weights = {1.0, 0.0, 0.0};
    m.bias = 0.0;
    std::vector<double> w2{7.0, 5.0, 2.0};
    CHECK(predict(m, w2) == doctest::Approx(7.0));

    ForecastModel m2 = ForecastModel::zeros(2);
    m2.weights = {0.5, 0.5};
    m2.bias = 1.0;
    std::vector<double> w3{2.0, 4.0};
    CHECK(predict(m2, w3) == doctest::Approx(4.0));

    std::vector<double> bad{1.0, 2.0};
    CHECK_THROWS_AS(predict(m, bad), DimensionError);
}

TEST_CASE("mse_loss examples") {
    ForecastModel m = ForecastModel::zeros(1);
    m.weights = {1.0};
    std::vector<Sample> perfect{{{2.0}, 2.0}, {{5.0}, 5.0}};
    CHECK(mse_loss(m, perfect) == doctest::Approx(0.0));

    ForecastModel zero = ForecastModel::zeros(1);
    std::vector<Sample> pm{{{0.0}, 1.0}, {{0.0}, -1.0}};
    CHECK(mse_loss(zero, pm) == doctest::Approx(1.0));

    std::vector<Sample> empty;
    CHECK_THROWS_AS(mse_loss(zero, empty), DomainError);
}

TEST_CASE("mse_loss matches direct summation oracle") {
    Rng rng(11);
    ForecastModel m = random_model(rng, 4);
    auto samples = random_samples(rng, 4, 5);
    double acc = 0;
    for (const auto& s : samples) {
        double pred = m.bias;
        for (int i = 0; i < 4; ++i) pred += m.weights[static_cast<std::size_t>(i)] * s.window[static_cast<std::size_t>(i)];
        acc += (pred - s.target) * (pred - s.target);
    }
    CHECK(mse_loss(m, samples) == doctest::Approx(acc / 5.0).epsilon(1e-12));
}

TEST_CASE("gradient examples") {
    ForecastModel m = ForecastModel::zeros(1);
    m.weights = {1.0};
    std::vector<Sample> perfect{{{3.0}, 3.0}};
    auto g = gradient(m, perfect);
    CHECK(g[0] == doctest::Approx(0.0));
    CHECK(g[1] == doctest::Approx(0.0));

    ForecastModel zero = ForecastModel::zeros(1);
    std::vector<Sample> one{{{1.0}, 1.0}};
    g = gradient(zero, one);
    CHECK(g[0] == doctest::Approx(-2.0));
    CHECK(g[1] == doctest::Approx(-2.0));
}

// Central finite differences, 100 random instances, relative error < 1e-5.
TEST_CASE("gradient matches finite differences") {
    Rng rng(2024);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        int w = static_cast<int>(rng.uniform_int(1, 8));
        ForecastModel m = random_model(rng, w);
        auto samples = random_samples(rng, w, static_cast<int>(rng.uniform_int(2, 12)));
        ParameterVector g = gradient(m, samples);

        ParameterVector packed = m.pack();
        for (std::size_t d = 0; d < packed.size(); ++d) {
            ParameterVector up = packed, down = packed;
            up[d] += h;
            down[d] -= h;
            double fd = (mse_loss(ForecastModel::unpack(up), samples) -
                         mse_loss(ForecastModel::unpack(down), samples)) /
                        (2 * h);
            double denom = std::max(1.0, std::fabs(g[d]));
            CHECK(std::fabs(fd - g[d]) / denom < 1e-5);
        }
    }
}

TEST_CASE("one small gradient step never increases loss") {
    Rng rng(77);
    const double lr = 1e-3;
    for (int trial = 0; trial < 100; ++trial) {
        int w = static_cast<int>(rng.uniform_int(1, 6));
        ForecastModel m = random_model(rng, w);
        auto samples = random_samples(rng, w, static_cast<int>(rng.uniform_int(2, 10)));
        double before = mse_loss(m, samples);
        ParameterVector g = gradient(m, samples);
        for (int i = 0; i < w; ++i) m.weights[static_cast<std::size_t>(i)] -= lr * g[static_cast<std::size_t>(i)];
        m.bias -= lr * g.back();
        CHECK(mse_loss(m, samples) <= before + 1e-12);
    }
}

TEST_CASE("predict is affine-linear in the window") {
    Rng rng(5);
    ForecastModel m = random_model(rng, 6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(6), y(6), z(6);
        double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        for (int i = 0; i < 6; ++i) {
            x[static_cast<std::size_t>(i)] = rng.uniform(-3, 3);
            y[static_cast<std::size_t>(i)] = rng.uniform(-3, 3);
            z[static_cast<std::size_t>(i)] = a * x[static_cast<std::size_t>(i)] + b * y[static_cast<std::size_t>(i)];
        }
        double lhs = predict(m, z);
        double rhs = a * predict(m, x) + b * predict(m, y) - (a + b - 1) * m.bias;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("parameter packing round-trips") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        ParameterVector v(static_cast<std::size_t>(rng.uniform_int(2, 20)));
        for (auto& x : v) x = rng.uniform(-4, 4);
        CHECK(ForecastModel::unpack(v).pack() == v);
    }
}

TEST_CASE("train_local epochs 0 is a no-op") {
    std::vector<double> series{1, 2, 3, 4, 5, 6, 7, 8};
    TrainingConfig cfg;
    cfg.epochs = 0;
    cfg.norm = NormStats::fit(series);
    ForecastModel m = ForecastModel::zeros(3);
    m.weights = {0.1, 0.2, 0.3};
    m.bias = 0.4;
    auto [out, n] = train_local(m, series, cfg);
    CHECK(out.pack() == m.pack());
    CHECK(n == 5);
}

TEST_CASE("train_local on a constant series has non-increasing loss per epoch") {
    std::vector<double> series(40, 7.0);
    // Stats frozen from a wider split so the constant maps inside (0, 1).
    NormStats norm{0.0, 14.0};
    std::vector<double> normalized(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) normalized[i] = norm.norm(series[i]);
    auto samples = make_windows(normalized, 4);

    ForecastModel m = ForecastModel::zeros(4);
    TrainingConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = 1;
    cfg.norm = norm;
    double prev = mse_loss(m, samples);
    for (int e = 0; e < 30; ++e) {
        auto [next, n] = train_local(m, series, cfg);
        (void)n;
        m = next;
        double loss = mse_loss(m, samples);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
    // Converges toward predicting the normalized constant.
    std::vector<double> win(4, norm.norm(7.0));
    CHECK(std::fabs(predict(m, win) - norm.norm(7.0)) < 0.2);
}

TEST_CASE("train_local is deterministic") {
    Rng rng(13);
    std::vector<double> series(60);
    for (auto& v : series) v = rng.uniform(0, 10);
    TrainingConfig cfg;
    cfg.norm = NormStats::fit(series);
    ForecastModel m = ForecastModel::zeros(5);
    auto a = train_local(m, series, cfg);
    auto b = train_local(m, series, cfg);
    CHECK(a.first.pack() == b.first.pack());
    CHECK(a.second == b.second);
}

TEST_CASE("train_local rejects short series") {
    std::vector<double> series{1, 2, 3};
    TrainingConfig cfg;
    CHECK_THROWS_AS(train_local(ForecastModel::zeros(5), series, cfg), DomainError);
}

TEST_CASE("rolling_forecast selector and shape") {
    // Selector weight on the most recent window element.
    ForecastModel m = ForecastModel::zeros(3);
    m.weights = {0.0, 0.0, 1.0};
    NormStats norm{0.0, 10.0};
    std::vector<double> series{1, 2, 3, 4, 5, 6, 7};

    auto one = rolling_forecast(m, std::span<const double>(series.data(), 4), 1, norm);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(series[2]));  // last observed before the target

    auto many = rolling_forecast(m, series, 4, norm);
    CHECK(many.size() == 4);
    for (std::size_t i = 0; i < many.size(); ++i)
        CHECK(many[i] == doctest::Approx(series[i + 2]));

    CHECK_THROWS_AS(rolling_forecast(m, series, 0, norm), DomainError);
    CHECK_THROWS_AS(rolling_forecast(m, series, 10, norm), DomainError);
}

TEST_CASE("rolling_forecast at the converged fixed point of a constant series") {
    std::vector<double> series(50, 5.0);
    NormStats norm{0.0, 10.0};
    // Closed-form fixed point: bias = normalized constant, zero weights.
    ForecastModel m = ForecastModel::zeros(4);
    m.bias = norm.norm(5.0);
    auto preds = rolling_forecast(m, series, 20, norm);
    for (double p : preds) CHECK(p == doctest::Approx(5.0).epsilon(1e-6));
}
