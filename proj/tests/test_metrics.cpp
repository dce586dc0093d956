#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dnt/metrics.hpp"
#include "dnt/rng.hpp"

using namespace dnt;

TEST_CASE("quality_report basics") {
    std::vector<double> t{1.0, 2.0, 3.0};
    auto rep = quality_report(t, t);
    CHECK(rep.mae == 0.0);
    CHECK(rep.mse == 0.0);
    CHECK(rep.nrmse.has_value());
    CHECK(*rep.nrmse == 0.0);

    std::vector<double> p{0.0, 0.0};
    std::vector<double> t2{1.0, -1.0};
    rep = quality_report(p, t2);
    CHECK(rep.mae == doctest::Approx(1.0));
    CHECK(rep.mse == doctest::Approx(1.0));
    CHECK(*rep.nrmse == doctest::Approx(0.5));
}

TEST_CASE("quality_report caps at 100 with flags") {
    std::vector<double> p{250.0, 250.0};
    std::vector<double> t{0.0, 1.0};
    auto rep = quality_report(p, t);
    CHECK(rep.mae == 100.0);
    CHECK(rep.mae_capped);
    CHECK(rep.raw_mae > 100.0);
    CHECK(rep.mse == 100.0);
    CHECK(rep.mse_capped);
}

TEST_CASE("quality_report zero truth range leaves nrmse undefined") {
    std::vector<double> p{1.0, 2.0};
    std::vector<double> t{3.0, 3.0};
    auto rep = quality_report(p, t);
    CHECK_FALSE(rep.nrmse.has_value());
    CHECK(rep.mae == doctest::Approx(1.5));
}

TEST_CASE("quality_report rejects mismatched or empty inputs") {
    std::vector<double> a{1.0}, b{1.0, 2.0}, e;
    CHECK_THROWS_AS(quality_report(a, b), DimensionError);
    CHECK_THROWS_AS(quality_report(e, e), DimensionError);
}

// Independent direct-summation oracle, 100 random instances.
TEST_CASE("quality_report matches summation oracle to 1e-12") {
    Rng rng(42);
    for (int i = 0; i < 100; ++i) {
        int n = static_cast<int>(rng.uniform_int(1, 40));
        std::vector<double> p, t;
        for (int j = 0; j < n; ++j) {
            p.push_back(rng.uniform(-5, 5));
            t.push_back(rng.uniform(-5, 5));
        }
        double mae = 0, mse = 0;
        for (int j = 0; j < n; ++j) {
            mae += std::fabs(p[static_cast<std::size_t>(j)] - t[static_cast<std::size_t>(j)]);
            mse += (p[static_cast<std::size_t>(j)] - t[static_cast<std::size_t>(j)]) *
                   (p[static_cast<std::size_t>(j)] - t[static_cast<std::size_t>(j)]);
        }
        mae /= n;
        mse /= n;
        auto rep = quality_report(p, t);
        CHECK(rep.raw_mae == doctest::Approx(mae).epsilon(1e-12));
        CHECK(rep.raw_mse == doctest::Approx(mse).epsilon(1e-12));
    }
}

TEST_CASE("metrics invariant under simultaneous permutation") {
    Rng rng(7);
    std::vector<double> p, t;
    for (int i = 0; i < 25; ++i) {
        p.push_back(rng.uniform(0, 10));
        t.push_back(rng.uniform(0, 10));
    }
    auto base = quality_report(p, t);
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<double> p2, t2;
    for (std::size_t i : idx) {
        p2.push_back(p[i]);
        t2.push_back(t[i]);
    }
    auto perm = quality_report(p2, t2);
    CHECK(perm.raw_mae == doctest::Approx(base.raw_mae).epsilon(1e-12));
    CHECK(perm.raw_mse == doctest::Approx(base.raw_mse).epsilon(1e-12));
}

TEST_CASE("cost_accounting examples") {
    CHECK(cost_accounting({}).total() == 0.0);

    // 1 round, 4 clients, model size 13: 2 transfers each.
    std::vector<CostEvent> log;
    for (int i = 0; i < 4; ++i) log.push_back({CostEvent::Kind::model_transfer, 2, 13});
    CHECK(cost_accounting(log).comm_units == doctest::Approx(104.0));

    std::vector<CostEvent> central{{CostEvent::Kind::raw_upload, 4000, 0}};
    CHECK(cost_accounting(central).raw_data_units == doctest::Approx(4000.0 * 3.0));
}

TEST_CASE("cost_accounting is additive") {
    Rng rng(3);
    std::vector<CostEvent> log1, log2;
    for (int i = 0; i < 10; ++i) {
        log1.push_back({CostEvent::Kind::compute, rng.uniform_int(1, 9), rng.uniform_int(1, 99)});
        log2.push_back({CostEvent::Kind::model_transfer, rng.uniform_int(1, 4), rng.uniform_int(1, 20)});
    }
    std::vector<CostEvent> both = log1;
    both.insert(both.end(), log2.begin(), log2.end());
    CostReport sum = cost_accounting(log1) + cost_accounting(log2);
    CostReport whole = cost_accounting(both);
    CHECK(whole.comm_units == doctest::Approx(sum.comm_units));
    CHECK(whole.raw_data_units == doctest::Approx(sum.raw_data_units));
    CHECK(whole.compute_units == doctest::Approx(sum.compute_units));
}

TEST_CASE("cost_reduction") {
    CostReport a;
    a.comm_units = 50;
    a.compute_units = 50;
    CHECK(cost_reduction(a, a) == doctest::Approx(0.0));

    CostReport half = a;
    half.comm_units = 25;
    half.compute_units = 25;
    CHECK(cost_reduction(half, a) == doctest::Approx(50.0));

    CostReport zero;
    CHECK_THROWS_AS(cost_reduction(a, zero), DomainError);
}
