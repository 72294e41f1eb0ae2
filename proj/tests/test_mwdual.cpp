#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sublin/matrix.hpp"
#include "sublin/mwdual.hpp"

using namespace sublin;
using namespace sublin::mwdual;

TEST_CASE("clip clamps into [-c, c]") {
    CHECK(clip(0.5, 10) == 0.5);
    CHECK(clip(15, 10) == 10);
    CHECK(clip(-15, 10) == -10);
    CHECK_THROWS(clip(1.0, 0.0));
}

TEST_CASE("weight factor is bounded below by 3/4 on clipped values") {
    for (double x = -1.0; x <= 1.0; x += 0.01) {
        double f = 1.0 - x + x * x;
        CHECK(f >= 0.75 - 1e-12);
        CHECK(f <= 3.0 + 1e-12);
    }
}

TEST_CASE("lazy_weight identities") {
    DataMatrix X = instance::generate_case2(4, 3, 2);
    QueryLedger ledger;

    WeightHistory empty;
    empty.eta = 0.5;
    for (int i = 0; i < 4; ++i) CHECK(lazy_weight(empty, X, ledger, i) == 1.0);
    CHECK(ledger.charged_queries() == 0.0);

    // one step whose estimate is zero leaves the weight at one
    WeightHistory h0;
    h0.eta = 0.5;
    h0.steps.push_back({2, 1.0, 0.0});  // column of zeros
    CHECK(lazy_weight(h0, X, ledger, 1) == 1.0);
    CHECK(ledger.charged_queries() == 2.0);  // compute + uncompute

    // clip boundary: v = 1/eta gives 1 - 1 + 1 = 1
    WeightHistory hb;
    hb.eta = 0.5;
    hb.steps.push_back({1, 100.0, 0.0});  // X_i(1) = 1/sqrt(2), clipped at 2
    CHECK(lazy_weight(hb, X, ledger, 1) == Catch::Approx(1.0));
}

TEST_CASE("lazy weights equal densely maintained weights") {
    Rng gen(5);
    DataMatrix X = instance::generate_random_ball(12, 6, gen);
    WeightHistory h;
    h.eta = 0.21;
    std::vector<double> dense(12, 1.0);
    for (int s = 0; s < 40; ++s) {
        std::int32_t j = static_cast<std::int32_t>(gen.index(6));
        double scale = 4.0 * gen.uniform() - 2.0;
        h.steps.push_back({j, scale, 0.0});
        for (int i = 0; i < 12; ++i)
            dense[i] *= weight_factor(clip(X.entry(i, j) * scale, 1.0 / h.eta), h.eta);
    }
    QueryLedger ledger;
    for (int i = 0; i < 12; ++i)
        CHECK(lazy_weight(h, X, ledger, i) == Catch::Approx(dense[i]).epsilon(1e-10));
    CHECK(ledger.charged_queries() == 12.0 * 2.0 * 40.0);
}

TEST_CASE("measure_weight_state: uniform on an empty history") {
    DataMatrix X = instance::generate_case2(4, 3, 2);
    WeightHistory h;
    h.eta = 0.3;
    QueryLedger ledger;
    Rng rng(77);
    const int N = 20'000;
    std::vector<int> counts(4, 0);
    for (int r = 0; r < N; ++r)
        ++counts[measure_weight_state(h, X, AmpModel::SqrtWeight, ledger, rng)];
    double sd = std::sqrt(0.25 * 0.75 / N);
    for (int i = 0; i < 4; ++i)
        CHECK(std::fabs(counts[i] / static_cast<double>(N) - 0.25) <= 4 * sd);
}

TEST_CASE("weight-state laws under the two amplitude conventions") {
    std::vector<double> u{4, 1, 1, 1};
    QueryLedger ledger;
    const int N = 40'000;

    Rng r1(123);
    int hits = 0;
    for (int r = 0; r < N; ++r)
        hits += measure_weight_state_dense(u, AmpModel::SqrtWeight, 1.0, ledger, r1) == 0;
    double p1 = 4.0 / 7.0;  // l1 law u / ||u||_1
    CHECK(std::fabs(hits / static_cast<double>(N) - p1) <=
          4 * std::sqrt(p1 * (1 - p1) / N));

    Rng r2(321);
    hits = 0;
    for (int r = 0; r < N; ++r)
        hits += measure_weight_state_dense(u, AmpModel::LinearAmplitude, 1.0, ledger, r2) == 0;
    double p2 = 16.0 / 19.0;  // l2 law u^2 / ||u||_2^2
    CHECK(std::fabs(hits / static_cast<double>(N) - p2) <=
          4 * std::sqrt(p2 * (1 - p2) / N));
}

TEST_CASE("l2_sample laws") {
    Rng rng(9);
    std::vector<double> e3{0, 0, 1};
    for (int r = 0; r < 10; ++r) CHECK(l2_sample(e3, rng) == 2);

    std::vector<double> v{3, 4};
    const int N = 100'000;
    int ones = 0;
    for (int r = 0; r < N; ++r) ones += l2_sample(v, rng) == 1;
    double p = 16.0 / 25.0;
    CHECK(std::fabs(ones / static_cast<double>(N) - p) <= 3 * std::sqrt(p * (1 - p) / N));

    std::vector<double> sym{1, 1};
    int first = 0;
    for (int r = 0; r < N; ++r) first += l2_sample(sym, rng) == 0;
    CHECK(std::fabs(first / static_cast<double>(N) - 0.5) <= 3 * std::sqrt(0.25 / N));

    std::vector<double> zero{0, 0};
    CHECK_THROWS(l2_sample(zero, rng));
}

TEST_CASE("l2 sampling gives an unbiased inner-product estimator") {
    Rng rng(55);
    std::vector<double> w{0.5, 0.5};
    std::vector<double> row{0.6, 0.8};
    double norm_sq = 0.5;
    const int N = 100'000;
    double sum = 0, sum_sq = 0;
    for (int r = 0; r < N; ++r) {
        auto j = l2_sample(w, rng);
        double est = row[j] * norm_sq / w[j];
        sum += est;
        sum_sq += est * est;
    }
    double mean = sum / N;
    double var = sum_sq / N - mean * mean;
    double exact = 0.7;  // row . w
    CHECK(std::fabs(mean - exact) <= 5 * std::sqrt(var / N));
}

TEST_CASE("ogd_step keeps the exact incremental norm") {
    std::vector<double> dense{1, 0, 0, 1, 0.6, 0.8};
    DataMatrix X(3, 2, std::move(dense), false);
    const std::int64_t T = 50;
    DualState s(2, T);
    QueryLedger ledger;
    ogd_step(s, X, 0, &ledger);
    double c = 1.0 / std::sqrt(2.0 * T);
    CHECK(s.y[0] == Catch::Approx(c));
    CHECK(s.y[1] == 0.0);
    CHECK(ledger.charged(Charge::Direct) == 2.0);

    DualState s2(2, T);
    for (int t = 0; t < T; ++t) ogd_step(s2, X, 0, nullptr);
    CHECK(std::sqrt(s2.norm_sq) == Catch::Approx(std::sqrt(T / 2.0)).epsilon(1e-12));

    DualState s3(2, T);
    Rng rng(7);
    double check = 0;
    for (int t = 0; t < 30; ++t) {
        auto i = rng.index(3);
        ogd_step(s3, X, i, nullptr);
        check = 0;
        for (double v : s3.y) check += v * v;
        CHECK(s3.norm_sq == Catch::Approx(check).margin(1e-12));
    }
}

TEST_CASE("reconstruct_coordinate matches a dense accumulation oracle") {
    Rng gen(31);
    DataMatrix X = instance::generate_random_ball(10, 5, gen);
    const std::int64_t T = 64;
    SuccinctClassifier c;
    c.rounds = T;
    // dense oracle: y_t accumulated directly
    std::vector<double> y(5, 0.0), wbar(5, 0.0);
    double inv = 1.0 / std::sqrt(2.0 * T);
    for (std::int64_t t = 0; t < T; ++t) {
        double norm = 0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        c.norms.push_back(norm);
        for (int j = 0; j < 5; ++j) wbar[j] += y[j] / std::max(1.0, norm);
        auto i = gen.index(10);
        c.picks.push_back(static_cast<std::int32_t>(i));
        X.add_row_to(i, inv, y);
    }
    for (auto& v : wbar) v /= static_cast<double>(T);
    QueryLedger ledger;
    for (int j = 0; j < 5; ++j) {
        CHECK(reconstruct_coordinate(c, X, j, &ledger) == Catch::Approx(wbar[j]).margin(1e-9));
    }
    CHECK(ledger.charged(Charge::Direct) == 5.0 * T);

    // T = 1: w-bar is built from y_1 = 0 only
    SuccinctClassifier one;
    one.rounds = 1;
    one.picks = {0};
    one.norms = {0.0};
    CHECK(reconstruct_coordinate(one, X, 0) == 0.0);
}
