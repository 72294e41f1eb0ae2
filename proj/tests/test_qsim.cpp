#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "sublin/qsim.hpp"

using namespace sublin;

namespace {

constexpr double kPi = 3.141592653589793;

// Direct evaluation of the two-alias phase-measurement distribution, used as
// the independent oracle for the sampler tests.
double phase_prob(std::int64_t M, double theta, std::int64_t y) {
    auto kernel = [&](double center) {
        double delta = static_cast<double>(y) / static_cast<double>(M) - center;
        delta -= std::floor(delta);
        if (delta > 0.5) delta = 1.0 - delta;
        double num = std::sin(static_cast<double>(M) * kPi * delta);
        double den = static_cast<double>(M) * std::sin(kPi * delta);
        if (std::fabs(den) < 1e-300) return 1.0;
        return (num * num) / (den * den);
    };
    double phi = theta / kPi;
    return 0.5 * (kernel(phi) + kernel(1.0 - phi));
}

} // namespace

TEST_CASE("durr_hoyer_max finds the exact extremum with the theoretical charge") {
    QueryLedger ledger;
    std::vector<double> a{0.1, -0.9, 0.5};
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return a[i]; }, 1.0};
    auto [idx, val] = qsim::durr_hoyer_max(oracle, 3, ledger);
    CHECK(idx == 1);
    CHECK(val == Catch::Approx(0.9));

    // ties break to the smallest index
    qsim::AmplitudeOracle flat{[](std::int64_t) { return 0.5; }, 1.0};
    CHECK(qsim::durr_hoyer_max(flat, 8, ledger).first == 0);

    QueryLedger big;
    qsim::durr_hoyer_max(flat, 10'000, big);
    CHECK(big.charged(Charge::MaxFinding) == 2250.0);  // ceil(22.5 * 100)
}

TEST_CASE("amplify_prepare_sample point distribution and degenerate input") {
    QueryLedger ledger;
    Rng rng(11);
    std::vector<double> a{0, 0, 0.4, 0};
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return a[i]; }, 1.0};
    for (int r = 0; r < 20; ++r)
        CHECK(qsim::amplify_prepare_sample(oracle, 4, ledger, rng) == 2);

    qsim::AmplitudeOracle zero{[](std::int64_t) { return 0.0; }, 1.0};
    CHECK_THROWS(qsim::amplify_prepare_sample(zero, 4, ledger, rng));
}

TEST_CASE("amplify_prepare_sample samples the l2 law") {
    QueryLedger ledger;
    Rng rng(19);
    std::vector<double> a{3, 4};
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return a[i]; }, 1.0};
    const int N = 100'000;
    int ones = 0;
    for (int r = 0; r < N; ++r) ones += qsim::amplify_prepare_sample(oracle, 2, ledger, rng) == 1;
    double p = 16.0 / 25.0;
    double sd = std::sqrt(p * (1 - p) / N);
    CHECK(std::fabs(static_cast<double>(ones) / N - p) <= 3 * sd);
}

TEST_CASE("amplify distribution: chi-square against the exact law on 8 bins") {
    QueryLedger ledger;
    Rng rng(23);
    std::vector<double> a{1, -2, 3, 4, -5, 6, 7, 8};
    double sum_sq = 0;
    for (double x : a) sum_sq += x * x;
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return a[i]; }, 1.0};
    const int N = 100'000;
    std::vector<int> counts(8, 0);
    for (int r = 0; r < N; ++r) ++counts[qsim::amplify_prepare_sample(oracle, 8, ledger, rng)];
    double stat = 0;
    for (int i = 0; i < 8; ++i) {
        double expect = N * a[i] * a[i] / sum_sq;
        stat += (counts[i] - expect) * (counts[i] - expect) / expect;
    }
    CHECK(stat < 18.475);  // chi-square(7) 0.99 quantile
}

TEST_CASE("uniform coefficients prepare in one attempt at Durr-Hoyer cost only") {
    QueryLedger ledger;
    Rng rng(5);
    qsim::AmplitudeOracle uniform{[](std::int64_t) { return 0.5; }, 1.0};
    std::int64_t attempts = 0;
    qsim::amplify_prepare_sample(uniform, 4, ledger, rng, &attempts);
    CHECK(attempts == 1);  // sin(theta) = 1, k = 0, success probability 1
    CHECK(ledger.charged(Charge::StatePrep) == 0.0);
    CHECK(ledger.charged(Charge::MaxFinding) == std::ceil(22.5 * 2.0));
}

TEST_CASE("amplification attempt count stays near one even at the worst angle") {
    QueryLedger ledger;
    Rng rng(31);
    // sin(theta) = 1/sqrt(2): the per-attempt success probability dips to 1/2
    std::vector<double> a{1, 0};
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return a[i]; }, 1.0};
    double total_attempts = 0;
    const int R = 4000;
    for (int r = 0; r < R; ++r) {
        std::int64_t att = 0;
        qsim::amplify_prepare_sample(oracle, 2, ledger, rng, &att);
        total_attempts += static_cast<double>(att);
    }
    CHECK(total_attempts / R <= 2.5);
}

TEST_CASE("cost scaling of state preparation is sqrt(n) on uniform vectors") {
    qsim::AmplitudeOracle uniform{[](std::int64_t) { return 1.0; }, 1.0};
    std::vector<double> xs, ys;
    Rng rng(3);
    for (std::int64_t n = 256; n <= 16384; n *= 2) {
        QueryLedger ledger;
        for (int r = 0; r < 4; ++r) qsim::amplify_prepare_sample(uniform, n, ledger, rng);
        xs.push_back(std::log2(static_cast<double>(n)));
        ys.push_back(std::log2(ledger.charged_queries() / 4.0));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
    }
    double m = static_cast<double>(xs.size());
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope >= 0.4);
    CHECK(slope <= 0.6);
}

TEST_CASE("phase sampler matches the exact two-alias distribution") {
    const std::int64_t M = 64;
    const double theta = 0.31;
    qsim::PhaseSampler sampler(M, theta);
    Rng rng(47);
    const int N = 200'000;
    std::vector<int> counts(M, 0);
    for (int r = 0; r < N; ++r) ++counts[sampler.draw(rng)];
    double stat = 0;
    int dof = 0;
    double rare_expect = 0, rare_got = 0;
    for (std::int64_t y = 0; y < M; ++y) {
        double expect = N * phase_prob(M, theta, y);
        if (expect < 8.0) {  // pool rare bins
            rare_expect += expect;
            rare_got += counts[y];
            continue;
        }
        stat += (counts[y] - expect) * (counts[y] - expect) / expect;
        ++dof;
    }
    if (rare_expect > 0) {
        stat += (rare_got - rare_expect) * (rare_got - rare_expect) / rare_expect;
        ++dof;
    }
    // 0.999 quantile of chi-square with dof-1 degrees, dof <= 65
    double crit = (dof - 1) + 3.29 * std::sqrt(2.0 * (dof - 1)) + 4.0;
    CHECK(stat < crit);
}

TEST_CASE("amplitude_estimate: certainty at t = 0 and concentration at t = N") {
    QueryLedger ledger;
    Rng rng(7);
    auto none = [](std::int64_t) { return false; };
    for (int r = 0; r < 50; ++r) {
        auto res = qsim::amplitude_estimate(none, 64, 0.1, ledger, rng);
        CHECK(res.estimate == 0.0);
        CHECK(res.grover_applications == static_cast<std::int64_t>(std::ceil(kPi * 8.0)));
    }
    auto all = [](std::int64_t) { return true; };
    for (int r = 0; r < 50; ++r) {
        auto res = qsim::amplitude_estimate(all, 64, 0.1, ledger, rng);
        CHECK(res.estimate >= 63.9);  // theta = pi/2, outcome pinned at t-hat = N
    }
}

TEST_CASE("amplitude_estimate success probability meets the 8/pi^2 contract") {
    struct Grid { std::int64_t N, t; double eps; };
    for (auto [N, t, eps] : {Grid{1 << 10, 37, 0.1}, Grid{1 << 12, 5, 0.2},
                             Grid{1 << 10, 512, 0.05}}) {
        QueryLedger ledger;
        Rng rng(101 + N + t);
        qsim::CountEstimator est(N, t, eps, 1.0, ledger.model());
        const int R = 10'000;
        int ok = 0;
        for (int r = 0; r < R; ++r) {
            double that = est.run(ledger, rng).estimate;
            ok += std::fabs(that - static_cast<double>(t)) <= eps * static_cast<double>(t);
        }
        CHECK(static_cast<double>(ok) / R >= 8.0 / (kPi * kPi) - 0.02);
    }
}

TEST_CASE("estimate_mean exact branches") {
    QueryLedger ledger;
    Rng rng(13);
    auto zero = [](std::int64_t) { return 0.0; };
    CHECK(qsim::estimate_mean(zero, 64, 0.1, ledger, rng) == 0.0);

    // F == 1: the integer bit carries everything and t = N estimates are exact
    auto one = [](std::int64_t) { return 1.0; };
    CHECK(qsim::estimate_mean(one, 64, 0.05, ledger, rng) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("estimate_mean hits the relative-accuracy contract on a ramp") {
    QueryLedger ledger;
    const std::int64_t d = 256;
    auto ramp = [](std::int64_t i) { return static_cast<double>(i) / 256.0; };
    const double m = 255.0 / 512.0;
    const double delta = 0.05;
    int ok = 0;
    const int R = 300;
    Rng rng(4242);
    for (int r = 0; r < R; ++r) {
        double mt = qsim::estimate_mean(ramp, d, delta, ledger, rng);
        ok += std::fabs(mt - m) <= delta * m;
    }
    CHECK(static_cast<double>(ok) / R >= 2.0 / 3.0);
}

TEST_CASE("estimate_norm_sq rescale identity and error contract") {
    QueryLedger ledger;
    Rng rng(17);
    std::vector<double> e1{1, 0, 0, 0};
    auto acc = [&](std::int64_t j) { return e1[j]; };
    CHECK(qsim::estimate_norm_sq(acc, 4, 1.0, 0.05, ledger, rng) ==
          Catch::Approx(1.0).margin(1e-9));
    CHECK_THROWS(qsim::estimate_norm_sq(acc, 4, 0.0, 0.05, ledger, rng));

    const std::int64_t d = 64;
    const double delta = 0.05;
    int ok = 0;
    const int R = 300;
    for (int r = 0; r < R; ++r) {
        Rng gen(1000 + r);
        std::vector<double> y(d);
        double exact = 0;
        for (auto& v : y) {
            v = 2.0 * gen.uniform() - 1.0;
            exact += v * v;
        }
        auto ya = [&](std::int64_t j) { return y[j]; };
        double est = qsim::estimate_norm_sq(ya, d, 1.0, delta, ledger, gen);
        ok += std::fabs(est - exact) <= delta * exact;
    }
    CHECK(static_cast<double>(ok) / R >= 2.0 / 3.0);
}

TEST_CASE("simulators are deterministic given the seed") {
    auto run = [] {
        QueryLedger ledger;
        Rng rng(999);
        std::vector<double> vals;
        qsim::AmplitudeOracle oracle{[](std::int64_t i) { return 0.1 * (i + 1); }, 2.0};
        for (int r = 0; r < 5; ++r)
            vals.push_back(static_cast<double>(qsim::amplify_prepare_sample(oracle, 6, ledger, rng)));
        qsim::CountEstimator est(256, 17, 0.1, 3.0, ledger.model());
        for (int r = 0; r < 5; ++r) vals.push_back(est.run(ledger, rng).estimate);
        vals.push_back(ledger.charged_queries());
        return vals;
    };
    CHECK(run() == run());
}
