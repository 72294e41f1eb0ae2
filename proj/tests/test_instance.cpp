#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "sublin/matrix.hpp"

using namespace sublin;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/sublin_test_") + name;
    std::ofstream f(path);
    f << content;
    return path;
}

} // namespace

TEST_CASE("csv load folds labels into row signs") {
    auto path = write_temp("lab.csv", "1,1,0\n-1,0,1\n");
    DataMatrix X = instance::load_csv(path, true);
    REQUIRE(X.rows() == 2);
    REQUIRE(X.cols() == 2);
    CHECK(X.labels_folded());
    CHECK(X.entry(0, 0) == 1.0);
    CHECK(X.entry(0, 1) == 0.0);
    CHECK(X.entry(1, 0) == 0.0);
    CHECK(X.entry(1, 1) == -1.0);
}

TEST_CASE("csv load scales all rows by one global factor") {
    auto path = write_temp("unlab.csv", "3,4\n0,1\n");
    DataMatrix X = instance::load_csv(path, false);
    CHECK(X.entry(0, 0) == Catch::Approx(0.6));
    CHECK(X.entry(0, 1) == Catch::Approx(0.8));
    CHECK(X.entry(1, 0) == 0.0);
    CHECK(X.entry(1, 1) == Catch::Approx(0.2));  // relative geometry preserved
}

TEST_CASE("svmlight sparse fill") {
    auto path = write_temp("s.svm", "1 2:0.5\n");
    DataMatrix X = instance::load_svmlight(path, 3);
    REQUIRE(X.cols() == 3);
    CHECK(X.entry(0, 0) == 0.0);
    CHECK(X.entry(0, 1) == 0.5);
    CHECK(X.entry(0, 2) == 0.0);
}

TEST_CASE("loader error paths") {
    CHECK_THROWS(instance::load_csv(write_temp("bad.csv", "1,zzz\n"), false));
    CHECK_THROWS(instance::load_csv(write_temp("ragged.csv", "1,2\n1\n"), false));
    CHECK_THROWS(instance::load_csv(write_temp("empty.csv", ""), false));
    CHECK_THROWS(instance::load_csv("/nonexistent/path.csv", false));
    CHECK_THROWS(instance::load_svmlight(write_temp("badsvm.svm", "1 nocolon\n"), 0));
}

TEST_CASE("case 2 generator matches the display") {
    DataMatrix X = instance::generate_case2(4, 3, 2);
    const double a = 1.0 / std::sqrt(2.0);
    CHECK(X.entry(0, 0) == Catch::Approx(-a));
    CHECK(X.entry(0, 1) == Catch::Approx(a));
    CHECK(X.entry(0, 2) == 0.0);
    for (int i = 1; i < 4; ++i) {
        CHECK(X.entry(i, 0) == Catch::Approx(a));
        CHECK(X.entry(i, 1) == Catch::Approx(a));
        CHECK(X.entry(i, 2) == 0.0);
    }
}

TEST_CASE("case 1 generator plants row k = e1") {
    DataMatrix X = instance::generate_case1(4, 3, 3, 2);
    const double a = 1.0 / std::sqrt(2.0);
    CHECK(X.entry(2, 0) == 1.0);  // k = 3, 1-based
    CHECK(X.entry(2, 1) == 0.0);
    CHECK(X.entry(0, 0) == Catch::Approx(-a));
    CHECK(X.entry(1, 0) == Catch::Approx(a));
    CHECK(X.entry(3, 1) == Catch::Approx(a));
}

TEST_CASE("hard zero-sum instance layout") {
    GameInstance g = instance::generate_lower_zerosum(3, 2);
    // X = [[0,-1,0],[1,0,1],[0,-1,0]]
    std::vector<double> want{0, -1, 0, 1, 0, 1, 0, -1, 0};
    for (int i = 0; i < 9; ++i) CHECK(g.entries[i] == want[i]);
    CHECK(g.antisymmetric);
}

TEST_CASE("generator argument validation") {
    CHECK_THROWS(instance::generate_case1(2, 3, 3, 2));   // n < 3
    CHECK_THROWS(instance::generate_case1(4, 3, 2, 2));   // k < 3
    CHECK_THROWS(instance::generate_case2(4, 3, 1));      // l < 2
    CHECK_THROWS(instance::generate_case2(4, 3, 4));      // l > d
    CHECK_THROWS(instance::generate_lower_zerosum(3, 4)); // k > n
}

TEST_CASE("row-norm invariant after load and generate") {
    Rng rng(7);
    DataMatrix B = instance::generate_random_ball(40, 6, rng);
    for (std::int64_t i = 0; i < B.rows(); ++i)
        CHECK(B.row_norm(i) <= 1.0 + DataMatrix::kRowNormTol);
    auto path = write_temp("big.csv", "10,0\n0,2\n");
    DataMatrix L = instance::load_csv(path, false);
    for (std::int64_t i = 0; i < L.rows(); ++i)
        CHECK(L.row_norm(i) <= 1.0 + DataMatrix::kRowNormTol);
}

TEST_CASE("query_entry charges per access, no caching") {
    DataMatrix X = instance::generate_case2(4, 3, 2);
    QueryLedger ledger;
    CHECK(instance::query_entry(X, ledger, 0, 0) == Catch::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(ledger.charged_queries() == 1.0);
    instance::query_entry(X, ledger, 0, 0);
    CHECK(ledger.charged_queries() == 2.0);
    CHECK(ledger.charged(Charge::Direct) == 2.0);
    CHECK_THROWS(instance::query_entry(X, ledger, 4, 0));
    CHECK_THROWS(instance::query_entry(X, ledger, 0, 3));
}

TEST_CASE("sparse entries read as zero but still charge") {
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows{{{1, 0.5}}, {}};
    DataMatrix X(2, 3, std::move(rows), false);
    QueryLedger ledger;
    CHECK(instance::query_entry(X, ledger, 1, 2) == 0.0);
    CHECK(ledger.charged_queries() == 1.0);
}

TEST_CASE("exact_margin closed forms on the planted instances") {
    DataMatrix X2 = instance::generate_case2(8, 4, 2);
    std::vector<double> el{0, 1, 0, 0};
    CHECK(instance::exact_margin(X2, el) == Catch::Approx(instance::sigma_case2()));

    DataMatrix X1 = instance::generate_case1(8, 4, 3, 2);
    double c = 1.0 / std::sqrt(4.0 + 2.0 * std::sqrt(2.0));
    std::vector<double> w{c, (std::sqrt(2.0) + 1.0) * c, 0, 0};
    CHECK(instance::exact_margin(X1, w) == Catch::Approx(instance::sigma_case1()));

    std::vector<double> zero(4, 0.0);
    CHECK(instance::exact_margin(X1, zero) == 0.0);
    std::vector<double> bad(3, 0.0);
    CHECK_THROWS(instance::exact_margin(X1, bad));
}

TEST_CASE("ledger totals equal the breakdown sum") {
    QueryLedger ledger;
    ledger.charge(Charge::StatePrep, 3.5);
    ledger.charge(Charge::MaxFinding, 2.0);
    ledger.charge(Charge::NormEstimation, 1.25);
    ledger.charge(Charge::Direct, 7.0);
    CHECK(ledger.charged_queries() ==
          ledger.charged(Charge::StatePrep) + ledger.charged(Charge::MaxFinding) +
              ledger.charged(Charge::NormEstimation) + ledger.charged(Charge::Direct));
    CHECK_THROWS(ledger.charge(Charge::Direct, -1.0));
    CHECK_THROWS(QueryCostModel{.bits_l = 65}.validate());
}
