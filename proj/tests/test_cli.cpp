#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sublin/cli.hpp"

using namespace sublin;
using json = nlohmann::ordered_json;

namespace {

struct CliRun {
    int exit_code;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    std::vector<const char*> argv{"sublin"};
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("train subcommand emits a complete record") {
    auto r = run({"train", "--instance", "case2:n=16,d=8,l=3", "--eps", "0.25", "--seed", "7"});
    REQUIRE(r.exit_code == 0);
    json rec = json::parse(r.out);
    CHECK(rec["command"] == "train");
    CHECK(rec["status"] == "ok");
    CHECK(rec["audit"]["margin"].get<double>() >= instance::sigma_case2() - 0.25);
    CHECK(rec["ledger"]["total"].get<double>() > 0);
    CHECK(rec["classifier"]["T"].get<std::int64_t>() ==
          static_cast<std::int64_t>(rec["classifier"]["picks"].size()));
    CHECK(rec["config"]["eps"].get<double>() == 0.25);
}

TEST_CASE("train output is byte-stable modulo wall time") {
    std::vector<std::string> args{"train", "--instance", "case2:n=8,d=4,l=2",
                                  "--eps", "0.3",        "--seed", "5"};
    auto a = run(args), b = run(args);
    json ja = json::parse(a.out), jb = json::parse(b.out);
    ja.erase("wall_time_sec");
    jb.erase("wall_time_sec");
    CHECK(ja.dump() == jb.dump());
}

TEST_CASE("sqrt-d budget shows norm-estimation charges") {
    auto r = run({"train", "--instance", "case2:n=8,d=16,l=3", "--eps", "0.3", "--budget",
                  "sqrt-d", "--seed", "3"});
    REQUIRE(r.exit_code == 0);
    json rec = json::parse(r.out);
    CHECK(rec["ledger"]["norm_estimation"].get<double>() > 0);
}

TEST_CASE("repeats keep the best margin") {
    auto one = run({"train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.3", "--seed", "2"});
    auto nine = run({"train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.3", "--seed", "2",
                     "--repeats", "9"});
    double m1 = json::parse(one.out)["audit"]["margin"].get<double>();
    double m9 = json::parse(nine.out)["audit"]["margin"].get<double>();
    CHECK(m9 >= m1 - 1e-12);
}

TEST_CASE("gen then train from file round-trips") {
    auto g = run({"gen", "--instance", "case2:n=8,d=4,l=2", "--out", "/tmp/sublin_cli_gen.csv"});
    REQUIRE(g.exit_code == 0);
    auto t = run({"train", "--data", "/tmp/sublin_cli_gen.csv", "--eps", "0.3", "--seed", "4"});
    REQUIRE(t.exit_code == 0);
    json rec = json::parse(t.out);
    CHECK(rec["audit"]["margin"].get<double>() >= instance::sigma_case2() - 0.3);
}

TEST_CASE("svmlight data path") {
    {
        std::ofstream f("/tmp/sublin_cli_data.svm");
        f << "1 1:0.9\n-1 1:-0.9\n";
    }
    auto t = run({"train", "--data", "/tmp/sublin_cli_data.svm", "--format", "svmlight-sparse",
                  "--eps", "0.3", "--seed", "4"});
    REQUIRE(t.exit_code == 0);
    CHECK(json::parse(t.out)["audit"]["margin"].get<double>() >= 0.9 - 0.3);
}

TEST_CASE("meb and svm subcommands") {
    auto m = run({"meb", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.15", "--seed", "6"});
    REQUIRE(m.exit_code == 0);
    json mr = json::parse(m.out);
    CHECK(mr["audit"]["radius_sq"].get<double>() <= instance::sigma_meb_case2() + 0.15 + 0.05);

    auto s = run({"svm", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.1", "--seed", "6"});
    REQUIRE(s.exit_code == 0);
    CHECK(json::parse(s.out)["audit"]["separated"].get<bool>());
}

TEST_CASE("game subcommand solves and verifies") {
    auto r = run({"game", "--matrix", "zerosum:n=32,k=5", "--eps", "0.25", "--seed", "3"});
    REQUIRE(r.exit_code == 0);
    json rec = json::parse(r.out);
    CHECK(rec["audit"]["feasible"].get<bool>());
    CHECK(rec["audit"]["max_violation"].get<double>() <= 0.25);
}

TEST_CASE("bench emits csv with a slope line and pins rounds") {
    auto r = run({"bench", "--algo", "baseline", "--sweep", "n", "--sizes", "64,128,256",
                  "--fixed", "4", "--eps", "0.5", "--seeds", "2", "--seed", "9"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("size,mean_queries,std_queries") == 0);
    CHECK(r.out.find("# slope,") != std::string::npos);
    CHECK(r.out.find("# rounds_pinned,") != std::string::npos);

    auto single = run({"bench", "--algo", "baseline", "--sweep", "n", "--sizes", "64", "--fixed",
                       "4", "--eps", "0.5", "--seeds", "2", "--seed", "9"});
    CHECK(single.out.find("# slope,nan") != std::string::npos);
    CHECK(single.err.find("slope undefined") != std::string::npos);

    auto noseed = run({"bench", "--algo", "baseline", "--sweep", "n", "--sizes", "64"});
    CHECK(noseed.exit_code == 2);
}

TEST_CASE("verify accepts honest records and rejects tampered picks") {
    auto t = run({"train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.3", "--seed", "11",
                  "--out", "/tmp/sublin_cli_rec.json"});
    REQUIRE(t.exit_code == 0);
    auto v = run({"verify", "--record", "/tmp/sublin_cli_rec.json"});
    CHECK(v.exit_code == 0);
    CHECK(json::parse(v.out)["verified"].get<bool>());

    json rec = json::parse(t.out);
    rec["classifier"]["picks"][0] =
        (rec["classifier"]["picks"][0].get<int>() + 1) % 8;
    {
        std::ofstream f("/tmp/sublin_cli_tampered.json");
        f << rec.dump(2);
    }
    auto bad = run({"verify", "--record", "/tmp/sublin_cli_tampered.json"});
    CHECK(bad.exit_code == 1);
    CHECK_FALSE(json::parse(bad.out)["verified"].get<bool>());
}

TEST_CASE("verify covers game records") {
    auto g = run({"game", "--matrix", "zerosum:n=16,k=3", "--eps", "0.3", "--seed", "2", "--out",
                  "/tmp/sublin_cli_game.json"});
    REQUIRE(g.exit_code == 0);
    auto v = run({"verify", "--record", "/tmp/sublin_cli_game.json"});
    CHECK(v.exit_code == 0);
    CHECK(json::parse(v.out)["verified"].get<bool>());
}

TEST_CASE("flag errors exit 2, strict contract violations exit 3") {
    auto bad = run({"train", "--instance", "case2:n=8,d=4,l=2", "--budget", "warp-drive"});
    CHECK(bad.exit_code == 2);
    auto unknown = run({"train", "--instance", "nonsense:n=2"});
    CHECK(unknown.exit_code == 2);

    // an absurdly small round override cannot reach the margin: honest failure
    auto strict = run({"train", "--instance", "case2:n=16,d=8,l=3", "--eps", "0.04", "--rounds",
                       "3", "--seed", "1", "--strict"});
    CHECK(strict.exit_code == 3);
    CHECK(json::parse(strict.out)["status"] == "contract-violated");

    // same violation without --strict still exits 0 but reports it
    auto soft = run({"train", "--instance", "case2:n=16,d=8,l=3", "--eps", "0.04", "--rounds",
                     "3", "--seed", "1"});
    CHECK(soft.exit_code == 0);
    CHECK(json::parse(soft.out)["status"] == "contract-violated");
}

TEST_CASE("kernel flags reach the kernel trainers") {
    auto r = run({"train", "--instance", "ball:n=8,d=3", "--eps", "0.3", "--kernel", "poly:2",
                  "--kernel-mode", "explicit", "--seed", "5"});
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["config"]["kernel"] == "poly:2");
}
