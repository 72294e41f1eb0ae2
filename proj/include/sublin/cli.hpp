#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sublin/classify.hpp"
#include "sublin/matrix.hpp"
#include "sublin/quadratic.hpp"
#include "sublin/reference.hpp"
#include "sublin/serialize.hpp"
#include "sublin/zerosum.hpp"

// Command-line front end. Subcommands: train, meb, svm, game, bench, verify,
// gen. Every run is seeded and emits a JSON RunRecord (or CSV for bench)
// whose numeric audits are recomputed exactly by the harness, never taken
// from the solver's internal estimates. Exit codes: 0 ok, 2 flag error,
// 3 contract violation under --strict.

namespace sublin::cli {

using json = serialize::json;

// ---- instance addressing -----------------------------------------------------

// Generator syntax: kind:key=value,... e.g. "case1:n=64,d=8,k=3,l=2",
// "case2:n=64,d=8,l=3", "zerosum:n=64,k=11", "ball:n=32,d=8".
inline InstanceSpec parse_instance(const std::string& text) {
    InstanceSpec spec;
    auto colon = text.find(':');
    std::string kind = text.substr(0, colon);
    if (kind == "case1")
        spec.kind = InstanceKind::LowerLinearCase1;
    else if (kind == "case2")
        spec.kind = InstanceKind::LowerLinearCase2;
    else if (kind == "zerosum")
        spec.kind = InstanceKind::LowerZeroSum;
    else if (kind == "ball")
        spec.kind = InstanceKind::RandomBall;
    else
        throw CLI::ValidationError("--instance", "unknown instance kind '" + kind + "'");
    if (colon == std::string::npos) return spec;
    std::stringstream ss(text.substr(colon + 1));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--instance", "expected key=value, got '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::int64_t val = 0;
        try {
            val = std::stoll(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--instance", "bad value in '" + kv + "'");
        }
        if (key == "n")
            spec.n = val;
        else if (key == "d")
            spec.d = val;
        else if (key == "k")
            spec.k = val;
        else if (key == "l")
            spec.l = val;
        else if (key == "seed")
            spec.seed = static_cast<std::uint64_t>(val);
        else
            throw CLI::ValidationError("--instance", "unknown key '" + key + "'");
    }
    return spec;
}

struct DataOpts {
    std::string instance;  // generator string
    std::string data;      // file path
    std::string format = "csv-dense";
    bool labeled = false;
    std::int64_t dim = 0;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--instance", instance, "generated instance, e.g. case2:n=64,d=8,l=3");
        cmd->add_option("--data", data, "dataset file path");
        cmd->add_option("--format", format, "csv-dense or svmlight-sparse")
            ->check(CLI::IsMember({"csv-dense", "csv", "svmlight-sparse", "svmlight"}));
        cmd->add_flag("--labeled", labeled, "first CSV column is a label in {-1,+1}");
        cmd->add_option("--dim", dim, "force feature dimension (svmlight)");
    }

    DataMatrix load(std::uint64_t seed) const {
        if (!instance.empty()) {
            InstanceSpec spec = parse_instance(instance);
            Rng gen_rng(spec.seed != 0 ? spec.seed : seed);
            auto g = instance::generate(spec, gen_rng);
            if (auto* m = std::get_if<DataMatrix>(&g)) return std::move(*m);
            throw CLI::ValidationError("--instance", "instance is a game, not a data matrix");
        }
        if (data.empty())
            throw CLI::ValidationError("--instance", "need --instance or --data");
        return instance::load_dataset(data, format, labeled, dim);
    }

    json echo() const {
        return json{{"instance", instance},
                    {"data", data},
                    {"format", format},
                    {"labeled", labeled}};
    }

    // closed-form optimum when the instance is a planted construction
    std::optional<double> known_sigma(bool meb) const {
        if (instance.rfind("case1", 0) == 0)
            return meb ? instance::sigma_meb_case1() : instance::sigma_case1();
        if (instance.rfind("case2", 0) == 0)
            return meb ? instance::sigma_meb_case2() : instance::sigma_case2();
        return std::nullopt;
    }
};

struct CostOpts {
    QueryCostModel model;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--cost.c-prep", model.c_prep_per_iter,
                        "coefficient calls per amplification iteration");
        cmd->add_option("--cost.c-dh", model.c_dh, "Durr-Hoyer constant");
        cmd->add_option("--cost.bits-l", model.bits_l, "mean-estimation precision bits")
            ->check(CLI::Range(1, 64));
        cmd->add_option("--cost.ae-const", model.ae_const, "amplitude-estimation grid constant");
    }
};

inline void emit(const json& record, const std::string& out_path, std::ostream& os) {
    std::string text = record.dump(2);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << text << "\n";
    }
    os << text << "\n";
}

inline void emit_text(const std::string& text, const std::string& out_path, std::ostream& os) {
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << text;
    }
    os << text;
}

// least-squares slope of log2(mean queries) against log2(size)
inline double fit_loglog_slope(const std::vector<double>& sizes, const std::vector<double>& means) {
    if (sizes.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto m = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        double x = std::log2(sizes[i]), y = std::log2(means[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ---- train -------------------------------------------------------------------

struct TrainOpts {
    DataOpts data;
    CostOpts cost;
    double eps = 0.1;
    std::string budget = "sqrt-n";
    std::string kernel = "linear";
    std::string kernel_mode = "estimator";
    std::string amp_model = "sqrt-weight";
    std::int64_t repeats = 1;
    std::int64_t rounds = 0;
    std::uint64_t seed = 1;
    bool strict = false;
    std::string out_path;
};

inline classify::KernelSpec parse_kernel(const std::string& text) {
    if (text == "linear") return classify::KernelSpec::linear();
    if (text.rfind("poly:", 0) == 0)
        return classify::KernelSpec::polynomial(std::stoll(text.substr(5)));
    if (text.rfind("gauss:", 0) == 0)
        return classify::KernelSpec::gaussian(std::stod(text.substr(6)));
    throw CLI::ValidationError("--kernel", "expected linear, poly:<q> or gauss:<s>");
}

inline int cmd_train(const TrainOpts& o, std::ostream& os) {
    DataMatrix X = o.data.load(o.seed);
    classify::KernelSpec kspec = parse_kernel(o.kernel);
    mwdual::TrainConfig cfg;
    cfg.eps = o.eps;
    cfg.rounds = o.rounds;
    cfg.T_const = 0;  // trainer picks 23 or 27
    cfg.seed = o.seed;
    cfg.amp_model = o.amp_model == "linear-amplitude" ? mwdual::AmpModel::LinearAmplitude
                                                      : mwdual::AmpModel::SqrtWeight;

    classify::TrainResult best;
    classify::LedgerSnapshot total_ledger;
    bool have = false;
    for (std::int64_t r = 0; r < std::max<std::int64_t>(o.repeats, 1); ++r) {
        QueryLedger ledger(o.cost.model);
        Rng rng(o.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r));
        classify::TrainResult res;
        if (kspec.kind == classify::KernelSpec::Kind::Linear) {
            res = (o.budget == "sqrt-d") ? classify::train_linear_sqrt_d(X, cfg, ledger, rng)
                                         : (o.budget == "baseline")
                                               ? classify::train_classical_baseline(X, cfg, ledger, rng)
                                               : classify::train_linear_sqrt_n(X, cfg, ledger, rng);
        } else {
            auto mode = o.kernel_mode == "explicit" ? classify::KernelMode::ExplicitFeature
                                                    : classify::KernelMode::Estimator;
            res = classify::train_kernel(X, kspec, cfg, mode, ledger, rng);
        }
        total_ledger.state_prep += res.ledger.state_prep;
        total_ledger.max_finding += res.ledger.max_finding;
        total_ledger.norm_estimation += res.ledger.norm_estimation;
        total_ledger.direct += res.ledger.direct;
        if (!have || res.achieved_margin > best.achieved_margin) {
            best = std::move(res);
            have = true;
        }
    }

    auto sigma = o.data.known_sigma(false);
    bool contract_ok = best.audits.rounds == 0 ||
                       (best.audits.ogd_regret_ok() && best.audits.mw_ok());
    if (sigma && kspec.kind == classify::KernelSpec::Kind::Linear)
        contract_ok = contract_ok && best.achieved_margin >= *sigma - o.eps;

    json rec{{"command", "train"},
             {"config", json{{"data", o.data.echo()},
                             {"eps", o.eps},
                             {"budget", o.budget},
                             {"kernel", o.kernel},
                             {"kernel_mode", o.kernel_mode},
                             {"amp_model", o.amp_model},
                             {"rounds_override", o.rounds},
                             {"repeats", o.repeats},
                             {"cost", serialize::to_json(o.cost.model)}}},
             {"seed", o.seed},
             {"ledger", serialize::to_json(total_ledger)},
             {"audit", json{{"margin", best.achieved_margin},
                            {"sigma_known", sigma ? json(*sigma) : json(nullptr)},
                            {"lemmas", serialize::to_json(best.audits)}}},
             {"classifier", serialize::to_json(best.classifier)},
             {"wall_time_sec", best.wall_time_sec},
             {"status", contract_ok ? "ok" : "contract-violated"}};
    emit(rec, o.out_path, os);
    return (!contract_ok && o.strict) ? 3 : 0;
}

// ---- meb / svm ----------------------------------------------------------------

struct QuadOpts {
    DataOpts data;
    CostOpts cost;
    double eps = 0.1;
    std::string budget = "sqrt-n";
    std::int64_t rounds = 0;
    std::uint64_t seed = 1;
    bool strict = false;
    std::string out_path;
};

inline int cmd_quad(const QuadOpts& o, bool meb, std::ostream& os) {
    DataMatrix X = o.data.load(o.seed);
    QueryLedger ledger(o.cost.model);
    Rng rng(o.seed);
    quadratic::QuadConfig cfg;
    cfg.rounds = o.rounds;
    cfg.budget = (o.budget == "sqrt-d") ? classify::Budget::SqrtD : classify::Budget::SqrtN;
    quadratic::QuadResult res = meb ? quadratic::train_meb(X, o.eps, ledger, rng, cfg)
                                    : quadratic::train_l2_svm(X, o.eps, ledger, rng, cfg);

    bool contract_ok = res.sc_regret <= res.sc_regret_bound + 1e-7;
    if (meb) {
        if (auto opt = o.data.known_sigma(true))
            contract_ok = contract_ok && res.radius_sq <= *opt + o.eps;
    }
    json audit = meb ? json{{"radius_sq", res.radius_sq}, {"objective", res.objective}}
                     : json{{"separated", res.separated},
                            {"objective", res.objective},
                            {"margin_lb", res.margin_lb},
                            {"direction", res.direction}};
    audit["sc_regret"] = res.sc_regret;
    audit["sc_regret_bound"] = res.sc_regret_bound;
    json rec{{"command", meb ? "meb" : "svm"},
             {"config", json{{"data", o.data.echo()},
                             {"eps", o.eps},
                             {"budget", o.budget},
                             {"rounds_override", o.rounds},
                             {"cost", serialize::to_json(o.cost.model)}}},
             {"seed", o.seed},
             {"ledger", serialize::to_json(res.ledger)},
             {"audit", audit},
             {"center", res.center},
             {"wall_time_sec", res.wall_time_sec},
             {"status", contract_ok ? "ok" : "contract-violated"}};
    emit(rec, o.out_path, os);
    return (!contract_ok && o.strict) ? 3 : 0;
}

// ---- game ---------------------------------------------------------------------

struct GameOpts {
    std::string matrix;  // generator or csv path
    CostOpts cost;
    double eps = 0.1;
    std::int64_t trials = 1;
    std::int64_t rounds = 0;
    std::uint64_t seed = 1;
    bool strict = false;
    std::string out_path;
};

inline GameInstance load_game(const std::string& text, std::uint64_t seed) {
    if (text.rfind("zerosum:", 0) == 0) {
        InstanceSpec spec = parse_instance(text);
        return instance::generate_lower_zerosum(spec.n, spec.k);
    }
    if (text.rfind("random:", 0) == 0) {
        InstanceSpec spec = parse_instance("ball:" + text.substr(7));
        Rng rng(spec.seed != 0 ? spec.seed : seed);
        return instance::generate_random_antisymmetric(spec.n, rng);
    }
    // csv file with a square matrix
    std::ifstream in(text);
    if (!in) throw CLI::ValidationError("--matrix", "cannot open " + text);
    std::vector<double> vals;
    std::string line;
    std::int64_t rows = 0, cols = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::int64_t c = 0;
        while (std::getline(ss, tok, ',')) {
            vals.push_back(std::stod(tok));
            ++c;
        }
        if (cols < 0) cols = c;
        if (c != cols) throw CLI::ValidationError("--matrix", "ragged matrix file");
        ++rows;
    }
    if (rows != cols)
        throw CLI::ValidationError("--matrix", "matrix must be square (use antisymmetrize)");
    GameInstance g;
    g.n = rows;
    g.entries = std::move(vals);
    bool anti = true;
    for (std::int64_t i = 0; i < g.n && anti; ++i)
        for (std::int64_t j = 0; j < g.n && anti; ++j)
            if (std::fabs(g.at(i, j) + g.at(j, i)) > 1e-12) anti = false;
    g.antisymmetric = anti;
    g.validate();
    return g;
}

inline int cmd_game(const GameOpts& o, std::ostream& os) {
    GameInstance g = load_game(o.matrix, o.seed);
    if (!g.antisymmetric)
        throw CLI::ValidationError("--matrix", "solver needs an anti-symmetric matrix");

    zerosum::GameRunResult best;
    double best_violation = std::numeric_limits<double>::infinity();
    classify::LedgerSnapshot total_ledger;
    for (std::int64_t r = 0; r < std::max<std::int64_t>(o.trials, 1); ++r) {
        QueryLedger ledger(o.cost.model);
        Rng rng(o.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r));
        auto res = zerosum::solve_game(g, o.eps, ledger, rng, o.rounds);
        auto [ok, viol] = zerosum::verify_epsilon_optimal(g, res.wbar, o.eps);
        total_ledger.state_prep += res.ledger.state_prep;
        total_ledger.max_finding += res.ledger.max_finding;
        total_ledger.norm_estimation += res.ledger.norm_estimation;
        total_ledger.direct += res.ledger.direct;
        if (viol < best_violation) {
            best_violation = viol;
            best = std::move(res);
        }
    }
    auto [feasible, violation] = zerosum::verify_epsilon_optimal(g, best.wbar, o.eps);

    json rec{{"command", "game"},
             {"config", json{{"matrix", o.matrix},
                             {"eps", o.eps},
                             {"trials", o.trials},
                             {"rounds_override", o.rounds},
                             {"cost", serialize::to_json(o.cost.model)}}},
             {"seed", o.seed},
             {"ledger", serialize::to_json(total_ledger)},
             {"audit", json{{"feasible", feasible},
                            {"max_violation", violation},
                            {"potential", best.potential},
                            {"potential_bound", best.potential_bound}}},
             {"strategy", serialize::to_json(best.wbar)},
             {"wall_time_sec", best.wall_time_sec},
             {"status", feasible ? "ok" : "contract-violated"}};
    emit(rec, o.out_path, os);
    return (!feasible && o.strict) ? 3 : 0;
}

// ---- bench --------------------------------------------------------------------

struct BenchOpts {
    CostOpts cost;
    std::string algo = "sqrt-n";
    std::string sweep = "n";
    std::vector<std::int64_t> sizes;
    std::int64_t fixed = 0;  // the non-swept dimension
    double eps = 0.1;
    std::int64_t seeds = 5;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_path;
};

// Geometric sweeps with a fixed round budget across all points: T is pinned
// at the sweep's largest size so the fitted slope isolates how charged
// queries scale with the instance, not with the log factor inside T.
inline int cmd_bench(const BenchOpts& o, std::ostream& os, std::ostream& err) {
    if (!o.seed_given)
        throw CLI::ValidationError("--seed", "bench requires an explicit seed");
    if (o.sizes.empty()) throw CLI::ValidationError("--sizes", "need at least one size");
    const bool sweep_d = o.sweep == "d";
    const std::int64_t fixed = o.fixed > 0 ? o.fixed : (sweep_d ? 16 : 8);
    const std::int64_t max_size = *std::max_element(o.sizes.begin(), o.sizes.end());

    std::int64_t rounds_pin;
    if (o.algo == "game") {
        rounds_pin = static_cast<std::int64_t>(
            std::ceil(4.0 * std::log(static_cast<double>(max_size)) / (o.eps * o.eps)));
    } else {
        mwdual::TrainConfig probe;
        probe.eps = o.eps;
        probe.T_const = (o.algo == "sqrt-d") ? 27.0 : 23.0;
        rounds_pin = probe.resolved_rounds(sweep_d ? fixed : max_size);
    }

    std::ostringstream csv;
    csv << "size,mean_queries,std_queries\n";
    std::vector<double> xs, ys;
    for (auto size : o.sizes) {
        std::vector<double> charges;
        for (std::int64_t s = 0; s < o.seeds; ++s) {
            QueryLedger ledger(o.cost.model);
            Rng rng(o.seed + 1000003ULL * static_cast<std::uint64_t>(s));
            if (o.algo == "game") {
                Rng grng(o.seed);
                GameInstance g = instance::generate_random_antisymmetric(size, grng);
                zerosum::solve_game(g, o.eps, ledger, rng, rounds_pin);
            } else {
                std::int64_t n = sweep_d ? fixed : size;
                std::int64_t d = sweep_d ? size : fixed;
                DataMatrix X = instance::generate_case2(n, d, 2);
                mwdual::TrainConfig cfg;
                cfg.eps = o.eps;
                cfg.rounds = rounds_pin;
                cfg.T_const = 0;
                cfg.collect_audits = false;
                if (o.algo == "sqrt-d")
                    classify::train_linear_sqrt_d(X, cfg, ledger, rng);
                else if (o.algo == "baseline")
                    classify::train_classical_baseline(X, cfg, ledger, rng);
                else
                    classify::train_linear_sqrt_n(X, cfg, ledger, rng);
            }
            charges.push_back(ledger.charged_queries());
        }
        double mean = 0;
        for (double c : charges) mean += c;
        mean /= static_cast<double>(charges.size());
        double var = 0;
        for (double c : charges) var += (c - mean) * (c - mean);
        var /= static_cast<double>(charges.size());
        csv << size << "," << mean << "," << std::sqrt(var) << "\n";
        xs.push_back(static_cast<double>(size));
        ys.push_back(mean);
    }
    double slope = fit_loglog_slope(xs, ys);
    if (std::isnan(slope)) err << "warning: single-point sweep, slope undefined\n";
    csv << "# rounds_pinned," << rounds_pin << "\n";
    csv << "# slope," << slope << "\n";
    emit_text(csv.str(), o.out_path, os);
    return 0;
}

// ---- verify -------------------------------------------------------------------

struct VerifyOpts {
    std::string record_path;
    std::string out_path;
};

inline int cmd_verify(const VerifyOpts& o, std::ostream& os) {
    std::ifstream in(o.record_path);
    if (!in) throw CLI::ValidationError("--record", "cannot open " + o.record_path);
    json rec = json::parse(in);
    std::string command = rec.at("command").get<std::string>();
    std::uint64_t seed = rec.at("seed").get<std::uint64_t>();
    const double tol = 1e-9;

    bool verified = false;
    double recorded = 0, recomputed = 0;
    if (command == "train") {
        DataOpts d;
        d.instance = rec["config"]["data"]["instance"].get<std::string>();
        d.data = rec["config"]["data"]["data"].get<std::string>();
        d.format = rec["config"]["data"]["format"].get<std::string>();
        d.labeled = rec["config"]["data"]["labeled"].get<bool>();
        DataMatrix X = d.load(seed);
        auto cls = serialize::classifier_from_json(rec.at("classifier"));
        recomputed = instance::exact_margin(X, mwdual::reconstruct_dense(cls, X));
        recorded = rec["audit"]["margin"].get<double>();
        verified = std::fabs(recomputed - recorded) <= tol;
    } else if (command == "meb" || command == "svm") {
        DataOpts d;
        d.instance = rec["config"]["data"]["instance"].get<std::string>();
        d.data = rec["config"]["data"]["data"].get<std::string>();
        d.format = rec["config"]["data"]["format"].get<std::string>();
        d.labeled = rec["config"]["data"]["labeled"].get<bool>();
        DataMatrix X = d.load(seed);
        auto center = rec.at("center").get<std::vector<double>>();
        double wn = 0;
        for (double x : center) wn += x * x;
        if (command == "meb") {
            double rad = 0;
            for (std::int64_t i = 0; i < X.rows(); ++i) {
                double rni = X.row_norm(i);
                rad = std::max(rad, wn - 2.0 * X.row_dot(i, center) + rni * rni);
            }
            recomputed = rad;
            recorded = rec["audit"]["radius_sq"].get<double>();
        } else {
            double obj = std::numeric_limits<double>::infinity();
            for (std::int64_t i = 0; i < X.rows(); ++i)
                obj = std::min(obj, 2.0 * X.row_dot(i, center) - wn);
            recomputed = obj;
            recorded = rec["audit"]["objective"].get<double>();
        }
        verified = std::fabs(recomputed - recorded) <= tol;
    } else if (command == "game") {
        GameOpts g;
        GameInstance inst = load_game(rec["config"]["matrix"].get<std::string>(), seed);
        auto strat = serialize::strategy_from_json(rec.at("strategy"));
        double eps = rec["config"]["eps"].get<double>();
        auto [ok, viol] = zerosum::verify_epsilon_optimal(inst, strat, eps);
        recomputed = viol;
        recorded = rec["audit"]["max_violation"].get<double>();
        verified = ok == rec["audit"]["feasible"].get<bool>() &&
                   std::fabs(recomputed - recorded) <= tol;
    } else {
        throw CLI::ValidationError("--record", "unknown record command '" + command + "'");
    }

    json out{{"command", "verify"},
             {"record", o.record_path},
             {"verified", verified},
             {"recorded", recorded},
             {"recomputed", recomputed}};
    emit(out, o.out_path, os);
    return verified ? 0 : 1;
}

// ---- gen ----------------------------------------------------------------------

struct GenOpts {
    std::string instance;
    std::uint64_t seed = 1;
    std::string out_path;
};

inline int cmd_gen(const GenOpts& o, std::ostream& os) {
    InstanceSpec spec = parse_instance(o.instance);
    Rng rng(spec.seed != 0 ? spec.seed : o.seed);
    auto g = instance::generate(spec, rng);
    std::ostringstream csv;
    csv.precision(17);
    if (auto* m = std::get_if<DataMatrix>(&g)) {
        for (std::int64_t i = 0; i < m->rows(); ++i) {
            for (std::int64_t j = 0; j < m->cols(); ++j)
                csv << (j ? "," : "") << m->entry(i, j);
            csv << "\n";
        }
    } else {
        auto& game = std::get<GameInstance>(g);
        for (std::int64_t i = 0; i < game.n; ++i) {
            for (std::int64_t j = 0; j < game.n; ++j)
                csv << (j ? "," : "") << game.at(i, j);
            csv << "\n";
        }
    }
    emit_text(csv.str(), o.out_path, os);
    return 0;
}

// ---- entry --------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& os, std::ostream& err) {
    CLI::App app{"sublinear classifier training and game solving with query-accounted "
                 "quantum-subroutine simulation"};
    app.require_subcommand(1);

    TrainOpts t;
    auto* train = app.add_subcommand("train", "train a linear or kernel classifier");
    t.data.add_flags(train);
    t.cost.add_flags(train);
    train->add_option("--eps", t.eps, "target accuracy")->check(CLI::Range(1e-9, 0.999999));
    train->add_option("--budget", t.budget)->check(CLI::IsMember({"sqrt-n", "sqrt-d", "baseline"}));
    train->add_option("--kernel", t.kernel, "linear, poly:<q> or gauss:<s>");
    train->add_option("--kernel-mode", t.kernel_mode)
        ->check(CLI::IsMember({"explicit", "estimator"}));
    train->add_option("--amp-model", t.amp_model)
        ->check(CLI::IsMember({"sqrt-weight", "linear-amplitude"}));
    train->add_option("--repeats", t.repeats, "independent trainings, keep best margin");
    train->add_option("--rounds", t.rounds, "override the round count T");
    train->add_option("--seed", t.seed)->envname("SUBLIN_SEED");
    train->add_flag("--strict", t.strict, "exit 3 on contract violation");
    train->add_option("--out", t.out_path, "also write the record to this path");

    QuadOpts qm, qs;
    auto* meb = app.add_subcommand("meb", "minimum enclosing ball");
    auto* svm = app.add_subcommand("svm", "l2-margin SVM");
    for (auto [cmd, o] : {std::pair{meb, &qm}, std::pair{svm, &qs}}) {
        o->data.add_flags(cmd);
        o->cost.add_flags(cmd);
        cmd->add_option("--eps", o->eps)->check(CLI::Range(1e-9, 0.999999));
        cmd->add_option("--budget", o->budget)->check(CLI::IsMember({"sqrt-n", "sqrt-d"}));
        cmd->add_option("--rounds", o->rounds);
        cmd->add_option("--seed", o->seed)->envname("SUBLIN_SEED");
        cmd->add_flag("--strict", o->strict);
        cmd->add_option("--out", o->out_path);
    }

    GameOpts g;
    auto* game = app.add_subcommand("game", "solve a zero-sum matrix game");
    g.cost.add_flags(game);
    game->add_option("--matrix", g.matrix, "zerosum:n=..,k=.., random:n=.., or csv path")
        ->required();
    game->add_option("--eps", g.eps)->check(CLI::Range(1e-9, 0.333333));
    game->add_option("--trials", g.trials, "independent runs, keep the most feasible");
    game->add_option("--rounds", g.rounds);
    game->add_option("--seed", g.seed)->envname("SUBLIN_SEED");
    game->add_flag("--strict", g.strict);
    game->add_option("--out", g.out_path);

    BenchOpts b;
    auto* bench = app.add_subcommand("bench", "query-complexity scaling sweeps");
    b.cost.add_flags(bench);
    bench->add_option("--algo", b.algo)
        ->check(CLI::IsMember({"sqrt-n", "sqrt-d", "baseline", "game"}));
    bench->add_option("--sweep", b.sweep)->check(CLI::IsMember({"n", "d"}));
    bench->add_option("--sizes", b.sizes, "comma-separated sweep sizes")
        ->required()
        ->delimiter(',');
    bench->add_option("--fixed", b.fixed, "the non-swept dimension");
    bench->add_option("--eps", b.eps);
    bench->add_option("--seeds", b.seeds, "trials per point");
    auto* seed_opt = bench->add_option("--seed", b.seed)->envname("SUBLIN_SEED");
    bench->add_option("--out", b.out_path);

    VerifyOpts v;
    auto* verify = app.add_subcommand("verify", "recompute a stored record's audits");
    verify->add_option("--record", v.record_path)->required();
    verify->add_option("--out", v.out_path);

    GenOpts gen_o;
    auto* gen = app.add_subcommand("gen", "emit a generated instance as CSV");
    gen->add_option("--instance", gen_o.instance)->required();
    gen->add_option("--seed", gen_o.seed)->envname("SUBLIN_SEED");
    gen->add_option("--out", gen_o.out_path);

    try {
        app.parse(argc, argv);
        b.seed_given = seed_opt->count() > 0 || std::getenv("SUBLIN_SEED") != nullptr;
        if (*train) return cmd_train(t, os);
        if (*meb) return cmd_quad(qm, true, os);
        if (*svm) return cmd_quad(qs, false, os);
        if (*game) return cmd_game(g, os);
        if (*bench) return cmd_bench(b, os, err);
        if (*verify) return cmd_verify(v, os);
        if (*gen) return cmd_gen(gen_o, os);
    } catch (const CLI::CallForHelp&) {
        os << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "flag error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace sublin::cli
