#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sublin/matrix.hpp"
#include "sublin/qsim.hpp"

namespace sublin::mwdual {

inline double clip(double v, double c) {
    if (c <= 0) throw std::invalid_argument("clip: bound must be positive");
    return std::min(c, std::max(-c, v));
}

enum class AmpModel { SqrtWeight, LinearAmplitude };

// Training knobs shared by the linear trainers. T and eta are derived from
// (eps, n) via T = T_const^2 eps^-2 ln n and eta = sqrt(ln n / T) unless set
// explicitly. Logs are natural throughout: that is the reading under which
// the 23- and 27-constants close the accuracy argument.
struct TrainConfig {
    double eps = 0.1;
    std::int64_t rounds = 0;     // 0: derive from eps
    double eta = 0;              // 0: derive
    double T_const = 23.0;
    AmpModel amp_model = AmpModel::SqrtWeight;
    std::uint64_t seed = 1;
    bool collect_audits = true;

    std::int64_t resolved_rounds(std::int64_t n) const {
        if (rounds > 0) return rounds;
        if (eps <= 0 || eps >= 1) throw std::invalid_argument("TrainConfig: eps in (0,1)");
        double logn = std::max(std::log(static_cast<double>(n)), 1.0);
        return static_cast<std::int64_t>(std::ceil(T_const * T_const * logn / (eps * eps)));
    }
    double resolved_eta(std::int64_t n, std::int64_t T) const {
        if (eta > 0) return eta;
        double logn = std::max(std::log(static_cast<double>(n)), 1.0);
        return std::sqrt(logn / static_cast<double>(T));
    }
};

// Log of the sampled columns and multipliers that defines the weight oracle:
// u_{t+1}(i) = prod_s (1 - eta v_s(i) + eta^2 v_s(i)^2) with
// v_s(i) = clip(X_i(j_s) * scale_s + offset_s, 1/eta). The linear algorithms
// use offset_s = 0; the quadratic family adds offsets and a per-row constant.
struct WeightHistory {
    struct Step {
        std::int32_t j = 0;
        double scale = 0;
        double offset = 0;
    };
    std::vector<Step> steps;
    double eta = 0;

    std::int64_t rounds_recorded() const { return static_cast<std::int64_t>(steps.size()); }
};

inline double weight_factor(double clipped_v, double eta) {
    double x = eta * clipped_v;
    return 1.0 - x + x * x;  // >= 3/4 for |x| <= 1, so weights stay positive
}

// u_{t+1}(i) rebuilt from the history, charging the oracle-implementation
// cost of lazy_queries_per_step matrix queries per recorded step.
inline double lazy_weight(const WeightHistory& h, const DataMatrix& X, QueryLedger& ledger,
                          std::int64_t i, double b_i = 0.0) {
    double u = 1.0;
    const double inv_eta = 1.0 / h.eta;
    for (const auto& s : h.steps) {
        double v = clip(X.entry(i, s.j) * s.scale + s.offset + b_i, inv_eta);
        u *= weight_factor(v, h.eta);
    }
    ledger.charge(Charge::Direct,
                  ledger.model().lazy_queries_per_step * static_cast<double>(h.steps.size()));
    return u;
}

// Measurement of the prepared weight state. Under SqrtWeight the oracle
// exposes sqrt(u) so the sampled law is u / ||u||_1 (the distribution the
// classical analysis needs); under LinearAmplitude it exposes u itself and
// the law is u^2 / ||u||_2^2 (the literal amplitudes written in the paper).
// Weights are passed relative to their maximum; only ratios matter.
inline std::int64_t measure_weight_state_dense(const std::vector<double>& u, AmpModel amp_model,
                                               double per_call, QueryLedger& ledger, Rng& rng,
                                               std::int64_t* attempts_out = nullptr) {
    auto n = static_cast<std::int64_t>(u.size());
    if (amp_model == AmpModel::SqrtWeight) {
        qsim::AmplitudeOracle oracle{
            [&](std::int64_t i) { return std::sqrt(u[i]); }, per_call};
        return qsim::amplify_prepare_sample(oracle, n, ledger, rng, attempts_out);
    }
    qsim::AmplitudeOracle oracle{[&](std::int64_t i) { return u[i]; }, per_call};
    return qsim::amplify_prepare_sample(oracle, n, ledger, rng, attempts_out);
}

inline std::int64_t measure_weight_state(const WeightHistory& h, const DataMatrix& X,
                                         AmpModel amp_model, QueryLedger& ledger, Rng& rng) {
    std::vector<double> u(X.rows());
    const double inv_eta = 1.0 / h.eta;
    for (std::int64_t i = 0; i < X.rows(); ++i) {
        double w = 1.0;
        for (const auto& s : h.steps)
            w *= weight_factor(clip(X.entry(i, s.j) * s.scale + s.offset, inv_eta), h.eta);
        u[i] = w;
    }
    double per_call =
        ledger.model().lazy_queries_per_step * static_cast<double>(h.steps.size());
    return measure_weight_state_dense(u, amp_model, per_call, ledger, rng);
}

// Host-resident l2 sample: index j with probability v(j)^2 / ||v||^2.
inline std::int64_t l2_sample(const std::vector<double>& v, Rng& rng) {
    double sum_sq = 0;
    for (double x : v) sum_sq += x * x;
    if (sum_sq <= 0) throw std::invalid_argument("l2_sample: zero vector");
    double target = rng.uniform() * sum_sq;
    double acc = 0;
    std::int64_t last_nonzero = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) last_nonzero = static_cast<std::int64_t>(j);
        acc += v[j] * v[j];
        if (acc > target) return static_cast<std::int64_t>(j);
    }
    return last_nonzero;
}

// Dual state of the online gradient descent: y_{t+1} = y_t + X_{i_t}/sqrt(2T),
// reconstructible from the picks alone. The dense vector and the exact
// incremental norm are host-side conveniences of the sqrt-n path.
struct DualState {
    std::vector<std::int32_t> picks;
    std::vector<double> y;
    std::vector<std::int32_t> touched;  // columns that ever became nonzero
    double norm_sq = 0;
    double inv_sqrt_2t = 0;

    DualState(std::int64_t d, std::int64_t T)
        : y(d, 0.0), inv_sqrt_2t(1.0 / std::sqrt(2.0 * static_cast<double>(T))) {}
};

// Appends the pick and maintains y and ||y||^2 exactly:
// ||y + c r||^2 = ||y||^2 + 2c <r,y> + c^2 ||r||^2. Reads one row of X
// (charged d entry queries) in the charged variant.
inline void ogd_step(DualState& s, const DataMatrix& X, std::int64_t i_t, QueryLedger* ledger) {
    if (i_t < 0 || i_t >= X.rows()) throw std::out_of_range("ogd_step: row index");
    double cross = X.row_dot(i_t, s.y);
    double rn = X.row_norm(i_t);
    s.norm_sq += 2.0 * s.inv_sqrt_2t * cross + s.inv_sqrt_2t * s.inv_sqrt_2t * rn * rn;
    s.norm_sq = std::max(s.norm_sq, 0.0);
    X.add_row_to(i_t, s.inv_sqrt_2t, s.y, &s.touched);
    s.picks.push_back(static_cast<std::int32_t>(i_t));
    if (ledger)
        ledger->charge(Charge::Direct,
                       ledger->model().per_entry * static_cast<double>(X.cols()));
}

// O(log n / eps^2)-sized output: round picks plus per-round normalizers
// (exact ||y_t|| on the sqrt-n path, estimated on the sqrt-d path). Any
// coordinate of w-bar is recoverable in O(T) entry queries. `scale` is a
// global output multiplier: 1 normally, <1 when the estimated-norm path
// needs a final projection back into the unit ball.
struct SuccinctClassifier {
    std::int64_t rounds = 0;
    double scale = 1.0;
    std::vector<std::int32_t> picks;
    std::vector<double> norms;  // ||y_t|| for t = 1..T (norms[0] = 0, y_1 = 0)

    bool consistent() const {
        return rounds == static_cast<std::int64_t>(picks.size()) &&
               rounds == static_cast<std::int64_t>(norms.size());
    }
};

// w-bar(j) = scale * (1/T) sum_t y_t(j) / max(1, norm_t), with y_t accumulated
// from the picks. Charges one entry query per round when a ledger is given.
inline double reconstruct_coordinate(const SuccinctClassifier& c, const DataMatrix& X,
                                     std::int64_t j, QueryLedger* ledger = nullptr) {
    if (j < 0 || j >= X.cols()) throw std::out_of_range("reconstruct_coordinate: column");
    if (!c.consistent()) throw std::invalid_argument("reconstruct_coordinate: bad classifier");
    const double inv_sqrt_2t = 1.0 / std::sqrt(2.0 * static_cast<double>(c.rounds));
    double cum = 0, w = 0;
    for (std::int64_t t = 0; t < c.rounds; ++t) {
        w += cum / std::max(1.0, c.norms[t]);
        cum += X.entry(c.picks[t], j) * inv_sqrt_2t;
    }
    if (ledger)
        ledger->charge(Charge::Direct,
                       ledger->model().per_entry * static_cast<double>(c.rounds));
    return c.scale * w / static_cast<double>(c.rounds);
}

inline std::vector<double> reconstruct_dense(const SuccinctClassifier& c, const DataMatrix& X) {
    std::vector<double> w(X.cols());
    for (std::int64_t j = 0; j < X.cols(); ++j) w[j] = reconstruct_coordinate(c, X, j);
    return w;
}

// Exact per-run audit quantities used by the deterministic lemma checks:
// OGD regret (max_w sum_t X_{i_t} w = ||sum_t X_{i_t}||) and the MW
// inequality over the exact normalized weights.
struct RunAudits {
    double regret_best = 0;     // ||sum_t X_{i_t}||
    double regret_achieved = 0; // sum_t X_{i_t} w_t
    double regret_bound = 0;    // 2 sqrt(2T)
    double mw_lhs = 0;          // sum_t p_t . v_t
    double mw_min_sum_v = 0;    // min_i sum_t v_t(i)
    double mw_sum_p_v2 = 0;     // sum_t p_t . v_t^2
    double eta = 0;
    double log_n = 0;
    std::int64_t rounds = 0;

    bool ogd_regret_ok(double tol = 1e-7) const {
        return regret_best - regret_achieved <= regret_bound + tol;
    }
    double mw_rhs() const { return mw_min_sum_v + eta * mw_sum_p_v2 + log_n / eta; }
    bool mw_ok(double tol = 1e-7) const { return mw_lhs <= mw_rhs() + tol; }
};

} // namespace sublin::mwdual
