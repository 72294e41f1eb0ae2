#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sublin/classify.hpp"
#include "sublin/matrix.hpp"
#include "sublin/mwdual.hpp"

// Solvers for the quadratic maximin family b_i + 2 X_i w - ||w||^2:
// minimum enclosing ball (b_i = -||X_i||^2) and l2-margin SVM (b = 0).
// The objective is 2-strongly concave in w, so the dual side runs online
// gradient ascent with step 1/(2t), i.e. w_{t+1} is the running mean of the
// picked rows, with O(log T) regret.

namespace sublin::quadratic {

struct QuadConfig {
    double eps = 0.1;
    std::int64_t rounds = 0;  // 0: T = T_const^2 eps^-2 ln n
    double T_const = 23.0;
    classify::Budget budget = classify::Budget::SqrtN;
    bool collect_audits = true;
};

// Unbiased single-sample estimate of b_i + 2 X_i w - ||w||^2 via one l2
// sample of w. The w = 0 case is exact by convention.
inline double quad_estimator(double b_i, const DataMatrix& X, std::int64_t i,
                             const std::vector<double>& w, QueryLedger& ledger, Rng& rng) {
    double norm_sq = 0;
    for (double x : w) norm_sq += x * x;
    if (norm_sq <= 0) return b_i;
    std::int64_t j = mwdual::l2_sample(w, rng);
    double xij = instance::query_entry(X, ledger, i, j);
    return b_i + 2.0 * xij * norm_sq / w[j] - norm_sq;
}

struct QuadResult {
    std::vector<double> center;     // w-bar
    double objective = 0;           // exact min_i b_i + 2 X_i w-bar - ||w-bar||^2
    double radius_sq = 0;           // MEB audit: max_i ||w-bar - X_i||^2
    std::vector<double> direction;  // SVM: w-bar / ||w-bar|| (empty if not separated)
    double margin_lb = 0;           // SVM: sqrt(max(0, objective))
    bool separated = false;
    std::vector<std::int32_t> picks;
    classify::LedgerSnapshot ledger;
    double wall_time_sec = 0;
    double sc_regret = 0;        // best-in-hindsight gap of the dual player
    double sc_regret_bound = 0;  // 4 (1 + ln T)
};

namespace detail {

inline QuadResult run_quadratic(const DataMatrix& X, const std::vector<double>& b,
                                const QuadConfig& cfg, QueryLedger& ledger, Rng& rng) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::int64_t n = X.rows(), d = X.cols();
    if (cfg.eps <= 0 || cfg.eps >= 1) throw std::invalid_argument("quadratic: eps in (0,1)");
    const double logn = std::max(std::log(static_cast<double>(n)), 1.0);
    const std::int64_t T =
        cfg.rounds > 0 ? cfg.rounds
                       : static_cast<std::int64_t>(
                             std::ceil(cfg.T_const * cfg.T_const * logn / (cfg.eps * cfg.eps)));
    const double eta = std::sqrt(logn / static_cast<double>(T));
    const double inv_eta = 1.0 / eta;
    const bool sqrt_d = cfg.budget == classify::Budget::SqrtD;
    const auto outer_reps =
        static_cast<std::int64_t>(2 * std::ceil(std::log(static_cast<double>(T))));

    classify::detail::LinearLoopState mw(n);
    std::vector<double> w(d, 0.0), wbar(d, 0.0);
    QuadResult out;
    out.picks.reserve(T);
    double sum_f_achieved = 0, sum_b_picked = 0;
    std::optional<classify::detail::BitwiseNormEstimator> norm_pipe;
    if (sqrt_d) norm_pipe.emplace(d, eta * eta, ledger.model());
    std::vector<std::pair<std::int64_t, double>> nonzeros;

    for (std::int64_t t = 1; t <= T; ++t) {
        Rng rt = rng.substream(static_cast<std::uint64_t>(t));
        for (std::int64_t j = 0; j < d; ++j) wbar[j] += w[j];

        // i_t from the weight state; the oracle replays t-1 recorded steps
        const double per_call_w =
            ledger.model().lazy_queries_per_step * static_cast<double>(t - 1);
        std::int64_t i_t =
            classify::detail::amplify_sample_l1(mw.u, mw.sum_u, mw.u_max, per_call_w, ledger, rt);
        out.picks.push_back(static_cast<std::int32_t>(i_t));
        sum_b_picked += b[i_t];

        double norm_sq_exact = 0;
        for (std::int64_t j = 0; j < d; ++j) norm_sq_exact += w[j] * w[j];
        sum_f_achieved += b[i_t] + 2.0 * X.row_dot(i_t, w) - norm_sq_exact;

        // norm of w_t: exact on the sqrt-n path, estimated on the sqrt-d path
        double norm_sq_used = norm_sq_exact;
        if (sqrt_d && norm_sq_exact > 0) {
            nonzeros.clear();
            for (std::int64_t j = 0; j < d; ++j)
                if (w[j] != 0.0) nonzeros.emplace_back(j, w[j] * w[j]);  // bound B = 1
            double m = norm_pipe->run(nonzeros, outer_reps, static_cast<double>(t - 1), ledger, rt);
            norm_sq_used = std::max(0.0, m * static_cast<double>(d));
        }

        // j_t and the quadratic estimator scale
        std::int64_t j_t = -1;
        double mult = 0, offset = 0;
        if (norm_sq_exact > 0) {
            if (sqrt_d) {
                qsim::AmplitudeOracle wo{[&](std::int64_t j) { return w[j]; },
                                         static_cast<double>(t - 1)};
                j_t = qsim::amplify_prepare_sample(wo, d, ledger, rt);
            } else {
                j_t = mwdual::l2_sample(w, rt);
            }
            mult = 2.0 * norm_sq_used / w[j_t];
            offset = -norm_sq_used;
        }
        // v_t(i) = clip(b_i + mult * X_i(j_t) + offset); w_t = 0 rounds use b_i exactly

        // dual ascent, step 1/(2t): running mean of the picked rows
        {
            double inv_t = 1.0 / static_cast<double>(t);
            for (std::int64_t j = 0; j < d; ++j) w[j] *= (1.0 - inv_t);
            X.add_row_to(i_t, inv_t, w);
            if (!sqrt_d)
                ledger.charge(Charge::Direct,
                              ledger.model().per_entry * static_cast<double>(d));
            double wn = 0;
            for (std::int64_t j = 0; j < d; ++j) wn += w[j] * w[j];
            if (wn > 1.0) {  // projection onto the ball (inactive: means of rows stay inside)
                double s = 1.0 / std::sqrt(wn);
                for (auto& x : w) x *= s;
            }
        }

        // multiplicative weight update
        {
            const double* col = j_t >= 0 ? X.column(j_t) : nullptr;
            double new_sum = 0, new_max = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                double est = (j_t < 0) ? b[i]
                                       : b[i] + mult * (col ? col[i] : X.entry(i, j_t)) + offset;
                double v = mwdual::clip(est, inv_eta);
                double un = mw.u[i] * mwdual::weight_factor(v, eta);
                mw.u[i] = un;
                new_sum += un;
                new_max = std::max(new_max, un);
            }
            mw.sum_u = new_sum;
            mw.u_max = new_max;
            mw.rescale_if_needed();
        }
    }

    for (auto& x : wbar) x /= static_cast<double>(T);

    // best-in-hindsight dual regret: the unconstrained maximizer of
    // sum_t f_{i_t} is the mean of the picked rows, which is w_{T+1}
    double wn = 0, best_sum = sum_b_picked;
    for (std::int64_t j = 0; j < d; ++j) wn += w[j] * w[j];
    best_sum += static_cast<double>(T) * wn;
    out.sc_regret = best_sum - sum_f_achieved;
    out.sc_regret_bound = 4.0 * (1.0 + std::log(static_cast<double>(T)));

    double obj = std::numeric_limits<double>::infinity(), rad = 0, wbn = 0;
    for (std::int64_t j = 0; j < d; ++j) wbn += wbar[j] * wbar[j];
    for (std::int64_t i = 0; i < n; ++i) {
        double fi = b[i] + 2.0 * X.row_dot(i, wbar) - wbn;
        obj = std::min(obj, fi);
        double rni = X.row_norm(i);
        rad = std::max(rad, wbn - 2.0 * X.row_dot(i, wbar) + rni * rni);
    }
    out.center = std::move(wbar);
    out.objective = obj;
    out.radius_sq = rad;
    out.ledger = classify::LedgerSnapshot::take(ledger);
    out.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace detail

// Minimum enclosing ball: returns a center whose squared enclosing radius is
// within eps of optimal with probability at least 2/3.
inline QuadResult train_meb(const DataMatrix& X, double eps, QueryLedger& ledger, Rng& rng,
                            QuadConfig cfg = {}) {
    cfg.eps = eps;
    std::vector<double> b(X.rows());
    for (std::int64_t i = 0; i < X.rows(); ++i) {
        double rn = X.row_norm(i);
        b[i] = -rn * rn;
    }
    // reading b = -||X_i||^2 off the data costs one full pass
    ledger.charge(Charge::Direct, ledger.model().per_entry *
                                      static_cast<double>(X.rows() * X.cols()));
    return detail::run_quadratic(X, b, cfg, ledger, rng);
}

// l2-margin SVM: same loop with b = 0. When the exact objective at w-bar is
// positive the data is separated with margin at least sqrt(objective) along
// direction w-bar/||w-bar||; otherwise reports not-separated.
inline QuadResult train_l2_svm(const DataMatrix& X, double eps, QueryLedger& ledger, Rng& rng,
                               QuadConfig cfg = {}) {
    cfg.eps = eps;
    std::vector<double> b(X.rows(), 0.0);
    QuadResult r = detail::run_quadratic(X, b, cfg, ledger, rng);
    if (r.objective > 0) {
        r.separated = true;
        r.margin_lb = std::sqrt(r.objective);
        double wn = 0;
        for (double x : r.center) wn += x * x;
        wn = std::sqrt(wn);
        r.direction = r.center;
        for (auto& x : r.direction) x /= wn;
    }
    return r;
}

} // namespace sublin::quadratic
