#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "sublin/classify.hpp"
#include "sublin/matrix.hpp"
#include "sublin/qsim.hpp"

namespace sublin::zerosum {

// Sparse simplex vector. Solver outputs have support at most T = O(log n /
// eps^2) regardless of n.
struct Strategy {
    std::int64_t n = 0;
    std::map<std::int64_t, double> support;

    double mass(std::int64_t i) const {
        auto it = support.find(i);
        return it == support.end() ? 0.0 : it->second;
    }
    double total() const {
        double s = 0;
        for (auto& [i, m] : support) s += m;
        return s;
    }
    void validate() const {
        for (auto& [i, m] : support)
            if (i < 0 || i >= n || m < 0) throw std::invalid_argument("Strategy: bad support");
        if (std::fabs(total() - 1.0) > 1e-12)
            throw std::invalid_argument("Strategy: mass must sum to 1");
    }
    std::vector<double> dense() const {
        std::vector<double> v(n, 0.0);
        for (auto& [i, m] : support) v[i] = m;
        return v;
    }
};

// (n1+n2+1)-dimensional skew block matrix [[0, X, -1], [-X^T, 0, 1],
// [1, -1, 0]]; an eps-optimal strategy for it yields an 18eps-optimal
// strategy pair for X. Game value of the result is 0.
inline GameInstance antisymmetrize(const std::vector<double>& X, std::int64_t n1,
                                   std::int64_t n2) {
    if (n1 < 1 || n2 < 1 || static_cast<std::int64_t>(X.size()) != n1 * n2)
        throw std::invalid_argument("antisymmetrize: bad shape");
    for (double v : X)
        if (!std::isfinite(v) || std::fabs(v) > 1.0 + 1e-12)
            throw std::invalid_argument("antisymmetrize: entries must satisfy |X_ij| <= 1");
    const std::int64_t n = n1 + n2 + 1;
    GameInstance g;
    g.n = n;
    g.entries.assign(n * n, 0.0);
    auto put = [&](std::int64_t i, std::int64_t j, double v) {
        g.entries[i * n + j] = v;
        g.entries[j * n + i] = -v;
    };
    for (std::int64_t i = 0; i < n1; ++i)
        for (std::int64_t j = 0; j < n2; ++j) put(i, n1 + j, X[i * n2 + j]);
    for (std::int64_t i = 0; i < n1; ++i) put(i, n1 + n2, -1.0);
    for (std::int64_t j = 0; j < n2; ++j) put(n1 + j, n1 + n2, 1.0);
    g.antisymmetric = true;
    g.validate();
    return g;
}

// Exact feasibility check X w <= eps * 1, no ledger.
inline std::pair<bool, double> verify_epsilon_optimal(const GameInstance& g, const Strategy& w,
                                                      double eps) {
    if (w.n != g.n) throw std::invalid_argument("verify_epsilon_optimal: dimension mismatch");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < g.n; ++i) {
        double s = 0;
        for (auto& [j, m] : w.support) s += g.at(i, j) * m;
        worst = std::max(worst, s);
    }
    return {worst <= eps, worst};
}

struct GameRunResult {
    Strategy wbar;
    double potential = 0;        // Phi(T) = sum_i exp[eps sum_tau X_{i,k_tau} / 2]
    double potential_bound = 0;  // 3 n^{5/3}
    std::int64_t rounds = 0;
    classify::LedgerSnapshot ledger;
    double wall_time_sec = 0;
};

// Exponential-weights solver: T = ceil(4 eps^-2 ln n) rounds of sampling k_t
// from the state with amplitudes exp[eps sum_tau X_{i,k_tau} / 4] (so
// probabilities are exactly the Grigoriadis-Khachiyan weights
// exp[eps sum / 2]), tallying picks, and returning the empirical
// distribution. X w-bar <= eps 1 with probability at least 2/3. Exponents
// are shifted by their running maximum (the max-finding primitive) before
// exponentiation, which leaves the sampled law unchanged.
inline GameRunResult solve_game(const GameInstance& g, double eps, QueryLedger& ledger, Rng& rng,
                                std::int64_t rounds_override = 0) {
    if (!g.antisymmetric) throw std::invalid_argument("solve_game: matrix must be anti-symmetric");
    if (eps <= 0 || eps >= 1) throw std::invalid_argument("solve_game: eps in (0,1)");
    const auto t_start = std::chrono::steady_clock::now();
    const std::int64_t n = g.n;
    const std::int64_t T =
        rounds_override > 0
            ? rounds_override
            : static_cast<std::int64_t>(
                  std::ceil(4.0 * std::log(static_cast<double>(n)) / (eps * eps)));

    std::vector<double> expo(n, 0.0);   // eps/2 * sum_tau X_{i,k_tau}
    std::vector<double> probs(n, 1.0);  // exp(expo - expo_max), relative weights
    std::vector<std::int64_t> tally(n, 0);
    double sum_p = static_cast<double>(n), p_max = 1.0;

    for (std::int64_t t = 1; t <= T; ++t) {
        Rng rt = rng.substream(static_cast<std::uint64_t>(t));
        const double per_call = static_cast<double>(t - 1);  // replaying t-1 picked columns
        std::int64_t k_t =
            classify::detail::amplify_sample_l1(probs, sum_p, p_max, per_call, ledger, rt);
        ++tally[k_t];

        double shift = -std::numeric_limits<double>::infinity();
        for (std::int64_t i = 0; i < n; ++i) {
            expo[i] += 0.5 * eps * g.at(i, k_t);
            shift = std::max(shift, expo[i]);
        }
        sum_p = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            probs[i] = std::exp(expo[i] - shift);
            sum_p += probs[i];
        }
        p_max = 1.0;
    }

    GameRunResult out;
    out.rounds = T;
    out.wbar.n = n;
    for (std::int64_t i = 0; i < n; ++i)
        if (tally[i] > 0)
            out.wbar.support[i] = static_cast<double>(tally[i]) / static_cast<double>(T);
    out.wbar.validate();
    double phi = 0;
    for (std::int64_t i = 0; i < n; ++i) phi += std::exp(expo[i]);
    out.potential = phi;
    out.potential_bound = 3.0 * std::pow(static_cast<double>(n), 5.0 / 3.0);
    out.ledger = classify::LedgerSnapshot::take(ledger);
    out.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

// Block renormalization recovering the strategy pair of the original n1 x n2
// game from a strategy for its anti-symmetrization. The 18eps guarantee is
// verified empirically against exact payoffs, not assumed.
struct RecoveredStrategies {
    Strategy a, b;
    bool degenerate = false;
};

inline RecoveredStrategies recover_strategies(const Strategy& w, std::int64_t n1,
                                              std::int64_t n2) {
    if (w.n != n1 + n2 + 1) throw std::invalid_argument("recover_strategies: dimension mismatch");
    RecoveredStrategies out;
    out.a.n = n1;
    out.b.n = n2;
    double ma = 0, mb = 0;
    for (auto& [i, m] : w.support) {
        if (i < n1)
            ma += m;
        else if (i < n1 + n2)
            mb += m;
    }
    if (ma <= 0 || mb <= 0) {
        out.degenerate = true;
        return out;
    }
    for (auto& [i, m] : w.support) {
        if (i < n1)
            out.a.support[i] = m / ma;
        else if (i < n1 + n2)
            out.b.support[i - n1] = m / mb;
    }
    out.a.validate();
    out.b.validate();
    return out;
}

} // namespace sublin::zerosum
