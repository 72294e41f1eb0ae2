#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sublin/matrix.hpp"
#include "sublin/mwdual.hpp"

// Deterministic exact references shared by the tests: dense multiplicative
// weights with no sampling, exact online gradient descent, grid search on the
// sphere for d <= 3, and exact values of tiny matrix games. These reuse the
// production update formulas with sampling switched off, so a discrepancy
// between reference and sampled runs isolates the sampling layer.

namespace sublin::reference {

struct ExactRun {
    double sigma = 0;
    std::int64_t rounds = 0;
    mwdual::RunAudits audits;
};

// Full-computation primal-dual: the quadratic MW update fed with the exact
// v_t = X w_t and OGD fed with the exact expected row q_t = X^T p_t. The
// deterministic penalty 2 sqrt(2T) + 2 sqrt(T ln n) <= eps T fixes T.
inline ExactRun exact_primal_dual(const DataMatrix& X, double eps) {
    const std::int64_t n = X.rows(), d = X.cols();
    if (n * d > 1'000'000)
        throw std::invalid_argument("exact_primal_dual: size guard n*d <= 1e6 exceeded");
    if (eps <= 0 || eps >= 1) throw std::invalid_argument("exact_primal_dual: eps in (0,1)");

    const double logn = std::max(std::log(static_cast<double>(n)), 1.0);
    const double root_t = (2.0 * std::sqrt(2.0) + 2.0 * std::sqrt(logn)) / eps;
    const auto T = static_cast<std::int64_t>(std::ceil(root_t * root_t));
    const double eta = std::sqrt(logn / static_cast<double>(T));
    const double inv_eta = 1.0 / eta;
    const double inv_sqrt_2t = 1.0 / std::sqrt(2.0 * static_cast<double>(T));

    std::vector<double> u(n, 1.0), y(d, 0.0), w(d, 0.0), wbar(d, 0.0);
    std::vector<double> v(n), q(d), qsum(d, 0.0), vsum(n, 0.0);
    ExactRun run;
    run.rounds = T;
    run.audits.rounds = T;
    run.audits.eta = eta;
    run.audits.log_n = logn;
    run.audits.regret_bound = 2.0 * std::sqrt(2.0 * static_cast<double>(T));

    for (std::int64_t t = 0; t < T; ++t) {
        // w_t = y_t / max(1, ||y_t||)
        double ynorm = 0;
        for (std::int64_t j = 0; j < d; ++j) ynorm += y[j] * y[j];
        ynorm = std::sqrt(ynorm);
        double denom = std::max(1.0, ynorm);
        for (std::int64_t j = 0; j < d; ++j) {
            w[j] = y[j] / denom;
            wbar[j] += w[j];
        }

        double norm1 = 0;
        for (std::int64_t i = 0; i < n; ++i) norm1 += u[i];

        // exact v_t = X w_t and q_t = X^T p_t
        std::fill(q.begin(), q.end(), 0.0);
        double pv = 0, pv2 = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            double vi = mwdual::clip(X.row_dot(i, w), inv_eta);
            v[i] = vi;
            vsum[i] += vi;
            double pi = u[i] / norm1;
            pv += pi * vi;
            pv2 += pi * vi * vi;
            X.add_row_to(i, pi, q);
        }
        run.audits.mw_lhs += pv;
        run.audits.mw_sum_p_v2 += pv2;

        double qw = 0;
        for (std::int64_t j = 0; j < d; ++j) {
            qw += q[j] * w[j];
            qsum[j] += q[j];
            y[j] += inv_sqrt_2t * q[j];
        }
        run.audits.regret_achieved += qw;

        double umax = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            u[i] *= mwdual::weight_factor(v[i], eta);
            umax = std::max(umax, u[i]);
        }
        if (umax < 0x1p-64) {  // lossless power-of-two rescale
            for (auto& ui : u) ui *= 0x1p+64;
        }
    }

    double qn = 0;
    for (std::int64_t j = 0; j < d; ++j) qn += qsum[j] * qsum[j];
    run.audits.regret_best = std::sqrt(qn);  // max over the ball of sum_t q_t . w
    run.audits.mw_min_sum_v = *std::min_element(vsum.begin(), vsum.end());

    for (auto& x : wbar) x /= static_cast<double>(T);
    run.sigma = instance::exact_margin(X, wbar);
    return run;
}

// max over the unit ball of min_i X_i w by brute grid search over the sphere
// (plus w = 0, which makes the maximin always >= 0). Only for d <= 3; the
// answer is within O(1/steps) of the optimum since the objective is
// 1-Lipschitz in w.
inline double grid_maximin(const DataMatrix& X, std::int64_t steps = 1000) {
    const std::int64_t d = X.cols();
    if (d > 3) throw std::invalid_argument("grid_maximin: d <= 3 only");
    const double pi = 3.141592653589793;
    double best = 0.0;  // w = 0
    std::vector<double> w(d);
    if (d == 1) {
        for (std::int64_t s = 0; s <= steps; ++s) {
            w[0] = -1.0 + 2.0 * static_cast<double>(s) / static_cast<double>(steps);
            best = std::max(best, instance::exact_margin(X, w));
        }
        return best;
    }
    if (d == 2) {
        for (std::int64_t s = 0; s < 2 * steps; ++s) {
            double phi = pi * static_cast<double>(s) / static_cast<double>(steps);
            w[0] = std::cos(phi);
            w[1] = std::sin(phi);
            best = std::max(best, instance::exact_margin(X, w));
        }
        return best;
    }
    for (std::int64_t a = 0; a <= steps; ++a) {
        double th = pi * static_cast<double>(a) / static_cast<double>(steps);
        for (std::int64_t b = 0; b < 2 * steps; ++b) {
            double ph = pi * static_cast<double>(b) / static_cast<double>(steps);
            w[0] = std::sin(th) * std::cos(ph);
            w[1] = std::sin(th) * std::sin(ph);
            w[2] = std::cos(th);
            best = std::max(best, instance::exact_margin(X, w));
        }
    }
    return best;
}

namespace detail {

// Solve A x = b by Gaussian elimination with partial pivoting; returns false
// on (near-)singularity. Sizes here are at most 7x7.
inline bool solve_linear(std::vector<double> A, std::vector<double> b, std::int64_t m,
                         std::vector<double>& x) {
    for (std::int64_t c = 0; c < m; ++c) {
        std::int64_t piv = c;
        for (std::int64_t r = c + 1; r < m; ++r)
            if (std::fabs(A[r * m + c]) > std::fabs(A[piv * m + c])) piv = r;
        if (std::fabs(A[piv * m + c]) < 1e-12) return false;
        if (piv != c) {
            for (std::int64_t j = 0; j < m; ++j) std::swap(A[c * m + j], A[piv * m + j]);
            std::swap(b[c], b[piv]);
        }
        for (std::int64_t r = c + 1; r < m; ++r) {
            double f = A[r * m + c] / A[c * m + c];
            for (std::int64_t j = c; j < m; ++j) A[r * m + j] -= f * A[c * m + j];
            b[r] -= f * b[c];
        }
    }
    x.assign(m, 0.0);
    for (std::int64_t r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (std::int64_t j = r + 1; j < m; ++j) s -= A[r * m + j] * x[j];
        x[r] = s / A[r * m + r];
    }
    return true;
}

inline void subsets(std::int64_t n, std::int64_t k, std::vector<std::vector<std::int64_t>>& out) {
    std::vector<std::int64_t> cur(k);
    std::int64_t i = 0;
    for (auto& c : cur) c = i++;
    for (;;) {
        out.push_back(cur);
        std::int64_t p = k - 1;
        while (p >= 0 && cur[p] == n - k + p) --p;
        if (p < 0) break;
        ++cur[p];
        for (std::int64_t q = p + 1; q < k; ++q) cur[q] = cur[q - 1] + 1;
    }
}

} // namespace detail

// Exact value of a zero-sum game with payoff matrix rows x cols (row player
// maximizes), via Shapley-Snow kernel enumeration: some square subgame's
// equalizing strategies are optimal for the full game, and at size <= 6 all
// square subgames can be checked directly.
inline double tiny_game_value(const std::vector<double>& M, std::int64_t rows, std::int64_t cols) {
    if (rows < 1 || cols < 1 || rows > 6 || cols > 6)
        throw std::invalid_argument("tiny_game_value: dims in [1,6]");
    const double tol = 1e-9;
    for (std::int64_t k = 1; k <= std::min(rows, cols); ++k) {
        std::vector<std::vector<std::int64_t>> rs, cs;
        detail::subsets(rows, k, rs);
        detail::subsets(cols, k, cs);
        for (const auto& R : rs)
            for (const auto& C : cs) {
                const std::int64_t m = k + 1;
                // [B^T, -1; 1^T, 0] [p; v] = [0; 1]
                std::vector<double> A(m * m, 0.0), b(m, 0.0), p, q;
                for (std::int64_t a = 0; a < k; ++a) {
                    for (std::int64_t r = 0; r < k; ++r) A[a * m + r] = M[R[r] * cols + C[a]];
                    A[a * m + k] = -1.0;
                    A[k * m + a] = 1.0;
                }
                b[k] = 1.0;
                if (!detail::solve_linear(A, b, m, p)) continue;
                // [B, -1; 1^T, 0] [q; v] = [0; 1]
                std::vector<double> A2(m * m, 0.0), b2(m, 0.0);
                for (std::int64_t r = 0; r < k; ++r) {
                    for (std::int64_t a = 0; a < k; ++a) A2[r * m + a] = M[R[r] * cols + C[a]];
                    A2[r * m + k] = -1.0;
                    A2[k * m + r] = 1.0;
                }
                b2[k] = 1.0;
                if (!detail::solve_linear(A2, b2, m, q)) continue;
                double v = p[k];
                bool ok = std::fabs(q[k] - v) <= 1e-7;
                for (std::int64_t r = 0; r < k && ok; ++r) ok = p[r] >= -tol && q[r] >= -tol;
                // optimality of the extended strategies against every pure reply
                for (std::int64_t j = 0; j < cols && ok; ++j) {
                    double s = 0;
                    for (std::int64_t r = 0; r < k; ++r) s += p[r] * M[R[r] * cols + j];
                    ok = s >= v - 1e-7;
                }
                for (std::int64_t i = 0; i < rows && ok; ++i) {
                    double s = 0;
                    for (std::int64_t a = 0; a < k; ++a) s += q[a] * M[i * cols + C[a]];
                    ok = s <= v + 1e-7;
                }
                if (ok) return v;
            }
    }
    throw std::runtime_error("tiny_game_value: no kernel found (should not happen)");
}

} // namespace sublin::reference

namespace sublin::instance {

// Independent oracle for sigma = max_w min_i X_i w: the deterministic dense
// primal-dual engine above, no sampling, no ledger.
inline double reference_maximin(const DataMatrix& X, double eps_ref) {
    return reference::exact_primal_dual(X, eps_ref).sigma;
}

} // namespace sublin::instance
