#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sublin/ledger.hpp"
#include "sublin/rng.hpp"

// Outcome-distribution-level simulators of the quantum subroutines. Nothing
// here touches state vectors: each primitive computes the exact distribution
// of its measurement outcome on the host and samples from it, while charging
// the ledger what the quantum circuit would have cost. Host work may exceed
// charged queries; the ledger is the complexity observable.

namespace sublin::qsim {

// Coefficient oracle O_a: eval(i) -> a_i, plus the number of underlying
// matrix queries one coefficient evaluation costs (e.g. 2t for the lazily
// evaluated weight oracle after t recorded steps).
template <class F>
struct AmplitudeOracle {
    F eval;
    double per_call_queries = 1.0;
};

template <class F>
AmplitudeOracle(F, double) -> AmplitudeOracle<F>;

struct AEResult {
    double estimate = 0;                  // t-hat
    std::int64_t grover_applications = 0; // M
    double charged = 0;                   // queries billed for this call
};

namespace detail {

inline double sq(double x) { return x * x; }

// Kernel of an M-point phase measurement at circular offset u grid units from
// the exact phase: sin^2(pi u) / (M sin(pi u / M))^2. For integer-offset
// candidates y the numerator is the same for every y, so the distribution
// over y is proportional to 1 / sin^2(pi u_y / M).
inline double kernel_at(double s0sq, std::int64_t M, double u) {
    double a = std::fabs(u) / static_cast<double>(M);
    if (a > 0.5) a = 1.0 - a;  // circular symmetry of sin(pi x)
    double den = static_cast<double>(M) * sinpi_half(a);
    return s0sq / (den * den);
}

// Samples the outcome y in {0..M-1} of phase estimation whose exact phase
// fraction is phi = theta/pi, i.e. Pr[y] = kernel(circular distance between
// y/M and phi). Exact sampling: the grid points near the center are atoms
// carrying their true probabilities (nearly all the mass); the far tails are
// covered by a 1/x^2 envelope whose bin integrals dominate the kernel
// pointwise (sin(pi z) >= 2z on [0,1/2]) and get rejection-corrected.
class AliasKernelSampler {
public:
    AliasKernelSampler() = default;

    AliasKernelSampler(std::int64_t M, double center) : M_(M) {
        base_ = static_cast<std::int64_t>(std::floor(center));
        f_ = center - static_cast<double>(base_);
        double fm = (f_ <= 0.5) ? f_ : 1.0 - f_;
        double s0 = sinpi_half(fm);
        s0sq_ = s0 * s0;
        if (s0sq_ < 1e-24) {  // phase on the grid: point mass
            point_mass_ = true;
            base_ = mod(base_ + (f_ > 0.5 ? 1 : 0));
            return;
        }
        double cum = 0;
        if (M_ <= kAtoms + 4) {  // enumerate the whole grid
            natoms_ = static_cast<int>(M_);
            for (int a = 0; a < natoms_; ++a) {
                double u = static_cast<double>(a) - f_;
                if (u > 0.5 * static_cast<double>(M_)) u -= static_cast<double>(M_);
                cum += kernel_at(s0sq_, M_, u);
                cum_[a] = cum;
                atom_y_[a] = mod(base_ + a);
            }
            w_r_ = w_l_ = 0;
        } else {
            // atoms at offsets 0,1,-1,2,-2,3,-3,4 (likeliest first)
            static constexpr int kOrder[kAtoms] = {0, 1, -1, 2, -2, 3, -3, 4};
            natoms_ = kAtoms;
            for (int a = 0; a < natoms_; ++a) {
                cum += kernel_at(s0sq_, M_, static_cast<double>(kOrder[a]) - f_);
                cum_[a] = cum;
                atom_y_[a] = mod(base_ + kOrder[a]);
            }
            jmax_r_ = static_cast<std::int64_t>(std::floor(0.5 * static_cast<double>(M_) + f_));
            jmax_l_ = M_ - 1 - jmax_r_;
            lo_r_ = 4.5 - f_;  // right tail: j >= 5, bins [j-f-1/2, j-f+1/2)
            hi_r_ = static_cast<double>(jmax_r_) - f_ + 0.5;
            lo_l_ = 3.5 + f_;  // left tail: j <= -4, |u| = f - j
            hi_l_ = static_cast<double>(jmax_l_) + f_ + 0.5;
            w_r_ = (jmax_r_ >= 5) ? 0.25 * s0sq_ * (1.0 / lo_r_ - 1.0 / hi_r_) : 0.0;
            w_l_ = (jmax_l_ >= 4) ? 0.25 * s0sq_ * (1.0 / lo_l_ - 1.0 / hi_l_) : 0.0;
        }
        total_ = cum + w_r_ + w_l_;
    }

    std::int64_t draw(Rng& rng) const {
        if (point_mass_) return base_;
        for (;;) {
            double v = rng.uniform() * total_;
            if (v < cum_[natoms_ - 1]) {
                int a = 0;
                while (cum_[a] <= v) ++a;
                return atom_y_[a];
            }
            v -= cum_[natoms_ - 1];
            std::int64_t j;
            if (v < w_r_) {
                double x = draw_inv_sq(lo_r_, hi_r_, v / w_r_);
                j = static_cast<std::int64_t>(std::floor(x + f_ + 0.5));
                if (j < 5 || j > jmax_r_) continue;
            } else {
                double x = draw_inv_sq(lo_l_, hi_l_, (v - w_r_) / w_l_);
                j = -static_cast<std::int64_t>(std::floor(x - f_ + 0.5));
                if (j > -4 || j < -jmax_l_) continue;
            }
            double u = std::fabs(static_cast<double>(j) - f_);
            double accept = kernel_at(s0sq_, M_, u) * (u * u - 0.25) * 4.0 / s0sq_;
            if (rng.uniform() < accept) return mod(base_ + j);
        }
    }

private:
    static constexpr int kAtoms = 8;

    static double draw_inv_sq(double lo, double hi, double v) {
        // inverse-CDF draw from density proportional to 1/x^2 on [lo, hi]
        return 1.0 / (1.0 / lo - v * (1.0 / lo - 1.0 / hi));
    }
    std::int64_t mod(std::int64_t y) const {
        y %= M_;
        return y < 0 ? y + M_ : y;
    }

    std::int64_t M_ = 1, base_ = 0, jmax_r_ = 0, jmax_l_ = 0;
    double f_ = 0, s0sq_ = 0;
    double lo_r_ = 0, hi_r_ = 0, lo_l_ = 0, hi_l_ = 0, w_r_ = 0, w_l_ = 0, total_ = 0;
    double cum_[kAtoms + 4] = {};
    std::int64_t atom_y_[kAtoms + 4] = {};
    int natoms_ = 0;
    bool point_mass_ = false;
};

} // namespace detail

// Two-alias phase-estimation outcome sampler for amplitude sin^2(theta_a):
// the measured y comes from the mixture of the kernels centered at theta_a/pi
// and 1 - theta_a/pi; both aliases yield the same estimate N sin^2(pi y / M).
class PhaseSampler {
public:
    PhaseSampler() = default;
    PhaseSampler(std::int64_t M, double theta_a)
        : M_(M),
          plus_(M, theta_a / 3.141592653589793 * static_cast<double>(M)),
          minus_(M, (1.0 - theta_a / 3.141592653589793) * static_cast<double>(M)) {}

    std::int64_t draw(Rng& rng) const {
        return (rng.u64() & 1) ? plus_.draw(rng) : minus_.draw(rng);
    }
    std::int64_t grid() const { return M_; }

private:
    std::int64_t M_ = 1;
    detail::AliasKernelSampler plus_, minus_;
};

// ---- Durr-Hoyer maximum finding ---------------------------------------------

// Simulated as exact answer plus the theoretical charge ceil(c_dh * sqrt(n))
// coefficient calls. Ties break to the smallest index so runs reproduce.
template <class F>
std::pair<std::int64_t, double> durr_hoyer_max(const AmplitudeOracle<F>& oracle, std::int64_t n,
                                               QueryLedger& ledger) {
    if (n < 1) throw std::invalid_argument("durr_hoyer_max: n >= 1 required");
    std::int64_t best = 0;
    double best_v = std::fabs(oracle.eval(0));
    for (std::int64_t i = 1; i < n; ++i) {
        double v = std::fabs(oracle.eval(i));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    double calls = std::ceil(ledger.model().c_dh * std::sqrt(static_cast<double>(n)));
    ledger.charge(Charge::MaxFinding, calls * oracle.per_call_queries);
    return {best, best_v};
}

// ---- amplitude-amplification state preparation -------------------------------

// Returns index i with probability a_i^2 / ||a||^2, simulating the prepare-
// and-measure loop: success amplitude per attempt is sin((2k+1) theta) with
// sin(theta) = ||a||_2 / (sqrt(n) a_max) and k = floor(pi / (4 theta)).
// Charges c_prep_per_iter coefficient calls per amplification iteration plus
// one Durr-Hoyer max-finding.
template <class F>
std::int64_t amplify_prepare_sample(const AmplitudeOracle<F>& oracle, std::int64_t n,
                                    QueryLedger& ledger, Rng& rng,
                                    std::int64_t* attempts_out = nullptr) {
    if (n < 1) throw std::invalid_argument("amplify_prepare_sample: n >= 1 required");
    double sum_sq = 0, a_max = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        double v = std::fabs(oracle.eval(i));
        sum_sq += v * v;
        a_max = std::max(a_max, v);
    }
    if (a_max == 0.0)
        throw std::invalid_argument("amplify_prepare_sample: all-zero coefficient vector");

    double dh_calls = std::ceil(ledger.model().c_dh * std::sqrt(static_cast<double>(n)));
    ledger.charge(Charge::MaxFinding, dh_calls * oracle.per_call_queries);

    double sin_theta = std::min(1.0, std::sqrt(sum_sq) / (std::sqrt(static_cast<double>(n)) * a_max));
    double theta = std::asin(sin_theta);
    auto k = static_cast<std::int64_t>(std::floor(3.141592653589793 / (4.0 * theta)));
    double p_success = detail::sq(std::sin((2.0 * static_cast<double>(k) + 1.0) * theta));
    double iter_charge =
        ledger.model().c_prep_per_iter * static_cast<double>(k) * oracle.per_call_queries;

    std::int64_t attempts = 0;
    for (;;) {
        ++attempts;
        ledger.charge(Charge::StatePrep, iter_charge);
        if (rng.uniform() < p_success) break;
        if (attempts > 10'000'000)
            throw std::runtime_error("amplify_prepare_sample: amplification failed to converge");
    }
    if (attempts_out) *attempts_out = attempts;

    // measurement of the successfully prepared state
    double target = rng.uniform() * sum_sq;
    double acc = 0;
    std::int64_t last_nonzero = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        double v = oracle.eval(i);
        if (v != 0.0) last_nonzero = i;
        acc += v * v;
        if (acc > target) return i;
    }
    return last_nonzero;
}

// ---- amplitude estimation / quantum counting ---------------------------------

// Core of Theorem-15-style counting with t known on the host: one execution
// draws the phase outcome and returns t-hat = N sin^2(pi y / M). Reusable via
// CountEstimator when many executions share the same (N, t, eps).
class CountEstimator {
public:
    CountEstimator(std::int64_t N, std::int64_t t, double eps, double per_call,
                   const QueryCostModel& model)
        : N_(N), t_(t), per_call_(per_call) {
        if (eps <= 0 || eps >= 1) throw std::invalid_argument("amplitude_estimate: eps in (0,1)");
        if (t_ == 0) {
            M_ = static_cast<std::int64_t>(std::ceil(model.ae_const * std::sqrt(static_cast<double>(N))));
            return;
        }
        double ratio = static_cast<double>(N) / static_cast<double>(t);
        M_ = static_cast<std::int64_t>(std::ceil(model.ae_const / eps * std::sqrt(ratio)));
        M_ = std::max<std::int64_t>(M_, 4);
        double theta_a = std::asin(std::sqrt(static_cast<double>(t) / static_cast<double>(N)));
        sampler_ = PhaseSampler(M_, theta_a);
    }

    // Folded outcome z = min(y, M - y); the estimate N sin^2(pi z / M) is
    // monotone in z, so medians can be taken over z before the one
    // trigonometric evaluation.
    std::int64_t draw_z(Rng& rng) const {
        std::int64_t y = sampler_.draw(rng);
        return std::min(y, M_ - y);
    }
    double estimate_from_z(std::int64_t z) const {
        double a = static_cast<double>(z) / static_cast<double>(M_);
        return static_cast<double>(N_) * detail::sq(sinpi_half(a));
    }
    double charge_amount(double per_call) const {
        return 2.0 * static_cast<double>(M_) * per_call;
    }
    std::int64_t grid() const { return M_; }
    bool certain_zero() const { return t_ == 0; }

    AEResult run(QueryLedger& ledger, Rng& rng) const { return run(ledger, rng, per_call_); }

    AEResult run(QueryLedger& ledger, Rng& rng, double per_call) const {
        AEResult r;
        r.grover_applications = M_;
        r.charged = charge_amount(per_call);
        ledger.charge(Charge::NormEstimation, r.charged);
        r.estimate = (t_ == 0) ? 0.0 : estimate_from_z(draw_z(rng));  // t=0: certainty branch
        return r;
    }

private:
    std::int64_t N_ = 0, t_ = 0, M_ = 1;
    double per_call_ = 1.0;
    PhaseSampler sampler_;
};

// Boolean-oracle interface: counts t = |f^{-1}(1)| exactly on the host, then
// simulates the estimate. If t = 0 the output is 0 with certainty at the
// O(sqrt(N)) schedule.
template <class Pred>
AEResult amplitude_estimate(Pred&& f, std::int64_t N, double eps, QueryLedger& ledger, Rng& rng,
                            double per_call = 1.0) {
    std::int64_t t = 0;
    for (std::int64_t i = 0; i < N; ++i)
        if (f(i)) ++t;
    CountEstimator est(N, t, eps, per_call, ledger.model());
    return est.run(ledger, rng);
}

// ---- bitwise mean estimation --------------------------------------------------

// Per-round reusable machinery: counts of each bit of F truncated to bits_l
// fractional bits (plus the integer bit so F = 1 is representable), and one
// CountEstimator per non-empty bit.
class MeanEstimator {
public:
    template <class F>
    MeanEstimator(F&& oracle, std::int64_t N, double delta, double per_call,
                  const QueryCostModel& model)
        : N_(N) {
        const int L = model.bits_l;
        counts_.assign(L + 1, 0);
        for (std::int64_t i = 0; i < N; ++i) accumulate_bits(oracle(i), L);
        finish(delta, per_call, model);
    }

    // Sparse variant: values not listed are zero and contribute to no bit.
    MeanEstimator(std::int64_t N, const std::vector<std::pair<std::int64_t, double>>& nonzeros,
                  double delta, double per_call, const QueryCostModel& model)
        : N_(N) {
        const int L = model.bits_l;
        counts_.assign(L + 1, 0);
        for (const auto& [i, v] : nonzeros) accumulate_bits(v, L);
        finish(delta, per_call, model);
    }

    // One full Lemma-style execution; |result - m| <= delta*m w.p. >= 2/3.
    // Not thread-safe per instance (scratch buffer); runs own their estimator.
    double run(QueryLedger& ledger, Rng& rng) const {
        double m = 0, w = 1.0;
        scratch_.resize(reps_);
        for (std::size_t k = 0; k < estimators_.size(); ++k, w *= 0.5) {
            if (counts_[k] == 0) {
                estimators_[k].run(ledger, rng);  // charges the t=0 schedule
                continue;
            }
            for (int r = 0; r < reps_; ++r) scratch_[r] = estimators_[k].run(ledger, rng).estimate;
            std::nth_element(scratch_.begin(), scratch_.begin() + reps_ / 2, scratch_.end());
            m += w * scratch_[reps_ / 2];
        }
        return m / static_cast<double>(N_);
    }

    const std::vector<std::int64_t>& bit_counts() const { return counts_; }
    int reps() const { return reps_; }

private:
    void accumulate_bits(double v, int L) {
        if (!(v >= 0.0 && v <= 1.0)) {
            if (!std::isfinite(v)) throw std::invalid_argument("estimate_mean: non-finite F");
            v = std::clamp(v, 0.0, 1.0);
        }
        // truncation with a 1e-9 guard band so fp drift cannot flip values
        // sitting exactly on a bit boundary
        auto word = static_cast<std::uint64_t>((v + 1e-9) *
                                               static_cast<double>(std::int64_t(1) << L));
        if (word == 0) return;
        for (int k = 0; k <= L; ++k)
            counts_[k] += static_cast<std::int64_t>((word >> (L - k)) & 1u);
    }
    void finish(double delta, double per_call, const QueryCostModel& model) {
        if (delta <= 0 || delta >= 1) throw std::invalid_argument("estimate_mean: delta in (0,1)");
        const int L = model.bits_l;
        // median of Theta(log bits_l) amplitude estimates per bit
        reps_ = 1;
        while ((1 << reps_) < L + 1) ++reps_;
        if (reps_ % 2 == 0) ++reps_;
        estimators_.reserve(L + 1);
        for (int k = 0; k <= L; ++k)
            estimators_.emplace_back(N_, counts_[k], delta / 2.0, per_call, model);
    }

    std::int64_t N_ = 0;
    int reps_ = 1;
    std::vector<std::int64_t> counts_;
    std::vector<CountEstimator> estimators_;
    mutable std::vector<double> scratch_;
};

// One-shot interface: returns m-tilde with |m-tilde - m| <= delta*m with
// probability at least 2/3, where m is the mean of F truncated to bits_l bits.
template <class F>
double estimate_mean(F&& oracle, std::int64_t N, double delta, QueryLedger& ledger, Rng& rng,
                     double per_call = 1.0) {
    MeanEstimator est(std::forward<F>(oracle), N, delta, per_call, ledger.model());
    return est.run(ledger, rng);
}

// ||y||^2 estimate from the mean of F(j) = (y(j)/B)^2, rescaled by N B^2.
// Median-of-repetitions is the caller's responsibility.
template <class Y>
double estimate_norm_sq(Y&& y, std::int64_t N, double bound, double delta, QueryLedger& ledger,
                        Rng& rng, double per_call = 1.0) {
    if (bound <= 0) throw std::invalid_argument("estimate_norm_sq: bound B must be positive");
    const double inv_b2 = 1.0 / (bound * bound);
    auto f = [&](std::int64_t j) {
        double v = y(j);
        return v * v * inv_b2;
    };
    double m = estimate_mean(f, N, delta, ledger, rng, per_call);
    return m * static_cast<double>(N) * bound * bound;
}

} // namespace sublin::qsim
