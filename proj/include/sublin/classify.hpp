#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublin/matrix.hpp"
#include "sublin/mwdual.hpp"
#include "sublin/qsim.hpp"

namespace sublin::classify {

struct LedgerSnapshot {
    double state_prep = 0, max_finding = 0, norm_estimation = 0, direct = 0;

    static LedgerSnapshot take(const QueryLedger& l) {
        return {l.charged(Charge::StatePrep), l.charged(Charge::MaxFinding),
                l.charged(Charge::NormEstimation), l.charged(Charge::Direct)};
    }
    double total() const { return state_prep + max_finding + norm_estimation + direct; }
};

struct TrainResult {
    mwdual::SuccinctClassifier classifier;
    double achieved_margin = 0;  // exact min_i X_i . w-bar, harness-computed
    LedgerSnapshot ledger;
    double wall_time_sec = 0;
    mwdual::RunAudits audits;
};

enum class Budget { SqrtN, SqrtD, ClassicalBaseline };

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Specialized state preparation for the sqrt-weight amplitude convention:
// amplitudes sqrt(u) mean measurement probabilities u / ||u||_1, so the whole
// simulation runs on u itself and needs no per-element square roots. Charges
// are identical to the generic path with oracle sqrt(u).
inline std::int64_t amplify_sample_l1(const std::vector<double>& u, double sum_u, double u_max,
                                      double per_call, QueryLedger& ledger, Rng& rng) {
    auto n = static_cast<std::int64_t>(u.size());
    if (u_max <= 0.0) throw std::invalid_argument("amplify_sample_l1: all-zero weights");
    double dh_calls = std::ceil(ledger.model().c_dh * std::sqrt(static_cast<double>(n)));
    ledger.charge(Charge::MaxFinding, dh_calls * per_call);

    double sin_theta = std::min(1.0, std::sqrt(sum_u / (static_cast<double>(n) * u_max)));
    double theta = std::asin(sin_theta);
    auto k = static_cast<std::int64_t>(std::floor(3.141592653589793 / (4.0 * theta)));
    double p_success = std::sin((2.0 * static_cast<double>(k) + 1.0) * theta);
    p_success *= p_success;
    double iter_charge = ledger.model().c_prep_per_iter * static_cast<double>(k) * per_call;
    for (std::int64_t attempts = 1;; ++attempts) {
        ledger.charge(Charge::StatePrep, iter_charge);
        if (rng.uniform() < p_success) break;
        if (attempts > 10'000'000)
            throw std::runtime_error("amplify_sample_l1: amplification failed to converge");
    }
    double target = rng.uniform() * sum_u;
    double acc = 0;
    std::int64_t last = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (u[i] > 0.0) last = i;
        acc += u[i];
        if (acc > target) return i;
    }
    return last;
}

// State preparation over a vector given through its support: identical law
// and charges to the generic oracle path (absent coordinates are zero and
// contribute to neither the amplitude stats nor the measurement).
inline std::int64_t amplify_sample_l2_support(const std::vector<double>& y,
                                              const std::vector<std::int32_t>& support,
                                              std::int64_t d, double norm_sq, double abs_max,
                                              double per_call, QueryLedger& ledger, Rng& rng) {
    if (abs_max <= 0.0) throw std::invalid_argument("amplify_sample_l2_support: zero vector");
    double dh_calls = std::ceil(ledger.model().c_dh * std::sqrt(static_cast<double>(d)));
    ledger.charge(Charge::MaxFinding, dh_calls * per_call);
    double sin_theta =
        std::min(1.0, std::sqrt(norm_sq) / (std::sqrt(static_cast<double>(d)) * abs_max));
    double theta = std::asin(sin_theta);
    auto k = static_cast<std::int64_t>(std::floor(3.141592653589793 / (4.0 * theta)));
    double p_success = std::sin((2.0 * static_cast<double>(k) + 1.0) * theta);
    p_success *= p_success;
    double iter_charge = ledger.model().c_prep_per_iter * static_cast<double>(k) * per_call;
    for (std::int64_t attempts = 1;; ++attempts) {
        ledger.charge(Charge::StatePrep, iter_charge);
        if (rng.uniform() < p_success) break;
        if (attempts > 10'000'000)
            throw std::runtime_error("amplify_sample_l2_support: failed to converge");
    }
    double target = rng.uniform() * norm_sq;
    double acc = 0;
    std::int64_t last = support.empty() ? 0 : support.front();
    for (auto j : support) {
        if (y[j] != 0.0) last = j;
        acc += y[j] * y[j];
        if (acc > target) return j;
    }
    return last;
}

inline std::int64_t multinomial_l1(const std::vector<double>& u, double sum_u, Rng& rng) {
    double target = rng.uniform() * sum_u;
    double acc = 0;
    std::int64_t last = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > 0.0) last = static_cast<std::int64_t>(i);
        acc += u[i];
        if (acc > target) return static_cast<std::int64_t>(i);
    }
    return last;
}

// Round-persistent bitwise norm-estimation pipeline of the sqrt-d paths.
// A count estimator depends only on (N, bit count, delta), so estimators are
// cached across rounds; per-round charges flow through per_call. One Lemma
// execution sums per-bit medians of Theta(log bits_l) amplitude estimates;
// the caller asks for the median of 2*ceil(ln T) executions.
class BitwiseNormEstimator {
public:
    BitwiseNormEstimator(std::int64_t N, double delta, const QueryCostModel& model)
        : N_(N), delta_(delta), model_(model), bits_(model.bits_l),
          cache_(static_cast<std::size_t>(N) + 1) {
        reps_ = 1;
        while ((1 << reps_) < bits_ + 1) ++reps_;
        if (reps_ % 2 == 0) ++reps_;
        zero_schedule_ =
            2.0 * std::ceil(model.ae_const * std::sqrt(static_cast<double>(N)));
        counts_.assign(bits_ + 1, 0);
        pow2_.resize(bits_ + 1);
        for (int k = 0; k <= bits_; ++k) pow2_[k] = std::ldexp(1.0, -k);
    }

    int reps() const { return reps_; }

    // mean of F truncated to bits_l bits, F given by its nonzero values;
    // returns the median of `outer` executions
    double run(const std::vector<std::pair<std::int64_t, double>>& nonzeros, std::int64_t outer,
               double per_call, QueryLedger& ledger, Rng& rng) {
        std::fill(counts_.begin(), counts_.end(), 0);
        const double scale = static_cast<double>(std::int64_t(1) << bits_);
        for (const auto& [j, v] : nonzeros) {
            // 1e-9 guard band: accumulated fp drift must not push a value that
            // is exactly on a bit boundary (e.g. 0.5) onto the all-ones side
            auto word =
                static_cast<std::uint64_t>((std::clamp(v, 0.0, 1.0) + 1e-9) * scale);
            if (word == 0) continue;
            for (int k = 0; k <= bits_; ++k)
                counts_[k] += static_cast<std::int64_t>((word >> (bits_ - k)) & 1u);
        }
        active_.clear();
        int zero_bits = 0;
        for (int k = 0; k <= bits_; ++k)
            (counts_[k] > 0 ? void(active_.push_back(k)) : void(++zero_bits));

        outer_vals_.clear();
        double charged = 0;
        std::int64_t z[16];
        for (std::int64_t r = 0; r < outer; ++r) {
            double m = 0;
            for (int k : active_) {
                const auto& est = get(counts_[k]);
                std::int64_t zmed;
                if (reps_ == 5) {
                    zmed = median5(est.draw_z(rng), est.draw_z(rng), est.draw_z(rng),
                                   est.draw_z(rng), est.draw_z(rng));
                } else {
                    for (int i = 0; i < reps_; ++i) {  // insertion sort, reps_ <= 15
                        std::int64_t v = est.draw_z(rng);
                        int p = i;
                        while (p > 0 && z[p - 1] > v) {
                            z[p] = z[p - 1];
                            --p;
                        }
                        z[p] = v;
                    }
                    zmed = z[reps_ / 2];
                }
                m += pow2_[k] * est.estimate_from_z(zmed);
                charged += static_cast<double>(reps_) * est.charge_amount(per_call);
            }
            if (zero_bits > 0)
                charged += static_cast<double>(zero_bits) * zero_schedule_ * per_call;
            outer_vals_.push_back(m / static_cast<double>(N_));
        }
        ledger.charge(Charge::NormEstimation, charged);
        return median_inplace(outer_vals_);
    }

    // 3rd smallest of five, six comparisons
    static std::int64_t median5(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
                                std::int64_t e) {
        if (a > b) std::swap(a, b);
        if (c > d) std::swap(c, d);
        if (a > c) {
            std::swap(a, c);
            std::swap(b, d);
        }
        // a is at most 2nd smallest: median = 2nd smallest of {b, c, d, e}
        if (b > e) std::swap(b, e);
        return b < c ? std::min(e, c) : std::min(b, d);
    }

private:
    const qsim::CountEstimator& get(std::int64_t t) {
        auto& p = cache_[static_cast<std::size_t>(t)];
        if (!p) p = std::make_unique<qsim::CountEstimator>(N_, t, delta_ / 2.0, 1.0, model_);
        return *p;
    }

    std::int64_t N_;
    double delta_;
    QueryCostModel model_;
    int bits_, reps_ = 1;
    double zero_schedule_ = 0;
    std::vector<std::unique_ptr<qsim::CountEstimator>> cache_;
    std::vector<std::int64_t> counts_;
    std::vector<int> active_;
    std::vector<double> outer_vals_;
    std::vector<double> pow2_;
};

struct LinearLoopState {
    std::vector<double> u;
    double sum_u = 0, u_max = 1.0;

    explicit LinearLoopState(std::int64_t n) : u(n, 1.0), sum_u(static_cast<double>(n)) {}

    // lossless power-of-two renormalization; the sampled laws depend on
    // ratios only
    void rescale_if_needed() {
        if (u_max < 0x1p-100 || u_max > 0x1p+100) {
            int e;
            std::frexp(u_max, &e);
            double s = std::ldexp(1.0, -e);
            for (auto& x : u) x *= s;
            sum_u *= s;
            u_max *= s;
        }
    }
};

// Shared round loop of Algorithms 1 and 4 and of the classical comparator.
// The three budgets differ in how ||y_t|| is obtained (exact incremental vs
// median of 2*ceil(ln T) bitwise-AE estimates), how i_t and j_t are sampled,
// and what gets charged. `query_scale` multiplies every underlying-query
// count; the kernel path uses it to price feature-oracle access.
inline TrainResult run_linear(const DataMatrix& X, const mwdual::TrainConfig& cfg,
                              QueryLedger& ledger, Rng& rng, Budget budget,
                              double query_scale = 1.0) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::int64_t n = X.rows(), d = X.cols();
    mwdual::TrainConfig c = cfg;
    if (c.T_const <= 0) c.T_const = (budget == Budget::SqrtD) ? 27.0 : 23.0;
    const std::int64_t T = c.resolved_rounds(n);
    const double eta = c.resolved_eta(n, T);
    const double inv_eta = 1.0 / eta;
    const double inv_sqrt_2t = 1.0 / std::sqrt(2.0 * static_cast<double>(T));
    const double delta_norm = eta * eta;  // norm-estimation precision of the sqrt-d path
    const auto outer_reps =
        static_cast<std::int64_t>(2 * std::ceil(std::log(static_cast<double>(T))));

    LinearLoopState mw(n);
    std::vector<double> y(d, 0.0), wbar(d, 0.0);
    std::vector<std::int32_t> touched;
    double y_norm_sq = 0;

    mwdual::SuccinctClassifier cls;
    cls.rounds = T;
    cls.picks.reserve(T);
    cls.norms.reserve(T);
    mwdual::WeightHistory hist;
    hist.eta = eta;

    TrainResult out;
    out.audits.rounds = T;
    out.audits.eta = eta;
    out.audits.log_n = std::max(std::log(static_cast<double>(n)), 1.0);
    out.audits.regret_bound = 2.0 * std::sqrt(2.0 * static_cast<double>(T));
    std::vector<double> vsum;
    if (cfg.collect_audits) vsum.assign(n, 0.0);

    std::optional<BitwiseNormEstimator> norm_pipe;
    if (budget == Budget::SqrtD) norm_pipe.emplace(d, delta_norm, ledger.model());
    std::vector<std::pair<std::int64_t, double>> nonzeros;

    for (std::int64_t t = 1; t <= T; ++t) {
        Rng rt = rng.substream(static_cast<std::uint64_t>(t));

        // ---- norm of y_t (state before this round's pick is appended)
        double norm_t;
        if (budget == Budget::SqrtD) {
            if (t == 1) {
                norm_t = 0.0;  // y_1 = 0 by definition; no queries needed
            } else {
                const double bound = static_cast<double>(t - 1) * inv_sqrt_2t;
                const double inv_b2 = 1.0 / (bound * bound);
                nonzeros.clear();
                for (auto j : touched)
                    if (y[j] != 0.0) nonzeros.emplace_back(j, y[j] * y[j] * inv_b2);
                double m = norm_pipe->run(nonzeros, outer_reps,
                                          static_cast<double>(t - 1) * query_scale, ledger, rt);
                norm_t = std::sqrt(std::max(m * static_cast<double>(d) * bound * bound, 0.0));
            }
        } else {
            norm_t = std::sqrt(std::max(y_norm_sq, 0.0));
        }
        cls.norms.push_back(norm_t);
        const double denom = std::max(1.0, norm_t);

        for (auto j : touched) wbar[j] += y[j] / denom;  // w_t = y_t / denom

        // ---- j_t and the round's estimator scale, from y_t
        bool y_zero = true;
        for (auto j : touched)
            if (y[j] != 0.0) {
                y_zero = false;
                break;
            }
        std::int64_t j_t;
        double scale_t;
        if (y_zero) {
            // degenerate w_t = 0 round: sample uniformly, contribute v == 0
            j_t = rt.index(d);
            scale_t = 0.0;
        } else if (budget == Budget::SqrtD) {
            double abs_max = 0;
            for (auto j : touched) abs_max = std::max(abs_max, std::fabs(y[j]));
            j_t = amplify_sample_l2_support(y, touched, d, y_norm_sq, abs_max,
                                            static_cast<double>(t - 1) * query_scale, ledger, rt);
            scale_t = norm_t * norm_t / (y[j_t] * denom);
        } else {
            double target = rt.uniform() * y_norm_sq;
            double acc = 0;
            j_t = touched.empty() ? 0 : touched.front();
            for (auto j : touched) {
                if (y[j] != 0.0) j_t = j;
                acc += y[j] * y[j];
                if (acc > target) {
                    j_t = j;
                    break;
                }
            }
            scale_t = y_norm_sq / (y[j_t] * denom);  // ||w||^2 / w(j) in y coordinates
        }
        hist.steps.push_back({static_cast<std::int32_t>(j_t), scale_t, 0.0});

        // ---- i_t from the weight state over u_t
        const double per_call_w =
            ledger.model().lazy_queries_per_step * static_cast<double>(t - 1) * query_scale;
        std::int64_t i_t;
        if (budget == Budget::ClassicalBaseline) {
            i_t = multinomial_l1(mw.u, mw.sum_u, rt);
        } else if (c.amp_model == mwdual::AmpModel::SqrtWeight) {
            i_t = amplify_sample_l1(mw.u, mw.sum_u, mw.u_max, per_call_w, ledger, rt);
        } else {
            qsim::AmplitudeOracle uo{[&](std::int64_t i) { return mw.u[i]; }, per_call_w};
            i_t = qsim::amplify_prepare_sample(uo, n, ledger, rt);
        }
        cls.picks.push_back(static_cast<std::int32_t>(i_t));

        if (cfg.collect_audits)
            out.audits.regret_achieved += X.row_dot(i_t, y) / denom;

        // ---- dual update y_{t+1} = y_t + X_{i_t}/sqrt(2T), exact norm kept
        {
            double cross = X.row_dot(i_t, y);
            double rn = X.row_norm(i_t);
            y_norm_sq += 2.0 * inv_sqrt_2t * cross + inv_sqrt_2t * inv_sqrt_2t * rn * rn;
            y_norm_sq = std::max(y_norm_sq, 0.0);
            X.add_row_to(i_t, inv_sqrt_2t, y, &touched);
            if (budget != Budget::SqrtD)
                ledger.charge(Charge::Direct, ledger.model().per_entry *
                                                  static_cast<double>(d) * query_scale);
        }

        // ---- multiplicative weight update with v_t(i) = clip(X_i(j_t) scale_t)
        if (budget == Budget::ClassicalBaseline)
            ledger.charge(Charge::Direct,
                          ledger.model().per_entry * static_cast<double>(n) * query_scale);
        {
            const double* col = X.column(j_t);
            double pv = 0, pv2 = 0, norm1 = 0, new_sum = 0, new_max = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                double xij = col ? col[i] : X.entry(i, j_t);
                double v = mwdual::clip(xij * scale_t, inv_eta);
                double ui = mw.u[i];
                norm1 += ui;
                if (cfg.collect_audits) {
                    vsum[i] += v;
                    pv += ui * v;
                    pv2 += ui * v * v;
                }
                double un = ui * mwdual::weight_factor(v, eta);
                mw.u[i] = un;
                new_sum += un;
                new_max = std::max(new_max, un);
            }
            if (cfg.collect_audits) {
                out.audits.mw_lhs += pv / norm1;
                out.audits.mw_sum_p_v2 += pv2 / norm1;
            }
            mw.sum_u = new_sum;
            mw.u_max = new_max;
            mw.rescale_if_needed();
        }
    }

    if (cfg.collect_audits) {
        out.audits.regret_best = std::sqrt(std::max(y_norm_sq, 0.0)) / inv_sqrt_2t;
        out.audits.mw_min_sum_v = *std::min_element(vsum.begin(), vsum.end());
    }

    for (auto& x : wbar) x /= static_cast<double>(T);
    if (budget == Budget::SqrtD) {
        // estimated norms can leave w-bar marginally outside the ball; fold
        // the projection into the classifier's output scale
        double wn = 0;
        for (double x : wbar) wn += x * x;
        wn = std::sqrt(wn);
        if (wn > 1.0) {
            cls.scale = 1.0 / wn;
            for (auto& x : wbar) x *= cls.scale;
        }
    }
    out.classifier = std::move(cls);
    out.achieved_margin = instance::exact_margin(X, wbar);
    out.ledger = LedgerSnapshot::take(ledger);
    out.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace detail

// Algorithm-1 trainer: sqrt(n)-budget quantum weight sampling, exact dual
// norms, host-resident l2 sampling of w_t. Margin >= sigma - eps with
// probability at least 2/3.
inline TrainResult train_linear_sqrt_n(const DataMatrix& X, const mwdual::TrainConfig& cfg,
                                       QueryLedger& ledger, Rng& rng) {
    return detail::run_linear(X, cfg, ledger, rng, Budget::SqrtN);
}

// Algorithm-4 trainer: y_t is never read out; norms come from the bitwise
// amplitude-estimation pipeline (median of 2*ceil(ln T) runs at delta =
// eta^2) and column sampling from state preparation over the y_t oracle.
inline TrainResult train_linear_sqrt_d(const DataMatrix& X, const mwdual::TrainConfig& cfg,
                                       QueryLedger& ledger, Rng& rng) {
    return detail::run_linear(X, cfg, ledger, rng, Budget::SqrtD);
}

// Classical sublinear comparator: dense O(n) MW update per round (n charged
// entry reads), O(d) gradient step, no amplification.
inline TrainResult train_classical_baseline(const DataMatrix& X, const mwdual::TrainConfig& cfg,
                                            QueryLedger& ledger, Rng& rng) {
    return detail::run_linear(X, cfg, ledger, rng, Budget::ClassicalBaseline);
}

// ---- kernel-based classification ---------------------------------------------

struct KernelSpec {
    enum class Kind { Linear, Polynomial, Gaussian } kind = Kind::Linear;
    std::int64_t q = 1;  // polynomial degree
    double s = 1.0;      // gaussian standard deviation

    static KernelSpec linear() { return {}; }
    static KernelSpec polynomial(std::int64_t q) {
        if (q < 1) throw std::invalid_argument("polynomial kernel: q >= 1");
        return {Kind::Polynomial, q, 1.0};
    }
    static KernelSpec gaussian(double s) {
        if (s <= 0) throw std::invalid_argument("gaussian kernel: s > 0");
        return {Kind::Gaussian, 1, s};
    }

    // variance budget of the single-sample estimator
    double variance_bound() const {
        switch (kind) {
            case Kind::Linear: return 1.0;
            case Kind::Polynomial: return static_cast<double>(q);
            case Kind::Gaussian: return 1.0 / (s * s * s * s);
        }
        return 1.0;
    }

    double eval(const DataMatrix& X, std::int64_t i, std::int64_t j) const {
        double dot = 0, ni = 0, nj = 0;
        for (std::int64_t c = 0; c < X.cols(); ++c) {
            double a = X.entry(i, c), b = X.entry(j, c);
            dot += a * b;
            ni += a * a;
            nj += b * b;
        }
        switch (kind) {
            case Kind::Linear: return dot;
            case Kind::Polynomial: return std::pow(dot, static_cast<double>(q));
            case Kind::Gaussian: return std::exp(-(ni + nj - 2.0 * dot) / (2.0 * s * s));
        }
        return dot;
    }

    // queries charged per single-sample kernel estimate
    double estimator_query_cost() const {
        if (kind == Kind::Gaussian) return 4.0;
        return 2.0 * static_cast<double>(std::max<std::int64_t>(q, 1));
    }
};

enum class KernelMode { ExplicitFeature, Estimator };

namespace detail {

// l2 sampler over one matrix row (host-cached cumulative squares)
struct RowSampler {
    std::vector<double> cum;
    double norm_sq = 0;

    RowSampler(const DataMatrix& X, std::int64_t i) : cum(X.cols()) {
        double acc = 0;
        for (std::int64_t j = 0; j < X.cols(); ++j) {
            double v = X.entry(i, j);
            acc += v * v;
            cum[j] = acc;
        }
        norm_sq = acc;
    }
    std::int64_t draw(Rng& rng) const {
        double target = rng.uniform() * norm_sq;
        auto it = std::upper_bound(cum.begin(), cum.end(), target);
        if (it == cum.end()) --it;
        return static_cast<std::int64_t>(it - cum.begin());
    }
};

} // namespace detail

// Unbiased single-sample kernel estimate. Polynomial: product of q
// independent factors X_i(j) ||X_y||^2 / X_y(j) with j l2-sampled from the
// second row (per-factor variance at most 1). Gaussian: exact prefactor
// exp(-(||x||^2+||y||^2)/(2 s^2)) times a randomized-Taylor estimate of
// exp(x.y / s^2) with a geometric proposal over the term index.
inline double kernel_estimate(const KernelSpec& k, const DataMatrix& X, std::int64_t xi,
                              std::int64_t yi, QueryLedger& ledger, Rng& rng,
                              const detail::RowSampler* ys = nullptr) {
    std::optional<detail::RowSampler> local;
    if (!ys) local.emplace(X, yi);
    const detail::RowSampler& sampler = ys ? *ys : *local;
    if (sampler.norm_sq <= 0) {
        // zero second row: the kernel value is known exactly after reading it
        ledger.charge(Charge::Direct, ledger.model().per_entry * static_cast<double>(X.cols()));
        if (k.kind == KernelSpec::Kind::Gaussian) {
            double nx = X.row_norm(xi);
            return std::exp(-nx * nx / (2.0 * k.s * k.s));
        }
        return 0.0;
    }
    auto factor = [&]() {
        std::int64_t j = sampler.draw(rng);
        ledger.charge(Charge::Direct, 2.0 * ledger.model().per_entry);
        return X.entry(xi, j) * sampler.norm_sq / X.entry(yi, j);
    };
    if (k.kind != KernelSpec::Kind::Gaussian) {
        double prod = 1.0;
        for (std::int64_t r = 0; r < std::max<std::int64_t>(k.q, 1); ++r) prod *= factor();
        return prod;
    }
    const double inv_s2 = 1.0 / (k.s * k.s);
    double nx = X.row_norm(xi), ny = std::sqrt(sampler.norm_sq);
    double pre = std::exp(-(nx * nx + ny * ny) * 0.5 * inv_s2);
    // term index m ~ Geometric(1/2); importance weight 2^{m+1}/m!
    std::int64_t m = 0;
    while (m < 60 && (rng.u64() & 1)) ++m;
    double est = std::ldexp(1.0, static_cast<int>(m + 1));
    double mfact = 1.0;
    for (std::int64_t r = 1; r <= m; ++r) mfact *= static_cast<double>(r);
    est /= mfact;
    for (std::int64_t r = 0; r < m; ++r) est *= factor() * inv_s2;
    return pre * est;
}

namespace detail {

inline DataMatrix feature_map(const DataMatrix& X, std::int64_t q) {
    double dfeat = std::pow(static_cast<double>(X.cols()), static_cast<double>(q));
    if (dfeat > 1'000'000.0)
        throw std::invalid_argument("explicit-feature mode: d^q exceeds 1e6");
    auto df = static_cast<std::int64_t>(dfeat);
    const std::int64_t n = X.rows(), d = X.cols();
    std::vector<double> feat(n * df);
    std::vector<std::int64_t> tuple(q, 0);
    for (std::int64_t col = 0; col < df; ++col) {
        for (std::int64_t i = 0; i < n; ++i) {
            double p = 1.0;
            for (std::int64_t r = 0; r < q; ++r) p *= X.entry(i, tuple[r]);
            feat[i * df + col] = p;
        }
        // advance the lexicographic q-tuple
        for (std::int64_t r = q - 1; r >= 0; --r) {
            if (++tuple[r] < d) break;
            tuple[r] = 0;
        }
    }
    return DataMatrix(n, df, std::move(feat), X.labels_folded());
}

inline TrainResult run_kernel_estimator(const DataMatrix& X, const KernelSpec& kspec,
                                        const mwdual::TrainConfig& cfg, QueryLedger& ledger,
                                        Rng& rng) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::int64_t n = X.rows();
    mwdual::TrainConfig c = cfg;
    if (c.T_const <= 0) c.T_const = 27.0;
    const std::int64_t T = c.resolved_rounds(n);
    const double eta = c.resolved_eta(n, T);
    const double inv_eta = 1.0 / eta;
    const double inv_sqrt_2t = 1.0 / std::sqrt(2.0 * static_cast<double>(T));

    LinearLoopState mw(n);
    std::vector<double> ksum(n, 0.0);   // K_i = sum_tau k~(X_i, X_{i_tau}), estimated
    std::vector<double> self_k(n);      // exact k(x,x) for the norm recursion
    for (std::int64_t i = 0; i < n; ++i) self_k[i] = kspec.eval(X, i, i);

    mwdual::SuccinctClassifier cls;
    cls.rounds = T;
    TrainResult out;
    out.audits.rounds = T;
    out.audits.eta = eta;
    out.audits.log_n = std::max(std::log(static_cast<double>(n)), 1.0);
    out.audits.regret_bound = 2.0 * std::sqrt(2.0 * static_cast<double>(T));

    double norm_sq_est = 0;  // RKHS ||y_t||^2 tracked from the estimated sums
    std::vector<double> inv_denoms(T);

    for (std::int64_t t = 1; t <= T; ++t) {
        Rng rt = rng.substream(static_cast<std::uint64_t>(t));
        double norm_t = std::sqrt(std::max(norm_sq_est, 0.0));
        cls.norms.push_back(norm_t);
        double denom = std::max(1.0, norm_t);
        inv_denoms[t - 1] = 1.0 / denom;

        const double per_call_w = ledger.model().lazy_queries_per_step *
                                  static_cast<double>(t - 1) * kspec.estimator_query_cost();
        std::int64_t i_t;
        if (c.amp_model == mwdual::AmpModel::SqrtWeight) {
            i_t = amplify_sample_l1(mw.u, mw.sum_u, mw.u_max, per_call_w, ledger, rt);
        } else {
            qsim::AmplitudeOracle uo{[&](std::int64_t i) { return mw.u[i]; }, per_call_w};
            i_t = qsim::amplify_prepare_sample(uo, n, ledger, rt);
        }
        cls.picks.push_back(static_cast<std::int32_t>(i_t));

        // v_t(i) = clip( (1/sqrt(2T)) K_i / denom ), then the weight update
        {
            double norm1 = 0, new_sum = 0, new_max = 0, pv = 0, pv2 = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                double v = mwdual::clip(inv_sqrt_2t * ksum[i] / denom, inv_eta);
                double ui = mw.u[i];
                norm1 += ui;
                pv += ui * v;
                pv2 += ui * v * v;
                double un = ui * mwdual::weight_factor(v, eta);
                mw.u[i] = un;
                new_sum += un;
                new_max = std::max(new_max, un);
            }
            out.audits.mw_lhs += pv / norm1;
            out.audits.mw_sum_p_v2 += pv2 / norm1;
            mw.sum_u = new_sum;
            mw.u_max = new_max;
            mw.rescale_if_needed();
        }

        // append Psi(X_{i_t}) to y: refresh every K_i with one new estimate
        // and advance the norm recursion
        detail::RowSampler ys(X, i_t);
        double inner_est = inv_sqrt_2t * ksum[i_t];  // <Psi(x_new), y_t> estimate
        for (std::int64_t i = 0; i < n; ++i)
            ksum[i] += kernel_estimate(kspec, X, i, i_t, ledger, rt, &ys);
        norm_sq_est += 2.0 * inv_sqrt_2t * inner_est +
                       inv_sqrt_2t * inv_sqrt_2t * self_k[i_t];
        norm_sq_est = std::max(norm_sq_est, 0.0);
    }

    // exact margin audit: min_i (1/T) sum_t <Psi(X_i), y_t> / denom_t,
    // rearranged as a single pass over picks with suffix weights
    std::vector<double> suffix(T + 1, 0.0);
    for (std::int64_t t = T - 1; t >= 0; --t) suffix[t] = suffix[t + 1] + inv_denoms[t];
    double margin = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::int64_t t = 0; t < T; ++t)
            s += suffix[t + 1] * kspec.eval(X, i, cls.picks[t]);
        margin = std::min(margin, s * inv_sqrt_2t / static_cast<double>(T));
    }

    out.classifier = std::move(cls);
    out.achieved_margin = margin;
    out.ledger = LedgerSnapshot::take(ledger);
    out.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace detail

// Kernel-based classification. Explicit-feature mode materializes the
// degree-q monomial map (lexicographic q-tuples) and delegates to the sqrt-d
// trainer in feature space, pricing one feature query at q matrix queries;
// it exists as the verification oracle for the estimator mode. Estimator
// mode never touches feature space: inner products against y_t are replaced
// by running sums of unbiased single-sample kernel estimates.
inline TrainResult train_kernel(const DataMatrix& X, const KernelSpec& kspec,
                                const mwdual::TrainConfig& cfg, KernelMode mode,
                                QueryLedger& ledger, Rng& rng) {
    if (mode == KernelMode::ExplicitFeature) {
        if (kspec.kind == KernelSpec::Kind::Gaussian)
            throw std::invalid_argument("explicit-feature mode: polynomial kernels only");
        DataMatrix feat = detail::feature_map(X, std::max<std::int64_t>(kspec.q, 1));
        mwdual::TrainConfig c = cfg;
        if (c.T_const <= 0) c.T_const = 27.0;
        return detail::run_linear(feat, c, ledger, rng, Budget::SqrtD,
                                  static_cast<double>(std::max<std::int64_t>(kspec.q, 1)));
    }
    return detail::run_kernel_estimator(X, kspec, cfg, ledger, rng);
}

} // namespace sublin::classify
