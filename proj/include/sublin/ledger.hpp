#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sublin {

// Knobs of the query-cost model. The paper charges unit cost per oracle query
// but leaves the constants of its subroutines unstated; these defaults are
// declared here and are settable from the CLI (--cost.*).
struct QueryCostModel {
    double per_entry = 1.0;        // charge per direct matrix-entry query
    double c_prep_per_iter = 2.0;  // coefficient-oracle calls per amplification iteration
    double c_dh = 22.5;            // Durr-Hoyer max-finding: ceil(c_dh * sqrt(n)) calls
    int bits_l = 16;               // precision bits for mean estimation
    double ae_const = 3.141592653589793;  // grid constant in M = ceil(ae_const/eps * sqrt(N/max(t,1)))
    double lazy_queries_per_step = 2.0;   // matrix queries per recorded step of the weight oracle (compute+uncompute)

    void validate() const {
        if (per_entry <= 0 || c_prep_per_iter <= 0 || c_dh <= 0 || ae_const <= 0 ||
            lazy_queries_per_step <= 0)
            throw std::invalid_argument("cost model constants must be positive");
        if (bits_l < 1 || bits_l > 64)
            throw std::invalid_argument("bits_l must be in [1,64]");
    }
};

enum class Charge { StatePrep = 0, MaxFinding = 1, NormEstimation = 2, Direct = 3 };

// Per-run counter of charged oracle queries. Counts are kept as doubles:
// the sqrt-d algorithms at small epsilon legitimately charge beyond 2^64.
// Only the breakdown is stored; the total is their sum by construction.
class QueryLedger {
public:
    QueryLedger() = default;
    explicit QueryLedger(QueryCostModel model) : model_(model) { model_.validate(); }

    void charge(Charge kind, double amount) {
        if (amount < 0) throw std::invalid_argument("negative charge");
        breakdown_[static_cast<int>(kind)] += amount;
    }

    double charged_queries() const {
        double s = 0;
        for (double b : breakdown_) s += b;
        return s;
    }
    double charged(Charge kind) const { return breakdown_[static_cast<int>(kind)]; }

    const QueryCostModel& model() const { return model_; }

    static const char* kind_name(Charge kind) {
        static const char* names[] = {"state_prep", "max_finding", "norm_estimation", "direct"};
        return names[static_cast<int>(kind)];
    }

private:
    QueryCostModel model_{};
    std::array<double, 4> breakdown_{};
};

} // namespace sublin
