#pragma once

#include <string>

#include <json.hpp>

#include "sublin/classify.hpp"
#include "sublin/ledger.hpp"
#include "sublin/mwdual.hpp"
#include "sublin/quadratic.hpp"
#include "sublin/zerosum.hpp"

// JSON records for persistence and CLI interchange. Field order is fixed
// (ordered_json) so that outputs are byte-stable for a fixed seed and config.

namespace sublin::serialize {

using json = nlohmann::ordered_json;

inline json to_json(const classify::LedgerSnapshot& l) {
    return json{{"state_prep", l.state_prep},
                {"max_finding", l.max_finding},
                {"norm_estimation", l.norm_estimation},
                {"direct", l.direct},
                {"total", l.total()}};
}

inline json to_json(const QueryCostModel& m) {
    return json{{"per_entry", m.per_entry},
                {"c_prep_per_iter", m.c_prep_per_iter},
                {"c_dh", m.c_dh},
                {"bits_l", m.bits_l},
                {"ae_const", m.ae_const},
                {"lazy_queries_per_step", m.lazy_queries_per_step}};
}

inline json to_json(const mwdual::SuccinctClassifier& c) {
    return json{{"T", c.rounds}, {"scale", c.scale}, {"picks", c.picks}, {"norms", c.norms}};
}

inline mwdual::SuccinctClassifier classifier_from_json(const json& j) {
    mwdual::SuccinctClassifier c;
    c.rounds = j.at("T").get<std::int64_t>();
    c.scale = j.at("scale").get<double>();
    c.picks = j.at("picks").get<std::vector<std::int32_t>>();
    c.norms = j.at("norms").get<std::vector<double>>();
    if (!c.consistent()) throw std::invalid_argument("classifier record: inconsistent sizes");
    return c;
}

inline json to_json(const mwdual::RunAudits& a) {
    return json{{"rounds", a.rounds},
                {"eta", a.eta},
                {"ogd_regret_best", a.regret_best},
                {"ogd_regret_achieved", a.regret_achieved},
                {"ogd_regret_bound", a.regret_bound},
                {"ogd_regret_ok", a.ogd_regret_ok()},
                {"mw_lhs", a.mw_lhs},
                {"mw_rhs", a.mw_rhs()},
                {"mw_ok", a.mw_ok()},
                {"sum_p_v2", a.mw_sum_p_v2}};
}

inline json to_json(const zerosum::Strategy& s) {
    json sup = json::array();
    for (auto& [i, m] : s.support) sup.push_back(json{{"i", i}, {"p", m}});
    return json{{"n", s.n}, {"support", sup}};
}

inline zerosum::Strategy strategy_from_json(const json& j) {
    zerosum::Strategy s;
    s.n = j.at("n").get<std::int64_t>();
    for (const auto& e : j.at("support"))
        s.support[e.at("i").get<std::int64_t>()] = e.at("p").get<double>();
    s.validate();
    return s;
}

} // namespace sublin::serialize
