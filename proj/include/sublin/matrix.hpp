#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sublin/ledger.hpp"
#include "sublin/rng.hpp"

namespace sublin {

// n x d input matrix with every row in the unit ball. Rows are the data
// points; label signs are folded into the rows at ingestion. Immutable after
// construction and safe to share across concurrent runs.
class DataMatrix {
public:
    static constexpr double kRowNormTol = 1e-12;

    // dense, row-major
    DataMatrix(std::int64_t n, std::int64_t d, std::vector<double> dense, bool labels_folded)
        : n_(n), d_(d), dense_(std::move(dense)), labels_folded_(labels_folded) {
        if (n_ < 1 || d_ < 1) throw std::invalid_argument("DataMatrix: need n >= 1 and d >= 1");
        if (static_cast<std::int64_t>(dense_.size()) != n_ * d_)
            throw std::invalid_argument("DataMatrix: size mismatch");
        validate_rows();
    }

    // sparse, per-row sorted (index, value) pairs
    DataMatrix(std::int64_t n, std::int64_t d,
               std::vector<std::vector<std::pair<std::int32_t, double>>> rows, bool labels_folded)
        : n_(n), d_(d), sparse_(std::move(rows)), labels_folded_(labels_folded) {
        if (n_ < 1 || d_ < 1) throw std::invalid_argument("DataMatrix: need n >= 1 and d >= 1");
        if (static_cast<std::int64_t>(sparse_.size()) != n_)
            throw std::invalid_argument("DataMatrix: row count mismatch");
        for (auto& r : sparse_)
            std::sort(r.begin(), r.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
        validate_rows();
    }

    std::int64_t rows() const { return n_; }
    std::int64_t cols() const { return d_; }
    bool labels_folded() const { return labels_folded_; }
    bool is_dense() const { return !dense_.empty(); }

    // Host-side entry access; does not touch any ledger.
    double entry(std::int64_t i, std::int64_t j) const {
        check_index(i, j);
        if (is_dense()) return dense_[i * d_ + j];
        const auto& r = sparse_[i];
        auto it = std::lower_bound(r.begin(), r.end(), std::make_pair(static_cast<std::int32_t>(j),
                                                                      -std::numeric_limits<double>::infinity()),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        if (it != r.end() && it->first == j) return it->second;
        return 0.0;  // absent sparse entries read as 0
    }

    double row_dot(std::int64_t i, const std::vector<double>& w) const {
        double s = 0;
        if (is_dense()) {
            const double* r = &dense_[i * d_];
            for (std::int64_t j = 0; j < d_; ++j) s += r[j] * w[j];
        } else {
            for (auto& [j, v] : sparse_[i]) s += v * w[j];
        }
        return s;
    }

    // Accumulate scale * row(i) into acc; returns the touched column indices
    // through `touched` when non-null (coordinates never written stay exactly 0,
    // which the simulation layer exploits).
    void add_row_to(std::int64_t i, double scale, std::vector<double>& acc,
                    std::vector<std::int32_t>* touched = nullptr) const {
        if (is_dense()) {
            const double* r = &dense_[i * d_];
            for (std::int64_t j = 0; j < d_; ++j) {
                if (r[j] != 0.0) {
                    if (touched && acc[j] == 0.0) touched->push_back(static_cast<std::int32_t>(j));
                    acc[j] += scale * r[j];
                }
            }
        } else {
            for (auto& [j, v] : sparse_[i]) {
                if (touched && acc[j] == 0.0) touched->push_back(j);
                acc[j] += scale * v;
            }
        }
    }

    double row_norm(std::int64_t i) const {
        double s = 0;
        if (is_dense()) {
            const double* r = &dense_[i * d_];
            for (std::int64_t j = 0; j < d_; ++j) s += r[j] * r[j];
        } else {
            for (auto& [j, v] : sparse_[i]) s += v * v;
        }
        return std::sqrt(s);
    }

    // Column-contiguous copy of a dense matrix, built on first use. Host-side
    // cache for the solvers' per-round column gathers; invisible to the query
    // model.
    const double* column(std::int64_t j) const {
        if (!is_dense() || n_ * d_ > (std::int64_t(1) << 27)) return nullptr;
        if (transposed_.empty()) {
            transposed_.resize(dense_.size());
            for (std::int64_t i = 0; i < n_; ++i)
                for (std::int64_t j2 = 0; j2 < d_; ++j2)
                    transposed_[j2 * n_ + i] = dense_[i * d_ + j2];
        }
        return &transposed_[j * n_];
    }

private:
    void check_index(std::int64_t i, std::int64_t j) const {
        if (i < 0 || i >= n_ || j < 0 || j >= d_)
            throw std::out_of_range("DataMatrix: index out of range");
    }
    void validate_rows() const {
        for (std::int64_t i = 0; i < n_; ++i) {
            double nm = row_norm(i);
            if (!std::isfinite(nm) || nm > 1.0 + kRowNormTol)
                throw std::invalid_argument("DataMatrix: row " + std::to_string(i) +
                                            " outside the unit ball");
        }
    }

    std::int64_t n_ = 0, d_ = 0;
    std::vector<double> dense_;
    std::vector<std::vector<std::pair<std::int32_t, double>>> sparse_;
    bool labels_folded_ = false;
    mutable std::vector<double> transposed_;
};

// Anti-symmetric (or to-be-reduced) payoff matrix with entries in [-1,1].
// Kept separate from DataMatrix: game rows are not unit-ball vectors.
struct GameInstance {
    std::int64_t n = 0;
    std::vector<double> entries;  // row-major n x n
    bool antisymmetric = false;

    double at(std::int64_t i, std::int64_t j) const { return entries[i * n + j]; }

    void validate() const {
        if (n < 1 || static_cast<std::int64_t>(entries.size()) != n * n)
            throw std::invalid_argument("GameInstance: bad shape");
        for (double v : entries)
            if (!std::isfinite(v) || std::fabs(v) > 1.0 + 1e-12)
                throw std::invalid_argument("GameInstance: entries must satisfy |X_ij| <= 1");
        if (antisymmetric) {
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < n; ++j)
                    if (std::fabs(at(i, j) + at(j, i)) > 1e-12)
                        throw std::invalid_argument("GameInstance: not anti-symmetric");
        }
    }
};

enum class InstanceKind { RandomBall, LowerLinearCase1, LowerLinearCase2, LowerZeroSum, File };

// Generator request. k and l are 1-based, matching the constructions
// (l in {2..d}; case 1 needs k in {3..n}; the zero-sum instance k in [n]).
struct InstanceSpec {
    InstanceKind kind = InstanceKind::RandomBall;
    std::int64_t n = 0, d = 0;
    std::int64_t k = 0, l = 0;
    std::uint64_t seed = 0;
    std::string path;  // kind == File
};

namespace instance {

// ---- ingestion -------------------------------------------------------------

namespace detail {

inline DataMatrix finish_load(std::int64_t n, std::int64_t d, std::vector<double> raw,
                              const std::vector<int>& labels) {
    // Fold labels into row signs, then scale every row by the single global
    // factor 1/max(1, max_i ||X_i||), preserving relative margins.
    for (std::int64_t i = 0; i < n; ++i) {
        if (!labels.empty() && labels[i] < 0)
            for (std::int64_t j = 0; j < d; ++j) raw[i * d + j] = -raw[i * d + j];
    }
    double max_norm = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::int64_t j = 0; j < d; ++j) s += raw[i * d + j] * raw[i * d + j];
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    if (!std::isfinite(max_norm)) throw std::invalid_argument("load_dataset: non-finite entry");
    double scale = 1.0 / std::max(1.0, max_norm);
    for (auto& v : raw) v *= scale;
    return DataMatrix(n, d, std::move(raw), !labels.empty());
}

inline double parse_real(const std::string& tok, std::int64_t line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("parse error at line " + std::to_string(line_no) +
                                    ": token '" + tok + "'");
    }
    if (pos != tok.size())
        throw std::invalid_argument("parse error at line " + std::to_string(line_no) +
                                    ": token '" + tok + "'");
    return v;
}

} // namespace detail

// One row per line, comma-separated reals. With labeled=true the first column
// is a label in {-1,+1} that gets folded into the row sign.
inline DataMatrix load_csv(const std::string& path, bool labeled) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_dataset: cannot open " + path);
    std::vector<double> raw;
    std::vector<int> labels;
    std::int64_t n = 0, d = -1, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(detail::parse_real(tok, line_no));
        if (vals.empty()) continue;
        if (labeled) {
            double lab = vals.front();
            if (lab != 1.0 && lab != -1.0)
                throw std::invalid_argument("load_dataset: label not in {-1,+1} at line " +
                                            std::to_string(line_no));
            labels.push_back(lab > 0 ? 1 : -1);
            vals.erase(vals.begin());
        }
        if (d < 0) d = static_cast<std::int64_t>(vals.size());
        if (static_cast<std::int64_t>(vals.size()) != d)
            throw std::invalid_argument("load_dataset: dimension mismatch at line " +
                                        std::to_string(line_no));
        raw.insert(raw.end(), vals.begin(), vals.end());
        ++n;
    }
    if (n == 0) throw std::invalid_argument("load_dataset: empty file " + path);
    return detail::finish_load(n, d, std::move(raw), labels);
}

// svmlight format: "<label> <idx>:<val> ...", 1-based indices. Column count is
// inferred from the largest index unless dim > 0 forces it.
inline DataMatrix load_svmlight(const std::string& path, std::int64_t dim = 0) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_dataset: cannot open " + path);
    std::vector<std::vector<std::pair<std::int64_t, double>>> rows;
    std::vector<int> labels;
    std::int64_t d = dim, line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        double lab = detail::parse_real(tok, line_no);
        if (lab != 1.0 && lab != -1.0)
            throw std::invalid_argument("load_dataset: label not in {-1,+1} at line " +
                                        std::to_string(line_no));
        labels.push_back(lab > 0 ? 1 : -1);
        std::vector<std::pair<std::int64_t, double>> row;
        while (ss >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("parse error at line " + std::to_string(line_no) +
                                            ": expected idx:val, got '" + tok + "'");
            std::int64_t idx =
                static_cast<std::int64_t>(detail::parse_real(tok.substr(0, colon), line_no));
            double val = detail::parse_real(tok.substr(colon + 1), line_no);
            if (idx < 1) throw std::invalid_argument("load_dataset: indices are 1-based");
            if (dim > 0 && idx > dim)
                throw std::invalid_argument("load_dataset: index exceeds given dimension");
            d = std::max(d, idx);
            row.emplace_back(idx - 1, val);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("load_dataset: empty file " + path);
    if (d < 1) throw std::invalid_argument("load_dataset: no features found");
    std::int64_t n = static_cast<std::int64_t>(rows.size());
    std::vector<double> raw(n * d, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (auto& [j, v] : rows[i]) raw[i * d + j] = v;
    return detail::finish_load(n, d, std::move(raw), labels);
}

inline DataMatrix load_dataset(const std::string& path, const std::string& format,
                               bool labeled = false, std::int64_t dim = 0) {
    if (format == "csv-dense" || format == "csv") return load_csv(path, labeled);
    if (format == "svmlight-sparse" || format == "svmlight") return load_svmlight(path, dim);
    throw std::invalid_argument("load_dataset: unknown format " + format);
}

// ---- generators ------------------------------------------------------------

inline DataMatrix generate_case2(std::int64_t n, std::int64_t d, std::int64_t l) {
    if (l < 2 || l > d) throw std::invalid_argument("case2: need l in {2..d}");
    if (n < 1) throw std::invalid_argument("case2: need n >= 1");
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<double> raw(n * d, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        raw[i * d + 0] = (i == 0) ? -a : a;
        raw[i * d + (l - 1)] = a;
    }
    return DataMatrix(n, d, std::move(raw), true);
}

inline DataMatrix generate_case1(std::int64_t n, std::int64_t d, std::int64_t k, std::int64_t l) {
    if (n < 3) throw std::invalid_argument("case1: need n >= 3");
    if (k < 3 || k > n) throw std::invalid_argument("case1: need k in {3..n}");
    if (l < 2 || l > d) throw std::invalid_argument("case1: need l in {2..d}");
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<double> raw(n * d, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        if (i == k - 1) {
            raw[i * d + 0] = 1.0;
        } else {
            raw[i * d + 0] = (i == 0) ? -a : a;
            raw[i * d + (l - 1)] = a;
        }
    }
    return DataMatrix(n, d, std::move(raw), true);
}

// Hard zero-sum instance: row k is all ones off the diagonal, column k all
// minus ones, zero elsewhere. Any eps-optimal strategy must put mass >= 1-eps
// on coordinate k.
inline GameInstance generate_lower_zerosum(std::int64_t n, std::int64_t k) {
    if (k < 1 || k > n) throw std::invalid_argument("lower-zerosum: need k in [n]");
    GameInstance g;
    g.n = n;
    g.entries.assign(n * n, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        if (i == k - 1) continue;
        g.entries[(k - 1) * n + i] = 1.0;
        g.entries[i * n + (k - 1)] = -1.0;
    }
    g.antisymmetric = true;
    g.validate();
    return g;
}

inline DataMatrix generate_random_ball(std::int64_t n, std::int64_t d, Rng& rng) {
    std::vector<double> raw(n * d);
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::int64_t j = 0; j < d; ++j) {
            raw[i * d + j] = rng.gaussian();
            s += raw[i * d + j] * raw[i * d + j];
        }
        double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
        double scale = (s > 0) ? r / std::sqrt(s) : 0.0;
        for (std::int64_t j = 0; j < d; ++j) raw[i * d + j] *= scale;
    }
    return DataMatrix(n, d, std::move(raw), false);
}

inline GameInstance generate_random_antisymmetric(std::int64_t n, Rng& rng) {
    GameInstance g;
    g.n = n;
    g.entries.assign(n * n, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) {
            double v = 2.0 * rng.uniform() - 1.0;
            g.entries[i * n + j] = v;
            g.entries[j * n + i] = -v;
        }
    g.antisymmetric = true;
    return g;
}

using Generated = std::variant<DataMatrix, GameInstance>;

inline Generated generate(const InstanceSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case InstanceKind::RandomBall: return generate_random_ball(spec.n, spec.d, rng);
        case InstanceKind::LowerLinearCase1:
            return generate_case1(spec.n, spec.d, spec.k, spec.l);
        case InstanceKind::LowerLinearCase2: return generate_case2(spec.n, spec.d, spec.l);
        case InstanceKind::LowerZeroSum: return generate_lower_zerosum(spec.n, spec.k);
        case InstanceKind::File: return load_csv(spec.path, false);
    }
    throw std::invalid_argument("generate: unknown kind");
}

// ---- query-counted access and exact evaluators ------------------------------

// The entry oracle O_X: returns X_ij and charges the per-entry cost. No
// caching; repeated queries charge repeatedly.
inline double query_entry(const DataMatrix& X, QueryLedger& ledger, std::int64_t i,
                          std::int64_t j) {
    double v = X.entry(i, j);
    ledger.charge(Charge::Direct, ledger.model().per_entry);
    return v;
}

// Exact min_i X_i . w; reference evaluator, never charges.
inline double exact_margin(const DataMatrix& X, const std::vector<double>& w) {
    if (static_cast<std::int64_t>(w.size()) != X.cols())
        throw std::invalid_argument("exact_margin: dimension mismatch");
    for (double v : w)
        if (!std::isfinite(v)) throw std::invalid_argument("exact_margin: non-finite w");
    double m = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < X.rows(); ++i) m = std::min(m, X.row_dot(i, w));
    return m;
}

// Closed forms of the planted instances, used as ground truth in tests.
inline double sigma_case1() { return 1.0 / std::sqrt(4.0 + 2.0 * std::sqrt(2.0)); }
inline double sigma_case2() { return 1.0 / std::sqrt(2.0); }
inline double sigma_meb_case1() { return (2.0 + std::sqrt(2.0)) / 4.0; }
inline double sigma_meb_case2() { return 0.5; }

} // namespace instance
} // namespace sublin
