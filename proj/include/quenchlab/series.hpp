#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qlab {

enum class SeriesVerdict {
    ConvergentCertified,
    ConvergentEvidence,
    DivergentEvidence,
    Inconclusive,
};

inline std::string to_string(SeriesVerdict v) {
    switch (v) {
        case SeriesVerdict::ConvergentCertified: return "convergent-certified";
        case SeriesVerdict::ConvergentEvidence: return "convergent-evidence";
        case SeriesVerdict::DivergentEvidence: return "divergent-evidence";
        case SeriesVerdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

// A numeric series with its partial sums, an optional certified tail bound
// (present only when a geometric contraction was measured), and a verdict.
// `condition_tag` names the condition the series evaluates ("2.1", "5.2", ...).
struct SeriesReport {
    std::vector<double> terms;
    std::vector<double> partial_sums;
    std::optional<double> tail_bound;
    SeriesVerdict verdict = SeriesVerdict::Inconclusive;
    std::string condition_tag;

    double total() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

// Builds partial sums and, absent a certificate, grades convergence by the
// saturation of the second half of the partial-sum trace. Divergence is never
// asserted here; callers with an analytic divergence argument set the verdict
// themselves.
inline SeriesReport make_series_report(std::vector<double> terms, std::string condition_tag,
                                       std::optional<double> tail_bound = std::nullopt,
                                       double rel_tol = 1e-6) {
    SeriesReport r;
    r.terms = std::move(terms);
    r.partial_sums.reserve(r.terms.size());
    double s = 0.0;
    for (double t : r.terms) {
        s += t;
        r.partial_sums.push_back(s);
    }
    r.tail_bound = tail_bound;
    r.condition_tag = std::move(condition_tag);
    if (tail_bound.has_value()) {
        r.verdict = SeriesVerdict::ConvergentCertified;
    } else if (r.partial_sums.size() >= 2) {
        const double last = r.partial_sums.back();
        const double half = r.partial_sums[r.partial_sums.size() / 2 - 1];
        const double scale = std::max(std::abs(last), 1e-300);
        r.verdict = (std::abs(last - half) < rel_tol * scale)
                        ? SeriesVerdict::ConvergentEvidence
                        : SeriesVerdict::Inconclusive;
    } else {
        r.verdict = SeriesVerdict::Inconclusive;
    }
    return r;
}

inline nlohmann::json to_json(const SeriesReport& r) {
    nlohmann::json j;
    j["paper_condition"] = r.condition_tag;
    j["terms"] = r.terms;
    j["partial_sums"] = r.partial_sums;
    if (r.tail_bound) j["tail_bound"] = *r.tail_bound;
    j["verdict"] = to_string(r.verdict);
    return j;
}

}  // namespace qlab
