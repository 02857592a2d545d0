#include "quenchlab/probkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qlab::probkit {

namespace {

constexpr double kWeightTol = 1e-12;

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// QuantileFunction

QuantileFunction QuantileFunction::piecewise(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw std::invalid_argument("piecewise quantile: no breakpoints");
    std::sort(points.begin(), points.end());
    double prev_u = 0.0;
    double prev_v = std::numeric_limits<double>::infinity();
    for (auto& [u, v] : points) {
        if (u <= prev_u || u > 1.0) throw std::invalid_argument("piecewise quantile: u out of (0,1]");
        if (v < 0.0) throw std::invalid_argument("piecewise quantile: negative value");
        if (v > prev_v) throw std::invalid_argument("piecewise quantile: not non-increasing");
        prev_u = u;
        prev_v = v;
    }
    if (points.back().first != 1.0) throw std::invalid_argument("piecewise quantile: must end at u=1");
    QuantileFunction q;
    q.points_ = std::move(points);
    return q;
}

QuantileFunction QuantileFunction::power(double c, double a) {
    if (c < 0.0 || a <= 0.0 || a >= 0.5)
        throw std::invalid_argument("power quantile: need c >= 0 and 0 < a < 1/2");
    QuantileFunction q;
    q.power_ = std::make_pair(c, a);
    return q;
}

double QuantileFunction::operator()(double u) const {
    if (u <= 0.0 || u > 1.0) throw std::invalid_argument("quantile: u must be in (0,1]");
    if (u == 1.0 && value_at_one_) return *value_at_one_;
    if (power_) return power_->first * std::pow(u, -power_->second);
    auto it = std::lower_bound(points_.begin(), points_.end(), u,
                               [](const auto& pt, double x) { return pt.first < x; });
    return it->second;
}

double QuantileFunction::integral_squared(double a) const {
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("integral_Q_squared: a outside [0,1]");
    if (a == 0.0) return 0.0;
    if (power_) {
        const auto [c, e] = *power_;
        return c * c * std::pow(a, 1.0 - 2.0 * e) / (1.0 - 2.0 * e);
    }
    double total = 0.0, lo = 0.0;
    for (const auto& [u, v] : points_) {
        const double hi = std::min(u, a);
        if (hi > lo) total += v * v * (hi - lo);
        lo = u;
        if (lo >= a) break;
    }
    return total;
}

double QuantileFunction::integral(double a) const {
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("quantile integral: a outside [0,1]");
    if (a == 0.0) return 0.0;
    if (power_) {
        const auto [c, e] = *power_;
        return c * std::pow(a, 1.0 - e) / (1.0 - e);
    }
    double total = 0.0, lo = 0.0;
    for (const auto& [u, v] : points_) {
        const double hi = std::min(u, a);
        if (hi > lo) total += v * (hi - lo);
        lo = u;
        if (lo >= a) break;
    }
    return total;
}

nlohmann::json QuantileFunction::to_json() const {
    nlohmann::json j;
    if (power_) {
        j["kind"] = "power";
        j["c"] = power_->first;
        j["a"] = power_->second;
    } else {
        j["kind"] = "piecewise";
        j["points"] = points_;
    }
    if (value_at_one_) j["value_at_one"] = *value_at_one_;
    return j;
}

QuantileFunction QuantileFunction::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    QuantileFunction q;
    if (kind == "power")
        q = power(j.at("c"), j.at("a"));
    else if (kind == "piecewise")
        q = piecewise(j.at("points").get<std::vector<std::pair<double, double>>>());
    else
        throw std::invalid_argument("quantile json: unknown kind " + kind);
    if (j.contains("value_at_one")) q.set_value_at_one(j["value_at_one"].get<double>());
    return q;
}

// ---------------------------------------------------------------------------
// TailFunction

TailFunction TailFunction::table(std::vector<std::pair<double, double>> rows) {
    if (rows.empty()) throw std::invalid_argument("tail table: empty");
    std::sort(rows.begin(), rows.end());
    double prev_h = 1.0 + 1e-15;
    for (auto& [x, h] : rows) {
        if (x < 0.0) throw std::invalid_argument("tail table: negative x");
        if (h < 0.0 || h > 1.0) throw std::invalid_argument("tail table: H outside [0,1]");
        if (h > prev_h) throw std::invalid_argument("tail table: not non-increasing");
        prev_h = h;
    }
    TailFunction t;
    t.rows_ = std::move(rows);
    return t;
}

TailFunction TailFunction::power(double c, double q, double b, double x0) {
    if (c <= 0.0 || q <= 0.0) throw std::invalid_argument("tail power: need c > 0, q > 0");
    if (b != 0.0 && x0 < 1.0)
        throw std::invalid_argument("tail power: log factor requires x0 >= 1");
    TailFunction t;
    t.power_form_ = true;
    t.c_ = c;
    t.q_ = q;
    t.b_ = b;
    t.x0_ = x0;
    return t;
}

double TailFunction::operator()(double x) const {
    if (x < 0.0) throw std::invalid_argument("tail function: negative argument");
    if (power_form_) {
        if (x <= x0_ || x <= 0.0) return 1.0;
        double v = c_ * std::pow(x, -q_);
        if (b_ != 0.0) {
            const double lx = std::log(x);
            if (lx <= 0.0) return 1.0;
            v *= std::pow(lx, -b_);
        }
        return std::min(1.0, v);
    }
    if (x < rows_.front().first) return rows_.front().second;
    if (x > rows_.back().first) return 0.0;  // envelope vanishes beyond the table
    auto it = std::upper_bound(rows_.begin(), rows_.end(), x,
                               [](double v, const auto& row) { return v < row.first; });
    --it;
    return it->second;
}

nlohmann::json TailFunction::to_json() const {
    nlohmann::json j;
    if (power_form_) {
        j["kind"] = "power";
        j["c"] = c_;
        j["q"] = q_;
        j["b"] = b_;
        j["x0"] = x0_;
    } else {
        j["kind"] = "piecewise";
        j["points"] = rows_;
    }
    return j;
}

TailFunction TailFunction::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    if (kind == "power") return power(j.at("c"), j.at("q"), j.at("b"), j.at("x0"));
    if (kind == "piecewise")
        return table(j.at("points").get<std::vector<std::pair<double, double>>>());
    throw std::invalid_argument("tail json: unknown kind " + kind);
}

// ---------------------------------------------------------------------------
// EmpiricalSample / FiniteProbSpace

EmpiricalSample EmpiricalSample::uniform(std::vector<double> values) {
    EmpiricalSample s;
    s.values = std::move(values);
    s.validate();
    return s;
}

void EmpiricalSample::validate() const {
    if (values.empty()) throw std::invalid_argument("empirical sample: empty");
    if (!weights.empty()) {
        if (weights.size() != values.size())
            throw std::invalid_argument("empirical sample: weight/value size mismatch");
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("empirical sample: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > kWeightTol)
            throw std::invalid_argument("empirical sample: weights do not sum to 1");
    }
}

void FiniteProbSpace::validate() const {
    if (probs.empty() || probs.size() != xvals.size())
        throw std::invalid_argument("finite space: bad atom table");
    double total = 0.0;
    for (double p : probs) {
        if (p <= 0.0) throw std::invalid_argument("finite space: atom probability must be > 0");
        total += p;
    }
    if (std::abs(total - 1.0) > kWeightTol)
        throw std::invalid_argument("finite space: probabilities do not sum to 1");
    std::vector<bool> seen(probs.size(), false);
    for (const auto& block : partition)
        for (std::size_t i : block) {
            if (i >= probs.size() || seen[i])
                throw std::invalid_argument("finite space: partition not disjoint/covering");
            seen[i] = true;
        }
    for (bool b : seen)
        if (!b) throw std::invalid_argument("finite space: partition does not cover all atoms");
}

std::vector<double> FiniteProbSpace::conditional_expectation() const {
    std::vector<double> cond(probs.size(), 0.0);
    for (const auto& block : partition) {
        double mass = 0.0, mean = 0.0;
        for (std::size_t i : block) {
            mass += probs[i];
            mean += probs[i] * xvals[i];
        }
        mean /= mass;
        for (std::size_t i : block) cond[i] = mean;
    }
    return cond;
}

// ---------------------------------------------------------------------------
// Operations

QuantileFunction quantile_of(const std::vector<std::pair<double, double>>& atoms) {
    if (atoms.empty()) throw std::invalid_argument("quantile_of: empty distribution");
    std::map<double, double> mass;  // |value| -> probability
    double total = 0.0;
    for (const auto& [v, p] : atoms) {
        if (p <= 0.0) throw std::invalid_argument("quantile_of: atom mass must be positive");
        mass[std::abs(v)] += p;
        total += p;
    }
    if (std::abs(total - 1.0) > kWeightTol)
        throw std::invalid_argument("quantile_of: masses do not sum to 1");

    // tail(t) = P(|Z| > t) at the candidate thresholds {0} + atom values
    std::vector<double> vals;
    for (const auto& [v, p] : mass) vals.push_back(v);
    if (vals.front() != 0.0) vals.insert(vals.begin(), 0.0);
    std::vector<double> tail(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        double t = 0.0;
        for (const auto& [v, p] : mass)
            if (v > vals[i]) t += p;
        tail[i] = t;
    }

    // descending values d_j carry Q = d_j on (tail(d_j), tail(d_{j+1})]
    std::vector<std::pair<double, double>> points;
    for (std::size_t j = vals.size(); j-- > 0;) {
        const double upper = (j == 0) ? 1.0 : tail[j - 1];
        const double lower = tail[j];
        if (upper > lower) points.emplace_back(upper, vals[j]);
    }
    if (points.back().first != 1.0) points.back().first = 1.0;
    auto q = QuantileFunction::piecewise(std::move(points));
    q.set_value_at_one(0.0);  // P(|Z| > 0) <= 1 always
    return q;
}

double integral_Q_squared(const QuantileFunction& q, double a) { return q.integral_squared(a); }

SeriesReport mixing_series(const std::vector<double>& alphas, const QuantileFunction& q,
                           std::size_t kmax, double rel_tol) {
    if (kmax < 1) throw std::invalid_argument("mixing_series: kmax >= 1 required");
    std::vector<double> terms;
    const std::size_t count = std::min(alphas.size(), kmax + 1);
    terms.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        if (alphas[k] < 0.0 || alphas[k] > 1.0)
            throw std::invalid_argument("mixing_series: alpha outside [0,1]");
        terms.push_back(q.integral_squared(alphas[k]));
    }
    return make_series_report(std::move(terms), "3.1", std::nullopt, rel_tol);
}

double tail_condition_integral(const TailFunction& h, double gamma) {
    if (gamma <= 0.0 || gamma >= 0.5)
        throw std::invalid_argument("tail_condition_integral: gamma outside (0,1/2)");
    const double e = (1.0 - 2.0 * gamma) / (1.0 - gamma);

    if (h.is_power()) {
        // x * (c x^-q (ln x)^-b)^e  ~  x^{1 - qe} (ln x)^{-be}: diverges when
        // qe < 2, or qe == 2 with be <= 1
        const double qe = h.power_q() * e;
        const double be = h.power_b() * e;
        if (qe < 2.0 || (qe == 2.0 && be <= 1.0))
            return std::numeric_limits<double>::infinity();
    } else {
        // step table: exact integral, finite by construction
        double total = 0.0;
        const auto& rows = h.rows();
        double x_lo = 0.0;
        double h_lo = rows.front().second;
        for (const auto& [x, hv] : rows) {
            if (x > x_lo) total += std::pow(h_lo, e) * 0.5 * (x * x - x_lo * x_lo);
            x_lo = x;
            h_lo = hv;
        }
        // last value extends no further: envelope is zero beyond the table
        return total;
    }

    // numeric integration over octaves until the tail is negligible
    auto integrand = [&](double x) { return x * std::pow(h(x), e); };
    double total = simpson(integrand, 0.0, 1.0, 256);
    double lo = 1.0;
    for (int oct = 0; oct < 1200; ++oct) {
        const double hi = lo * 2.0;
        const double piece = simpson(integrand, lo, hi, 128);
        total += piece;
        if (piece < 1e-14 * total && oct > 4) break;
        lo = hi;
    }
    return total;
}

double ks_distance(const EmpiricalSample& sample, const std::function<double(double)>& cdf) {
    sample.validate();
    const std::size_t n = sample.values.size();
    std::vector<std::pair<double, double>> pts(n);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = {sample.values[i],
                  sample.weights.empty() ? 1.0 / static_cast<double>(n) : sample.weights[i]};
    std::sort(pts.begin(), pts.end());

    double d = 0.0, cum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double x = pts[i].first;
        const double below = cum;
        while (i < n && pts[i].first == x) cum += pts[i++].second;
        const double fx = cdf(x);
        // compare the flat empirical piece below x against the cdf just left
        // of x, so atoms shared by both distributions do not register
        const double fx_left = cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
        d = std::max(d, std::max(std::abs(cum - fx), std::abs(fx_left - below)));
    }
    return d;
}

TruncationCheck check_truncation_inequalities(const FiniteProbSpace& space, double p, double eps) {
    if (p < 1.0) throw std::invalid_argument("truncation check: p >= 1 required");
    if (eps <= 0.0) throw std::invalid_argument("truncation check: eps > 0 required");
    space.validate();

    const auto cond = space.conditional_expectation();
    const std::size_t n = space.probs.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = space.xvals[i] - cond[i];

    auto expect = [&](const std::function<double(std::size_t)>& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += space.probs[i] * f(i);
        return s;
    };
    const double base = expect([&](std::size_t i) {
        const double ax = std::abs(space.xvals[i]);
        return ax > eps ? std::pow(ax, p) : 0.0;
    });

    TruncationCheck out;
    const double lhs1 = expect([&](std::size_t i) {
        return std::abs(cond[i]) > 2.0 * eps ? std::pow(std::abs(space.xvals[i]), p) : 0.0;
    });
    const double lhs2 = expect([&](std::size_t i) {
        return std::abs(y[i]) > 3.0 * eps ? std::pow(std::abs(space.xvals[i]), p) : 0.0;
    });
    const double lhs3 = expect([&](std::size_t i) {
        return std::abs(y[i]) > 4.0 * eps ? std::pow(std::abs(y[i]), p) : 0.0;
    });
    out.sides = {{lhs1, 2.0 * base}, {lhs2, 2.0 * base}, {lhs3, 3.0 * std::pow(2.0, p) * base}};
    for (const auto& [lhs, rhs] : out.sides)
        if (lhs > rhs + 1e-12) out.all_hold = false;
    return out;
}

}  // namespace qlab::probkit
