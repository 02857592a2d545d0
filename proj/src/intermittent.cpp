#include "quenchlab/intermittent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qlab::pm {

namespace {

constexpr double kInverseTol = 1e-13;

// x^e for x >= 0 with sqrt chains for the exponents the hot paths use
// (gamma = 1/4, 1/2, 3/4 and edge grading 1/g = 1/2)
inline double pow_pos(double x, double e) {
    if (e == 0.5) return std::sqrt(x);
    if (e == 0.25) return std::sqrt(std::sqrt(x));
    if (e == 0.75) {
        const double q = std::sqrt(std::sqrt(x));
        return q * q * q;
    }
    if (e == 1.0) return x;
    return std::pow(x, e);
}

double left_branch(double gamma, double x) {
    return x * (1.0 + std::exp2(gamma) * pow_pos(x, gamma));
}

double left_branch_deriv(double gamma, double x) {
    return 1.0 + std::exp2(gamma) * (1.0 + gamma) * pow_pos(x, gamma);
}

// left-branch inverse on [lo, hi]: bisection to width 1e-10, then a short
// Newton polish (Newton alone can escape the bracket where the branch is
// nearly flat near 0)
double solve_left(double gamma, double y, double lo, double hi) {
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (left_branch(gamma, mid) < y ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double r = left_branch(gamma, x) - y;
        if (std::abs(r) <= kInverseTol) break;
        x = std::clamp(x - r / left_branch_deriv(gamma, x), lo, hi);
    }
    return x;
}

}  // namespace

GammaMap::GammaMap(double g) : gamma(g) {
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("map: gamma must be in (0,1)");
}

double map_eval(const GammaMap& map, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("map: x outside [0,1]");
    return x < 0.5 ? left_branch(map.gamma, x) : 2.0 * x - 1.0;
}

double map_deriv(const GammaMap& map, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("map: x outside [0,1]");
    return x < 0.5 ? left_branch_deriv(map.gamma, x) : 2.0;
}

Preimages preimages(const GammaMap& map, double y) {
    if (y < 0.0 || y > 1.0) throw std::invalid_argument("map: y outside [0,1]");
    Preimages out;
    out.right = 0.5 * (y + 1.0);
    if (y < 1.0) out.left = solve_left(map.gamma, y, 0.0, 0.5);
    return out;
}

// ---------------------------------------------------------------------------
// Ulam discretization

UlamModel ulam_build(double gamma, std::size_t n_cells, double grading) {
    if (n_cells < 64) throw std::invalid_argument("ulam: need at least 64 cells");
    if (grading < 1.0) throw std::invalid_argument("ulam: grading exponent must be >= 1");
    UlamModel m(GammaMap(gamma), grading);
    const std::size_t N = n_cells;

    m.edges_.resize(N + 1);
    for (std::size_t i = 0; i <= N; ++i)
        m.edges_[i] = std::pow(static_cast<double>(i) / static_cast<double>(N), grading);
    m.edges_.front() = 0.0;
    m.edges_.back() = 1.0;
    m.widths_.resize(N);
    for (std::size_t i = 0; i < N; ++i) m.widths_[i] = m.edges_[i + 1] - m.edges_[i];

    // branch inverses at every edge: the preimage intervals of the cells tile
    // each branch domain, so every matrix entry is an interval intersection
    m.left_inv_edges_.resize(N + 1);
    for (std::size_t j = 0; j <= N; ++j)
        m.left_inv_edges_[j] =
            j == 0 ? 0.0 : (j == N ? 0.5 : solve_left(gamma, m.edges_[j], 0.0, 0.5));

    m.rows_.assign(N, {});
    auto scatter = [&](const std::vector<double>& bx) {
        for (std::size_t j = 0; j < N; ++j) {
            double a = bx[j];
            const double b = bx[j + 1];
            if (b <= a) continue;
            std::size_t i = m.cell_index(a);
            while (a < b) {
                const double hi = std::min(b, m.edges_[i + 1]);
                if (hi > a) m.rows_[i].emplace_back(j, hi - a);
                a = hi;
                if (i + 1 < N && a >= m.edges_[i + 1]) ++i;
                else if (a >= b) break;
            }
        }
    };
    scatter(m.left_inv_edges_);
    std::vector<double> right_inv(N + 1);
    for (std::size_t j = 0; j <= N; ++j) right_inv[j] = 0.5 * (m.edges_[j] + 1.0);
    scatter(right_inv);

    for (std::size_t i = 0; i < N; ++i) {
        auto& row = m.rows_[i];
        std::sort(row.begin(), row.end());
        std::size_t out = 0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (out > 0 && row[out - 1].first == row[k].first)
                row[out - 1].second += row[k].second;
            else
                row[out++] = row[k];
        }
        row.resize(out);
        double sum = 0.0;
        for (const auto& [j, v] : row) sum += v;
        if (std::abs(sum - m.widths_[i]) > 1e-10)
            throw std::runtime_error("ulam: preimage intervals do not tile a cell");
        for (auto& [j, v] : row) v /= sum;
    }

    // invariant cell masses: left fixed vector of the row-stochastic matrix,
    // damped power iteration
    std::vector<double> mu(N, 1.0 / static_cast<double>(N));
    bool converged = false;
    for (std::size_t it = 0; it < 100000 && !converged; ++it) {
        std::vector<double> next(N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            next[i] += 0.5 * mu[i];
            const double w = 0.5 * mu[i];
            for (const auto& [j, v] : m.rows_[i]) next[j] += w * v;
        }
        double diff = 0.0, total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            diff += std::abs(next[i] - mu[i]);
            total += next[i];
        }
        for (double& v : next) v /= total;
        mu.swap(next);
        converged = diff < 1e-12;
    }
    if (!converged) throw std::runtime_error("ulam: invariant-mass iteration did not converge");

    m.nu_ = std::move(mu);
    m.density_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (m.nu_[i] <= 0.0) throw std::runtime_error("ulam: degenerate cell mass");
        m.density_[i] = m.nu_[i] / m.widths_[i];
    }

    m.dual_rows_.assign(N, {});
    for (std::size_t i = 0; i < N; ++i)
        for (const auto& [j, v] : m.rows_[i])
            m.dual_rows_[j].emplace_back(i, m.nu_[i] * v / m.nu_[j]);
    // normalize away the fixed-point iteration residual so the backward
    // kernel is exactly stochastic
    for (auto& row : m.dual_rows_) {
        double sum = 0.0;
        for (const auto& [i, v] : row) sum += v;
        if (sum <= 0.0) throw std::runtime_error("ulam: empty backward-kernel row");
        for (auto& [i, v] : row) v /= sum;
    }
    return m;
}

std::size_t UlamModel::cell_index(double x) const {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("ulam: x outside [0,1]");
    const std::size_t N = widths_.size();
    auto i = static_cast<std::size_t>(std::min(
        static_cast<double>(N - 1),
        std::floor(static_cast<double>(N) * pow_pos(x, 1.0 / grading_))));
    while (i > 0 && x < edges_[i]) --i;
    while (i + 1 < N && x >= edges_[i + 1]) ++i;
    return i;
}

std::vector<double> UlamModel::transfer_apply(const std::vector<double>& mvec) const {
    std::vector<double> out(n_cells(), 0.0);
    for (std::size_t i = 0; i < n_cells(); ++i) {
        if (mvec[i] == 0.0) continue;
        for (const auto& [j, v] : rows_[i]) out[j] += mvec[i] * v;
    }
    return out;
}

std::vector<double> UlamModel::dual_apply(const std::vector<double>& f) const {
    std::vector<double> out(n_cells(), 0.0);
    for (std::size_t j = 0; j < n_cells(); ++j) {
        double s = 0.0;
        for (const auto& [i, v] : dual_rows_[j]) s += v * f[i];
        out[j] = s;
    }
    return out;
}

double UlamModel::nu_mean(const std::vector<double>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_cells(); ++i) s += nu_[i] * f[i];
    return s;
}

double UlamModel::duality_residual(const std::vector<double>& f,
                                   const std::vector<double>& g) const {
    constexpr std::size_t kSub = 4;
    double forward = 0.0;
    for (std::size_t i = 0; i < n_cells(); ++i) {
        double avg = 0.0;
        for (std::size_t s = 0; s < kSub; ++s) {
            const double x = edges_[i] + (s + 0.5) / kSub * widths_[i];
            avg += g[cell_index(std::min(1.0, map_eval(map_, x)))];
        }
        forward += nu_[i] * f[i] * avg / kSub;
    }
    const auto lf = dual_apply(f);
    double dual = 0.0;
    for (std::size_t j = 0; j < n_cells(); ++j) dual += nu_[j] * lf[j] * g[j];
    return std::abs(forward - dual);
}

std::vector<std::pair<std::string, double>> UlamModel::duality_residuals() const {
    auto indicator = [&](double lo, double hi) {
        std::vector<double> v(n_cells());
        for (std::size_t i = 0; i < n_cells(); ++i) {
            const double mid = edges_[i] + 0.5 * widths_[i];
            v[i] = (mid >= lo && mid <= hi) ? 1.0 : 0.0;
        }
        return v;
    };
    std::vector<double> identity(n_cells());
    for (std::size_t i = 0; i < n_cells(); ++i) identity[i] = edges_[i] + 0.5 * widths_[i];

    const auto lower = indicator(0.0, 0.5), upper = indicator(0.5, 1.0);
    const auto quarter = indicator(0.0, 0.25);
    return {
        {"ind_half/ind_upper", duality_residual(lower, upper)},
        {"ind_quarter/ind_half", duality_residual(quarter, lower)},
        {"identity/identity", duality_residual(identity, identity)},
        {"ind_half/identity", duality_residual(lower, identity)},
    };
}

double UlamModel::left_inverse(double y) const {
    if (y >= 1.0) return 0.5;
    if (y <= 0.0) return 0.0;
    const std::size_t j = cell_index(y);
    const double lo = left_inv_edges_[j], hi = left_inv_edges_[j + 1];
    const double t = (y - edges_[j]) / (edges_[j + 1] - edges_[j]);
    double x = lo + t * (hi - lo);
    const double g = map_.gamma;
    const double c2g = std::exp2(g);
    for (int it = 0; it < 4; ++it) {
        const double p = c2g * pow_pos(x, g);  // shared by value and derivative
        const double r = x * (1.0 + p) - y;
        if (std::abs(r) <= kInverseTol) return x;
        x = std::clamp(x - r / (1.0 + (1.0 + g) * p), lo, hi);
    }
    if (std::abs(left_branch(map_.gamma, x) - y) > kInverseTol)
        return solve_left(map_.gamma, y, lo, hi);
    return x;
}

double UlamModel::chain_step(double y, Rng& rng) const {
    const double xr = 0.5 * (y + 1.0);
    if (y >= 1.0) return xr;
    const double xl = left_inverse(y);
    const double wl = density_at(xl) / left_branch_deriv(map_.gamma, xl);
    const double wr = density_at(xr) / 2.0;
    return rng.uniform() * (wl + wr) < wl ? xl : xr;
}

std::size_t UlamModel::nnz() const {
    std::size_t n = 0;
    for (const auto& row : rows_) n += row.size();
    return n;
}

nlohmann::json UlamModel::to_json_meta() const {
    nlohmann::json j;
    j["gamma"] = gamma();
    j["cells"] = n_cells();
    j["grading"] = grading_;
    j["nnz"] = nnz();
    nlohmann::json res = nlohmann::json::array();
    for (const auto& [name, r] : duality_residuals()) res.push_back({{"pair", name}, {"residual", r}});
    j["duality_residuals"] = res;
    return j;
}

void UlamModel::write_csv(const std::string& prefix) const {
    {
        std::ofstream out(prefix + "_edges.csv");
        out << "edge\n";
        for (double e : edges_) out << e << "\n";
    }
    {
        std::ofstream out(prefix + "_matrix.csv");
        out << "row,col,value\n";
        for (std::size_t i = 0; i < rows_.size(); ++i)
            for (const auto& [j, v] : rows_[i]) out << i << "," << j << "," << v << "\n";
    }
    {
        std::ofstream out(prefix + "_density.csv");
        out << "cell_mid,density,mass\n";
        for (std::size_t i = 0; i < n_cells(); ++i)
            out << edges_[i] + 0.5 * widths_[i] << "," << density_[i] << "," << nu_[i] << "\n";
    }
}

std::vector<double> l_gamma_apply(const UlamModel& model, const std::vector<double>& f) {
    if (f.size() != model.n_cells()) throw std::invalid_argument("dual apply: size mismatch");
    return model.dual_apply(f);
}

std::vector<double> alpha_coeffs_ulam(const UlamModel& model, std::size_t kmax,
                                      std::size_t max_thresholds) {
    if (kmax < 1) throw std::invalid_argument("alpha: kmax >= 1 required");
    const std::size_t N = model.n_cells();
    const std::size_t nt = std::min(max_thresholds, N - 1);

    std::vector<std::vector<double>> ind;
    std::vector<double> marginal;
    for (std::size_t s = 0; s < nt; ++s) {
        // thresholds on cell edges, evenly spread in grid index
        const std::size_t cut = (s + 1) * N / (nt + 1);
        if (cut == 0 || cut >= N) continue;
        std::vector<double> u(N, 0.0);
        for (std::size_t i = 0; i < cut; ++i) u[i] = 1.0;
        marginal.push_back(model.nu_mean(u));
        ind.push_back(std::move(u));
    }

    std::vector<double> alphas;
    alphas.reserve(kmax);
    for (std::size_t k = 1; k <= kmax; ++k) {
        double best = 0.0;
        for (std::size_t t = 0; t < ind.size(); ++t) {
            ind[t] = model.dual_apply(ind[t]);
            double dev = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                dev += model.nu_weights()[i] * std::abs(ind[t][i] - marginal[t]);
            best = std::max(best, dev);
        }
        alphas.push_back(best);
    }
    return alphas;
}

// ---------------------------------------------------------------------------
// observables

ObservableSpec ObservableSpec::bv_indicator(double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("observable: threshold must be in (0,1)");
    ObservableSpec o;
    o.kind_ = Kind::BvIndicator;
    o.threshold_ = threshold;
    return o;
}

ObservableSpec ObservableSpec::power_log(double a, double d) {
    if (a < 0.0 || a >= 0.5)
        throw std::invalid_argument("observable: exponent must satisfy 0 <= a < 1/2");
    if (d < 0.0) throw std::invalid_argument("observable: log exponent must be >= 0");
    ObservableSpec o;
    o.kind_ = Kind::PowerLog;
    o.a_ = a;
    o.d_ = d;
    return o;
}

ObservableSpec ObservableSpec::table(std::vector<double> cell_values) {
    if (cell_values.empty()) throw std::invalid_argument("observable: empty table");
    ObservableSpec o;
    o.kind_ = Kind::Table;
    o.table_ = std::move(cell_values);
    return o;
}

double ObservableSpec::eval(double x) const {
    switch (kind_) {
        case Kind::BvIndicator:
            return x <= threshold_ ? 1.0 : 0.0;
        case Kind::PowerLog: {
            if (x <= 0.0) throw std::invalid_argument("observable: singular at 0");
            const double lg = std::max(-std::log(x), 1.0);
            return std::pow(x, -a_) * std::pow(lg, -d_);
        }
        case Kind::Table:
            throw std::invalid_argument("observable: table form needs the model grid");
    }
    return 0.0;
}

std::vector<double> ObservableSpec::cell_values(const UlamModel& model) const {
    std::vector<double> v(model.n_cells());
    if (kind_ == Kind::Table) {
        if (table_.size() != model.n_cells())
            throw std::invalid_argument("observable: table size does not match the grid");
        v = table_;
    } else {
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = eval(model.edges()[i] + 0.5 * model.widths()[i]);
    }
    if (centered) {
        const double m = model.nu_mean(v);
        for (double& x : v) x -= m;
    }
    return v;
}

nlohmann::json ObservableSpec::to_json() const {
    nlohmann::json j;
    j["centered"] = centered;
    switch (kind_) {
        case Kind::BvIndicator:
            j["kind"] = "bv_indicator";
            j["threshold"] = threshold_;
            break;
        case Kind::PowerLog:
            j["kind"] = "power_log";
            j["a"] = a_;
            j["d"] = d_;
            break;
        case Kind::Table:
            j["kind"] = "table";
            j["cells"] = table_.size();
            break;
    }
    return j;
}

UlamEta eta_ulam(const UlamModel& model, const ObservableSpec& obs, std::size_t kmax) {
    auto fbar = obs.cell_values(model);
    const double mean = model.nu_mean(fbar);
    for (double& x : fbar) x -= mean;  // the variance formula needs pi-mean 0

    std::vector<double> sq(fbar.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = fbar[i] * fbar[i];
    const double f2 = model.nu_mean(sq);
    if (!std::isfinite(f2)) throw std::invalid_argument("eta: observable not square-summable on the grid");

    std::vector<double> terms{f2};
    std::vector<double> v = fbar;
    for (std::size_t k = 1; k <= kmax; ++k) {
        v = model.dual_apply(v);
        double cov = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) cov += model.nu_weights()[i] * v[i] * fbar[i];
        terms.push_back(2.0 * cov);
    }

    UlamEta out;
    out.report = make_series_report(std::move(terms), "3.5", std::nullopt, 1e-4);
    out.eta = out.report.total();
    if (out.eta < -1e-6) throw std::runtime_error("eta: variance estimate is negative");
    out.eta = std::max(0.0, out.eta);
    return out;
}

Trajectory traj(const GammaMap& map, double x0, std::size_t n,
                const std::function<double(double)>& obs) {
    if (x0 < 0.0 || x0 > 1.0) throw std::invalid_argument("traj: x0 outside [0,1]");
    Trajectory t;
    t.orbit.reserve(n + 1);
    t.sums.reserve(n + 1);
    t.orbit.push_back(x0);
    t.sums.push_back(0.0);
    double x = x0, s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        s += obs(x);
        x = map_eval(map, x);
        t.orbit.push_back(x);
        t.sums.push_back(s);
    }
    return t;
}

}  // namespace qlab::pm
