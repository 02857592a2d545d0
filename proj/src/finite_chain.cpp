#include "quenchlab/finite_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace qlab::chain {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_strongly_connected(const std::vector<std::vector<double>>& kernel) {
    const std::size_t n = kernel.size();
    auto reach = [&](bool transpose) {
        std::vector<bool> seen(n, false);
        std::queue<std::size_t> q;
        q.push(0);
        seen[0] = true;
        while (!q.empty()) {
            std::size_t u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                const double w = transpose ? kernel[v][u] : kernel[u][v];
                if (w > 0.0 && !seen[v]) {
                    seen[v] = true;
                    q.push(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    };
    if (!reach(false) || !reach(true))
        throw std::invalid_argument("chain is not irreducible");
}

std::size_t chain_period(const std::vector<std::vector<double>>& kernel) {
    // gcd of (level[u] + 1 - level[v]) over edges, BFS levels from state 0
    const std::size_t n = kernel.size();
    std::vector<long long> level(n, -1);
    std::queue<std::size_t> q;
    q.push(0);
    level[0] = 0;
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v)
            if (kernel[u][v] > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
    }
    long long g = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (kernel[u][v] > 0.0) g = std::gcd(g, std::llabs(level[u] + 1 - level[v]));
    return g == 0 ? 1 : static_cast<std::size_t>(g);
}

}  // namespace

std::vector<double> stationary(const std::vector<std::vector<double>>& kernel) {
    const std::size_t n = kernel.size();
    if (n < 2) throw std::invalid_argument("chain needs at least 2 states");
    for (const auto& row : kernel) {
        if (row.size() != n) throw std::invalid_argument("kernel is not square");
        double s = 0.0;
        for (double v : row) {
            if (v < 0.0) throw std::invalid_argument("kernel has a negative entry");
            s += v;
        }
        if (std::abs(s - 1.0) > kRowSumTol)
            throw std::invalid_argument("kernel row does not sum to 1");
    }
    check_strongly_connected(kernel);

    // power iteration on the damped kernel (P + I)/2; damping removes any
    // periodicity without changing the fixed point
    std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
    for (std::size_t iter = 0; iter < 1000000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            next[x] += 0.5 * pi[x];
            const double px = 0.5 * pi[x];
            for (std::size_t y = 0; y < n; ++y) next[y] += px * kernel[x][y];
        }
        double diff = 0.0, total = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            diff += std::abs(next[x] - pi[x]);
            total += next[x];
        }
        for (double& v : next) v /= total;
        pi.swap(next);
        if (diff < 1e-13) return pi;
    }
    throw std::runtime_error("stationary law: power iteration did not converge");
}

FiniteChain::FiniteChain(std::vector<std::vector<double>> kernel, std::vector<double> f,
                         std::optional<std::vector<double>> labels)
    : kernel_(std::move(kernel)), f_(std::move(f)) {
    pi_ = stationary(kernel_);
    const std::size_t n = kernel_.size();
    if (f_.size() != n) throw std::invalid_argument("observable size mismatch");
    period_ = chain_period(kernel_);

    double mean = 0.0;
    for (std::size_t x = 0; x < n; ++x) mean += pi_[x] * f_[x];
    for (double& v : f_) v -= mean;

    if (labels) {
        if (labels->size() != n) throw std::invalid_argument("label size mismatch");
        labels_ = std::move(*labels);
    } else {
        labels_.resize(n);
        for (std::size_t x = 0; x < n; ++x) labels_[x] = static_cast<double>(x);
    }

    row_cdf_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        row_cdf_[x].resize(n);
        double c = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            c += kernel_[x][y];
            row_cdf_[x][y] = c;
        }
        row_cdf_[x].back() = 1.0;
    }
}

std::vector<double> FiniteChain::apply(const std::vector<double>& v) const {
    const std::size_t n = kernel_.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < n; ++y) s += kernel_[x][y] * v[y];
        out[x] = s;
    }
    return out;
}

std::vector<double> FiniteChain::push(const std::vector<double>& d) const {
    const std::size_t n = kernel_.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        if (d[x] == 0.0) continue;
        for (std::size_t y = 0; y < n; ++y) out[y] += d[x] * kernel_[x][y];
    }
    return out;
}

double FiniteChain::pi_mean(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) s += pi_[x] * v[x];
    return s;
}

double FiniteChain::pi_norm2(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) s += pi_[x] * v[x] * v[x];
    return std::sqrt(std::max(0.0, s));
}

std::vector<double> FiniteChain::conditional_sum(std::size_t n) const {
    std::vector<double> g(n_states(), 0.0), v = f_;
    for (std::size_t j = 1; j <= n; ++j) {
        v = apply(v);
        for (std::size_t x = 0; x < g.size(); ++x) g[x] += v[x];
    }
    return g;
}

std::size_t FiniteChain::sample_step(std::size_t state, Rng& rng) const {
    const auto& cdf = row_cdf_[state];
    const double u = rng.uniform();
    return static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

nlohmann::json FiniteChain::to_json() const {
    nlohmann::json j;
    j["kernel"] = kernel_;
    j["f"] = f_;
    j["labels"] = labels_;
    return j;
}

FiniteChain FiniteChain::from_json(const nlohmann::json& j) {
    std::optional<std::vector<double>> labels;
    if (j.contains("labels") && !j["labels"].is_null())
        labels = j["labels"].get<std::vector<double>>();
    return FiniteChain(j.at("kernel").get<std::vector<std::vector<double>>>(),
                       j.at("f").get<std::vector<double>>(), std::move(labels));
}

// ---------------------------------------------------------------------------

namespace {

// contraction ratio of the last few pushforward iterates; a certificate is
// issued only below 0.999
std::optional<double> contraction_ratio(const std::vector<double>& norms) {
    if (norms.size() < 6) return std::nullopt;
    double r = 0.0;
    for (std::size_t i = norms.size() - 5; i < norms.size(); ++i) {
        if (norms[i - 1] <= 0.0) return 0.0;
        r = std::max(r, norms[i] / norms[i - 1]);
    }
    if (r >= 0.999) return std::nullopt;
    return r;
}

}  // namespace

EtaResult eta_exact(const FiniteChain& chain, std::size_t kmax, double tol) {
    if (!chain.aperiodic()) throw std::invalid_argument("eta_exact: chain is periodic");
    std::vector<double> terms;
    std::vector<double> norms;
    std::vector<double> v = chain.f();
    const double f_norm = chain.pi_norm2(v);
    terms.push_back(chain.pi_mean([&] {
        std::vector<double> sq(v.size());
        for (std::size_t x = 0; x < v.size(); ++x) sq[x] = v[x] * v[x];
        return sq;
    }()));
    norms.push_back(f_norm);

    std::optional<double> tail;
    for (std::size_t k = 1; k <= kmax; ++k) {
        v = chain.apply(v);
        double cov = 0.0;
        for (std::size_t x = 0; x < v.size(); ++x) cov += chain.pi()[x] * chain.f()[x] * v[x];
        terms.push_back(2.0 * cov);
        norms.push_back(chain.pi_norm2(v));
        if (auto r = contraction_ratio(norms)) {
            const double bound = 2.0 * f_norm * norms.back() * (*r) / (1.0 - *r);
            if (bound < tol || k == kmax) {
                tail = bound;
                break;
            }
        }
    }

    auto report = make_series_report(std::move(terms), "2.2", tail);
    EtaResult out;
    out.report = std::move(report);
    out.eta = out.report.total();
    if (out.eta < -1e-9) throw std::runtime_error("eta_exact: negative variance");
    out.eta = std::max(0.0, out.eta);
    return out;
}

SeriesReport cond21_series(const FiniteChain& chain, std::size_t kmax) {
    std::vector<double> terms, norms;
    std::vector<double> v = chain.f();
    norms.push_back(chain.pi_norm2(v));
    {
        double t = 0.0;
        for (std::size_t x = 0; x < v.size(); ++x)
            t += chain.pi()[x] * std::abs(chain.f()[x] * v[x]);
        terms.push_back(t);
    }
    std::optional<double> tail;
    const double f_norm = norms.front();
    for (std::size_t k = 1; k <= kmax; ++k) {
        v = chain.apply(v);
        double t = 0.0;
        for (std::size_t x = 0; x < v.size(); ++x)
            t += chain.pi()[x] * std::abs(chain.f()[x] * v[x]);
        terms.push_back(t);
        norms.push_back(chain.pi_norm2(v));
        if (auto r = contraction_ratio(norms)) {
            const double bound = f_norm * norms.back() * (*r) / (1.0 - *r);
            if (bound < 1e-12 || k == kmax) {
                tail = bound;
                break;
            }
        }
    }
    return make_series_report(std::move(terms), "2.1", tail);
}

SeriesReport mw_series(const FiniteChain& chain, std::size_t nmax) {
    std::vector<double> terms;
    std::vector<double> v = chain.f(), g(chain.n_states(), 0.0);
    for (std::size_t n = 1; n <= nmax; ++n) {
        v = chain.apply(v);
        for (std::size_t x = 0; x < g.size(); ++x) g[x] += v[x];
        terms.push_back(chain.pi_norm2(g) / std::pow(static_cast<double>(n), 1.5));
    }
    return make_series_report(std::move(terms), "5.2", std::nullopt, 1e-4);
}

SeriesReport hh_series(const FiniteChain& chain, std::size_t nmax) {
    std::vector<double> terms;
    std::vector<double> v = chain.f();
    double cur = chain.pi_norm2(v);
    for (std::size_t n = 0; n <= nmax; ++n) {
        v = chain.apply(v);
        const double nxt = chain.pi_norm2(v);
        // ||E_0(X_n) - E_{-1}(X_n)||_2^2 telescopes the projection norms
        const double sq = std::max(0.0, cur * cur - nxt * nxt);
        terms.push_back(std::sqrt(sq));
        cur = nxt;
    }
    return make_series_report(std::move(terms), "5.3", std::nullopt, 1e-8);
}

GordinStats gordin_l1_stats(const FiniteChain& chain, std::size_t nmax, std::size_t replicas,
                            std::uint64_t seed) {
    GordinStats out;
    // exact part: sup_n pi(|g_n|)
    std::vector<double> v = chain.f(), g(chain.n_states(), 0.0);
    for (std::size_t n = 1; n <= nmax; ++n) {
        v = chain.apply(v);
        double l1 = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x) {
            g[x] += v[x];
            l1 += chain.pi()[x] * std::abs(g[x]);
        }
        out.sup_norm = std::max(out.sup_norm, l1);
    }

    // Monte Carlo part: E|S_n|/sqrt(n) under the stationary start
    std::vector<double> sum(nmax, 0.0), sumsq(nmax, 0.0);
    std::vector<double> pi_cdf(chain.n_states());
    double c = 0.0;
    for (std::size_t x = 0; x < chain.n_states(); ++x) {
        c += chain.pi()[x];
        pi_cdf[x] = c;
    }
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);
        const double u = rng.uniform();
        std::size_t state = static_cast<std::size_t>(
            std::lower_bound(pi_cdf.begin(), pi_cdf.end(), u) - pi_cdf.begin());
        double s = 0.0;
        for (std::size_t n = 0; n < nmax; ++n) {
            state = chain.sample_step(state, rng);
            s += chain.f()[state];
            const double val = std::abs(s) / std::sqrt(static_cast<double>(n + 1));
            sum[n] += val;
            sumsq[n] += val * val;
        }
    }
    out.ratio_trace.resize(nmax);
    out.ratio_se.resize(nmax);
    const double R = static_cast<double>(replicas);
    for (std::size_t n = 0; n < nmax; ++n) {
        out.ratio_trace[n] = sum[n] / R;
        const double var = std::max(0.0, sumsq[n] / R - out.ratio_trace[n] * out.ratio_trace[n]);
        out.ratio_se[n] = std::sqrt(var / R);
    }
    return out;
}

std::vector<double> alpha_coeffs(const FiniteChain& chain, std::size_t kmax,
                                 bool rosenblatt_zero) {
    const std::size_t n = chain.n_states();
    std::vector<double> thresholds = chain.labels();
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    if (!thresholds.empty()) thresholds.pop_back();  // {label <= max} is trivial

    // indicator vectors 1_{label <= t}, iterated through P
    std::vector<std::vector<double>> ind;
    std::vector<double> marginal;
    for (double t : thresholds) {
        std::vector<double> u(n, 0.0);
        for (std::size_t x = 0; x < n; ++x) u[x] = chain.labels()[x] <= t ? 1.0 : 0.0;
        marginal.push_back(chain.pi_mean(u));
        ind.push_back(std::move(u));
    }

    std::vector<double> alphas;
    if (rosenblatt_zero) alphas.push_back(1.0);
    for (std::size_t k = 1; k <= kmax; ++k) {
        double best = 0.0;
        for (std::size_t t = 0; t < ind.size(); ++t) {
            ind[t] = chain.apply(ind[t]);
            double dev = 0.0;
            for (std::size_t x = 0; x < n; ++x)
                dev += chain.pi()[x] * std::abs(ind[t][x] - marginal[t]);
            best = std::max(best, dev);
        }
        alphas.push_back(best);
    }
    return alphas;
}

// ---------------------------------------------------------------------------
// block diagnostics

namespace {

// E[ (sum_{j=1}^{L} w_j f(xi_j))^2 | xi_0 = x ] by backward recursion
std::vector<double> windowed_second_moment(const FiniteChain& chain,
                                           const std::vector<double>& weights) {
    const std::size_t n = chain.n_states();
    const std::size_t L = weights.size();
    std::vector<double> g(n, 0.0), G(n, 0.0);
    for (std::size_t s = L; s-- > 0;) {
        std::vector<double> g_next(n), G_next(n);
        for (std::size_t x = 0; x < n; ++x) {
            double eg = 0.0, eG = 0.0;
            for (std::size_t y = 0; y < n; ++y) {
                const double w = chain.kernel()[x][y];
                if (w == 0.0) continue;
                const double fy = weights[s] * chain.f()[y];
                eg += w * (fy + g[y]);
                eG += w * (fy * fy + 2.0 * fy * g[y] + G[y]);
            }
            g_next[x] = eg;
            G_next[x] = eG;
        }
        g.swap(g_next);
        G.swap(G_next);
    }
    return G;
}

std::vector<std::vector<double>> matrix_power_rowstoch(const FiniteChain& chain, std::size_t p) {
    const std::size_t n = chain.n_states();
    // rows of P^p: push each delta measure p times
    std::vector<std::vector<double>> out(n);
    for (std::size_t x = 0; x < n; ++x) {
        std::vector<double> d(n, 0.0);
        d[x] = 1.0;
        for (std::size_t j = 0; j < p; ++j) d = chain.push(d);
        out[x] = std::move(d);
    }
    return out;
}

// E_0 | (1/(mp)) sum_t V(s_t) - target |, skeleton states s_0 = x0,
// s_{t+1} ~ P^p(s_t, .), exact by depth-first enumeration
double skeleton_abs_deviation(const std::vector<std::vector<double>>& Pp, std::size_t x0,
                              std::size_t m, const std::vector<double>& V, double scale,
                              double target) {
    const std::size_t n = Pp.size();
    double total = 0.0;
    // iterative DFS over (depth, state, prob, partial)
    struct Node {
        std::size_t depth, state, next;
        double prob, partial;
    };
    std::vector<Node> stack;
    stack.push_back({1, x0, 0, 1.0, V[x0]});
    while (!stack.empty()) {
        Node& nd = stack.back();
        if (nd.depth == m) {
            total += nd.prob * std::abs(nd.partial * scale - target);
            stack.pop_back();
            continue;
        }
        if (nd.next == n) {
            stack.pop_back();
            continue;
        }
        const std::size_t y = nd.next++;
        const double pr = Pp[nd.state][y];
        if (pr > 0.0)
            stack.push_back({nd.depth + 1, y, 0, nd.prob * pr, nd.partial + V[y]});
    }
    return total;
}

}  // namespace

BlockDiagnostics block_diagnostics_exact(const FiniteChain& chain, std::size_t x0, std::size_t m,
                                         std::size_t p, const std::vector<double>& eps_grid,
                                         std::size_t replicas, std::uint64_t seed) {
    if (m < 2 || p < 1) throw std::invalid_argument("block diagnostics: need m >= 2, p >= 1");
    if (x0 >= chain.n_states()) throw std::invalid_argument("block diagnostics: bad start state");
    const std::size_t n = chain.n_states();
    if (std::pow(static_cast<double>(n), static_cast<double>(m - 1)) > 1e6)
        throw std::invalid_argument("block diagnostics: skeleton enumeration too large");

    BlockDiagnostics out;
    out.m = m;
    out.p = p;
    out.eta_used = eta_exact(chain).eta;
    const double mp = static_cast<double>(m * p);

    // C1: h_p = sum_{j=p+1}^{2p} P^j f, averaged against the exact law of the
    // conditioning state
    std::vector<double> h_p(n, 0.0), v = chain.f();
    for (std::size_t j = 1; j <= 2 * p; ++j) {
        v = chain.apply(v);
        if (j > p)
            for (std::size_t x = 0; x < n; ++x) h_p[x] += v[x];
    }
    {
        std::vector<double> d(n, 0.0);
        d[x0] = 1.0;
        double c1 = 0.0;
        for (std::size_t i = 2; i <= m + 1; ++i) {
            // law of the state at time (i-2)p
            double e_abs = 0.0;
            for (std::size_t x = 0; x < n; ++x) e_abs += d[x] * std::abs(h_p[x]);
            c1 += e_abs;
            if (i <= m) {
                for (std::size_t j = 0; j < p; ++j) d = chain.push(d);
            }
        }
        out.c1_stat = c1 / std::sqrt(mp);
    }

    // C2: conditional second moments of the gapped and doubled windows
    {
        std::vector<double> w_gap(2 * p, 0.0), w_two(2 * p, 1.0);
        for (std::size_t j = p; j < 2 * p; ++j) w_gap[j] = 1.0;
        const auto V = windowed_second_moment(chain, w_gap);
        const auto W = windowed_second_moment(chain, w_two);
        const auto Pp = matrix_power_rowstoch(chain, p);
        out.c2_stats.first = skeleton_abs_deviation(Pp, x0, m, V, 1.0 / mp, out.eta_used);
        out.c2_stats.second = skeleton_abs_deviation(Pp, x0, m, W, 1.0 / mp, 2.0 * out.eta_used);
    }

    // C3 / C4: Monte Carlo from the fixed start
    const std::size_t ne = eps_grid.size();
    std::vector<double> c3_sum(ne, 0.0), c3_sq(ne, 0.0), c4_sum(ne, 0.0), c4_sq(ne, 0.0);
    const double sqrt_p = std::sqrt(static_cast<double>(p));
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);
        std::size_t state = x0;
        std::vector<double> c3_acc(ne, 0.0), c4_acc(ne, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double block_sum = 0.0, block_max = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                state = chain.sample_step(state, rng);
                block_sum += chain.f()[state];
                block_max = std::max(block_max, std::abs(block_sum));
            }
            const double b = block_sum / sqrt_p;
            const double bm = block_max / sqrt_p;
            for (std::size_t e = 0; e < ne; ++e) {
                if (std::abs(b) > eps_grid[e] * sqrt_m) c3_acc[e] += b * b;
                if (bm > eps_grid[e] * sqrt_m) c4_acc[e] += bm * bm;
            }
        }
        for (std::size_t e = 0; e < ne; ++e) {
            const double a3 = c3_acc[e] / static_cast<double>(m);
            const double a4 = c4_acc[e] / static_cast<double>(m);
            c3_sum[e] += a3;
            c3_sq[e] += a3 * a3;
            c4_sum[e] += a4;
            c4_sq[e] += a4 * a4;
        }
    }
    const double R = static_cast<double>(replicas);
    for (std::size_t e = 0; e < ne; ++e) {
        const double m3 = c3_sum[e] / R, m4 = c4_sum[e] / R;
        out.c3_stat.emplace_back(eps_grid[e], m3);
        out.c4_stat.emplace_back(eps_grid[e], m4);
        out.c3_se.push_back(std::sqrt(std::max(0.0, c3_sq[e] / R - m3 * m3) / R));
        out.c4_se.push_back(std::sqrt(std::max(0.0, c4_sq[e] / R - m4 * m4) / R));
    }
    return out;
}

nlohmann::json BlockDiagnostics::to_json() const {
    nlohmann::json j;
    j["paper_condition"] = "C1..C4";
    j["m"] = m;
    j["p"] = p;
    j["c1"] = c1_stat;
    j["c2"] = {c2_stats.first, c2_stats.second};
    j["c3"] = c3_stat;
    j["c4"] = c4_stat;
    j["c3_se"] = c3_se;
    j["c4_se"] = c4_se;
    j["eta"] = eta_used;
    return j;
}

std::pair<double, double> max_inequality_bruteforce(const FiniteChain& chain, std::size_t x0,
                                                    std::size_t n, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("max inequality: lambda >= 0 required");
    const std::size_t ns = chain.n_states();
    if (std::pow(static_cast<double>(ns), static_cast<double>(n)) > 1e7)
        throw std::invalid_argument("max inequality: enumeration too large");

    // E_i(S_n - S_i) = g_{n-i}(xi_i)
    std::vector<std::vector<double>> g(n + 1, std::vector<double>(ns, 0.0));
    {
        std::vector<double> v = chain.f();
        for (std::size_t r = 1; r <= n; ++r) {
            v = chain.apply(v);
            g[r] = g[r - 1];
            for (std::size_t x = 0; x < ns; ++x) g[r][x] += v[x];
        }
    }

    double lhs = 0.0, rhs = 0.0;
    struct Node {
        std::size_t depth, state, next;
        double prob, s, smax, contrib;
    };
    std::vector<Node> stack;
    stack.push_back({0, x0, 0, 1.0, 0.0, 0.0, 0.0});
    while (!stack.empty()) {
        Node& nd = stack.back();
        if (nd.depth == n) {
            const double excess = std::max(0.0, nd.smax - lambda);
            lhs += nd.prob * excess * excess;
            rhs += nd.prob * nd.contrib;
            stack.pop_back();
            continue;
        }
        if (nd.next == ns) {
            stack.pop_back();
            continue;
        }
        const std::size_t y = nd.next++;
        const double pr = chain.kernel()[nd.state][y];
        if (pr > 0.0) {
            const double xi = chain.f()[y];
            const double s = nd.s + xi;
            const double smax = std::max(nd.smax, std::abs(s));
            double contrib = nd.contrib;
            if (smax > lambda) {
                const std::size_t i = nd.depth + 1;
                contrib += 8.0 * xi * xi + 16.0 * std::abs(xi * g[n - i][y]);
            }
            stack.push_back({nd.depth + 1, y, 0, nd.prob * pr, s, smax, contrib});
        }
    }
    return {lhs, rhs};
}

ErgodicReport ergodic_checks(const FiniteChain& chain, std::size_t x0,
                             const std::vector<double>& z, std::size_t nmax,
                             std::size_t replicas, std::uint64_t seed) {
    if (!chain.aperiodic()) throw std::invalid_argument("ergodic checks: chain is periodic");
    ErgodicReport out;
    out.pi_z = chain.pi_mean(z);

    std::vector<double> v = z;
    double acc = 0.0;
    out.average_trace.reserve(nmax);
    for (std::size_t i = 1; i <= nmax; ++i) {
        v = chain.apply(v);
        acc += v[x0];
        out.average_trace.push_back(acc / static_cast<double>(i));
    }

    std::vector<double> sum(nmax, 0.0), sq(nmax, 0.0);
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);
        std::size_t state = x0;
        double running_max = 0.0;
        for (std::size_t i = 0; i < nmax; ++i) {
            state = chain.sample_step(state, rng);
            running_max = std::max(running_max, std::abs(z[state]));
            const double val = running_max / static_cast<double>(i + 1);
            sum[i] += val;
            sq[i] += val * val;
        }
    }
    const double R = static_cast<double>(replicas);
    out.max_trace.resize(nmax);
    out.max_trace_se.resize(nmax);
    for (std::size_t i = 0; i < nmax; ++i) {
        out.max_trace[i] = sum[i] / R;
        out.max_trace_se[i] =
            std::sqrt(std::max(0.0, sq[i] / R - out.max_trace[i] * out.max_trace[i]) / R);
    }
    out.max_trace_decreasing = nmax >= 2 && out.max_trace.back() < out.max_trace.front();
    return out;
}

ChainPath sample_path(const FiniteChain& chain, std::size_t x0, std::size_t n,
                      std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_path: n >= 1 required");
    if (x0 >= chain.n_states()) throw std::invalid_argument("sample_path: bad start state");
    ChainPath out;
    out.states.reserve(n);
    out.x.reserve(n);
    Rng rng(seed, 0);
    std::size_t state = x0;
    for (std::size_t i = 0; i < n; ++i) {
        state = chain.sample_step(state, rng);
        out.states.push_back(state);
        out.x.push_back(chain.f()[state]);
    }
    return out;
}

}  // namespace qlab::chain
