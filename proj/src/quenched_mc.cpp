#include "quenchlab/quenched_mc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "quenchlab/probkit.hpp"

namespace qlab::mc {

namespace {

constexpr double kKsBandConst = 1.36;  // 95% Kolmogorov statistic quantile

double ks_against_normal(const std::vector<double>& values, double variance) {
    const double sd = std::sqrt(variance);
    return probkit::ks_distance(probkit::EmpiricalSample::uniform(values),
                                [sd](double x) { return normal_cdf(x / sd); });
}

// degenerate-limit convention: a zero-variance target passes only if the
// whole ensemble is numerically zero
double ks_degenerate(const std::vector<double>& values) {
    for (double v : values)
        if (std::abs(v) > 1e-8) return 1.0;
    return 0.0;
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    const double R = static_cast<double>(xs.size());
    double s = 0.0, sq = 0.0;
    for (double x : xs) {
        s += x;
        sq += x * x;
    }
    out.mean = s / R;
    out.se = std::sqrt(std::max(0.0, sq / R - out.mean * out.mean) / R);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// samplers

std::string ChainSampler::describe() const {
    return "finite-chain(" + std::to_string(chain_.n_states()) + " states)";
}

UlamSampler::UlamSampler(const pm::UlamModel& model, const pm::ObservableSpec& obs)
    : model_(model), pointwise_(obs.has_pointwise()) {
    auto raw = obs;
    raw.centered = false;
    const auto values = raw.cell_values(model);
    mean_ = model.nu_mean(values);
    fbar_ = values;
    for (double& v : fbar_) v -= mean_;
    if (pointwise_) eval_ = [obs](double x) { return obs.eval(x); };
}

double UlamSampler::observe(double state) const {
    if (pointwise_) return eval_(state) - mean_;
    return fbar_[model_.cell_index(state)];
}

std::string UlamSampler::describe() const {
    return "ulam-backward(gamma=" + std::to_string(model_.gamma()) + "," +
           std::to_string(model_.n_cells()) + " cells)";
}

IidSampler::IidSampler(std::function<double(Rng&)> draw, std::string name)
    : draw_(std::move(draw)), name_(std::move(name)) {
    if (!draw_) draw_ = [](Rng& rng) { return rng.normal(); };
}

// ---------------------------------------------------------------------------
// path functionals

double donsker_eval(const std::vector<double>& increments, double t) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("donsker: t outside [0,1]");
    const std::size_t n = increments.size();
    const double u = static_cast<double>(n) * t;
    const auto k = static_cast<std::size_t>(std::floor(u));
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(k, n); ++i) s += increments[i];
    if (k < n) s += (u - static_cast<double>(k)) * increments[k];
    return s / std::sqrt(static_cast<double>(n));
}

namespace {

// modulus over windows of width 1/m of the piecewise-linear path with nodes
// S_k/sqrt(n). The sup is attained with one endpoint at a node and the other
// at a node or at distance exactly 1/m, so a sliding max/min over nodes plus
// one interpolated endpoint per node is exact.
double modulus_from_prefix(const std::vector<double>& prefix,
                           const std::vector<double>& increments, std::size_t m) {
    const std::size_t n = increments.size();
    if (m == 0) throw std::invalid_argument("modulus: m >= 1 required");
    const double w = static_cast<double>(n) / static_cast<double>(m);
    const auto wi = static_cast<std::size_t>(std::floor(w));

    std::deque<std::size_t> maxq, minq;
    double best = 0.0;
    std::size_t admitted = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        // admit nodes up to index i + wi
        const std::size_t hi = std::min(n, i + wi);
        while (admitted <= hi) {
            const double v = prefix[admitted];
            while (!maxq.empty() && prefix[maxq.back()] <= v) maxq.pop_back();
            maxq.push_back(admitted);
            while (!minq.empty() && prefix[minq.back()] >= v) minq.pop_back();
            minq.push_back(admitted);
            ++admitted;
        }
        while (maxq.front() < i) maxq.pop_front();
        while (minq.front() < i) minq.pop_front();
        best = std::max(best, prefix[maxq.front()] - prefix[i]);
        best = std::max(best, prefix[i] - prefix[minq.front()]);
        // fractional far endpoint at exactly distance w
        const double far = static_cast<double>(i) + w;
        if (far <= static_cast<double>(n)) {
            const auto k = static_cast<std::size_t>(std::floor(far));
            double v = prefix[std::min(k, n)];
            if (k < n) v += (far - static_cast<double>(k)) * increments[k];
            best = std::max(best, std::abs(v - prefix[i]));
        }
    }
    return best / std::sqrt(static_cast<double>(n));
}

}  // namespace

double path_modulus(const std::vector<double>& increments, std::size_t m) {
    std::vector<double> prefix(increments.size() + 1, 0.0);
    for (std::size_t i = 0; i < increments.size(); ++i) prefix[i + 1] = prefix[i] + increments[i];
    return modulus_from_prefix(prefix, increments, m);
}

// ---------------------------------------------------------------------------
// replica engine

Ensemble run_replicas(const StepSampler& sampler, double x0, std::size_t n, std::size_t replicas,
                      std::uint64_t seed, const EnsembleSpec& spec) {
    if (replicas < 100) throw std::invalid_argument("replicas: need at least 100");
    if (n < 16) throw std::invalid_argument("replicas: need n >= 16");
    for (std::size_t l = 0; l < spec.fidis_times.size(); ++l) {
        const double t = spec.fidis_times[l];
        if (t <= 0.0 || t > 1.0 || (l > 0 && t <= spec.fidis_times[l - 1]))
            throw std::invalid_argument("replicas: fidis times must be increasing in (0,1]");
    }

    Ensemble out;
    out.sampler = sampler.describe();
    out.x0 = x0;
    out.n = n;
    out.replicas = replicas;
    out.seed = seed;
    out.fidis_times = spec.fidis_times;
    out.modulus_m = spec.modulus_m;
    out.sn_scaled.reserve(replicas);
    if (!spec.fidis_times.empty()) out.fidis_values.reserve(replicas);
    if (!spec.modulus_m.empty()) out.moduli.reserve(replicas);

    const double sqrt_n = std::sqrt(static_cast<double>(n));
    std::vector<double> incr(n), prefix(n + 1, 0.0);
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);  // documented splitting rule: per-replica stream
        double state = x0;
        for (std::size_t i = 0; i < n; ++i) {
            state = sampler.step(state, rng);
            incr[i] = sampler.observe(state);
            prefix[i + 1] = prefix[i] + incr[i];
        }
        out.sn_scaled.push_back(prefix[n] / sqrt_n);

        if (!spec.fidis_times.empty()) {
            std::vector<double> vals(spec.fidis_times.size());
            for (std::size_t l = 0; l < vals.size(); ++l) {
                const double u = static_cast<double>(n) * spec.fidis_times[l];
                const auto k = static_cast<std::size_t>(std::floor(u));
                double v = prefix[std::min(k, n)];
                if (k < n) v += (u - static_cast<double>(k)) * incr[k];
                vals[l] = v / sqrt_n;
            }
            out.fidis_values.push_back(std::move(vals));
        }
        if (!spec.modulus_m.empty()) {
            std::vector<double> mods(spec.modulus_m.size());
            for (std::size_t j = 0; j < mods.size(); ++j)
                mods[j] = modulus_from_prefix(prefix, incr, spec.modulus_m[j]);
            out.moduli.push_back(std::move(mods));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// reports

CltReport quenched_clt_report(const Ensemble& ensemble, double eta_ref) {
    if (eta_ref < 0.0) throw std::invalid_argument("clt report: eta_ref must be >= 0");
    CltReport rep;
    rep.eta_ref = eta_ref;
    rep.ks_null_band = kKsBandConst / std::sqrt(static_cast<double>(ensemble.replicas));
    rep.ks = eta_ref == 0.0 ? ks_degenerate(ensemble.sn_scaled)
                            : ks_against_normal(ensemble.sn_scaled, eta_ref);
    rep.within_band = rep.ks <= rep.ks_null_band;
    return rep;
}

nlohmann::json CltReport::to_json() const {
    return {{"paper_condition", "2.3"},
            {"eta_ref", eta_ref},
            {"ks", ks},
            {"ks_null_band", ks_null_band},
            {"within_band", within_band}};
}

FidisReport fidis_report(const Ensemble& ensemble, const std::vector<double>& weights,
                         double eta_ref) {
    const std::size_t d = ensemble.fidis_times.size();
    if (d == 0) throw std::invalid_argument("fidis: ensemble was collected without a time grid");
    if (weights.size() != d) throw std::invalid_argument("fidis: weight/time size mismatch");
    if (eta_ref < 0.0) throw std::invalid_argument("fidis: eta_ref must be >= 0");

    FidisReport rep;
    rep.times = ensemble.fidis_times;
    rep.weights = weights;
    double var = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        const double dt = ensemble.fidis_times[l] - (l == 0 ? 0.0 : ensemble.fidis_times[l - 1]);
        var += weights[l] * weights[l] * dt;
    }
    rep.variance_target = eta_ref * var;
    rep.ks_null_band = kKsBandConst / std::sqrt(static_cast<double>(ensemble.replicas));

    const std::size_t R = ensemble.fidis_values.size();
    std::vector<double> functional(R, 0.0);
    std::vector<std::vector<double>> incr(R, std::vector<double>(d));
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t l = 0; l < d; ++l) {
            const double w = ensemble.fidis_values[r][l] -
                             (l == 0 ? 0.0 : ensemble.fidis_values[r][l - 1]);
            incr[r][l] = w;
            functional[r] += weights[l] * w;
        }
    }
    rep.ks = rep.variance_target == 0.0 ? ks_degenerate(functional)
                                        : ks_against_normal(functional, rep.variance_target);

    // empirical covariance of the path increments
    std::vector<double> mean(d, 0.0);
    for (const auto& row : incr)
        for (std::size_t l = 0; l < d; ++l) mean[l] += row[l];
    for (double& v : mean) v /= static_cast<double>(R);
    rep.increment_cov.assign(d, std::vector<double>(d, 0.0));
    for (const auto& row : incr)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                rep.increment_cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
    for (auto& rowc : rep.increment_cov)
        for (double& v : rowc) v /= static_cast<double>(R);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) {
            const double den =
                std::sqrt(rep.increment_cov[a][a] * rep.increment_cov[b][b]);
            if (den > 0.0)
                rep.max_offdiag_corr =
                    std::max(rep.max_offdiag_corr, std::abs(rep.increment_cov[a][b]) / den);
        }
    return rep;
}

nlohmann::json FidisReport::to_json() const {
    return {{"paper_condition", "2.3"},
            {"times", times},
            {"weights", weights},
            {"variance_target", variance_target},
            {"ks", ks},
            {"ks_null_band", ks_null_band},
            {"increment_cov", increment_cov},
            {"max_offdiag_corr", max_offdiag_corr}};
}

TightnessReport tightness_report(const Ensemble& ensemble) {
    const std::size_t nm = ensemble.modulus_m.size();
    if (nm == 0) throw std::invalid_argument("tightness: ensemble was collected without moduli");
    TightnessReport rep;
    rep.m_grid = ensemble.modulus_m;
    const std::size_t R = ensemble.moduli.size();
    const double p = 0.95;
    for (std::size_t j = 0; j < nm; ++j) {
        std::vector<double> col(R);
        for (std::size_t r = 0; r < R; ++r) col[r] = ensemble.moduli[r][j];
        std::sort(col.begin(), col.end());
        const auto k = static_cast<std::size_t>(std::ceil(p * R)) - 1;
        rep.q95.push_back(col[k]);
        // order-statistic standard error with a finite-difference density
        const std::size_t halfwin = std::max<std::size_t>(1, R / 50);
        const std::size_t k1 = k >= halfwin ? k - halfwin : 0;
        const std::size_t k2 = std::min(R - 1, k + halfwin);
        const double gap = col[k2] - col[k1];
        const double dens = gap > 0.0 ? (static_cast<double>(k2 - k1) / R) / gap : 0.0;
        rep.q95_se.push_back(dens > 0.0 ? std::sqrt(p * (1 - p) / R) / dens : 0.0);
    }
    rep.decreasing = rep.q95.back() < rep.q95.front();
    return rep;
}

nlohmann::json TightnessReport::to_json() const {
    return {{"paper_condition", "tightness"},
            {"m_grid", m_grid},
            {"q95", q95},
            {"q95_se", q95_se},
            {"decreasing", decreasing}};
}

// ---------------------------------------------------------------------------
// block diagnostics with exact inner conditional moments

namespace {

double eta_from_model(const KernelModel& model, std::size_t kmax = 1024) {
    const auto& f = model.fvec();
    const std::size_t n = model.n_states();
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = f[i] * f[i];
    double eta = model.stationary_mean(sq);
    std::vector<double> v = f, prod(n);
    for (std::size_t k = 1; k <= kmax; ++k) {
        v = model.apply(v);
        for (std::size_t i = 0; i < n; ++i) prod[i] = f[i] * v[i];
        eta += 2.0 * model.stationary_mean(prod);
        double norm = 0.0;
        for (double x : v) norm = std::max(norm, std::abs(x));
        if (norm < 1e-9 && k > 8) break;
    }
    return std::max(0.0, eta);
}

// E((sum_j w_j f(next_j))^2 | state) over an L-step window, by the backward
// second-moment recursion through the kernel model
std::vector<double> windowed_second_moment(const KernelModel& model,
                                           const std::vector<double>& weights) {
    const std::size_t n = model.n_states();
    const auto& f = model.fvec();
    std::vector<double> g(n, 0.0), G(n, 0.0);
    for (std::size_t s = weights.size(); s-- > 0;) {
        std::vector<double> lin(n), quad(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double fy = weights[s] * f[i];
            lin[i] = fy + g[i];
            quad[i] = fy * fy + 2.0 * fy * g[i] + G[i];
        }
        g = model.apply(lin);
        G = model.apply(quad);
    }
    return G;
}

}  // namespace

McBlockDiagnostics block_diagnostics_mc(const StepSampler& sampler, const KernelModel& model,
                                        double x0, std::size_t m, std::size_t p,
                                        const std::vector<double>& eps_grid, std::size_t replicas,
                                        std::uint64_t seed, std::optional<double> eta) {
    if (m < 2 || p < 1) throw std::invalid_argument("block diagnostics: need m >= 2, p >= 1");
    McBlockDiagnostics out;
    out.base.m = m;
    out.base.p = p;
    out.base.eta_used = eta ? *eta : eta_from_model(model);
    const double mp = static_cast<double>(m * p);
    const std::size_t n_states = model.n_states();

    // h_p = sum_{j=p+1}^{2p} E(f_j | state)
    std::vector<double> h_p(n_states, 0.0), v = model.fvec();
    for (std::size_t j = 1; j <= 2 * p; ++j) {
        v = model.apply(v);
        if (j > p)
            for (std::size_t i = 0; i < n_states; ++i) h_p[i] += v[i];
    }
    std::vector<double> w_gap(2 * p, 0.0), w_two(2 * p, 1.0);
    for (std::size_t j = p; j < 2 * p; ++j) w_gap[j] = 1.0;
    const auto V = windowed_second_moment(model, w_gap);
    const auto W = windowed_second_moment(model, w_two);

    const std::size_t ne = eps_grid.size();
    std::vector<double> c1s, c2a, c2b;
    std::vector<std::vector<double>> c3s(ne), c4s(ne);
    c1s.reserve(replicas);
    const double sqrt_p = std::sqrt(static_cast<double>(p));
    const double sqrt_m = std::sqrt(static_cast<double>(m));

    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);
        double state = x0;
        double c1 = 0.0, sum_v = 0.0, sum_w = 0.0;
        std::vector<double> c3(ne, 0.0), c4(ne, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t idx = model.index_of(state);
            c1 += std::abs(h_p[idx]);
            sum_v += V[idx];
            sum_w += W[idx];
            double block_sum = 0.0, block_max = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                state = sampler.step(state, rng);
                block_sum += sampler.observe(state);
                block_max = std::max(block_max, std::abs(block_sum));
            }
            const double b = block_sum / sqrt_p, bm = block_max / sqrt_p;
            for (std::size_t e = 0; e < ne; ++e) {
                if (std::abs(b) > eps_grid[e] * sqrt_m) c3[e] += b * b;
                if (bm > eps_grid[e] * sqrt_m) c4[e] += bm * bm;
            }
        }
        c1s.push_back(c1 / std::sqrt(mp));
        c2a.push_back(std::abs(sum_v / mp - out.base.eta_used));
        c2b.push_back(std::abs(sum_w / mp - 2.0 * out.base.eta_used));
        for (std::size_t e = 0; e < ne; ++e) {
            c3s[e].push_back(c3[e] / static_cast<double>(m));
            c4s[e].push_back(c4[e] / static_cast<double>(m));
        }
    }

    const auto s1 = mean_se(c1s);
    out.base.c1_stat = s1.mean;
    out.c1_se = s1.se;
    const auto s2a = mean_se(c2a), s2b = mean_se(c2b);
    out.base.c2_stats = {s2a.mean, s2b.mean};
    out.c2_se = {s2a.se, s2b.se};
    for (std::size_t e = 0; e < ne; ++e) {
        const auto s3 = mean_se(c3s[e]), s4 = mean_se(c4s[e]);
        out.base.c3_stat.emplace_back(eps_grid[e], s3.mean);
        out.base.c4_stat.emplace_back(eps_grid[e], s4.mean);
        out.base.c3_se.push_back(s3.se);
        out.base.c4_se.push_back(s4.se);
    }
    return out;
}

nlohmann::json McBlockDiagnostics::to_json() const {
    auto j = base.to_json();
    j["c1_se"] = c1_se;
    j["c2_se"] = {c2_se.first, c2_se.second};
    return j;
}

// ---------------------------------------------------------------------------
// variance growth

VarianceScan variance_growth_scan(const StepSampler& sampler, double x0,
                                  const std::vector<std::size_t>& n_grid, std::size_t replicas,
                                  std::uint64_t seed) {
    if (n_grid.empty()) throw std::invalid_argument("variance scan: empty grid");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("variance scan: grid must be increasing");

    VarianceScan out;
    out.n_grid = n_grid;
    const std::size_t n_max = n_grid.back();
    const std::size_t G = n_grid.size();
    std::vector<std::vector<double>> sn(G, std::vector<double>(replicas));
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng(seed, r);
        double state = x0, s = 0.0;
        std::size_t g = 0;
        for (std::size_t i = 1; i <= n_max; ++i) {
            state = sampler.step(state, rng);
            s += sampler.observe(state);
            if (g < G && i == n_grid[g]) sn[g++][r] = s;
        }
    }

    // Quantile-based variance: (MAD / Phi^{-1}(3/4))^2.  The partial sums this
    // scan targets are asymptotically Gaussian but can lack a fourth moment, in
    // which case the raw sample variance has unbounded estimation error.  The
    // median-absolute-deviation scale has bounded influence and the same
    // large-n growth, so the log-n regression stays meaningful.
    const auto median_of = [](std::vector<double>& w) {
        const std::size_t m = w.size() / 2;
        std::nth_element(w.begin(), w.begin() + m, w.end());
        const double hi = w[m];
        if (w.size() % 2 == 0)
            return 0.5 * (hi + *std::max_element(w.begin(), w.begin() + m));
        return hi;
    };
    const auto mad_variance = [&median_of](std::vector<double> v) {
        const double med = median_of(v);
        for (double& x : v) x = std::abs(x - med);
        const double sigma = median_of(v) / 0.6744897501960817;
        return sigma * sigma;
    };

    // delete-one-block jackknife (block deletion keeps the jackknife valid for
    // quantile statistics, unlike leave-one-out)
    const std::size_t B = std::min<std::size_t>(50, replicas);
    for (std::size_t g = 0; g < G; ++g) {
        const double n = static_cast<double>(n_grid[g]);
        out.var_over_n.push_back(mad_variance(sn[g]) / n);

        std::vector<double> leave(B);
        std::vector<double> keep;
        keep.reserve(replicas);
        for (std::size_t b = 0; b < B; ++b) {
            keep.clear();
            for (std::size_t r = 0; r < replicas; ++r)
                if (r % B != b) keep.push_back(sn[g][r]);
            leave[b] = mad_variance(keep) / n;
        }
        double jmean = 0.0;
        for (double l : leave) jmean += l;
        jmean /= static_cast<double>(B);
        double jsq = 0.0;
        for (double l : leave) jsq += (l - jmean) * (l - jmean);
        out.jackknife_se.push_back(
            std::sqrt(jsq * static_cast<double>(B - 1) / static_cast<double>(B)));
    }

    // least squares of Var(S_n)/n on ln n
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        const double x = std::log(static_cast<double>(n_grid[g]));
        const double y = out.var_over_n[g];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double N = static_cast<double>(G);
    const double cov = sxy - sx * sy / N;
    const double vx = sxx - sx * sx / N;
    const double vy = syy - sy * sy / N;
    out.slope_vs_log_n = vx > 0.0 ? cov / vx : 0.0;
    out.r_squared = (vx > 0.0 && vy > 0.0) ? cov * cov / (vx * vy) : 0.0;
    return out;
}

nlohmann::json VarianceScan::to_json() const {
    return {{"paper_condition", "3.4"},
            {"n_grid", n_grid},
            {"var_over_n", var_over_n},
            {"jackknife_se", jackknife_se},
            {"slope_vs_log_n", slope_vs_log_n},
            {"r_squared", r_squared}};
}

}  // namespace qlab::mc
