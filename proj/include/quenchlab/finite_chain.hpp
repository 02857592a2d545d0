#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quenchlab/rng.hpp"
#include "quenchlab/series.hpp"

namespace qlab::chain {

// Explicit finite-state row-stochastic kernel with a centered observable.
// The stationary law is computed at construction; f is recentered so that
// pi(f) = 0. Threshold events {label <= t} use the state labels (defaulting
// to the state index).
class FiniteChain {
  public:
    FiniteChain(std::vector<std::vector<double>> kernel, std::vector<double> f,
                std::optional<std::vector<double>> labels = std::nullopt);

    std::size_t n_states() const { return kernel_.size(); }
    const std::vector<std::vector<double>>& kernel() const { return kernel_; }
    const std::vector<double>& f() const { return f_; }
    const std::vector<double>& pi() const { return pi_; }
    const std::vector<double>& labels() const { return labels_; }
    bool aperiodic() const { return period_ == 1; }
    std::size_t period() const { return period_; }

    // (Pv)(x) = sum_y P(x,y) v(y)
    std::vector<double> apply(const std::vector<double>& v) const;
    // measure pushforward d -> dP
    std::vector<double> push(const std::vector<double>& d) const;
    double pi_mean(const std::vector<double>& v) const;
    double pi_norm2(const std::vector<double>& v) const;  // sqrt(pi(v^2))

    // g_n = sum_{j=1}^n P^j f  (E_x(S_n) as a function of the start)
    std::vector<double> conditional_sum(std::size_t n) const;

    std::size_t sample_step(std::size_t state, Rng& rng) const;

    nlohmann::json to_json() const;
    static FiniteChain from_json(const nlohmann::json& j);

  private:
    std::vector<std::vector<double>> kernel_;
    std::vector<std::vector<double>> row_cdf_;
    std::vector<double> f_;
    std::vector<double> pi_;
    std::vector<double> labels_;
    std::size_t period_ = 1;
};

// stationary law of an irreducible row-stochastic kernel (damped power
// iteration, tolerance 1e-13)
std::vector<double> stationary(const std::vector<std::vector<double>>& kernel);

struct EtaResult {
    double eta = 0.0;
    SeriesReport report;
};

// eta = pi(f^2) + 2 sum_k pi(f P^k f), with a geometric tail certificate when
// the iterates P^k f contract
EtaResult eta_exact(const FiniteChain& chain, std::size_t kmax = 512, double tol = 1e-12);

// sum_k pi(|f . P^k f|)  (the Markov form of the main projective condition)
SeriesReport cond21_series(const FiniteChain& chain, std::size_t kmax = 512);

// sum_n ||E_0(S_n)||_2 / n^{3/2}
SeriesReport mw_series(const FiniteChain& chain, std::size_t nmax = 512);

// sum_n ||E_0(X_n) - E_{-1}(X_n)||_2
SeriesReport hh_series(const FiniteChain& chain, std::size_t nmax = 64);

struct GordinStats {
    double sup_norm = 0.0;                      // max_n pi(|E_0(S_n)|), exact
    std::vector<double> ratio_trace;            // MC estimate of E|S_n|/sqrt(n)
    std::vector<double> ratio_se;
};

GordinStats gordin_l1_stats(const FiniteChain& chain, std::size_t nmax, std::size_t replicas,
                            std::uint64_t seed);

// alpha_Y(k) for k = 1..kmax, exact via matrix powers on threshold events.
// With rosenblatt_zero, a leading alpha(0) = 1 entry is prepended.
std::vector<double> alpha_coeffs(const FiniteChain& chain, std::size_t kmax,
                                 bool rosenblatt_zero = false);

struct BlockDiagnostics {
    std::size_t m = 0, p = 0;
    double c1_stat = 0.0;
    std::pair<double, double> c2_stats{0.0, 0.0};
    std::vector<std::pair<double, double>> c3_stat;  // (eps, statistic)
    std::vector<std::pair<double, double>> c4_stat;
    std::vector<double> c3_se, c4_se;
    double eta_used = 0.0;

    nlohmann::json to_json() const;
};

// C1/C2 exactly (conditional moments by backward recursion, outer expectation
// by enumeration of the p-step skeleton chain), C3/C4 by Monte Carlo.
BlockDiagnostics block_diagnostics_exact(const FiniteChain& chain, std::size_t x0, std::size_t m,
                                         std::size_t p, const std::vector<double>& eps_grid,
                                         std::size_t replicas, std::uint64_t seed);

// both sides of the conditional maximal inequality by exhaustive path
// enumeration from x0 over n steps
std::pair<double, double> max_inequality_bruteforce(const FiniteChain& chain, std::size_t x0,
                                                    std::size_t n, double lambda);

struct ErgodicReport {
    std::vector<double> average_trace;  // (1/n) sum_{i<=n} (P^i z)(x0), exact
    double pi_z = 0.0;
    std::vector<double> max_trace;      // (1/n) E_0 max_{i<=n} |z(xi_i)|, MC
    std::vector<double> max_trace_se;
    bool max_trace_decreasing = false;
};

ErgodicReport ergodic_checks(const FiniteChain& chain, std::size_t x0,
                             const std::vector<double>& z, std::size_t nmax,
                             std::size_t replicas, std::uint64_t seed);

struct ChainPath {
    std::vector<std::size_t> states;  // xi_1 .. xi_n
    std::vector<double> x;            // X_i = f(xi_i)
};

ChainPath sample_path(const FiniteChain& chain, std::size_t x0, std::size_t n, std::uint64_t seed);

}  // namespace qlab::chain
