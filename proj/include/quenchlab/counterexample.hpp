#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "quenchlab/rng.hpp"
#include "quenchlab/series.hpp"

namespace qlab::cex {

// Level parameters of the construction: N_k = 4^k, rho_k = 4^-k,
// theta_k = 1/(k 2^k), eps_k = 1/(k^2 4^{3k}), for k = 1..K.
struct Params {
    std::size_t K = 0;
    std::vector<std::uint64_t> N;
    std::vector<double> rho, theta, eps;

    nlohmann::json to_json() const;
};

Params params(std::size_t K);  // 1 <= K <= 12

// The four series that decide the projective criteria for this process.
// Each term simplifies exactly: the main-condition proxy to 1/k^2
// (convergent, certified tail 1/K), the L1 and martingale-difference proxies
// to 1/k and 1/l (harmonic divergence), and the remaining one to
// n^{-3/2} sqrt(sum_{2 N_k <= n} 4^k/k^2), which grows like n/(ln n)^2
// inside the square root.
SeriesReport series_cond21(std::size_t K);
SeriesReport series_gordin_lowerbound(std::size_t K);   // K >= 2
SeriesReport series_mw_lowerbound(std::size_t n_max);   // n_max >= 8

struct HhSeries {
    SeriesReport report;
    double prefactor = 0.0;  // sqrt(2)/sqrt(3), carried by the exact lower bound
};

HhSeries series_hh_lowerbound(std::size_t L);

// Per-level verification of the realized sets A_k
struct LevelCheck {
    std::size_t k = 0;
    double mu_A = 0.0;            // exact product-measure value
    double mu_lower = 0.0;        // 2 rho_k / 3
    double mu_upper = 0.0;        // rho_k
    double symdiff_max = 0.0;     // exact max over step differences <= 2 N_k
    double eps_allowed = 0.0;     // eps_k
};

// Concrete realization: a Rademacher shift times K circle rotations with one
// tiny common angle; B_k is an arc of length rho_k at a random phase and
// A_k = {coord k in B_k, coord j outside B_j for j < k}.
struct RealizedSystem {
    Params par;
    double alpha = 0.0;           // common rotation angle
    std::vector<double> phases;   // arc start per level
    std::uint64_t seed = 0;
    std::vector<LevelCheck> checks;
    bool properties_hold = false;

    // is the i-step backward shift of the point with the given circle
    // coordinates inside A_k?
    bool in_shifted_A(std::size_t k, std::uint64_t steps,
                      const std::vector<double>& coords) const;

    nlohmann::json to_json() const;
};

RealizedSystem realize(std::size_t K, std::uint64_t seed);  // K <= 8

struct ConditionalNormTrace {
    std::vector<std::uint64_t> n_grid;
    std::vector<double> norm_estimate;  // mean of |E_0(S_n)| over realizations
    std::vector<double> se;
};

// Monte Carlo over realizations of the closed-form conditional expectation
// E_0(S_n); n_grid must be a subset of {N_1, ..., N_K}
ConditionalNormTrace empirical_conditional_norms(const RealizedSystem& system,
                                                 const std::vector<std::uint64_t>& n_grid,
                                                 std::size_t replicas, std::uint64_t seed);

}  // namespace qlab::cex
