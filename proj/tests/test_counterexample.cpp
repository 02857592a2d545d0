#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "quenchlab/counterexample.hpp"

using namespace qlab;
using namespace qlab::cex;

TEST_CASE("level parameters take their exact values") {
    const Params p = params(4);
    CHECK(p.K == 4);
    CHECK(p.N[0] == 4);
    CHECK(p.rho[0] == 0.25);
    CHECK(p.theta[0] == 0.5);
    CHECK(p.eps[0] == 1.0 / 64.0);
    CHECK(p.N[1] == 16);
    CHECK(p.rho[1] == 1.0 / 16.0);
    CHECK(p.theta[1] == 1.0 / 8.0);
    CHECK(p.eps[1] == 1.0 / 16384.0);
    CHECK(p.N[3] == 256);
    CHECK_THROWS_AS(params(0), std::invalid_argument);
    CHECK_THROWS_AS(params(13), std::invalid_argument);
}

TEST_CASE("parameter identities behind the four series hold exactly") {
    const Params p = params(12);
    for (std::size_t k = 1; k <= 12; ++k) {
        const double N = static_cast<double>(p.N[k - 1]);
        const double fk = static_cast<double>(k);
        CHECK(p.theta[k - 1] * p.theta[k - 1] * N * N * p.rho[k - 1] ==
              doctest::Approx(1.0 / (fk * fk)).epsilon(1e-14));
        CHECK(p.theta[k - 1] * p.rho[k - 1] * N * std::sqrt(N) ==
              doctest::Approx(1.0 / fk).epsilon(1e-14));
        CHECK(std::ldexp(1.0, 2 * static_cast<int>(k)) * p.theta[k - 1] * std::sqrt(p.rho[k - 1]) ==
              doctest::Approx(1.0 / fk).epsilon(1e-14));
    }
}

TEST_CASE("projective-criterion series converges with a certified tail") {
    const SeriesReport r = series_cond21(100);
    CHECK(r.terms[0] == 1.0);
    CHECK(r.terms[1] == 0.25);
    CHECK(r.terms[2] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(r.verdict == SeriesVerdict::ConvergentCertified);
    CHECK(r.tail_bound.has_value());
    CHECK(*r.tail_bound == doctest::Approx(0.01));
    const double target = std::numbers::pi * std::numbers::pi / 6.0;
    CHECK(std::abs(r.total() - target) < 0.01);
    CHECK(r.condition_tag == "2.1");
    CHECK(series_cond21(1).total() == 1.0);
}

TEST_CASE("martingale-coboundary series is harmonic and flagged divergent") {
    const SeriesReport r = series_gordin_lowerbound(50);
    REQUIRE(r.terms.size() == 49);
    CHECK(r.terms[0] == 1.0);
    CHECK(r.terms[1] == 0.5);
    CHECK(r.terms[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r.verdict == SeriesVerdict::DivergentEvidence);
    CHECK(r.total() >= std::log(50.0) - 1.0);
    CHECK(r.condition_tag == "2.3");
    CHECK(series_gordin_lowerbound(2).total() == 1.0);
    CHECK_THROWS_AS(series_gordin_lowerbound(1), std::invalid_argument);

    // harmonic block bound: S_{2K} - S_K >= 1/2 for every K
    const SeriesReport big = series_gordin_lowerbound(81);
    for (std::size_t K : {5u, 10u, 20u, 40u})
        CHECK(big.partial_sums[2 * K - 1] - big.partial_sums[K - 1] >= 0.5);
}

TEST_CASE("maximal-term series has the exact inner sums and keeps growing") {
    const SeriesReport r = series_mw_lowerbound(4096);
    CHECK(r.terms[6] == 0.0);  // no level active before n = 8
    CHECK(r.terms[7] == doctest::Approx(2.0 / std::pow(8.0, 1.5)).epsilon(1e-14));
    CHECK(r.terms[30] == doctest::Approx(2.0 / std::pow(31.0, 1.5)).epsilon(1e-14));
    CHECK(r.terms[31] == doctest::Approx(std::sqrt(8.0) / std::pow(32.0, 1.5)).epsilon(1e-14));
    CHECK(r.verdict == SeriesVerdict::DivergentEvidence);
    CHECK(r.condition_tag == "5.2");
    const double gap_hi = r.partial_sums[4095] - r.partial_sums[2047];
    const double gap_lo = r.partial_sums[2047] - r.partial_sums[1023];
    CHECK(gap_hi > 0.9 * gap_lo);
    CHECK_THROWS_AS(series_mw_lowerbound(4), std::invalid_argument);
}

TEST_CASE("orthogonal-increment series is harmonic with the recorded prefactor") {
    const HhSeries h = series_hh_lowerbound(30);
    CHECK(h.report.terms[0] == 1.0);
    CHECK(h.report.terms[1] == 0.5);
    CHECK(h.report.terms[4] == 0.2);
    CHECK(h.report.verdict == SeriesVerdict::DivergentEvidence);
    CHECK(h.report.condition_tag == "5.3");
    CHECK(h.prefactor == doctest::Approx(0.816496580927726).epsilon(1e-12));
    CHECK(series_hh_lowerbound(1).report.total() == 1.0);
}

TEST_CASE("realized system satisfies both set properties with slack") {
    const RealizedSystem sys = realize(6, 99);
    CHECK(sys.properties_hold);
    REQUIRE(sys.checks.size() == 6);
    CHECK(sys.checks[0].mu_A == doctest::Approx(0.25).epsilon(1e-15));
    for (const auto& c : sys.checks) {
        CHECK(c.mu_A >= c.mu_lower);
        CHECK(c.mu_A <= c.mu_upper);
        CHECK(c.symdiff_max <= 0.5 * c.eps_allowed);
        CHECK(c.symdiff_max >= 0.0);
    }
    // common angle also satisfies every per-level speed limit eps_k/(4 N_k)
    for (std::size_t k = 1; k <= 6; ++k)
        CHECK(sys.alpha <= sys.par.eps[k - 1] / (4.0 * static_cast<double>(sys.par.N[k - 1])));
    CHECK_THROWS_AS(realize(9, 1), std::invalid_argument);

    const RealizedSystem again = realize(6, 99);
    CHECK(again.phases == sys.phases);
}

TEST_CASE("carved-out sets are pairwise disjoint and have the right mass") {
    const RealizedSystem sys = realize(4, 7);
    Rng rng(11, 0);
    std::vector<double> coords(4);
    std::size_t hits1 = 0;
    const std::size_t draws = 200000;
    for (std::size_t t = 0; t < draws; ++t) {
        for (auto& c : coords) c = rng.uniform();
        int members = 0;
        for (std::size_t k = 1; k <= 4; ++k)
            if (sys.in_shifted_A(k, t % 1024, coords)) ++members;
        REQUIRE(members <= 1);
        if (sys.in_shifted_A(1, 0, coords)) ++hits1;
    }
    const double est = static_cast<double>(hits1) / static_cast<double>(draws);
    const double se = std::sqrt(0.25 * 0.75 / static_cast<double>(draws));
    CHECK(std::abs(est - 0.25) < 4.0 * se);
}

TEST_CASE("conditional norm estimates are deterministic and bounded at level one") {
    const RealizedSystem sys = realize(1, 3);
    const auto tr = empirical_conditional_norms(sys, {4}, 500, 21);
    const auto tr2 = empirical_conditional_norms(sys, {4}, 500, 21);
    REQUIRE(tr.norm_estimate.size() == 1);
    CHECK(tr.norm_estimate[0] == tr2.norm_estimate[0]);
    // with one level at most 4 window terms of size theta_1 = 1/2 per step
    CHECK(tr.norm_estimate[0] <= 2.0 * 4.0);
    CHECK(tr.se[0] > 0.0);
    CHECK_THROWS_AS(empirical_conditional_norms(sys, {5}, 500, 21), std::invalid_argument);
    CHECK_THROWS_AS(empirical_conditional_norms(sys, {}, 500, 21), std::invalid_argument);
}

TEST_CASE("conditional norms at the top scale grow with the number of levels") {
    double prev = -1.0, prev_se = 0.0;
    for (std::size_t K : {3u, 4u, 5u}) {
        const RealizedSystem sys = realize(K, 17);
        const std::uint64_t top = sys.par.N[K - 1];
        const auto tr = empirical_conditional_norms(sys, {top}, 40000, 5);
        if (prev >= 0.0) CHECK(tr.norm_estimate[0] - prev > 2.0 * (tr.se[0] + prev_se));
        prev = tr.norm_estimate[0];
        prev_se = tr.se[0];
    }
}

TEST_CASE("report serialization carries the verification summary") {
    const RealizedSystem sys = realize(3, 42);
    const auto j = sys.to_json();
    CHECK(j["properties_hold"].get<bool>());
    CHECK(j["levels"].size() == 3);
    CHECK(j["params"]["N"][2].get<std::uint64_t>() == 64);
    CHECK(j["seed"].get<std::uint64_t>() == 42);
    const auto js = to_json(series_cond21(10));
    CHECK(js["paper_condition"] == "2.1");
    CHECK(js["verdict"] == "convergent-certified");
}
