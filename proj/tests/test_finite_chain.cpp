#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quenchlab/finite_chain.hpp"

using namespace qlab;
using namespace qlab::chain;

namespace {

FiniteChain symmetric_two_state() {
    return FiniteChain({{0.75, 0.25}, {0.25, 0.75}}, {1.0, -1.0});
}

FiniteChain iid_rademacher() {
    return FiniteChain({{0.5, 0.5}, {0.5, 0.5}}, {1.0, -1.0});
}

FiniteChain random_chain(Rng& rng, std::size_t n) {
    std::vector<std::vector<double>> kernel(n, std::vector<double>(n));
    std::vector<double> f(n);
    for (std::size_t x = 0; x < n; ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            kernel[x][y] = 0.05 + rng.uniform();
            s += kernel[x][y];
        }
        for (std::size_t y = 0; y < n; ++y) kernel[x][y] /= s;
        f[x] = 2.0 * (rng.uniform() - 0.5);
    }
    return FiniteChain(std::move(kernel), std::move(f));
}

}  // namespace

TEST_CASE("stationary law basic cases") {
    const auto pi = stationary({{0.75, 0.25}, {0.25, 0.75}});
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-10));

    const auto pi3 = stationary({{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}});
    for (double v : pi3) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-10));

    CHECK_THROWS(stationary({{1.0, 0.0}, {0.5, 0.5}}));  // absorbing state
}

TEST_CASE("construction centers the observable") {
    FiniteChain c({{0.75, 0.25}, {0.25, 0.75}}, {3.0, 1.0});
    double m = 0.0;
    for (std::size_t x = 0; x < 2; ++x) m += c.pi()[x] * c.f()[x];
    CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("long-run variance of the symmetric two-state chain") {
    const auto res = eta_exact(symmetric_two_state());
    CHECK(res.eta == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(res.report.verdict == SeriesVerdict::ConvergentCertified);
}

TEST_CASE("long-run variance degenerate cases") {
    CHECK(eta_exact(iid_rademacher()).eta == doctest::Approx(1.0).epsilon(1e-12));
    FiniteChain zero({{0.75, 0.25}, {0.25, 0.75}}, {0.0, 0.0});
    CHECK(eta_exact(zero).eta == doctest::Approx(0.0));
    FiniteChain periodic({{0.0, 1.0}, {1.0, 0.0}}, {1.0, -1.0});
    CHECK_THROWS(eta_exact(periodic));
}

TEST_CASE("projective series on the symmetric two-state chain") {
    const auto chain = symmetric_two_state();

    const auto c21 = cond21_series(chain);
    CHECK(c21.terms[0] == doctest::Approx(1.0));
    CHECK(c21.terms[3] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(c21.total() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(c21.verdict == SeriesVerdict::ConvergentCertified);

    const auto mw = mw_series(chain, 64);
    CHECK(mw.terms[0] == doctest::Approx(0.5));  // (1 - 2^-1) / 1
    CHECK(mw.terms[3] == doctest::Approx((1.0 - 0.0625) / 8.0).epsilon(1e-12));

    const auto hh = hh_series(chain);
    CHECK(hh.terms[0] == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
    CHECK(hh.total() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
}

TEST_CASE("projective series degenerate cases") {
    const auto iid = iid_rademacher();
    CHECK(cond21_series(iid).total() == doctest::Approx(1.0));  // k = 0 term only
    CHECK(mw_series(iid, 32).total() == doctest::Approx(0.0));
    const auto hh = hh_series(iid);
    CHECK(hh.terms[0] == doctest::Approx(1.0));
    CHECK(hh.total() == doctest::Approx(1.0));
}

TEST_CASE("squared martingale-difference terms telescope the variance") {
    Rng rng(99, 0);
    for (int rep = 0; rep < 10; ++rep) {
        auto chain = random_chain(rng, 2 + rng.below(4));
        const std::size_t N = 40;
        const auto hh = hh_series(chain, N);
        double sq = 0.0;
        for (double t : hh.terms) sq += t * t;
        std::vector<double> v = chain.f();
        for (std::size_t j = 0; j <= N + 1; ++j) v = chain.apply(v);
        const double tail_norm = chain.pi_norm2(v);
        const double f2 = chain.pi_norm2(chain.f());
        CHECK(sq == doctest::Approx(f2 * f2 - tail_norm * tail_norm).epsilon(1e-10));
    }
}

TEST_CASE("covariance series is dominated termwise by the absolute series") {
    Rng rng(123, 0);
    for (int rep = 0; rep < 10; ++rep) {
        auto chain = random_chain(rng, 2 + rng.below(4));
        const auto eta = eta_exact(chain, 64);
        const auto c21 = cond21_series(chain, 64);
        const std::size_t k = std::min(eta.report.terms.size(), c21.terms.size());
        for (std::size_t j = 1; j < k; ++j)
            CHECK(std::abs(eta.report.terms[j]) <= 2.0 * c21.terms[j] + 1e-14);
    }
}

TEST_CASE("scaling the observable scales the criteria as expected") {
    Rng rng(4242, 0);
    auto base = random_chain(rng, 3);
    const double c = 2.5;
    std::vector<double> scaled_f = base.f();
    for (double& v : scaled_f) v *= c;
    FiniteChain scaled(base.kernel(), scaled_f);

    CHECK(eta_exact(scaled).eta == doctest::Approx(c * c * eta_exact(base).eta).epsilon(1e-9));
    CHECK(cond21_series(scaled).total() ==
          doctest::Approx(c * c * cond21_series(base).total()).epsilon(1e-9));
    const auto a1 = alpha_coeffs(base, 10);
    const auto a2 = alpha_coeffs(scaled, 10);
    for (std::size_t k = 0; k < a1.size(); ++k) CHECK(a1[k] == doctest::Approx(a2[k]));
}

TEST_CASE("alpha coefficients of the symmetric two-state chain") {
    const auto a = alpha_coeffs(symmetric_two_state(), 20);
    for (std::size_t k = 1; k <= 20; ++k)
        CHECK(a[k - 1] == doctest::Approx(std::ldexp(1.0, -static_cast<int>(k) - 1))
                              .epsilon(1e-12));
    const auto with_zero = alpha_coeffs(symmetric_two_state(), 3, true);
    CHECK(with_zero[0] == doctest::Approx(1.0));
    CHECK(with_zero[1] == doctest::Approx(0.25));

    const auto iid = alpha_coeffs(iid_rademacher(), 5);
    for (double v : iid) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("gordin statistics on the symmetric two-state chain") {
    const auto g = gordin_l1_stats(symmetric_two_state(), 32, 4000, 11);
    CHECK(g.sup_norm == doctest::Approx(1.0 - std::ldexp(1.0, -32)).epsilon(1e-12));
    // E|S_n|/sqrt(n) should hover near sqrt(2 eta / pi) for large n
    const double expected = std::sqrt(2.0 * 3.0 / M_PI);
    CHECK(g.ratio_trace.back() == doctest::Approx(expected).epsilon(0.15));
    CHECK(g.ratio_se.back() < 0.05);

    const auto z = gordin_l1_stats(iid_rademacher(), 8, 100, 3);
    CHECK(z.sup_norm == doctest::Approx(0.0));
}

TEST_CASE("block diagnostics on the i.i.d. control chain") {
    const auto d = block_diagnostics_exact(iid_rademacher(), 0, 4, 8, {0.1}, 2000, 5);
    CHECK(d.c1_stat == doctest::Approx(0.0));
    CHECK(d.eta_used == doctest::Approx(1.0));
    CHECK(d.c2_stats.first == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("block conditioning statistic decays with the block length") {
    const auto chain = symmetric_two_state();
    double prev = -1.0;
    for (std::size_t p : {8, 16, 32, 64}) {
        const auto d = block_diagnostics_exact(chain, 0, 4, p, {0.5}, 50, 5);
        if (prev >= 0.0) CHECK(d.c1_stat < 0.9 * prev);
        prev = d.c1_stat;
    }
    const auto big = block_diagnostics_exact(chain, 0, 8, 64, {0.5}, 50, 5);
    CHECK(big.c1_stat < 1e-10);
}

TEST_CASE("maximal inequality holds on random three-state chains") {
    Rng rng(777, 0);
    for (int rep = 0; rep < 100; ++rep) {
        auto chain = random_chain(rng, 3);
        for (double lambda : {0.0, 0.5}) {
            const auto [lhs, rhs] = max_inequality_bruteforce(chain, rng.below(3), 6, lambda);
            CHECK(lhs <= rhs + 1e-10);
        }
    }
}

TEST_CASE("maximal inequality degenerate cases") {
    FiniteChain zero({{0.75, 0.25}, {0.25, 0.75}}, {0.0, 0.0});
    const auto [l0, r0] = max_inequality_bruteforce(zero, 0, 5, 0.0);
    CHECK(l0 == doctest::Approx(0.0));
    CHECK(r0 == doctest::Approx(0.0));

    const auto [l1, r1] = max_inequality_bruteforce(symmetric_two_state(), 0, 5, 100.0);
    CHECK(l1 == doctest::Approx(0.0));
    CHECK(r1 >= 0.0);

    Rng rng(1, 0);
    CHECK_THROWS(max_inequality_bruteforce(random_chain(rng, 30), 0, 10, 0.0));
}

TEST_CASE("ergodic averages converge to the stationary mean") {
    const auto chain = symmetric_two_state();
    const auto rep = ergodic_checks(chain, 0, chain.f(), 64, 500, 17);
    CHECK(rep.pi_z == doctest::Approx(0.0));
    // exact geometric sum: (1/n) sum 2^-i f(x0)
    CHECK(rep.average_trace[0] == doctest::Approx(0.5));
    CHECK(std::abs(rep.average_trace.back()) < 0.02);
    CHECK(rep.max_trace_decreasing);
    CHECK(rep.max_trace.back() <= 1.0 / 64 + 1e-12);

    std::vector<double> constant{2.0, 2.0};
    const auto rc = ergodic_checks(chain, 1, constant, 16, 10, 1);
    for (double v : rc.average_trace) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("sampled paths are reproducible and mix") {
    const auto chain = symmetric_two_state();
    const auto a = sample_path(chain, 0, 1000, 42);
    const auto b = sample_path(chain, 0, 1000, 42);
    CHECK(a.states == b.states);
    const auto c = sample_path(chain, 0, 1000, 43);
    CHECK(a.states != c.states);

    const auto occ = sample_path(chain, 0, 1000000, 2024);
    double frac0 = 0.0;
    for (std::size_t s : occ.states) frac0 += s == 0 ? 1.0 : 0.0;
    frac0 /= static_cast<double>(occ.states.size());
    CHECK(frac0 == doctest::Approx(0.5).epsilon(0.004));
}

TEST_CASE("variance estimate agrees with a stationary Monte Carlo run") {
    const auto chain = symmetric_two_state();
    const double eta = eta_exact(chain).eta;
    const std::size_t n = 1024, R = 4000;
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        Rng rng(314159, r);
        std::size_t state = rng.bernoulli(0.5) ? 1 : 0;  // stationary start
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            state = chain.sample_step(state, rng);
            s += chain.f()[state];
        }
        const double v = s * s / static_cast<double>(n);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / R;
    const double se = std::sqrt(std::max(0.0, sq / R - mean * mean) / R);
    CHECK(std::abs(mean - eta) < 3.0 * se);
}

TEST_CASE("chain round-trips through json") {
    const auto chain = symmetric_two_state();
    const auto back = FiniteChain::from_json(chain.to_json());
    CHECK(back.kernel() == chain.kernel());
    CHECK(back.f() == chain.f());
    CHECK(eta_exact(back).eta == doctest::Approx(3.0).epsilon(1e-10));
}
