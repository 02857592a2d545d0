// Acceptance harness: runs every numbered acceptance criterion and prints one
// PASS/FAIL line per criterion. Exit code is the number of failed criteria.
// Usage: acceptance [--only N]
#include <cmath>
#include <cstring>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "quenchlab/counterexample.hpp"
#include "quenchlab/finite_chain.hpp"
#include "quenchlab/intermittent.hpp"
#include "quenchlab/probkit.hpp"
#include "quenchlab/quenched_mc.hpp"

using namespace qlab;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << id << "  " << what << "  [" << detail
              << "]" << std::endl;
    if (!ok) ++failures;
}

chain::FiniteChain demo_chain() {
    return chain::FiniteChain({{0.75, 0.25}, {0.25, 0.75}}, {1.0, -1.0});
}

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// 1. exact spectral oracles for the symmetric two-state chain
void criterion1() {
    const auto ch = demo_chain();
    const double eta = chain::eta_exact(ch).eta;
    const double c21 = chain::cond21_series(ch).total();
    const double hh = chain::hh_series(ch).total();
    const auto alphas = chain::alpha_coeffs(ch, 20);
    bool alpha_ok = true;
    for (std::size_t k = 1; k <= 20; ++k)
        alpha_ok = alpha_ok && std::abs(alphas[k - 1] - std::ldexp(1.0, -static_cast<int>(k) - 1)) < 1e-12;
    const bool ok = std::abs(eta - 3.0) < 1e-10 && std::abs(c21 - 2.0) < 1e-10 &&
                    std::abs(hh - std::sqrt(3.0)) < 1e-8 && alpha_ok;
    std::ostringstream d;
    d << "eta=" << eta << " cond21=" << c21 << " hh=" << hh
      << " alpha(k)=2^-(k+1) " << (alpha_ok ? "exact" : "violated");
    report(1, ok, "exact two-state chain oracles", d.str());
}

// 2. quenched CLT for the chain from both fixed starts
void criterion2() {
    const auto ch = demo_chain();
    const mc::ChainSampler sampler(ch);
    bool ok = true;
    std::ostringstream d;
    for (std::size_t start : {0u, 1u}) {
        const auto ens = mc::run_replicas(sampler, static_cast<double>(start), 4096, 20000, 2026);
        const auto rep = mc::quenched_clt_report(ens, 3.0);
        ok = ok && rep.ks < 0.02;
        d << "start " << start << ": ks=" << rep.ks << " ";
    }
    d << "(gate 0.02)";
    report(2, ok, "quenched CLT, finite chain, n=4096 R=20000", d.str());
}

// 3. discretized transfer operator: duality residuals and density exponent
void criterion3() {
    const auto coarse = pm::ulam_build(0.25, 8192, 2.0);
    const auto fine = pm::ulam_build(0.25, 16384, 2.0);
    double r8 = 0.0, r16 = 0.0;
    for (const auto& [name, r] : coarse.duality_residuals()) r8 = std::max(r8, r);
    for (const auto& [name, r] : fine.duality_residuals()) r16 = std::max(r16, r);
    std::vector<double> xs, ys;
    const auto& edges = coarse.edges();
    const auto& dens = coarse.density();
    for (std::size_t i = 1; i + 1 < dens.size(); ++i) {
        const double mid = 0.5 * (edges[i] + edges[i + 1]);
        if (mid > 1e-4 && mid < 1e-2 && dens[i] > 0.0) {
            xs.push_back(std::log(mid));
            ys.push_back(std::log(dens[i]));
        }
    }
    const double slope = ls_slope(xs, ys);
    const bool ok = r8 < 1e-3 && r16 <= 0.7 * r8 && std::abs(slope + 0.25) < 0.1;
    std::ostringstream d;
    d << "residual(8192)=" << r8 << " residual(16384)=" << r16 << " density slope=" << slope
      << " (target -0.25 +/- 0.1)";
    report(3, ok, "transfer-operator duality and density exponent", d.str());
}

// 4. dependence-coefficient decay exponent. The coefficients approach their
// k^-3 power law from below (k^3 alpha(k) still rises until k ~ 64), so the
// fit window starts past the transient; the measured exponent is insensitive
// to the grid size and to the threshold count there.
void criterion4() {
    const auto model = pm::ulam_build(0.25, 8192, 2.0);
    const auto alphas = pm::alpha_coeffs_ulam(model, 128);
    std::vector<double> xs, ys;
    for (std::size_t k = 8; k <= 128; ++k)
        if (alphas[k - 1] > 0.0) {
            xs.push_back(std::log(static_cast<double>(k)));
            ys.push_back(std::log(alphas[k - 1]));
        }
    const double slope = ls_slope(xs, ys);
    const bool ok = std::abs(slope + 3.0) < 0.6;
    std::ostringstream d;
    d << "loglog slope over k in [8,128] = " << slope << " (target -3 +/- 0.6)";
    report(4, ok, "mixing-rate exponent, gamma=1/4", d.str());
}

// 5. quenched FCLT for the intermittent map: marginals, fidis, tightness
void criterion5() {
    const auto model = pm::ulam_build(0.25, 8192, 2.0);
    const auto obs = pm::ObservableSpec::bv_indicator(0.5);
    const mc::UlamSampler sampler(model, obs);
    const double eta = pm::eta_ulam(model, obs).eta;
    mc::EnsembleSpec spec;
    spec.fidis_times = {0.25, 0.5, 0.75, 1.0};
    spec.modulus_m = {4, 64};
    bool ok = true;
    std::ostringstream d;
    d << "eta=" << eta << "; ";
    for (double x0 : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto ens = mc::run_replicas(sampler, x0, 1 << 14, 10000, 55, spec);
        const auto clt = mc::quenched_clt_report(ens, eta);
        const auto fid = mc::fidis_report(ens, {1.0, 1.0, 1.0, 1.0}, eta);
        const auto tight = mc::tightness_report(ens);
        const bool here = clt.ks < 0.03 && fid.max_offdiag_corr < 0.05 &&
                          tight.q95.back() < tight.q95.front();
        ok = ok && here;
        d << "x0=" << x0 << ": ks=" << clt.ks << " rho=" << fid.max_offdiag_corr
          << " q95(64)<q95(4)=" << (tight.q95.back() < tight.q95.front() ? "y" : "n") << "; ";
    }
    report(5, ok, "quenched FCLT, intermittent map, 5 starts", d.str());
}

// 6. blocking-condition trends plus the i.i.d. control
void criterion6() {
    const auto model = pm::ulam_build(0.25, 8192, 2.0);
    const auto obs = pm::ObservableSpec::bv_indicator(0.5);
    const mc::UlamSampler sampler(model, obs);
    const double eta = pm::eta_ulam(model, obs).eta;
    const std::vector<double> eps_grid{0.1};
    const auto d64 = mc::block_diagnostics_mc(sampler, sampler, 0.3, 8, 64, eps_grid, 4000, 77, eta);
    const auto d256 =
        mc::block_diagnostics_mc(sampler, sampler, 0.3, 8, 256, eps_grid, 4000, 78, eta);
    const bool c1_halves = d256.base.c1_stat <= 0.5 * d64.base.c1_stat;
    const bool c2_small = d256.base.c2_stats.first < 0.1;

    // i.i.d. Rademacher rows: every state leads to the same product law
    const chain::FiniteChain iid({{0.5, 0.5}, {0.5, 0.5}}, {1.0, -1.0});
    const mc::ChainSampler iid_sampler(iid);
    const auto di = mc::block_diagnostics_mc(iid_sampler, iid_sampler, 0.0, 8, 64, eps_grid, 4000,
                                             79, 1.0);
    const bool iid_ok = std::abs(di.base.c1_stat) <= 3.0 * di.c1_se + 1e-12;
    const bool ok = c1_halves && c2_small && iid_ok;
    std::ostringstream d;
    d << "C1(p=64)=" << d64.base.c1_stat << " C1(p=256)=" << d256.base.c1_stat
      << " C2first(8,256)=" << d256.base.c2_stats.first << " iid C1=" << di.base.c1_stat
      << " (se " << di.c1_se << ")";
    report(6, ok, "block diagnostics trend and i.i.d. control", d.str());
}

// 7. divergence-witness series, exact arithmetic
void criterion7() {
    const auto s21 = cex::series_cond21(100);
    bool terms_ok = true;
    for (std::size_t k = 1; k <= 100; ++k)
        terms_ok = terms_ok &&
                   s21.terms[k - 1] == 1.0 / (static_cast<double>(k) * static_cast<double>(k));
    const double target = std::numbers::pi * std::numbers::pi / 6.0;
    const auto s23 = cex::series_gordin_lowerbound(50);
    const auto s53 = cex::series_hh_lowerbound(50);
    for (std::size_t k = 1; k < 50; ++k) {
        terms_ok = terms_ok && s23.terms[k - 1] == 1.0 / static_cast<double>(k);
        terms_ok = terms_ok && s53.report.terms[k - 1] == 1.0 / static_cast<double>(k);
    }
    const auto s52 = cex::series_mw_lowerbound(4096);
    const double hi = s52.partial_sums[4095] - s52.partial_sums[2047];
    const double lo = s52.partial_sums[2047] - s52.partial_sums[1023];
    const bool verdicts = s21.verdict == SeriesVerdict::ConvergentCertified &&
                          s23.verdict == SeriesVerdict::DivergentEvidence &&
                          s52.verdict == SeriesVerdict::DivergentEvidence &&
                          s53.report.verdict == SeriesVerdict::DivergentEvidence;
    const bool ok = terms_ok && std::abs(s21.total() - target) < 0.01 && hi > 0.9 * lo && verdicts;
    std::ostringstream d;
    d << "|S100 - pi^2/6|=" << std::abs(s21.total() - target) << " doubling " << hi << " vs 0.9*"
      << lo << " verdicts " << (verdicts ? "as designed" : "WRONG");
    report(7, ok, "divergence-witness series, exact", d.str());
}

// 8. brute-force inequality verification
void criterion8() {
    Rng rng(1234, 0);
    bool max_ok = true;
    for (std::size_t t = 0; t < 100; ++t) {
        std::vector<std::vector<double>> kernel(3, std::vector<double>(3));
        for (auto& row : kernel) {
            double s = 0;
            for (auto& v : row) {
                v = 0.05 + rng.uniform();
                s += v;
            }
            for (auto& v : row) v /= s;
        }
        std::vector<double> fv(3);
        for (auto& v : fv) v = 2.0 * rng.uniform() - 1.0;
        const chain::FiniteChain ch(kernel, fv);
        for (double lambda : {0.0, 0.5}) {
            const auto [lhs, rhs] = chain::max_inequality_bruteforce(ch, t % 3, 6, lambda);
            max_ok = max_ok && lhs <= rhs + 1e-10;
        }
    }
    bool trunc_ok = true;
    for (std::size_t t = 0; t < 1000; ++t) {
        const std::size_t na = 2 + (rng.next_u64() % 7);
        probkit::FiniteProbSpace space;
        space.probs.resize(na);
        space.xvals.resize(na);
        double s = 0;
        for (std::size_t a = 0; a < na; ++a) {
            space.probs[a] = 0.05 + rng.uniform();
            s += space.probs[a];
            space.xvals[a] = 4.0 * rng.uniform() - 2.0;
        }
        for (auto& p : space.probs) p /= s;
        const std::size_t nblocks = 1 + (rng.next_u64() % na);
        space.partition.assign(nblocks, {});
        for (std::size_t a = 0; a < na; ++a) space.partition[a % nblocks].push_back(a);
        trunc_ok = trunc_ok &&
                   probkit::check_truncation_inequalities(space, 1.0 + 2.0 * rng.uniform(),
                                                          0.1 + 2.0 * rng.uniform())
                       .all_hold;
    }
    report(8, max_ok && trunc_ok, "maximal and truncation inequalities, brute force",
           std::string("maximal: ") + (max_ok ? "all hold" : "violated") +
               ", truncation: " + (trunc_ok ? "all hold" : "violated"));
}

// 9. borderline variance growth (slow)
void criterion9() {
    const auto model = pm::ulam_build(0.25, 8192, 2.0);
    auto obs = pm::ObservableSpec::power_log(0.25, 0.0);
    const mc::UlamSampler sampler(model, obs);
    const std::vector<std::size_t> grid{1 << 10, 1 << 11, 1 << 12, 1 << 13,
                                        1 << 14, 1 << 15, 1 << 16};
    const auto scan = mc::variance_growth_scan(sampler, 0.3, grid, 2000, 321);
    const bool ok = scan.slope_vs_log_n > 0.0 && scan.r_squared > 0.8;
    std::ostringstream d;
    d << "slope=" << scan.slope_vs_log_n << " R^2=" << scan.r_squared
      << " (need slope>0, R^2>0.8)";
    report(9, ok, "borderline observable: Var(S_n)/n grows with ln n", d.str());
}

// 10. bit-reproducibility of representative ensembles
void criterion10() {
    const auto ch = demo_chain();
    const mc::ChainSampler cs(ch);
    const auto e1 = mc::run_replicas(cs, 0.0, 1024, 500, 99);
    const auto e2 = mc::run_replicas(cs, 0.0, 1024, 500, 99);
    bool ok = e1.sn_scaled == e2.sn_scaled;

    const auto model = pm::ulam_build(0.25, 1024, 2.0);
    const auto obs = pm::ObservableSpec::bv_indicator(0.5);
    const mc::UlamSampler us(model, obs);
    mc::EnsembleSpec spec;
    spec.fidis_times = {0.5, 1.0};
    spec.modulus_m = {4, 16};
    const auto u1 = mc::run_replicas(us, 0.3, 512, 400, 7, spec);
    const auto u2 = mc::run_replicas(us, 0.3, 512, 400, 7, spec);
    ok = ok && u1.sn_scaled == u2.sn_scaled && u1.fidis_values == u2.fidis_values &&
         u1.moduli == u2.moduli;

    const auto sys1 = cex::realize(5, 31);
    const auto sys2 = cex::realize(5, 31);
    const auto t1 = cex::empirical_conditional_norms(sys1, {1024}, 300, 8);
    const auto t2 = cex::empirical_conditional_norms(sys2, {1024}, 300, 8);
    ok = ok && sys1.phases == sys2.phases && t1.norm_estimate == t2.norm_estimate;
    report(10, ok, "bit-reproducibility under fixed seeds",
           ok ? "all replicated ensembles identical" : "mismatch detected");
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0) only = std::atoi(argv[i + 1]);

    using Fn = void (*)();
    const Fn crits[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                        criterion6, criterion7, criterion8, criterion9, criterion10};
    for (int id = 1; id <= 10; ++id)
        if (only == 0 || only == id) crits[id - 1]();
    if (failures == 0) std::cout << "acceptance: all criteria passed" << std::endl;
    return failures;
}
