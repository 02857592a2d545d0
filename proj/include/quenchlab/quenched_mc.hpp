#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quenchlab/finite_chain.hpp"
#include "quenchlab/intermittent.hpp"
#include "quenchlab/rng.hpp"
#include "quenchlab/series.hpp"

namespace qlab::mc {

// One-step trajectory sampler. The state is carried as a double: a cell/state
// index for finite chains, a point of [0,1] for the backward map chain, the
// last increment for i.i.d. samplers.
class StepSampler {
  public:
    virtual ~StepSampler() = default;
    virtual double step(double state, Rng& rng) const = 0;
    virtual double observe(double state) const = 0;
    virtual std::string describe() const = 0;
};

// Exact conditional-expectation backend: lets block diagnostics evaluate
// inner conditional moments as functions of the conditioning state instead
// of nesting Monte Carlo inside Monte Carlo.
class KernelModel {
  public:
    virtual ~KernelModel() = default;
    virtual std::size_t n_states() const = 0;
    // centered observable per state
    virtual const std::vector<double>& fvec() const = 0;
    // v -> E(v(next) | state), per state
    virtual std::vector<double> apply(const std::vector<double>& v) const = 0;
    virtual std::size_t index_of(double state) const = 0;
    // mean of v under the invariant law
    virtual double stationary_mean(const std::vector<double>& v) const = 0;
};

// finite chain: sampler and kernel model in one
class ChainSampler final : public StepSampler, public KernelModel {
  public:
    explicit ChainSampler(const chain::FiniteChain& c) : chain_(c) {}

    double step(double state, Rng& rng) const override {
        return static_cast<double>(chain_.sample_step(index_of(state), rng));
    }
    double observe(double state) const override { return chain_.f()[index_of(state)]; }
    std::string describe() const override;

    std::size_t n_states() const override { return chain_.n_states(); }
    const std::vector<double>& fvec() const override { return chain_.f(); }
    std::vector<double> apply(const std::vector<double>& v) const override {
        return chain_.apply(v);
    }
    std::size_t index_of(double state) const override {
        return static_cast<std::size_t>(state + 0.5);
    }
    double stationary_mean(const std::vector<double>& v) const override {
        return chain_.pi_mean(v);
    }

  private:
    const chain::FiniteChain& chain_;
};

// backward chain of the interval map, driven by the Ulam dual kernel
class UlamSampler final : public StepSampler, public KernelModel {
  public:
    UlamSampler(const pm::UlamModel& model, const pm::ObservableSpec& obs);

    double step(double state, Rng& rng) const override { return model_.chain_step(state, rng); }
    double observe(double state) const override;
    std::string describe() const override;

    std::size_t n_states() const override { return model_.n_cells(); }
    const std::vector<double>& fvec() const override { return fbar_; }
    std::vector<double> apply(const std::vector<double>& v) const override {
        return model_.dual_apply(v);
    }
    std::size_t index_of(double state) const override { return model_.cell_index(state); }
    double stationary_mean(const std::vector<double>& v) const override {
        return model_.nu_mean(v);
    }

  private:
    const pm::UlamModel& model_;
    std::vector<double> fbar_;  // centered cell values
    bool pointwise_;            // evaluate the observable at the exact state
    std::function<double(double)> eval_;
    double mean_ = 0.0;
};

// i.i.d. increments (standard normal by default)
class IidSampler final : public StepSampler {
  public:
    explicit IidSampler(std::function<double(Rng&)> draw = nullptr, std::string name = "iid-normal");

    double step(double, Rng& rng) const override { return draw_(rng); }
    double observe(double state) const override { return state; }
    std::string describe() const override { return name_; }

  private:
    std::function<double(Rng&)> draw_;
    std::string name_;
};

// Replica ensemble summaries collected in a single streaming pass: S_n and,
// when requested, Donsker-path marginals W_n(t) on a time grid and the
// window-1/m path modulus per m. The Donsker path is the piecewise-linear
// interpolation W_n(t) = n^{-1/2} (S_[nt] + (nt - [nt]) X_{[nt]+1}).
struct EnsembleSpec {
    std::vector<double> fidis_times;      // increasing, in (0, 1]
    std::vector<std::size_t> modulus_m;   // window grid for the tightness scan
};

struct Ensemble {
    std::string sampler;
    double x0 = 0.0;
    std::size_t n = 0, replicas = 0;
    std::uint64_t seed = 0;

    std::vector<double> sn_scaled;               // S_n / sqrt(n) per replica
    std::vector<double> fidis_times;
    std::vector<std::vector<double>> fidis_values;  // per replica: W_n(t_l)
    std::vector<std::size_t> modulus_m;
    std::vector<std::vector<double>> moduli;        // per replica: per m
};

Ensemble run_replicas(const StepSampler& sampler, double x0, std::size_t n, std::size_t replicas,
                      std::uint64_t seed, const EnsembleSpec& spec = {});

// exact evaluation of one stored piecewise-linear path modulus (exposed for
// oracle tests): sup_{|t-s| <= 1/m} |W(t) - W(s)|
double path_modulus(const std::vector<double>& increments, std::size_t m);

// evaluation of the Donsker path of an increment record at time t
double donsker_eval(const std::vector<double>& increments, double t);

struct CltReport {
    double eta_ref = 0.0;
    double ks = 0.0;
    double ks_null_band = 0.0;  // 1.36 / sqrt(R), the 95% Kolmogorov band
    bool within_band = false;
    nlohmann::json to_json() const;
};

CltReport quenched_clt_report(const Ensemble& ensemble, double eta_ref);

struct FidisReport {
    std::vector<double> times;
    std::vector<double> weights;
    double variance_target = 0.0;  // eta * sum a_l^2 (t_l - t_{l-1})
    double ks = 0.0;
    double ks_null_band = 0.0;
    std::vector<std::vector<double>> increment_cov;
    double max_offdiag_corr = 0.0;
    nlohmann::json to_json() const;
};

// law of sum_l a_l (W_n(t_l) - W_n(t_{l-1})) against its Gaussian limit
FidisReport fidis_report(const Ensemble& ensemble, const std::vector<double>& weights,
                         double eta_ref);

struct TightnessReport {
    std::vector<std::size_t> m_grid;
    std::vector<double> q95;
    std::vector<double> q95_se;
    bool decreasing = false;  // quantile at the largest m below that at the smallest
    nlohmann::json to_json() const;
};

TightnessReport tightness_report(const Ensemble& ensemble);

struct McBlockDiagnostics {
    chain::BlockDiagnostics base;
    double c1_se = 0.0;
    std::pair<double, double> c2_se{0.0, 0.0};
    nlohmann::json to_json() const;
};

// Monte Carlo outer expectation over replicas from the fixed start; inner
// conditional moments evaluated exactly through the kernel model
McBlockDiagnostics block_diagnostics_mc(const StepSampler& sampler, const KernelModel& model,
                                        double x0, std::size_t m, std::size_t p,
                                        const std::vector<double>& eps_grid, std::size_t replicas,
                                        std::uint64_t seed,
                                        std::optional<double> eta = std::nullopt);

struct VarianceScan {
    std::vector<std::size_t> n_grid;
    std::vector<double> var_over_n;   // Var(S_n)/n estimates
    std::vector<double> jackknife_se;
    double slope_vs_log_n = 0.0;      // least squares on (ln n, Var/n)
    double r_squared = 0.0;
    nlohmann::json to_json() const;
};

VarianceScan variance_growth_scan(const StepSampler& sampler, double x0,
                                  const std::vector<std::size_t>& n_grid, std::size_t replicas,
                                  std::uint64_t seed);

}  // namespace qlab::mc
