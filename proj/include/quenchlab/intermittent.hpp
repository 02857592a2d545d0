#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quenchlab/rng.hpp"
#include "quenchlab/series.hpp"

namespace qlab::pm {

// Interval map with a neutral fixed point at 0:
//   T(x) = x (1 + 2^gamma x^gamma) on [0, 1/2),  T(x) = 2x - 1 on [1/2, 1].
// Both branches are increasing and onto [0, 1); T'(0) = 1.
struct GammaMap {
    double gamma;

    explicit GammaMap(double g);
};

double map_eval(const GammaMap& map, double x);
double map_deriv(const GammaMap& map, double x);

struct Preimages {
    std::optional<double> left;  // absent only at y = 1
    double right = 0.0;
};

// both branch inverses at y; the left one by bracketed bisection with a
// Newton polish to |T(x) - y| <= 1e-13
Preimages preimages(const GammaMap& map, double y);

// Discretized transfer operator on a graded grid e_i = (i/N)^g, plus the
// invariant cell masses and the dual (backward-chain) kernel.
class UlamModel {
  public:
    double gamma() const { return map_.gamma; }
    const GammaMap& map() const { return map_; }
    std::size_t n_cells() const { return widths_.size(); }
    double grading() const { return grading_; }
    const std::vector<double>& edges() const { return edges_; }
    const std::vector<double>& widths() const { return widths_; }
    const std::vector<double>& nu_weights() const { return nu_; }
    const std::vector<double>& density() const { return density_; }

    std::size_t cell_index(double x) const;
    double density_at(double x) const { return density_[cell_index(x)]; }

    // measure pushforward m -> mP through the discretized transfer matrix
    std::vector<double> transfer_apply(const std::vector<double>& m) const;
    // dual operator on observables: (Lf)_j = sum_i nu_i P(i,j) f_i / nu_j;
    // also the transition operator of the backward chain
    std::vector<double> dual_apply(const std::vector<double>& f) const;

    double nu_mean(const std::vector<double>& f) const;

    // |nu(f . g o T) - nu(Lf . g)| with the forward composition evaluated
    // pointwise by a per-cell quadrature, so the residual measures genuine
    // discretization error
    double duality_residual(const std::vector<double>& f, const std::vector<double>& g) const;
    // the built-in (f, g) dictionary used by the refinement studies
    std::vector<std::pair<std::string, double>> duality_residuals() const;

    // one move of the backward chain: jump to a preimage of y with weights
    // proportional to h(x)/|T'(x)|
    double chain_step(double y, Rng& rng) const;

    std::size_t nnz() const;
    nlohmann::json to_json_meta() const;
    // writes <prefix>_edges.csv, <prefix>_matrix.csv (sparse row-major
    // i,j,value), <prefix>_density.csv
    void write_csv(const std::string& prefix) const;

    friend UlamModel ulam_build(double gamma, std::size_t n_cells, double grading);

  private:
    UlamModel(GammaMap map, double grading) : map_(map), grading_(grading) {}

    // fast left-branch inverse: graded lookup + Newton polish
    double left_inverse(double y) const;

    GammaMap map_;
    double grading_;
    std::vector<double> edges_, widths_;
    std::vector<double> nu_, density_;
    // sparse rows of P and of the dual kernel, as (index, value) lists
    std::vector<std::vector<std::pair<std::size_t, double>>> rows_, dual_rows_;
    std::vector<double> left_inv_edges_;  // x = left-inverse of each edge
};

UlamModel ulam_build(double gamma, std::size_t n_cells, double grading = 2.0);

// dual-operator application with a positivity check on the density
std::vector<double> l_gamma_apply(const UlamModel& model, const std::vector<double>& f);

// alpha-dependence coefficients of the backward chain, maximized over a
// subsample of grid-edge thresholds
std::vector<double> alpha_coeffs_ulam(const UlamModel& model, std::size_t kmax,
                                      std::size_t max_thresholds = 64);

// Observable on [0,1]: a bounded-variation indicator 1_[0,t], the family
// x^(-a) (max(-ln x, 1))^(-d) blowing up at 0, or an explicit per-cell table.
class ObservableSpec {
  public:
    static ObservableSpec bv_indicator(double threshold);
    static ObservableSpec power_log(double a, double d);
    static ObservableSpec table(std::vector<double> cell_values);

    // raw (uncentered) pointwise value; table observables need the model grid
    double eval(double x) const;
    bool has_pointwise() const { return kind_ != Kind::Table; }
    // per-cell midpoint values, centered to nu-mean zero when centered is set
    std::vector<double> cell_values(const UlamModel& model) const;

    bool centered = true;
    nlohmann::json to_json() const;

  private:
    ObservableSpec() = default;
    enum class Kind { BvIndicator, PowerLog, Table } kind_ = Kind::BvIndicator;
    double threshold_ = 0.5, a_ = 0.0, d_ = 0.0;
    std::vector<double> table_;
};

struct UlamEta {
    double eta = 0.0;
    SeriesReport report;
};

// long-run variance of the observable under the discretized dynamics:
// nu(fbar^2) + 2 sum_k nu(L^k fbar . fbar)
UlamEta eta_ulam(const UlamModel& model, const ObservableSpec& obs, std::size_t kmax = 256);

struct Trajectory {
    std::vector<double> orbit;  // x_0 .. x_n
    std::vector<double> sums;   // S_k of the observable along the orbit
};

Trajectory traj(const GammaMap& map, double x0, std::size_t n,
                const std::function<double(double)>& obs);

}  // namespace qlab::pm
