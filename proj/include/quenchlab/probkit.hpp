#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quenchlab/series.hpp"

namespace qlab::probkit {

// Left-continuous, non-increasing map from (0,1] to [0,inf).
// Piecewise representation: Q(u) = value[i] on (u[i-1], u[i]], u[0]=0 implied,
// u.back() == 1. The power form is c * u^(-a) with 0 < a < 1/2.
class QuantileFunction {
  public:
    static QuantileFunction piecewise(std::vector<std::pair<double, double>> points);
    static QuantileFunction power(double c, double a);
    static QuantileFunction constant(double c) { return piecewise({{1.0, c}}); }

    double operator()(double u) const;

    // exact for the piecewise form, analytic for the power form
    double integral_squared(double a) const;
    double integral(double a) const;  // same, for Q itself (used by the E|Z| check)

    bool is_power() const { return power_.has_value(); }
    nlohmann::json to_json() const;
    static QuantileFunction from_json(const nlohmann::json& j);

    // pointwise value at u == 1 (the infimum definition forces Q_Z(1) = 0 for
    // quantile functions of distributions; free-standing step functions keep
    // their last segment value)
    void set_value_at_one(double v) { value_at_one_ = v; }

  private:
    QuantileFunction() = default;
    std::vector<std::pair<double, double>> points_;  // (u_i, value_i), u increasing
    std::optional<std::pair<double, double>> power_; // (c, a)
    std::optional<double> value_at_one_;
};

// Non-increasing right-continuous envelope H : [0,inf) -> [0,1], H -> 0 at
// infinity. Either a sampled step table or min(1, c x^-q (ln x)^-b) for x>x0.
class TailFunction {
  public:
    // table rows (x_i, H_i): H(x) = H_i on [x_i, x_{i+1}), H = 0 beyond the last x
    static TailFunction table(std::vector<std::pair<double, double>> rows);
    static TailFunction power(double c, double q, double b, double x0);

    double operator()(double x) const;
    bool is_power() const { return power_form_; }
    double power_q() const { return q_; }
    double power_b() const { return b_; }

    nlohmann::json to_json() const;
    static TailFunction from_json(const nlohmann::json& j);

    const std::vector<std::pair<double, double>>& rows() const { return rows_; }

  private:
    TailFunction() = default;
    std::vector<std::pair<double, double>> rows_;
    bool power_form_ = false;
    double c_ = 0, q_ = 0, b_ = 0, x0_ = 0;
};

struct EmpiricalSample {
    std::vector<double> values;
    std::vector<double> weights;  // empty = uniform

    static EmpiricalSample uniform(std::vector<double> values);
    void validate() const;
};

// Finitely many atoms with a partition of atom indices into conditioning
// blocks (the sigma-field F of Lemma-5.3-style checks).
struct FiniteProbSpace {
    std::vector<double> probs;
    std::vector<double> xvals;
    std::vector<std::vector<std::size_t>> partition;

    void validate() const;
    // E(X | F) per atom, exact blockwise average
    std::vector<double> conditional_expectation() const;
};

// Q_Z(u) = inf{t >= 0 : P(|Z| > t) <= u} for an atomic law of |Z|,
// given as (value, mass) pairs.
QuantileFunction quantile_of(const std::vector<std::pair<double, double>>& atoms);

// int_0^a Q^2(u) du
double integral_Q_squared(const QuantileFunction& q, double a);

// partial sums of sum_k int_0^{alpha(k)} Q^2
SeriesReport mixing_series(const std::vector<double>& alphas, const QuantileFunction& q,
                           std::size_t kmax, double rel_tol = 1e-6);

// int_0^inf x H(x)^{(1-2 gamma)/(1-gamma)} dx; +inf sentinel when the power
// form provably diverges
double tail_condition_integral(const TailFunction& h, double gamma);

// two-sided Kolmogorov-Smirnov sup at the sample points
double ks_distance(const EmpiricalSample& sample, const std::function<double(double)>& cdf);

struct TruncationCheck {
    // (lhs, rhs) per inequality, in the order stated
    std::vector<std::pair<double, double>> sides;
    bool all_hold = true;
};

// the three conditional-truncation inequalities with Y = X - E(X|F)
TruncationCheck check_truncation_inequalities(const FiniteProbSpace& space, double p, double eps);

}  // namespace qlab::probkit
