#pragma once

#include "carleman/transport.hpp"
#include "carleman/weight.hpp"

#include <optional>
#include <string>

namespace carleman {

/// The six integrals of the weighted estimate at one value of s. All carry
/// the normalization shift c (phi replaced by phi - c), which scales both
/// sides by the same factor and leaves ratios unchanged.
struct CarlemanTerms {
    double s = 0.0;
    double shift = 0.0;
    double lhs_init = 0.0;      // s * int u(.,0)^2 e^{2s phi(.,0)}
    double lhs_bulk = 0.0;      // s^2 * int_Q u^2 e^{2s phi}
    double lhs_minus = 0.0;     // s * int on the minus boundary
    double rhs_residual = 0.0;  // int_Q |du/dt + H.grad u + p u|^2 e^{2s phi}
    double rhs_plus = 0.0;      // s * int on the plus boundary
    double rhs_final = 0.0;     // s * int u(.,T)^2 e^{2s phi(.,T)}

    double lhs_total() const { return lhs_init + lhs_bulk + lhs_minus; }
    double rhs_total() const { return rhs_residual + rhs_plus + rhs_final; }
    /// 0/0 counts as 0; positive/0 is +infinity.
    double ratio() const;
};

/// Spatial part of a weight sampled at the grid's cells and faces. The time
/// dependence is the common factor e^{-2 s beta t}, applied per level.
struct SampledWeight {
    double beta = 0.0;
    double shift = 0.0;   // max_Q phi
    double min_d = 0.0, max_d = 0.0;
    Eigen::ArrayXXd d_cells;
    Eigen::ArrayXd d_faces;
};

SampledWeight sample_weight(const Grid& grid, const CarlemanWeight& weight);
SampledWeight sample_weight(const Grid& grid, const GeneralWeight& weight);

/// Closed-form test input: u and its transport residual in analytic form.
struct AnalyticTestFunction {
    SpaceTimeFunction u;
    SpaceTimeFunction residual;  // du/dt + (H . grad u) + p u
};

struct TestFunction {
    std::string name;
    GridSolution solution;
};

CarlemanTerms evaluate_terms(const GridSolution& u, const SampledWeight& weight,
                             const UpwindOperator& op, const ScalarCoefficient& p, double s,
                             std::optional<double> shift_override = std::nullopt);

CarlemanTerms evaluate_terms(const GridSolution& u, const CarlemanWeight& weight,
                             const ScalarCoefficient& p, double s);
CarlemanTerms evaluate_terms(const GridSolution& u, const GeneralWeight& weight,
                             const ScalarCoefficient& p, double s);

/// Analytic-residual variant for closed-form u.
CarlemanTerms evaluate_terms_analytic(const Grid& grid, const AnalyticTestFunction& u,
                                      const SampledWeight& weight, double s);

struct SweepRow {
    double s = 0.0;
    std::string id;
    CarlemanTerms terms;
};

struct SweepResult {
    std::vector<double> s_grid;
    std::vector<double> c_emp;  // per s, max ratio over the suite
    std::vector<SweepRow> rows;
    double c_emp_max = 0.0;
    bool infinite = false;
    std::string witness;  // test function and s of an infinite ratio
    bool pass = false;
    std::string reason;
};

struct SweepOptions {
    double c_cap = 1000.0;
    /// trend bound: the least-squares slope of log C_emp against log s over
    /// the top half of the grid must not exceed this
    double trend_tol = 0.05;
};

/// Suite materialized one member at a time; member k is a pure function of
/// (grid, seed, k), so lazy and eager construction agree.
struct LazySuite {
    int size = 0;
    std::function<TestFunction(int)> make;
};

/// C_emp(s) over the suite and the PASS/FAIL verdict: finite, below c_cap,
/// non-increasing trend over the top half of the s grid.
SweepResult sweep_constant(const LazySuite& suite, const SampledWeight& weight,
                           const UpwindOperator& op, const ScalarCoefficient& p,
                           const std::vector<double>& s_grid, const SweepOptions& options = {});

SweepResult sweep_constant(const std::vector<TestFunction>& suite, const SampledWeight& weight,
                           const UpwindOperator& op, const ScalarCoefficient& p,
                           const std::vector<double>& s_grid, const SweepOptions& options = {});

/// Deterministic mixed suite: smooth bumps, transported solutions from
/// random initial data, and space-time polynomials (nonzero residual).
LazySuite test_suite_lazy(const Grid& grid, const VectorField& field, const ScalarCoefficient& p,
                          int n, std::uint64_t seed);

std::vector<TestFunction> test_suite_random(const Grid& grid, const VectorField& field,
                                            const ScalarCoefficient& p, int n, std::uint64_t seed);

struct SFloor {
    double s1 = 0.0;                 // interface threshold (piecewise weights)
    double p_absorption = 0.0;       // sqrt(2 C_res) * sup|p|
    double energy_absorption = 0.0;  // 2 max(0, beta - min div(B H)) / delta^2
    double value = 0.0;              // max of the above and the runnable minimum 0.5
};

SFloor compute_s_floor(const CarlemanWeight& weight, const ScalarCoefficient& p,
                       double c_res = 0.0, double density = 100.0);
SFloor compute_s_floor(const GeneralWeight& weight, const ScalarCoefficient& p,
                       double c_res = 0.0, double density = 100.0);

/// Largest s with 2 s (max phi - min phi) <= 600 over the sampled weight.
double s_cap(const SampledWeight& weight, double T);

}  // namespace carleman
