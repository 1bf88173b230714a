#include "carleman/carleman_verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace carleman {

double CarlemanTerms::ratio() const {
    double lhs = lhs_total(), rhs = rhs_total();
    if (rhs > 0.0) return lhs / rhs;
    return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

namespace {

SampledWeight sample_weight_impl(const Grid& grid, const std::function<double(const Vec2&)>& d,
                                 double beta, double shift) {
    SampledWeight w;
    w.beta = beta;
    w.shift = shift;
    w.d_cells.resize(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) w.d_cells(i, j) = d(grid.center(i, j));
    w.d_faces.resize(static_cast<int>(grid.faces().size()));
    for (std::size_t k = 0; k < grid.faces().size(); ++k)
        w.d_faces(static_cast<int>(k)) = d(grid.faces()[k].point);
    w.min_d = std::min(w.d_cells.minCoeff(), w.d_faces.minCoeff());
    w.max_d = std::max(w.d_cells.maxCoeff(), w.d_faces.maxCoeff());
    return w;
}

Eigen::ArrayXXd cell_volumes(const Grid& grid) {
    Eigen::ArrayXXd vol(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) vol(i, j) = grid.cell_volume(i, j);
    return vol;
}

}  // namespace

SampledWeight sample_weight(const Grid& grid, const CarlemanWeight& weight) {
    return sample_weight_impl(
        grid, [&](const Vec2& x) { return weight.phi(x, 0.0); }, weight.beta(), weight.shift());
}

SampledWeight sample_weight(const Grid& grid, const GeneralWeight& weight) {
    return sample_weight_impl(
        grid, [&](const Vec2& x) { return weight.d(x); }, weight.beta(), weight.shift());
}

namespace {

struct TermAccumulator {
    const Grid& grid;
    const SampledWeight& w;
    double s;
    double c;
    Eigen::ArrayXXd vol;
    Eigen::ArrayXXd wc;  // e^{2s(d - c)} at cells
    Eigen::ArrayXd wf;   // at faces
    CarlemanTerms terms;

    TermAccumulator(const Grid& grid_, const SampledWeight& w_, double s_, double c_)
        : grid(grid_), w(w_), s(s_), c(c_), vol(cell_volumes(grid_)) {
        wc = (2.0 * s * (w.d_cells - c)).exp();
        wf = (2.0 * s * (w.d_faces - c)).exp();
        terms.s = s;
        terms.shift = c;
    }

    double volume_sum(const Eigen::ArrayXXd& values) const { return (vol * values.square() * wc).sum(); }

    void feed_level(int n, const Eigen::ArrayXXd& u_n, const Eigen::ArrayXXd& res_n,
                    const Eigen::ArrayXd& traces_n) {
        double tau_n = grid.step_length(n);
        double tf = std::exp(-2.0 * s * w.beta * grid.time(n));
        terms.lhs_bulk += tau_n * tf * volume_sum(u_n);
        terms.rhs_residual += tau_n * tf * volume_sum(res_n);
        double plus = 0.0, minus = 0.0;
        for (std::size_t k = 0; k < grid.faces().size(); ++k) {
            const Face& f = grid.faces()[k];
            double v = traces_n(static_cast<int>(k));
            double contrib = f.weight * v * v * wf(static_cast<int>(k));
            (f.inflow ? minus : plus) += contrib;
        }
        terms.lhs_minus += tau_n * tf * minus;
        terms.rhs_plus += tau_n * tf * plus;
    }

    void finish(const Eigen::ArrayXXd& u0, const Eigen::ArrayXXd& uT) {
        double T = grid.horizon();
        terms.lhs_init = s * volume_sum(u0);
        terms.rhs_final = s * std::exp(-2.0 * s * w.beta * T) * volume_sum(uT);
        terms.lhs_bulk *= s * s;
        terms.lhs_minus *= s;
        terms.rhs_plus *= s;
    }
};

}  // namespace

CarlemanTerms evaluate_terms(const GridSolution& u, const SampledWeight& weight,
                             const UpwindOperator& op, const ScalarCoefficient& p, double s,
                             std::optional<double> shift_override) {
    if (!(s > 0.0)) throw std::invalid_argument("evaluate_terms: s must be positive");
    TermAccumulator acc(u.grid, weight, s, shift_override.value_or(weight.shift));
    for (int n = 0; n < u.steps(); ++n)
        acc.feed_level(n, u.levels[n], stencil_residual(u, op, p, n), u.traces.col(n));
    acc.finish(u.initial(), u.final_slice());
    return acc.terms;
}

CarlemanTerms evaluate_terms(const GridSolution& u, const CarlemanWeight& weight,
                             const ScalarCoefficient& p, double s) {
    UpwindOperator op(u.grid, weight.field());
    return evaluate_terms(u, sample_weight(u.grid, weight), op, p, s);
}

CarlemanTerms evaluate_terms(const GridSolution& u, const GeneralWeight& weight,
                             const ScalarCoefficient& p, double s) {
    UpwindOperator op(u.grid, weight.field());
    return evaluate_terms(u, sample_weight(u.grid, weight), op, p, s);
}

CarlemanTerms evaluate_terms_analytic(const Grid& grid, const AnalyticTestFunction& u,
                                      const SampledWeight& weight, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("evaluate_terms: s must be positive");
    TermAccumulator acc(grid, weight, s, weight.shift);
    Eigen::ArrayXXd u_n(grid.n1(), grid.n2()), res_n(grid.n1(), grid.n2());
    Eigen::ArrayXd tr_n(static_cast<int>(grid.faces().size()));
    for (int n = 0; n < grid.steps(); ++n) {
        double t = grid.time(n);
        for (int i = 0; i < grid.n1(); ++i)
            for (int j = 0; j < grid.n2(); ++j) {
                u_n(i, j) = u.u(grid.center(i, j), t);
                res_n(i, j) = u.residual(grid.center(i, j), t);
            }
        for (std::size_t k = 0; k < grid.faces().size(); ++k)
            tr_n(static_cast<int>(k)) = u.u(grid.faces()[k].point, t);
        acc.feed_level(n, u_n, res_n, tr_n);
    }
    Eigen::ArrayXXd u0(grid.n1(), grid.n2()), uT(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) {
            u0(i, j) = u.u(grid.center(i, j), 0.0);
            uT(i, j) = u.u(grid.center(i, j), grid.horizon());
        }
    acc.finish(u0, uT);
    return acc.terms;
}

SweepResult sweep_constant(const LazySuite& suite, const SampledWeight& weight,
                           const UpwindOperator& op, const ScalarCoefficient& p,
                           const std::vector<double>& s_grid, const SweepOptions& options) {
    if (suite.size < 1) throw std::invalid_argument("sweep_constant: empty suite");
    SweepResult result;
    result.s_grid = s_grid;
    result.c_emp.assign(s_grid.size(), 0.0);
    // members are materialized one at a time; residuals are reused across s
    std::vector<std::vector<CarlemanTerms>> table(suite.size);
    std::vector<std::string> names(suite.size);
    for (int m = 0; m < suite.size; ++m) {
        TestFunction tf = suite.make(m);
        names[m] = tf.name;
        const GridSolution& u = tf.solution;
        std::vector<Eigen::ArrayXXd> residuals;
        residuals.reserve(u.steps());
        for (int n = 0; n < u.steps(); ++n) residuals.push_back(stencil_residual(u, op, p, n));
        for (double s : s_grid) {
            TermAccumulator acc(u.grid, weight, s, weight.shift);
            for (int n = 0; n < u.steps(); ++n)
                acc.feed_level(n, u.levels[n], residuals[n], u.traces.col(n));
            acc.finish(u.initial(), u.final_slice());
            table[m].push_back(acc.terms);
        }
    }
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
        for (int m = 0; m < suite.size; ++m) {
            const CarlemanTerms& terms = table[m][k];
            result.rows.push_back({s_grid[k], names[m], terms});
            double r = terms.ratio();
            if (std::isinf(r) && !result.infinite) {
                result.infinite = true;
                result.witness = names[m] + " at s = " + fmt(s_grid[k]);
            }
            result.c_emp[k] = std::max(result.c_emp[k], r);
        }
        result.c_emp_max = std::max(result.c_emp_max, result.c_emp[k]);
    }

    std::ostringstream reason;
    // aggregate trend over the top half: slope of log C_emp vs log s
    bool trend_ok = true;
    {
        std::size_t lo = s_grid.size() / 2;
        double peak = 0.0;
        for (std::size_t k = lo; k < s_grid.size(); ++k) peak = std::max(peak, result.c_emp[k]);
        if (peak > 0.0 && s_grid.size() - lo >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int n = 0;
            for (std::size_t k = lo; k < s_grid.size(); ++k) {
                double x = std::log(s_grid[k]);
                double y = std::log(std::max(result.c_emp[k], 1e-300));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++n;
            }
            double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            if (slope > options.trend_tol) {
                trend_ok = false;
                reason << "C_emp trends upward over the top half (slope " << fmt(slope) << "); ";
            }
        }
    }
    if (result.infinite) reason << "infinite ratio at " << result.witness << "; ";
    if (result.c_emp_max > options.c_cap)
        reason << "C_emp_max " << fmt(result.c_emp_max) << " exceeds cap " << fmt(options.c_cap)
               << "; ";
    result.pass = !result.infinite && result.c_emp_max <= options.c_cap && trend_ok;
    result.reason = result.pass ? "finite, capped, non-increasing over top half" : reason.str();
    return result;
}

SweepResult sweep_constant(const std::vector<TestFunction>& suite, const SampledWeight& weight,
                           const UpwindOperator& op, const ScalarCoefficient& p,
                           const std::vector<double>& s_grid, const SweepOptions& options) {
    LazySuite lazy;
    lazy.size = static_cast<int>(suite.size());
    lazy.make = [&suite](int k) { return suite[static_cast<std::size_t>(k)]; };
    return sweep_constant(lazy, weight, op, p, s_grid, options);
}

LazySuite test_suite_lazy(const Grid& grid, const VectorField& field, const ScalarCoefficient& p,
                          int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("test_suite_lazy: n must be positive");
    (void)p;
    const Domain& dom = grid.domain();
    double diam = dom.diameter();
    double bx_lo, bx_hi, by_lo, by_hi;
    if (dom.shape() == DomainShape::Rectangle) {
        bx_lo = dom.x_lo();
        bx_hi = dom.x_hi();
        by_lo = dom.y_lo();
        by_hi = dom.y_hi();
    } else {
        bx_lo = by_lo = -dom.r_out();
        bx_hi = by_hi = dom.r_out();
    }

    // cutoff vanishing on the boundary, normalized to O(1) inside
    std::function<double(const Vec2&)> edge_cutoff;
    if (dom.shape() == DomainShape::Rectangle) {
        double sx = 2.0 / (dom.x_hi() - dom.x_lo()), sy = 2.0 / (dom.y_hi() - dom.y_lo());
        edge_cutoff = [=](const Vec2& x) {
            return sx * sx * (x.x() - dom.x_lo()) * (dom.x_hi() - x.x()) * sy * sy *
                   (x.y() - dom.y_lo()) * (dom.y_hi() - x.y());
        };
    } else {
        double a = dom.r_in() * dom.r_in(), b = dom.r_out() * dom.r_out();
        double scale = 4.0 / ((b - a) * (b - a));
        edge_cutoff = [=](const Vec2& x) {
            double r2 = x.squaredNorm();
            return scale * std::max(r2 - a, 0.0) * std::max(b - r2, 0.0);
        };
    }

    LazySuite suite;
    suite.size = n;
    suite.make = [=](int k) -> TestFunction {
        Rng rng(seed * 1000003ull + static_cast<std::uint64_t>(k));
        Vec2 x0(rng.uniform(bx_lo, bx_hi), rng.uniform(by_lo, by_hi));
        double width = rng.uniform(0.1, 0.3) * diam;
        auto bump = [x0, width](const Vec2& x) {
            return std::exp(-(x - x0).squaredNorm() / (width * width));
        };
        switch (k % 3) {
            case 0: {  // smooth space-time bump, pinned to zero on the boundary
                double omega = rng.uniform(0.5, 2.0);
                double phase = rng.uniform(0.0, 2.0 * kPi);
                auto u = [bump, omega, phase, edge_cutoff](const Vec2& x, double t) {
                    return edge_cutoff(x) * bump(x) * (1.0 + 0.5 * std::sin(omega * t + phase));
                };
                return {"bump-" + std::to_string(k), sample_function(grid, u)};
            }
            case 1: {  // transported solution of the homogeneous equation
                auto zero_inflow = [](const Vec2&, double) { return 0.0; };
                return {"pde-" + std::to_string(k),
                        solve_forward(grid, field, ScalarCoefficient::constant(0.0),
                                      SpaceTimeSource::zero(), bump, zero_inflow)};
            }
            default: {  // space-time polynomial, generically off the solution manifold
                double c0 = rng.uniform(-1, 1), c1 = rng.uniform(-1, 1), c2 = rng.uniform(-1, 1);
                double c3 = rng.uniform(-1, 1), c4 = rng.uniform(-1, 1), c5 = rng.uniform(-1, 1);
                auto u = [=](const Vec2& x, double t) {
                    return c0 + c1 * x.x() + c2 * x.y() + c3 * t + c4 * x.x() * t +
                           c5 * x.x() * x.y();
                };
                return {"poly-" + std::to_string(k), sample_function(grid, u)};
            }
        }
    };
    return suite;
}

std::vector<TestFunction> test_suite_random(const Grid& grid, const VectorField& field,
                                            const ScalarCoefficient& p, int n, std::uint64_t seed) {
    LazySuite lazy = test_suite_lazy(grid, field, p, n, seed);
    std::vector<TestFunction> suite;
    suite.reserve(n);
    for (int k = 0; k < n; ++k) suite.push_back(lazy.make(k));
    return suite;
}

namespace {

double min_drift_divergence(const std::function<Vec2(const Vec2&)>& bh,
                            const std::vector<Vec2>& points, double h) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        double div = (bh(x + Vec2(h, 0)).x() - bh(x - Vec2(h, 0)).x()) / (2 * h) +
                     (bh(x + Vec2(0, h)).y() - bh(x - Vec2(0, h)).y()) / (2 * h);
        lo = std::min(lo, div);
    }
    return lo;
}

SFloor assemble_floor(double s1, double p_bound, double c_res, double beta, double min_div,
                      double delta) {
    SFloor floor;
    floor.s1 = s1;
    floor.p_absorption = p_bound > 0.0 ? std::sqrt(2.0 * std::max(c_res, 0.0)) * p_bound : 0.0;
    floor.energy_absorption = 2.0 * std::max(0.0, beta - min_div) / (delta * delta);
    floor.value = std::max({s1, 2.0 * floor.p_absorption, floor.energy_absorption, 0.5});
    return floor;
}

}  // namespace

SFloor compute_s_floor(const CarlemanWeight& weight, const ScalarCoefficient& p, double c_res,
                       double density) {
    double h = 1e-5 * weight.partition().domain.diameter();
    double min_div = std::numeric_limits<double>::infinity();
    for (const auto& sub : weight.partition().subdomains) {
        auto bh = [&](const Vec2& x) {
            return Vec2(weight.drift_node(sub.id, x) * weight.field()(x));
        };
        std::vector<Vec2> pts;
        for (const auto& s : sample_volume(sub, density)) pts.push_back(s.point);
        min_div = std::min(min_div, min_drift_divergence(bh, pts, h));
    }
    return assemble_floor(weight.s1(), p.bound(), c_res, weight.beta(), min_div, weight.delta());
}

SFloor compute_s_floor(const GeneralWeight& weight, const ScalarCoefficient& p, double c_res,
                       double density) {
    double h = 1e-5 * weight.domain().diameter();
    auto bh = [&](const Vec2& x) { return Vec2(weight.drift(x) * weight.field()(x)); };
    std::vector<Vec2> pts;
    Partition part = trivial_partition(weight.domain());
    for (const auto& s : sample_volume(part.subdomains.front(), density)) pts.push_back(s.point);
    double min_div = min_drift_divergence(bh, pts, h);
    double delta = weight.delta3() > 0.0 ? weight.delta3() : 1.0;  // forced weights: nominal scale
    return assemble_floor(0.0, p.bound(), c_res, weight.beta(), min_div, delta);
}

double s_cap(const SampledWeight& weight, double T) {
    double range = weight.max_d - weight.min_d + weight.beta * T;
    return 300.0 / std::max(range, 1e-12);
}

}  // namespace carleman
