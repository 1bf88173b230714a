#include "carleman/inverse.hpp"

#include <cmath>
#include <sstream>

namespace carleman {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::NotApplicable: return "NOT-APPLICABLE";
    }
    return "?";
}

namespace {

struct BumpParams {
    Vec2 center;
    double width;
};

std::vector<BumpParams> draw_bumps(const Domain& dom, int n, Rng& rng) {
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
    std::vector<BumpParams> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        out.push_back({Vec2(rng.uniform(bx_lo, bx_hi), rng.uniform(by_lo, by_hi)),
                       rng.uniform(0.08, 0.25) * dom.diameter()});
    }
    return out;
}

SpaceFunction bump_function(const BumpParams& b) {
    return [b](const Vec2& x) { return std::exp(-(x - b.center).squaredNorm() / (b.width * b.width)); };
}

double grid_norm(const Grid& grid, const SpaceFunction& f) {
    double sum = 0.0;
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) {
            double v = f(grid.center(i, j));
            sum += grid.cell_volume(i, j) * v * v;
        }
    return std::sqrt(sum);
}

double safe_ratio(double num, double den) {
    if (den > 0.0) return num / den;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

Grid halve(const Grid& g, const VectorField& field) {
    return Grid::make(g.domain(), 2 * g.n1(), 2 * g.n2(), g.horizon(), 2 * g.steps(), field, 0.91,
                      g.periodic_x());
}

}  // namespace

ObservabilityStudy observability_study(const VectorField& field, const ScalarCoefficient& p,
                                       const HorizonConstants& horizon, const Grid& grid,
                                       int n_ensemble, std::uint64_t seed,
                                       const StudyOptions& options) {
    ObservabilityStudy study;
    study.horizon = horizon;
    Rng rng(seed);
    std::vector<BumpParams> bumps;
    int count = options.profile_override ? 1 : n_ensemble;
    if (!options.profile_override) bumps = draw_bumps(grid.domain(), n_ensemble, rng);

    auto zero_inflow = [](const Vec2&, double) { return 0.0; };
    auto run = [&](const Grid& g, std::vector<StudyMember>* members) {
        double worst = 0.0;
        for (int k = 0; k < count; ++k) {
            SpaceFunction u0 = options.profile_override ? *options.profile_override : bump_function(bumps[k]);
            double scale = grid_norm(g, u0);
            SpaceFunction u0n = [u0, scale](const Vec2& x) { return scale > 0 ? u0(x) / scale : 0.0; };
            GridSolution sol = solve_forward(g, field, p, SpaceTimeSource::zero(), u0n, zero_inflow);
            SolutionNorms ns = norms(sol);
            double ratio = safe_ratio(ns.initial, ns.boundary);
            if (members) members->push_back({k, ns.initial, ns.boundary, ratio});
            worst = std::max(worst, ratio);
        }
        return worst;
    };

    // failure evidence outranks non-applicability; non-applicability
    // outranks PASS (the theorem is silent below T0, but a blow-up is a
    // blow-up at any horizon)
    study.c_obs = run(grid, &study.members);
    if (std::isinf(study.c_obs)) {
        study.verdict = Verdict::Fail;
        study.reason = "degenerate boundary norm: nonzero state leaves no trace";
        return study;
    }
    if (options.mesh_check) {
        study.c_obs_halved = run(halve(grid, field), nullptr);
        study.drift = study.c_obs > 0.0 ? std::abs(study.c_obs_halved - study.c_obs) / study.c_obs : 0.0;
        if (std::isinf(study.c_obs_halved) || study.drift > options.drift_cap) {
            study.verdict = Verdict::Fail;
            std::ostringstream os;
            os << "C_obs drifts " << fmt(100.0 * study.drift) << "% under mesh halving ("
               << fmt(study.c_obs) << " -> " << fmt(study.c_obs_halved) << ")";
            study.reason = os.str();
            return study;
        }
    }
    if (horizon.mu <= 0.0) {
        study.verdict = Verdict::NotApplicable;
        study.reason = "T <= T0: the observability theorem asserts nothing at this horizon";
        return study;
    }
    study.verdict = Verdict::Pass;
    study.reason = "C_obs finite and mesh-stable";
    return study;
}

SourceStudy source_study(const VectorField& field, const ScalarCoefficient& p,
                         const SourceFactor& R, const HorizonConstants& horizon, const Grid& grid,
                         int n_ensemble, std::uint64_t seed, const StudyOptions& options) {
    SourceStudy study;
    study.horizon = horizon;
    double density = 2.0 * std::max(grid.n1(), grid.n2()) / grid.domain().diameter();
    double floor_value = R.initial_floor(grid.domain(), density);
    if (!(floor_value > 0.0))
        throw ConditionError("4.8", "|R(.,0)| vanishes (floor = " + std::to_string(floor_value) + ")");

    Rng rng(seed);
    int count = options.profile_override ? 1 : n_ensemble;
    std::vector<BumpParams> bumps;
    if (!options.profile_override) bumps = draw_bumps(grid.domain(), n_ensemble, rng);
    auto zero_inflow = [](const Vec2&, double) { return 0.0; };
    auto zero_state = [](const Vec2&) { return 0.0; };

    auto run = [&](const Grid& g, std::vector<StudyMember>* members) {
        double worst = 0.0;
        for (int k = 0; k < count; ++k) {
            SpaceFunction f = options.profile_override ? *options.profile_override : bump_function(bumps[k]);
            double scale = grid_norm(g, f);
            SpaceFunction fn = [f, scale](const Vec2& x) { return scale > 0 ? f(x) / scale : 0.0; };
            GridSolution sol =
                solve_forward(g, field, p, SpaceTimeSource::separated(R, fn), zero_state, zero_inflow);
            SolutionNorms ns = norms(sol);
            double f_norm = grid_norm(g, fn);
            double ratio = safe_ratio(f_norm, ns.dt_boundary);
            if (members) members->push_back({k, f_norm, ns.dt_boundary, ratio});
            worst = std::max(worst, ratio);
        }
        return worst;
    };

    study.c_src = run(grid, &study.members);
    if (std::isinf(study.c_src)) {
        study.verdict = Verdict::Fail;
        study.reason = "degenerate data norm: nonzero source leaves no trace derivative";
        return study;
    }
    if (options.mesh_check) {
        study.c_src_halved = run(halve(grid, field), nullptr);
        study.drift = study.c_src > 0.0 ? std::abs(study.c_src_halved - study.c_src) / study.c_src : 0.0;
        if (std::isinf(study.c_src_halved) || study.drift > options.drift_cap) {
            study.verdict = Verdict::Fail;
            std::ostringstream os;
            os << "C_src drifts " << fmt(100.0 * study.drift) << "% under mesh halving ("
               << fmt(study.c_src) << " -> " << fmt(study.c_src_halved) << ")";
            study.reason = os.str();
            return study;
        }
    }
    if (horizon.mu <= 0.0) {
        study.verdict = Verdict::NotApplicable;
        study.reason = "T <= T0: the stability theorem asserts nothing at this horizon";
        return study;
    }
    study.verdict = Verdict::Pass;
    study.reason = "C_src finite and mesh-stable";
    return study;
}

MinimalTimeReport minimal_time_report(const HorizonConstants& horizon,
                                      const std::optional<ConditionAData>& condition_a) {
    MinimalTimeReport report;
    report.T0 = horizon.T0;
    if (condition_a) {
        const auto& c = *condition_a;
        report.condition_a_threshold =
            2.0 * c.domain_radius * (c.delta1 + c.field_norm) / (c.delta1 * c.delta1);
    }
    return report;
}

SourceToDataMap::SourceToDataMap(const Grid& grid, const VectorField& field,
                                 const ScalarCoefficient& p, const SourceFactor& R)
    : grid_(grid), op_(grid, field) {
    int n1 = grid.n1(), n2 = grid.n2(), steps = grid.steps();
    r_levels_.reserve(steps);
    for (int n = 0; n < steps; ++n) {
        Eigen::ArrayXXd r(n1, n2);
        double t = grid.time(n);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) r(i, j) = R(grid.center(i, j), t);
        r_levels_.push_back(std::move(r));
    }
    p_cells_.resize(n1, n2);
    vol_.resize(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            p_cells_(i, j) = p(grid.center(i, j));
            vol_(i, j) = grid.cell_volume(i, j);
        }
    int n_faces = static_cast<int>(grid.faces().size());
    data_w_.resize(n_faces, steps + 1);
    std::vector<double> tw(steps + 1, 0.0);
    for (int n = 0; n < steps; ++n) {
        tw[n] += 0.5 * grid.step_length(n);
        tw[n + 1] += 0.5 * grid.step_length(n);
    }
    for (int k = 0; k < n_faces; ++k)
        for (int n = 0; n <= steps; ++n) data_w_(k, n) = grid.faces()[k].weight * tw[n];
}

namespace {

// boundary extraction: zero on inflow faces, second-order extrapolation on
// outflow faces
Eigen::ArrayXd extract(const Grid& grid, const Eigen::ArrayXXd& u) {
    int n_faces = static_cast<int>(grid.faces().size());
    Eigen::ArrayXd tr(n_faces);
    for (int k = 0; k < n_faces; ++k) {
        const Face& f = grid.faces()[k];
        if (f.inflow) {
            tr(k) = 0.0;
        } else if (f.ib >= 0) {
            tr(k) = 1.5 * u(f.ia, f.ja) - 0.5 * u(f.ib, f.jb);
        } else {
            tr(k) = u(f.ia, f.ja);
        }
    }
    return tr;
}

void extract_adjoint(const Grid& grid, const Eigen::ArrayXd& psi, Eigen::ArrayXXd& acc) {
    for (std::size_t k = 0; k < grid.faces().size(); ++k) {
        const Face& f = grid.faces()[k];
        if (f.inflow) continue;
        if (f.ib >= 0) {
            acc(f.ia, f.ja) += 1.5 * psi(static_cast<int>(k));
            acc(f.ib, f.jb) -= 0.5 * psi(static_cast<int>(k));
        } else {
            acc(f.ia, f.ja) += psi(static_cast<int>(k));
        }
    }
}

Eigen::ArrayXXd dt_traces(const Grid& grid, const Eigen::ArrayXXd& tr) {
    int steps = grid.steps();
    Eigen::ArrayXXd z(tr.rows(), steps + 1);
    z.col(0) = (tr.col(1) - tr.col(0)) / grid.step_length(0);
    for (int n = 1; n < steps; ++n)
        z.col(n) = (tr.col(n + 1) - tr.col(n - 1)) / (grid.time(n + 1) - grid.time(n - 1));
    z.col(steps) = (tr.col(steps) - tr.col(steps - 1)) / grid.step_length(steps - 1);
    return z;
}

Eigen::ArrayXXd dt_traces_adjoint(const Grid& grid, const Eigen::ArrayXXd& z) {
    int steps = grid.steps();
    Eigen::ArrayXXd psi = Eigen::ArrayXXd::Zero(z.rows(), steps + 1);
    psi.col(0) -= z.col(0) / grid.step_length(0);
    psi.col(1) += z.col(0) / grid.step_length(0);
    for (int n = 1; n < steps; ++n) {
        double span = grid.time(n + 1) - grid.time(n - 1);
        psi.col(n - 1) -= z.col(n) / span;
        psi.col(n + 1) += z.col(n) / span;
    }
    psi.col(steps - 1) -= z.col(steps) / grid.step_length(steps - 1);
    psi.col(steps) += z.col(steps) / grid.step_length(steps - 1);
    return psi;
}

}  // namespace

Eigen::ArrayXXd SourceToDataMap::apply(const Eigen::ArrayXXd& f) const {
    int steps = grid_.steps();
    int n_faces = static_cast<int>(grid_.faces().size());
    Eigen::ArrayXXd tr(n_faces, steps + 1);
    Eigen::ArrayXXd u = Eigen::ArrayXXd::Zero(grid_.n1(), grid_.n2());
    Eigen::ArrayXd ghost = Eigen::ArrayXd::Zero(n_faces);
    for (int n = 0; n <= steps; ++n) {
        tr.col(n) = extract(grid_, u);
        if (n < steps) {
            double tau_n = grid_.step_length(n);
            u -= tau_n * (op_.apply(u, ghost) + p_cells_ * u - r_levels_[n] * f);
        }
    }
    return dt_traces(grid_, tr);
}

Eigen::ArrayXXd SourceToDataMap::apply_adjoint(const Eigen::ArrayXXd& z) const {
    int steps = grid_.steps();
    Eigen::ArrayXXd psi = dt_traces_adjoint(grid_, z);
    Eigen::ArrayXXd a = Eigen::ArrayXXd::Zero(grid_.n1(), grid_.n2());
    Eigen::ArrayXXd g = Eigen::ArrayXXd::Zero(grid_.n1(), grid_.n2());
    for (int n = steps; n >= 0; --n) {
        extract_adjoint(grid_, psi.col(n), a);
        if (n > 0) {
            double tau_n = grid_.step_length(n - 1);
            g += tau_n * r_levels_[n - 1] * a;
            a -= tau_n * (op_.apply_transpose(a) + p_cells_ * a);
        }
    }
    return g;
}

double SourceToDataMap::data_inner(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) const {
    return (data_w_ * a * b).sum();
}

double SourceToDataMap::cell_inner(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) const {
    return (vol_ * a * b).sum();
}

double reconstruction_objective(const SourceToDataMap& map, const Eigen::ArrayXXd& observed,
                                double lambda, const Eigen::ArrayXXd& f) {
    Eigen::ArrayXXd r = map.apply(f) - observed;
    return 0.5 * map.data_inner(r, r) + 0.5 * lambda * map.cell_inner(f, f);
}

Eigen::ArrayXXd reconstruction_gradient(const SourceToDataMap& map, const Eigen::ArrayXXd& observed,
                                        double lambda, const Eigen::ArrayXXd& f) {
    Eigen::ArrayXXd r = map.apply(f) - observed;
    Eigen::ArrayXXd g = map.apply_adjoint(map.data_weights() * r);
    if (lambda > 0.0) {
        Eigen::ArrayXXd vol(f.rows(), f.cols());
        for (int i = 0; i < f.rows(); ++i)
            for (int j = 0; j < f.cols(); ++j) vol(i, j) = map.grid().cell_volume(i, j);
        g += lambda * vol * f;
    }
    return g;
}

ReconstructionResult reconstruct_f_least_squares(const SourceToDataMap& map,
                                                 const Eigen::ArrayXXd& observed,
                                                 const ReconstructionOptions& options,
                                                 const Eigen::ArrayXXd* ground_truth) {
    const Grid& grid = map.grid();
    Eigen::ArrayXXd vol(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) vol(i, j) = grid.cell_volume(i, j);

    ReconstructionResult result;
    Eigen::ArrayXXd f = Eigen::ArrayXXd::Zero(grid.n1(), grid.n2());
    Eigen::ArrayXXd r = map.apply(f) - observed;
    double j0 = 0.5 * map.data_inner(r, r) + 0.5 * options.lambda * map.cell_inner(f, f);
    result.objective_history.push_back(j0);
    if (j0 <= 1e-300) {
        result.converged = true;
        result.f_hat = f;
        if (ground_truth) {
            Eigen::ArrayXXd diff = f - *ground_truth;
            double denom = map.cell_inner(*ground_truth, *ground_truth);
            result.relative_error = denom > 0.0 ? std::sqrt(map.cell_inner(diff, diff) / denom)
                                                : std::sqrt(map.cell_inner(diff, diff));
        }
        return result;
    }
    double g0_norm = -1.0;
    for (int it = 0; it < options.max_iters; ++it) {
        Eigen::ArrayXXd g = map.apply_adjoint(map.data_weights() * r);
        if (options.lambda > 0.0) g += options.lambda * vol * f;
        double g_norm = std::sqrt((g * g).sum());
        if (g0_norm < 0.0) g0_norm = g_norm;
        if (g_norm <= options.grad_tol * std::max(g0_norm, 1e-300)) {
            result.converged = true;
            break;
        }
        Eigen::ArrayXXd lg = map.apply(g);
        double curvature = map.data_inner(lg, lg) + options.lambda * map.cell_inner(g, g);
        if (!(curvature > 0.0)) {
            result.converged = true;  // flat direction: nothing left to descend
            break;
        }
        double alpha = (g * g).sum() / curvature;
        f -= alpha * g;
        r -= alpha * lg;
        result.iters = it + 1;
        double j_new = 0.5 * map.data_inner(r, r) + 0.5 * options.lambda * map.cell_inner(f, f);
        double j_prev = result.objective_history.back();
        result.objective_history.push_back(j_new);
        if (j_new <= options.obj_tol * j0 ||
            std::abs(j_prev - j_new) <= 1e-14 * std::max(j0, 1e-300)) {
            result.converged = true;
            break;
        }
    }
    result.f_hat = f;
    if (ground_truth) {
        Eigen::ArrayXXd diff = f - *ground_truth;
        double denom = map.cell_inner(*ground_truth, *ground_truth);
        result.relative_error =
            denom > 0.0 ? std::sqrt(map.cell_inner(diff, diff) / denom) : std::sqrt(map.cell_inner(diff, diff));
    }
    return result;
}

}  // namespace carleman
