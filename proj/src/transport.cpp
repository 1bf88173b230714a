#include "carleman/transport.hpp"

#include <cmath>
#include <ostream>

namespace carleman {

namespace {

Vec2 polar_er(double theta) { return {std::cos(theta), std::sin(theta)}; }
Vec2 polar_eth(double theta) { return {-std::sin(theta), std::cos(theta)}; }

}  // namespace

Grid Grid::make(const Domain& domain, int n1, int n2, double T, int n_steps,
                const VectorField& field, double cfl_max, bool periodic_x) {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument("grid: need at least 2 cells per direction");
    if (!(T > 0.0) || n_steps < 1) throw std::invalid_argument("grid: bad time parameters");
    Grid g;
    g.domain_ = domain;
    g.n1_ = n1;
    g.n2_ = n2;
    g.T_ = T;
    g.steps_ = n_steps;
    g.tau_ = T / n_steps;
    switch (domain.shape()) {
        case DomainShape::Rectangle:
            g.kind_ = GridKind::Cartesian;
            g.d1_ = (domain.x_hi() - domain.x_lo()) / n1;
            g.d2_ = (domain.y_hi() - domain.y_lo()) / n2;
            g.periodic_x_ = periodic_x;
            break;
        case DomainShape::Annulus:
            g.kind_ = GridKind::Polar;
            g.d1_ = (domain.r_out() - domain.r_in()) / n1;
            g.d2_ = 2.0 * kPi / n2;
            break;
        case DomainShape::Disk:
            throw std::invalid_argument("grid: transport grids support rectangles and annuli");
    }

    double sup_h = 0.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) sup_h = std::max(sup_h, field(g.center(i, j)).norm());
    if (g.tau_ * sup_h / g.min_spacing() > cfl_max)
        throw std::invalid_argument("grid: CFL bound tau*sup|H|/h <= " + std::to_string(cfl_max) +
                                    " violated");

    // boundary faces
    auto push_face = [&](Vec2 point, Vec2 normal, double weight, double arclength, int ia, int ja,
                         int ib, int jb) {
        Face f;
        f.point = point;
        f.normal = normal;
        f.weight = weight;
        f.arclength = arclength;
        f.ia = ia;
        f.ja = ja;
        f.ib = ib;
        f.jb = jb;
        f.inflow = field(point).dot(normal) < 0.0;
        g.faces_.push_back(f);
    };
    if (g.kind_ == GridKind::Cartesian) {
        double x_lo = domain.x_lo(), y_lo = domain.y_lo(), y_hi = domain.y_hi();
        double width = domain.x_hi() - domain.x_lo(), height = y_hi - y_lo;
        if (!periodic_x) {
            for (int j = 0; j < n2; ++j) {  // left, then right
                double y = y_lo + (j + 0.5) * g.d2_;
                push_face({x_lo, y}, {-1, 0}, g.d2_, 2 * width + height + (y_hi - y), 0, j, 1, j);
            }
            for (int j = 0; j < n2; ++j) {
                double y = y_lo + (j + 0.5) * g.d2_;
                push_face({x_lo + width, y}, {1, 0}, g.d2_, width + (y - y_lo), n1 - 1, j, n1 - 2, j);
            }
        }
        for (int i = 0; i < n1; ++i) {  // bottom, then top
            double x = x_lo + (i + 0.5) * g.d1_;
            push_face({x, y_lo}, {0, -1}, g.d1_, x - x_lo, i, 0, i, 1);
        }
        for (int i = 0; i < n1; ++i) {
            double x = x_lo + (i + 0.5) * g.d1_;
            push_face({x, y_hi}, {0, 1}, g.d1_, 2 * width + height - (x - x_lo), i, n2 - 1, i, n2 - 2);
        }
    } else {
        double r_in = domain.r_in(), r_out = domain.r_out();
        for (int j = 0; j < n2; ++j) {  // inner circle
            double th = (j + 0.5) * g.d2_;
            push_face(r_in * polar_er(th), -polar_er(th), r_in * g.d2_, r_in * th, 0, j, 1, j);
        }
        for (int j = 0; j < n2; ++j) {  // outer circle
            double th = (j + 0.5) * g.d2_;
            push_face(r_out * polar_er(th), polar_er(th), r_out * g.d2_,
                      2 * kPi * r_in + r_out * th, n1 - 1, j, n1 - 2, j);
        }
    }
    return g;
}

Vec2 Grid::center(int i, int j) const {
    if (kind_ == GridKind::Cartesian)
        return {domain_.x_lo() + (i + 0.5) * d1_, domain_.y_lo() + (j + 0.5) * d2_};
    double r = domain_.r_in() + (i + 0.5) * d1_;
    double th = (j + 0.5) * d2_;
    return r * polar_er(th);
}

double Grid::cell_volume(int i, int j) const {
    (void)j;
    if (kind_ == GridKind::Cartesian) return d1_ * d2_;
    double r = domain_.r_in() + (i + 0.5) * d1_;
    return r * d1_ * d2_;
}

double Grid::min_spacing() const {
    if (kind_ == GridKind::Cartesian) return std::min(d1_, d2_);
    return std::min(d1_, domain_.r_in() * d2_);
}

UpwindOperator::UpwindOperator(const Grid& grid, const VectorField& field) : grid_(grid) {
    int n1 = grid.n1(), n2 = grid.n2();
    a1p_.resize(n1, n2);
    a1m_.resize(n1, n2);
    a2p_.resize(n1, n2);
    a2m_.resize(n1, n2);
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            Vec2 h = field(grid.center(i, j));
            double a1, a2;
            if (grid.kind() == GridKind::Cartesian) {
                a1 = h.x();
                a2 = h.y();
            } else {
                double r = grid.domain().r_in() + (i + 0.5) * grid.d1();
                double th = (j + 0.5) * grid.d2();
                a1 = h.dot(polar_er(th));
                a2 = h.dot(polar_eth(th)) / r;
            }
            a1p_(i, j) = std::max(a1, 0.0) / grid.d1();
            a1m_(i, j) = std::min(a1, 0.0) / grid.d1();
            a2p_(i, j) = std::max(a2, 0.0) / grid.d2();
            a2m_(i, j) = std::min(a2, 0.0) / grid.d2();
        }
    }
    face_lo1_.assign(n2, -1);
    face_hi1_.assign(n2, -1);
    const auto& faces = grid_.faces();
    for (std::size_t k = 0; k < faces.size(); ++k) {
        const Face& f = faces[k];
        if (f.ia == 0 && f.ib == 1 && f.ja == f.jb) face_lo1_[f.ja] = static_cast<int>(k);
        if (f.ia == grid_.n1() - 1 && f.ib == grid_.n1() - 2 && f.ja == f.jb)
            face_hi1_[f.ja] = static_cast<int>(k);
    }
}

Eigen::ArrayXXd UpwindOperator::apply(const Eigen::ArrayXXd& u, const Eigen::ArrayXd& ghost) const {
    int n1 = grid_.n1(), n2 = grid_.n2();
    bool wrap2 = grid_.periodic_dim2();
    bool wrap1 = grid_.periodic_x();
    Eigen::ArrayXXd out(n1, n2);
    const auto& faces = grid_.faces();
    // Cartesian low2/high2 faces follow the lo1/hi1 blocks in construction
    // order; locate them once per column group
    int lo2_base = -1, hi2_base = -1;
    if (grid_.kind() == GridKind::Cartesian && !wrap2) {
        int side = wrap1 ? 0 : 2 * n2;
        lo2_base = side;
        hi2_base = side + n1;
        (void)faces;
    }
    for (int j = 0; j < n2; ++j) {
        int jm = (j > 0) ? j - 1 : (wrap2 ? n2 - 1 : -1);
        int jp = (j < n2 - 1) ? j + 1 : (wrap2 ? 0 : -1);
        for (int i = 0; i < n1; ++i) {
            double uc = u(i, j);
            double u_im, u_ip, u_jm, u_jp;
            if (i > 0) {
                u_im = u(i - 1, j);
            } else if (wrap1) {
                u_im = u(n1 - 1, j);
            } else {
                u_im = ghost(face_lo1_[j]);
            }
            if (i < n1 - 1) {
                u_ip = u(i + 1, j);
            } else if (wrap1) {
                u_ip = u(0, j);
            } else {
                u_ip = ghost(face_hi1_[j]);
            }
            if (jm >= 0) {
                u_jm = u(i, jm);
            } else {
                u_jm = ghost(lo2_base + i);
            }
            if (jp >= 0) {
                u_jp = u(i, jp);
            } else {
                u_jp = ghost(hi2_base + i);
            }
            out(i, j) = a1p_(i, j) * (uc - u_im) + a1m_(i, j) * (u_ip - uc) +
                        a2p_(i, j) * (uc - u_jm) + a2m_(i, j) * (u_jp - uc);
        }
    }
    return out;
}

Eigen::ArrayXXd UpwindOperator::apply_transpose(const Eigen::ArrayXXd& w) const {
    int n1 = grid_.n1(), n2 = grid_.n2();
    bool wrap2 = grid_.periodic_dim2();
    bool wrap1 = grid_.periodic_x();
    Eigen::ArrayXXd out(n1, n2);
    for (int j = 0; j < n2; ++j) {
        int jm = (j > 0) ? j - 1 : (wrap2 ? n2 - 1 : -1);
        int jp = (j < n2 - 1) ? j + 1 : (wrap2 ? 0 : -1);
        for (int i = 0; i < n1; ++i) {
            double acc = (a1p_(i, j) - a1m_(i, j) + a2p_(i, j) - a2m_(i, j)) * w(i, j);
            if (i < n1 - 1) {
                acc -= a1p_(i + 1, j) * w(i + 1, j);
            } else if (wrap1) {
                acc -= a1p_(0, j) * w(0, j);
            }
            if (i > 0) {
                acc += a1m_(i - 1, j) * w(i - 1, j);
            } else if (wrap1) {
                acc += a1m_(n1 - 1, j) * w(n1 - 1, j);
            }
            if (jp >= 0) acc -= a2p_(i, jp) * w(i, jp);
            if (jm >= 0) acc += a2m_(i, jm) * w(i, jm);
            out(i, j) = acc;
        }
    }
    return out;
}

double UpwindOperator::monotone_number(double tau) const {
    return tau * (a1p_ - a1m_ + a2p_ - a2m_).maxCoeff();
}

namespace {

double extrapolated_trace(const Eigen::ArrayXXd& u, const Face& f) {
    if (f.ib < 0 || f.jb < 0) return u(f.ia, f.ja);
    return 1.5 * u(f.ia, f.ja) - 0.5 * u(f.ib, f.jb);
}

Vec2 ghost_center(const Grid& grid, const Face& f) {
    double half = (f.ia == f.ib) ? grid.d2() : grid.d1();
    if (grid.kind() == GridKind::Polar) half = grid.d1();
    return f.point + 0.5 * half * f.normal;
}

}  // namespace

GridSolution solve_forward(const Grid& grid, const VectorField& field, const ScalarCoefficient& p,
                           const SpaceTimeSource& F, const SpaceFunction& u0,
                           const SpaceTimeFunction& inflow) {
    UpwindOperator op(grid, field);
    if (op.monotone_number(grid.tau()) > 1.0 + 1e-12)
        throw std::invalid_argument("solve_forward: time step violates upwind monotonicity");

    int n1 = grid.n1(), n2 = grid.n2(), steps = grid.steps();
    int n_faces = static_cast<int>(grid.faces().size());

    GridSolution sol;
    sol.grid = grid;
    sol.levels.reserve(steps + 1);
    sol.traces.resize(n_faces, steps + 1);
    sol.ghosts.resize(n_faces, steps + 1);

    Eigen::ArrayXXd u(n1, n2), p_cells(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            u(i, j) = u0(grid.center(i, j));
            p_cells(i, j) = p(grid.center(i, j));
        }
    sol.levels.push_back(u);

    auto record_boundary = [&](int level, const Eigen::ArrayXXd& ul, double t) {
        for (int k = 0; k < n_faces; ++k) {
            const Face& f = grid.faces()[k];
            double v = f.inflow ? inflow(f.point, t) : extrapolated_trace(ul, f);
            sol.traces(k, level) = v;
            sol.ghosts(k, level) = v;
        }
    };

    for (int n = 0; n < steps; ++n) {
        double t = grid.time(n);
        double tau_n = grid.step_length(n);
        record_boundary(n, u, t);
        Eigen::ArrayXXd rhs = op.apply(u, sol.ghosts.col(n));
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                rhs(i, j) += p_cells(i, j) * u(i, j) - F(grid.center(i, j), t);
        u -= tau_n * rhs;
        if (!u.allFinite()) throw DivergenceError(n + 1, "non-finite cell value");
        sol.levels.push_back(u);
    }
    record_boundary(steps, u, grid.horizon());
    return sol;
}

GridSolution sample_function(const Grid& grid, const SpaceTimeFunction& u) {
    int n1 = grid.n1(), n2 = grid.n2(), steps = grid.steps();
    int n_faces = static_cast<int>(grid.faces().size());
    GridSolution sol;
    sol.grid = grid;
    sol.levels.reserve(steps + 1);
    sol.traces.resize(n_faces, steps + 1);
    sol.ghosts.resize(n_faces, steps + 1);
    for (int n = 0; n <= steps; ++n) {
        double t = grid.time(n);
        Eigen::ArrayXXd level(n1, n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) level(i, j) = u(grid.center(i, j), t);
        sol.levels.push_back(std::move(level));
        for (int k = 0; k < n_faces; ++k) {
            const Face& f = grid.faces()[k];
            sol.traces(k, n) = u(f.point, t);
            sol.ghosts(k, n) = u(ghost_center(grid, f), t);
        }
    }
    return sol;
}

DifferentiatedSolution solve_differentiated(const Grid& grid, const VectorField& field,
                                            const ScalarCoefficient& p, const SourceFactor& R,
                                            const SpaceFunction& f) {
    double density = 2.0 * std::max(grid.n1(), grid.n2()) / grid.domain().diameter();
    double floor_value = R.initial_floor(grid.domain(), density);
    if (!(floor_value > 0.0))
        throw ConditionError("4.8", "|R(.,0)| vanishes somewhere (floor = " +
                                        std::to_string(floor_value) + ")");

    auto y0 = [&](const Vec2& x) { return R(x, 0.0) * f(x); };
    auto source = SpaceTimeSource::custom([&](const Vec2& x, double t) { return R.dt(x, t) * f(x); });
    auto zero_inflow = [](const Vec2&, double) { return 0.0; };

    DifferentiatedSolution out;
    out.y = solve_forward(grid, field, p, source, y0, zero_inflow);

    // u(., t_n) by trapezoidal accumulation of y
    GridSolution& u = out.u_reconstructed;
    u.grid = grid;
    int n_faces = static_cast<int>(grid.faces().size());
    u.traces.resize(n_faces, grid.steps() + 1);
    u.ghosts.resize(n_faces, grid.steps() + 1);
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(grid.n1(), grid.n2());
    Eigen::ArrayXd acc_tr = Eigen::ArrayXd::Zero(n_faces);
    Eigen::ArrayXd acc_gh = Eigen::ArrayXd::Zero(n_faces);
    u.levels.push_back(acc);
    u.traces.col(0) = acc_tr;
    u.ghosts.col(0) = acc_gh;
    for (int n = 0; n < grid.steps(); ++n) {
        double tau_n = grid.step_length(n);
        acc += 0.5 * tau_n * (out.y.levels[n] + out.y.levels[n + 1]);
        acc_tr += 0.5 * tau_n * (out.y.traces.col(n) + out.y.traces.col(n + 1)).array();
        acc_gh += 0.5 * tau_n * (out.y.ghosts.col(n) + out.y.ghosts.col(n + 1)).array();
        u.levels.push_back(acc);
        u.traces.col(n + 1) = acc_tr;
        u.ghosts.col(n + 1) = acc_gh;
    }
    return out;
}

Eigen::ArrayXXd stencil_residual(const GridSolution& u, const UpwindOperator& op,
                                 const ScalarCoefficient& p, int level) {
    if (level < 0 || level >= u.steps()) throw std::invalid_argument("stencil_residual: bad level");
    const Grid& grid = u.grid;
    double tau_n = grid.step_length(level);
    Eigen::ArrayXXd res = (u.levels[level + 1] - u.levels[level]) / tau_n +
                          op.apply(u.levels[level], u.ghosts.col(level));
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) res(i, j) += p(grid.center(i, j)) * u.levels[level](i, j);
    return res;
}

EnergyReport energy_report(const GridSolution& u, const SpaceTimeSource& F) {
    const Grid& grid = u.grid;
    EnergyReport report;
    int steps = u.steps();
    Eigen::ArrayXXd vol(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) vol(i, j) = grid.cell_volume(i, j);

    auto boundary_rate = [&](int level, bool plus) {
        double rate = 0.0;
        for (std::size_t k = 0; k < grid.faces().size(); ++k) {
            const Face& f = grid.faces()[k];
            if (f.inflow == plus) continue;
            double v = u.traces(static_cast<int>(k), level);
            rate += f.weight * v * v;
        }
        return rate;
    };

    double out_cum = 0.0, in_cum = 0.0;
    double prev_out = boundary_rate(0, true), prev_in = boundary_rate(0, false);
    for (int n = 0; n <= steps; ++n) {
        report.times.push_back(grid.time(n));
        report.energy.push_back((vol * u.levels[n].square()).sum());
        if (n > 0) {
            double tau_n = grid.step_length(n - 1);
            double cur_out = boundary_rate(n, true), cur_in = boundary_rate(n, false);
            out_cum += 0.5 * tau_n * (prev_out + cur_out);
            in_cum += 0.5 * tau_n * (prev_in + cur_in);
            prev_out = cur_out;
            prev_in = cur_in;
        }
        report.outflow_cum.push_back(out_cum);
        report.inflow_cum.push_back(in_cum);
    }
    for (int n = 0; n < steps; ++n) {
        double tau_n = grid.step_length(n);
        double t = grid.time(n);
        double sum = 0.0;
        for (int i = 0; i < grid.n1(); ++i)
            for (int j = 0; j < grid.n2(); ++j) {
                double fv = F(grid.center(i, j), t);
                sum += vol(i, j) * fv * fv;
            }
        report.source_energy += tau_n * sum;
    }
    return report;
}

EnergyCheck check_energy_estimate(const EnergyReport& report, double M, double div_sup,
                                  double cap_factor) {
    EnergyCheck check;
    double T = report.times.back();
    check.cap = cap_factor * std::exp((1.0 + 2.0 * M + div_sup) * T);
    double denom = report.source_energy + report.inflow_cum.back() + report.energy.front();
    double num_max = 0.0;
    for (std::size_t n = 0; n < report.energy.size(); ++n)
        num_max = std::max(num_max, report.energy[n] + report.outflow_cum[n]);
    if (denom > 0.0) {
        check.c_emp = num_max / denom;
    } else {
        check.c_emp = (num_max == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    check.ok = check.c_emp <= check.cap;
    return check;
}

Eigen::ArrayXXd trace_time_derivative(const GridSolution& u) {
    const Grid& grid = u.grid;
    int steps = u.steps();
    Eigen::ArrayXXd z(u.traces.rows(), steps + 1);
    z.col(0) = (u.traces.col(1) - u.traces.col(0)) / grid.step_length(0);
    for (int n = 1; n < steps; ++n)
        z.col(n) = (u.traces.col(n + 1) - u.traces.col(n - 1)) / (grid.time(n + 1) - grid.time(n - 1));
    z.col(steps) = (u.traces.col(steps) - u.traces.col(steps - 1)) / grid.step_length(steps - 1);
    return z;
}

namespace {

/// trapezoid weights over the time levels
std::vector<double> time_weights(const Grid& grid) {
    int steps = grid.steps();
    std::vector<double> w(steps + 1, 0.0);
    for (int n = 0; n < steps; ++n) {
        double tau_n = grid.step_length(n);
        w[n] += 0.5 * tau_n;
        w[n + 1] += 0.5 * tau_n;
    }
    return w;
}

double boundary_norm_sq(const GridSolution& u, const Eigen::ArrayXXd& values, int want_inflow,
                        const std::vector<double>& tw) {
    double total = 0.0;
    for (std::size_t k = 0; k < u.grid.faces().size(); ++k) {
        const Face& f = u.grid.faces()[k];
        if (want_inflow >= 0 && static_cast<int>(f.inflow) != want_inflow) continue;
        for (int n = 0; n < values.cols(); ++n) {
            double v = values(static_cast<int>(k), n);
            total += tw[n] * f.weight * v * v;
        }
    }
    return total;
}

}  // namespace

SolutionNorms norms(const GridSolution& u) {
    const Grid& grid = u.grid;
    SolutionNorms out;
    Eigen::ArrayXXd vol(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) vol(i, j) = grid.cell_volume(i, j);
    out.initial = std::sqrt((vol * u.initial().square()).sum());
    out.final_time = std::sqrt((vol * u.final_slice().square()).sum());
    double bulk = 0.0;
    for (int n = 0; n < u.steps(); ++n)
        bulk += grid.step_length(n) * (vol * u.levels[n].square()).sum();
    out.bulk = std::sqrt(bulk);

    auto tw = time_weights(grid);
    out.boundary = std::sqrt(boundary_norm_sq(u, u.traces, -1, tw));
    out.boundary_plus = std::sqrt(boundary_norm_sq(u, u.traces, 0, tw));
    out.boundary_minus = std::sqrt(boundary_norm_sq(u, u.traces, 1, tw));
    out.dt_boundary = std::sqrt(boundary_norm_sq(u, trace_time_derivative(u), -1, tw));
    return out;
}

void export_solution_csv(std::ostream& os, const GridSolution& u, int stride) {
    os << "t,x,y,u\n";
    for (int n = 0; n <= u.steps(); n += std::max(stride, 1)) {
        double t = u.grid.time(n);
        for (int i = 0; i < u.grid.n1(); ++i)
            for (int j = 0; j < u.grid.n2(); ++j) {
                Vec2 c = u.grid.center(i, j);
                os << fmt(t) << ',' << fmt(c.x()) << ',' << fmt(c.y()) << ','
                   << fmt(u.levels[n](i, j)) << "\n";
            }
    }
}

void export_traces_csv(std::ostream& os, const GridSolution& u) {
    os << "time,arclength,value\n";
    for (int n = 0; n <= u.steps(); ++n) {
        double t = u.grid.time(n);
        for (std::size_t k = 0; k < u.grid.faces().size(); ++k)
            os << fmt(t) << ',' << fmt(u.grid.faces()[k].arclength) << ','
               << fmt(u.traces(static_cast<int>(k), n)) << "\n";
    }
}

}  // namespace carleman
