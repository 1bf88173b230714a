#pragma once

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"

#include <functional>
#include <iosfwd>

namespace carleman {

using SpaceFunction = std::function<double(const Vec2&)>;
using SpaceTimeFunction = std::function<double(const Vec2&, double)>;

enum class GridKind { Cartesian, Polar };

/// Boundary face of the structured grid.
struct Face {
    Vec2 point;       // midpoint
    Vec2 normal;      // outward unit normal
    double weight;    // face measure
    double arclength; // cumulative coordinate along the boundary
    int ia, ja;       // adjacent cell
    int ib, jb;       // next cell inward (-1,-1 when the grid is one cell deep)
    bool inflow;      // (H(point) . normal) < 0
};

// Tensor grid fitted to the domain: Cartesian cells on rectangles, polar
// (r, theta) cells on annuli, periodic in theta. Time step tau = T / n_steps;
// the CFL bound tau * sup|H| / h <= cfl_max is validated at construction.
class Grid {
public:
    Grid() = default;
    static Grid make(const Domain& domain, int n1, int n2, double T, int n_steps,
                     const VectorField& field, double cfl_max = 0.9, bool periodic_x = false);

    const Domain& domain() const { return domain_; }
    GridKind kind() const { return kind_; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    double d1() const { return d1_; }
    double d2() const { return d2_; }
    double tau() const { return tau_; }
    double horizon() const { return T_; }
    int steps() const { return steps_; }
    bool periodic_x() const { return periodic_x_; }
    bool periodic_dim2() const { return kind_ == GridKind::Polar; }

    Vec2 center(int i, int j) const;
    double cell_volume(int i, int j) const;
    double min_spacing() const;

    const std::vector<Face>& faces() const { return faces_; }
    /// time of level n (n = 0 .. steps)
    double time(int n) const { return (n == steps_) ? T_ : n * tau_; }
    double step_length(int n) const { return time(n + 1) - time(n); }

private:
    Domain domain_;
    GridKind kind_ = GridKind::Cartesian;
    int n1_ = 0, n2_ = 0;
    double d1_ = 0, d2_ = 0;
    double tau_ = 0, T_ = 0;
    int steps_ = 0;
    bool periodic_x_ = false;
    std::vector<Face> faces_;
};

// First-order monotone upwind discretization of H . grad, with inflow ghost
// values supplied per boundary face. Coefficients are frozen per (grid,
// field) pair; apply_transpose is the exact transpose of the interior part.
class UpwindOperator {
public:
    UpwindOperator() = default;
    UpwindOperator(const Grid& grid, const VectorField& field);

    Eigen::ArrayXXd apply(const Eigen::ArrayXXd& u, const Eigen::ArrayXd& ghost) const;
    Eigen::ArrayXXd apply_transpose(const Eigen::ArrayXXd& w) const;
    /// max over cells of tau * (|a1|/d1 + |a2|/d2); monotone iff <= 1.
    double monotone_number(double tau) const;
    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
    Eigen::ArrayXXd a1p_, a1m_, a2p_, a2m_;  // signed, already divided by spacing
    // boundary face index lookup, -1 when absent
    std::vector<int> face_lo1_, face_hi1_;
};

// Discrete solution: cell values per time level plus boundary traces and the
// ghost values the stencil used, so the scheme's residual operator can be
// re-applied exactly.
struct GridSolution {
    Grid grid;
    std::vector<Eigen::ArrayXXd> levels;  // steps+1 arrays of n1 x n2
    Eigen::ArrayXXd traces;               // faces x (steps+1)
    Eigen::ArrayXXd ghosts;               // faces x (steps+1)

    const Eigen::ArrayXXd& initial() const { return levels.front(); }
    const Eigen::ArrayXXd& final_slice() const { return levels.back(); }
    int steps() const { return grid.steps(); }
};

/// Upwind finite-volume solve of du/dt + (H . grad u) + p u = F with initial
/// data u0 and prescribed values on the inflow boundary.
GridSolution solve_forward(const Grid& grid, const VectorField& field,
                           const ScalarCoefficient& p, const SpaceTimeSource& F,
                           const SpaceFunction& u0, const SpaceTimeFunction& inflow);

struct DifferentiatedSolution {
    GridSolution y;              // solves the time-differentiated system
    GridSolution u_reconstructed;  // time integral of y, for cross-checking
};

/// System for y = du/dt when F = R(x,t) f(x) and u starts from zero:
/// y(.,0) = R(.,0) f, source (dR/dt) f, homogeneous inflow. Requires
/// min |R(.,0)| > 0.
DifferentiatedSolution solve_differentiated(const Grid& grid, const VectorField& field,
                                            const ScalarCoefficient& p, const SourceFactor& R,
                                            const SpaceFunction& f);

/// Samples a closed-form function onto the grid (ghost cells included), so
/// grid-based diagnostics run on analytic inputs.
GridSolution sample_function(const Grid& grid, const SpaceTimeFunction& u);

/// The scheme's residual at level n: (u^{n+1} - u^n)/tau_n + A_h u^n + p u^n.
/// Solver outputs reproduce their source term exactly.
Eigen::ArrayXXd stencil_residual(const GridSolution& u, const UpwindOperator& op,
                                 const ScalarCoefficient& p, int level);

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> energy;       // E(t) = int u(.,t)^2
    std::vector<double> outflow_cum;  // ||u||^2 on the plus boundary over (0,t)
    std::vector<double> inflow_cum;   // minus boundary over (0,t)
    double source_energy = 0.0;       // ||F||^2 over Q
};

EnergyReport energy_report(const GridSolution& u, const SpaceTimeSource& F);

struct EnergyCheck {
    bool ok = false;
    double c_emp = 0.0;
    double cap = 0.0;
};

/// Smallest constant making E(t) + outflow(0,t) <= C (||F||^2 + inflow(0,T)
/// + E(0)) hold at every level, against the Gronwall-form cap
/// cap_factor * exp((1 + 2M + sup|div H|) T).
EnergyCheck check_energy_estimate(const EnergyReport& report, double M, double div_sup,
                                  double cap_factor = 4.0);

struct SolutionNorms {
    double initial = 0.0;         // ||u(.,0)||_{L2}
    double final_time = 0.0;      // ||u(.,T)||_{L2}
    double bulk = 0.0;            // ||u||_{L2(Q)}
    double boundary = 0.0;        // ||u||_{L2(bdry x (0,T))}
    double boundary_plus = 0.0;
    double boundary_minus = 0.0;
    double dt_boundary = 0.0;     // ||du/dt||_{L2(bdry x (0,T))}
};

SolutionNorms norms(const GridSolution& u);

/// Centered differences of the stored traces in time (one-sided at the ends).
Eigen::ArrayXXd trace_time_derivative(const GridSolution& u);

/// CSV rows t,x,y,u for every level-multiple of `stride`.
void export_solution_csv(std::ostream& os, const GridSolution& u, int stride = 1);
/// CSV rows time,arclength,value.
void export_traces_csv(std::ostream& os, const GridSolution& u);

}  // namespace carleman
