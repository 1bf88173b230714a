#pragma once

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"
#include "carleman/stream_graph.hpp"

#include <iosfwd>
#include <limits>

namespace carleman {

// Piecewise quadratic weight phi_i(x,t) = |x + r_i v_i|^2 - beta t on the
// subdomains of a partition, with every derived constant certified by
// sampling at construction: 0 < beta < delta, min B_i > delta on each
// closed subdomain, and the radius gaps delta2 over the graph edges.
class CarlemanWeight {
public:
    CarlemanWeight() = default;

    const Partition& partition() const { return partition_; }
    const VectorField& field() const { return field_; }
    const StreamGraph& graph() const { return graph_; }

    int size() const { return static_cast<int>(v_.size()); }
    Vec2 direction(int node) const { return v_[node - 1]; }
    double radius(int node) const { return r_[node - 1]; }

    double beta() const { return beta_; }
    double delta() const { return delta_; }
    double delta2() const { return delta2_; }
    double s1() const { return s1_; }
    double domain_radius() const { return R_; }
    double field_norm() const { return field_norm_; }
    double max_radius() const { return r_star_; }
    double horizon() const { return T_; }
    double min_drift(int node) const { return min_B_[node - 1]; }

    /// max over closure(Q) of phi; subtracted before exponentiation.
    double shift() const { return shift_; }

    double phi_node(int node, const Vec2& x, double t) const {
        return (x + r_[node - 1] * v_[node - 1]).squaredNorm() - beta_ * t;
    }
    Vec2 grad_phi_node(int node, const Vec2& x) const { return 2.0 * (x + r_[node - 1] * v_[node - 1]); }
    double drift_node(int node, const Vec2& x) const {
        return grad_phi_node(node, x).dot(field_(x)) - beta_;
    }
    /// phi at x using the subdomain that claims x.
    double phi(const Vec2& x, double t) const { return phi_node(locate(x), x, t); }
    int locate(const Vec2& x) const;

    friend CarlemanWeight build_piecewise_weight(const Partition&, const VectorField&,
                                                 const StreamGraph&,
                                                 const std::vector<std::optional<DirectionCone>>&,
                                                 const RadiusAssignment&, std::optional<double>,
                                                 double, double, double);

private:
    Partition partition_;
    VectorField field_;
    StreamGraph graph_;
    std::vector<Vec2> v_;
    std::vector<double> r_;
    std::vector<double> min_B_;
    double beta_ = 0.0, delta_ = 0.0;
    double delta2_ = std::numeric_limits<double>::infinity();
    double s1_ = 0.0, R_ = 0.0, field_norm_ = 0.0, r_star_ = 0.0, T_ = 0.0;
    double shift_ = 0.0;
};

enum class WeightStatus {
    Certified,  // drift positivity held on every sample
    Forced      // built unconditionally for counterexample runs
};

// Single weight phi(x,t) = d(x) - beta t with drift B = (grad d . H) - beta.
class GeneralWeight {
public:
    GeneralWeight() = default;

    const Domain& domain() const { return domain_; }
    const VectorField& field() const { return field_; }

    double d(const Vec2& x) const { return d_(x); }
    Vec2 grad_d(const Vec2& x) const { return grad_d_(x); }
    double drift(const Vec2& x) const { return grad_d_(x).dot(field_(x)) - beta_; }
    double phi(const Vec2& x, double t) const { return d_(x) - beta_ * t; }

    double beta() const { return beta_; }
    double delta3() const { return delta3_; }
    double horizon() const { return T_; }
    double shift() const { return shift_; }
    WeightStatus status() const { return status_; }

    friend GeneralWeight make_general_weight(Domain, VectorField,
                                             std::function<double(const Vec2&)>,
                                             std::function<Vec2(const Vec2&)>, double, double,
                                             double, WeightStatus, bool);

private:
    Domain domain_;
    VectorField field_;
    std::function<double(const Vec2&)> d_;
    std::function<Vec2(const Vec2&)> grad_d_;
    double beta_ = 0.0, delta3_ = 0.0, T_ = 0.0, shift_ = 0.0;
    WeightStatus status_ = WeightStatus::Certified;
};

/// Builds and certifies the piecewise weight. beta defaults to delta / 2;
/// the radii must already satisfy check_radii.
CarlemanWeight build_piecewise_weight(const Partition& partition, const VectorField& field,
                                      const StreamGraph& graph,
                                      const std::vector<std::optional<DirectionCone>>& cones,
                                      const RadiusAssignment& radii,
                                      std::optional<double> beta = std::nullopt,
                                      double horizon = 1.0, double density = 100.0,
                                      double margin = 0.1);

/// Single weight d = |x + r v|^2 with the radius bound of the one-piece
/// estimate, r = (2 R |H| + beta) / (2 delta1) scaled by (1 + margin).
GeneralWeight build_condition_A_weight(const Domain& domain, const VectorField& field,
                                       const std::optional<DirectionCone>& cone, double beta,
                                       double horizon = 1.0, double density = 100.0,
                                       double margin = 0.1);

/// Potential-flow weight d = rho for H = grad rho; requires the sampled
/// consistency |H - grad rho| <= tol and min |grad rho|^2 > beta.
GeneralWeight build_potential_weight(const Domain& domain, const VectorField& field,
                                     const std::function<double(const Vec2&)>& rho,
                                     const std::function<Vec2(const Vec2&)>& grad_rho, double beta,
                                     double horizon = 1.0, double density = 100.0,
                                     double tol = 1e-8);

/// Uncertified single weight d = |x + r v|^2 for expected-failure studies.
GeneralWeight build_forced_weight(const Domain& domain, const VectorField& field, const Vec2& v,
                                  double r, double beta, double horizon, double density = 100.0);

/// Smallest parameter satisfying e^{s1 delta2} > (2 (r* + R) |H| + beta) / delta,
/// scaled by the safety factor; clamped below by `floor`.
double compute_s1(double delta2, double r_star, double domain_radius, double field_norm,
                  double beta, double delta, double safety = 1.1, double floor_value = 0.0);

struct InterfacePositivity {
    bool ok = true;
    double worst_margin = std::numeric_limits<double>::infinity();  // shifted-log scale
    Vec2 witness{0, 0};
    int edge_tail = 0, edge_head = 0;
};

/// Checks log B_i + 2 s phi_i >= log B_j + 2 s phi_j on every interface
/// sample of every edge j -> i (i downstream), for s >= s1.
InterfacePositivity verify_interface_positivity(const CarlemanWeight& weight,
                                                const StreamGraph& graph, double s,
                                                double density = 100.0, int n_time = 3);

struct HorizonConstants {
    double min_d = 0.0, max_d = 0.0;
    double T0 = 0.0;  // (max d - min d) / beta
    double mu = 0.0;  // min d + beta T - max d; positive iff T > T0
};

HorizonConstants horizon_constants(const CarlemanWeight& weight, double T, double density = 100.0);
HorizonConstants horizon_constants(const GeneralWeight& weight, double T, double density = 100.0);

/// Structured text table: per-subdomain (v_i, r_i, min B_i) plus the derived
/// constants delta, beta, delta2, s1, T0, mu.
void write_weight_report(std::ostream& os, const CarlemanWeight& weight, const HorizonConstants& hc);
void write_weight_report(std::ostream& os, const GeneralWeight& weight, const HorizonConstants& hc);

}  // namespace carleman
