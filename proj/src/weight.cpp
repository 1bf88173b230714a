#include "carleman/weight.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace carleman {

namespace {

struct Extremes {
    double min_v = std::numeric_limits<double>::infinity();
    double max_v = -std::numeric_limits<double>::infinity();
    Vec2 argmin = Vec2::Zero();

    void feed(double v, const Vec2& x) {
        if (v < min_v) {
            min_v = v;
            argmin = x;
        }
        max_v = std::max(max_v, v);
    }
};

}  // namespace

int CarlemanWeight::locate(const Vec2& x) const {
    int id = partition_.locate(x);
    if (id == 0) id = partition_.locate(x, 1e-6 * partition_.domain.diameter());
    if (id == 0) throw std::logic_error("CarlemanWeight: point outside every subdomain");
    return id;
}

CarlemanWeight build_piecewise_weight(const Partition& partition, const VectorField& field,
                                      const StreamGraph& graph,
                                      const std::vector<std::optional<DirectionCone>>& cones,
                                      const RadiusAssignment& radii, std::optional<double> beta,
                                      double horizon, double density, double margin) {
    if (static_cast<int>(cones.size()) != partition.size() ||
        static_cast<int>(radii.r.size()) != partition.size())
        throw std::invalid_argument("build_piecewise_weight: cone/radius count mismatch");
    double delta = uniform_cone_margin(cones);
    RadiusCheck rc = check_radii(radii, graph);
    if (!rc.ok) throw std::invalid_argument("build_piecewise_weight: radii fail their inequalities");

    CarlemanWeight w;
    w.partition_ = partition;
    w.field_ = field;
    w.graph_ = graph;
    w.delta_ = delta;
    w.beta_ = beta.value_or(0.5 * delta);
    if (!(w.beta_ > 0.0) || !(w.beta_ < delta))
        throw std::invalid_argument("build_piecewise_weight: beta must satisfy 0 < beta < delta");
    w.R_ = partition.domain.max_abs();
    w.field_norm_ = radii.field_norm;
    w.T_ = horizon;
    for (const auto& cone : cones) w.v_.push_back(cone->v);
    w.r_ = radii.r;
    w.r_star_ = radii.max_radius();

    // delta2 over directed edges: downstream (head) radius dominates
    w.delta2_ = std::numeric_limits<double>::infinity();
    for (const auto& e : graph.edges) {
        double ri = w.r_[e.head - 1], rj = w.r_[e.tail - 1];
        w.delta2_ = std::min(w.delta2_, ri * ri - 4.0 * rj * rj - 6.0 * w.R_ * w.R_);
    }
    if (!graph.edges.empty() && !(w.delta2_ > 0.0))
        throw std::invalid_argument("build_piecewise_weight: nonpositive delta2");

    // certify the drift bound min B_i > delta on every closed subdomain
    w.min_B_.assign(partition.subdomains.size(), 0.0);
    double max_phi = -std::numeric_limits<double>::infinity();
    for (const auto& sub : partition.subdomains) {
        Extremes drift, phi0;
        for (const auto& x : closure_sample_points(sub, density)) {
            drift.feed(w.drift_node(sub.id, x), x);
            phi0.feed(w.phi_node(sub.id, x, 0.0), x);
        }
        if (!(drift.min_v > delta))
            throw CertificationError("min B fell to " + std::to_string(drift.min_v) +
                                         " <= delta = " + std::to_string(delta) + " on subdomain " +
                                         std::to_string(sub.id),
                                     drift.argmin);
        w.min_B_[sub.id - 1] = drift.min_v;
        max_phi = std::max(max_phi, phi0.max_v);
    }
    w.shift_ = max_phi;
    w.s1_ = compute_s1(w.delta2_, w.r_star_, w.R_, w.field_norm_, w.beta_, delta, 1.0 + margin);
    return w;
}

GeneralWeight make_general_weight(Domain domain, VectorField field,
                                  std::function<double(const Vec2&)> d,
                                  std::function<Vec2(const Vec2&)> grad_d, double beta,
                                  double horizon, double density, WeightStatus status,
                                  bool require_positive_drift) {
    GeneralWeight w;
    w.domain_ = domain;
    w.field_ = std::move(field);
    w.d_ = std::move(d);
    w.grad_d_ = std::move(grad_d);
    w.beta_ = beta;
    w.T_ = horizon;
    w.status_ = status;

    Partition p = trivial_partition(domain);
    Extremes drift, dvals;
    for (const auto& x : closure_sample_points(p.subdomains.front(), density)) {
        drift.feed(w.drift(x), x);
        dvals.feed(w.d_(x), x);
    }
    w.delta3_ = drift.min_v;
    w.shift_ = dvals.max_v;
    if (require_positive_drift && !(w.delta3_ > 0.0))
        throw CertificationError("drift minimum " + std::to_string(w.delta3_) + " is not positive",
                                 drift.argmin);
    return w;
}

GeneralWeight build_condition_A_weight(const Domain& domain, const VectorField& field,
                                       const std::optional<DirectionCone>& cone, double beta,
                                       double horizon, double density, double margin) {
    if (!cone)
        throw ConditionError("A", "no single direction v covers the domain (angle range >= pi)");
    if (!(beta > 0.0)) throw std::invalid_argument("condition-A weight: beta must be positive");
    double field_norm = sup_norm(field, domain, density);
    double R = domain.max_abs();
    double r = (2.0 * R * field_norm + beta) / (2.0 * cone->delta1) * (1.0 + margin);
    Vec2 rv = r * cone->v;
    return make_general_weight(
        domain, field, [rv](const Vec2& x) { return (x + rv).squaredNorm(); },
        [rv](const Vec2& x) { return Vec2(2.0 * (x + rv)); }, beta, horizon, density,
        WeightStatus::Certified, true);
}

GeneralWeight build_potential_weight(const Domain& domain, const VectorField& field,
                                     const std::function<double(const Vec2&)>& rho,
                                     const std::function<Vec2(const Vec2&)>& grad_rho, double beta,
                                     double horizon, double density, double tol) {
    if (!(beta > 0.0)) throw std::invalid_argument("potential weight: beta must be positive");
    Partition p = trivial_partition(domain);
    double worst_mismatch = 0.0;
    double min_grad2 = std::numeric_limits<double>::infinity();
    for (const auto& x : closure_sample_points(p.subdomains.front(), density)) {
        Vec2 g = grad_rho(x);
        worst_mismatch = std::max(worst_mismatch, (field(x) - g).norm());
        min_grad2 = std::min(min_grad2, g.squaredNorm());
    }
    if (worst_mismatch > tol)
        throw std::invalid_argument("potential weight: H differs from grad rho by " +
                                    std::to_string(worst_mismatch));
    if (!(min_grad2 > beta))
        throw std::invalid_argument("potential weight: beta must lie below min |grad rho|^2 = " +
                                    std::to_string(min_grad2));
    return make_general_weight(domain, field, rho, grad_rho, beta, horizon, density,
                               WeightStatus::Certified, true);
}

GeneralWeight build_forced_weight(const Domain& domain, const VectorField& field, const Vec2& v,
                                  double r, double beta, double horizon, double density) {
    if (!(beta > 0.0) || !(r > 0.0))
        throw std::invalid_argument("forced weight: beta and r must be positive");
    if (std::abs(v.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("forced weight: v must be a unit vector");
    Vec2 rv = r * v;
    return make_general_weight(
        domain, field, [rv](const Vec2& x) { return (x + rv).squaredNorm(); },
        [rv](const Vec2& x) { return Vec2(2.0 * (x + rv)); }, beta, horizon, density,
        WeightStatus::Forced, false);
}

double compute_s1(double delta2, double r_star, double domain_radius, double field_norm,
                  double beta, double delta, double safety, double floor_value) {
    if (std::isinf(delta2)) return floor_value;  // edgeless graph: no interface threshold
    if (!(delta2 > 0.0)) throw std::logic_error("compute_s1: delta2 must be positive");
    double ratio = (2.0 * (r_star + domain_radius) * field_norm + beta) / delta;
    double s1 = ratio > 1.0 ? std::log(ratio) / delta2 * safety : 0.0;
    return std::max(s1, floor_value);
}

InterfacePositivity verify_interface_positivity(const CarlemanWeight& weight,
                                                const StreamGraph& graph, double s, double density,
                                                int n_time) {
    if (s < weight.s1() * (1.0 - 1e-12))
        throw std::invalid_argument("verify_interface_positivity: s below s1");
    InterfacePositivity result;
    const auto& interfaces = weight.partition().interfaces;
    for (const auto& e : graph.edges) {
        if (e.interface_index < 0) continue;
        const Interface& iface = interfaces[e.interface_index];
        for (const auto& sample : sample_surface(iface, density)) {
            double b_head = weight.drift_node(e.head, sample.point);
            double b_tail = weight.drift_node(e.tail, sample.point);
            for (int k = 0; k < std::max(n_time, 1); ++k) {
                double t = weight.horizon() * k / std::max(n_time - 1, 1);
                // shifted-log comparison; B > delta > 0 holds for certified weights
                double lhs = std::log(b_head) + 2.0 * s * weight.phi_node(e.head, sample.point, t);
                double rhs = std::log(b_tail) + 2.0 * s * weight.phi_node(e.tail, sample.point, t);
                double margin = lhs - rhs;
                if (margin < result.worst_margin) {
                    result.worst_margin = margin;
                    result.witness = sample.point;
                    result.edge_tail = e.tail;
                    result.edge_head = e.head;
                }
            }
        }
    }
    result.ok = result.worst_margin >= 0.0;
    return result;
}

namespace {

HorizonConstants horizon_from_extremes(double min_d, double max_d, double beta, double T) {
    HorizonConstants hc;
    hc.min_d = min_d;
    hc.max_d = max_d;
    hc.T0 = (max_d - min_d) / beta;
    hc.mu = min_d + beta * T - max_d;
    return hc;
}

}  // namespace

HorizonConstants horizon_constants(const CarlemanWeight& weight, double T, double density) {
    Extremes d;
    for (const auto& sub : weight.partition().subdomains) {
        for (const auto& x : closure_sample_points(sub, density))
            d.feed(weight.phi_node(sub.id, x, 0.0), x);
    }
    return horizon_from_extremes(d.min_v, d.max_v, weight.beta(), T);
}

HorizonConstants horizon_constants(const GeneralWeight& weight, double T, double density) {
    Extremes d;
    Partition p = trivial_partition(weight.domain());
    for (const auto& x : closure_sample_points(p.subdomains.front(), density))
        d.feed(weight.d(x), x);
    return horizon_from_extremes(d.min_v, d.max_v, weight.beta(), T);
}

void write_weight_report(std::ostream& os, const CarlemanWeight& weight,
                         const HorizonConstants& hc) {
    os << "piecewise weight: " << weight.size() << " subdomains\n";
    os << "  i      v_i                r_i            min B_i\n";
    for (int i = 1; i <= weight.size(); ++i) {
        os << "  " << std::left << std::setw(6) << i << "(" << weight.direction(i).x() << ", "
           << weight.direction(i).y() << ")  " << weight.radius(i) << "  " << weight.min_drift(i)
           << "\n";
    }
    os << "delta = " << weight.delta() << "\n";
    os << "beta = " << weight.beta() << "\n";
    os << "delta2 = " << weight.delta2() << "\n";
    os << "s1 = " << weight.s1() << "\n";
    os << "T = " << weight.horizon() << ", T0 = " << hc.T0 << ", mu = " << hc.mu << "\n";
}

void write_weight_report(std::ostream& os, const GeneralWeight& weight,
                         const HorizonConstants& hc) {
    os << "single weight (" << (weight.status() == WeightStatus::Certified ? "certified" : "forced")
       << ")\n";
    os << "beta = " << weight.beta() << "\n";
    os << "delta3 = " << weight.delta3() << "\n";
    os << "d range = [" << hc.min_d << ", " << hc.max_d << "]\n";
    os << "T = " << weight.horizon() << ", T0 = " << hc.T0 << ", mu = " << hc.mu << "\n";
}

}  // namespace carleman
