#pragma once

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"

#include <iosfwd>
#include <optional>

namespace carleman {

enum class SignKind { Positive, Negative, Zero, Indefinite };

/// Sign classification of (H . nu_{i->j}) over an interface, with the
/// sampled extrema and, for Indefinite, a witness pair of sample points.
struct EdgeSign {
    SignKind kind = SignKind::Zero;
    double min_dot = 0.0;
    double max_dot = 0.0;
    std::optional<std::pair<Vec2, Vec2>> witness;  // (negative point, positive point)
};

struct GraphEdge {
    int tail = 0;          // upstream node id
    int head = 0;          // downstream node id
    int interface_index = -1;  // into Partition::interfaces, -1 for synthetic graphs
};

/// Directed graph: one node per subdomain, one edge per interface with a
/// single-signed nonzero normal flux, oriented with the flow.
struct StreamGraph {
    int n_nodes = 0;
    std::vector<GraphEdge> edges;

    std::vector<int> outgoing(int node) const;  // J_+(O_i): heads of edges with tail == node
    std::vector<int> incoming(int node) const;  // J_-(O_i)
};

/// Radii per node together with the constants of the inequalities they must
/// satisfy: r_i^2 > 4 r_j^2 + 6 R^2 along every edge j -> i, and
/// min_i r_i > max(R*H_norm/delta + 1, R).
struct RadiusAssignment {
    std::vector<double> r;  // 1-based indexing via r[id-1]
    double margin = 0.0;
    double domain_radius = 0.0;  // R
    double field_norm = 0.0;     // sup |H|
    double delta = 0.0;          // uniform cone margin
    int max_depth = 0;           // longest directed path feeding any node
    bool depth_flagged = false;  // max_depth > 50: radii near the double range limit

    double base_value() const;
    double max_radius() const;  // r*
};

struct RadiusViolation {
    int i = 0, j = 0;  // 0 j means the base bound (3.11) failed at node i
    double lhs = 0.0, rhs = 0.0;
};

struct RadiusCheck {
    bool ok = true;
    std::vector<RadiusViolation> violations;
};

EdgeSign classify_interface_sign(const VectorField& field, const Interface& interface,
                                 double density, double tol_sign);

/// Builds the stream graph; throws ConditionError("B") if any interface
/// classifies as Indefinite.
StreamGraph build_graph(const Partition& partition, const VectorField& field, double density,
                        double tol_sign);

/// Convenience overload with tol_sign = sign_rel * sup|H|.
StreamGraph build_graph(const Partition& partition, const VectorField& field, double density);

bool has_closed_loop(const StreamGraph& graph);

/// Node sequence of one directed cycle (first node repeated at the end), or
/// empty when the graph is acyclic.
std::vector<int> find_cycle(const StreamGraph& graph);

/// Nodes with incoming edges and no outgoing edges.
std::vector<int> terminus_nodes(const StreamGraph& graph);

/// Constructive radius assignment by upstream peeling in topological order.
/// Throws NoAssignmentError when the graph has a closed loop.
RadiusAssignment assign_radii(const StreamGraph& graph, double domain_radius, double field_norm,
                              double delta, double margin);

RadiusCheck check_radii(const RadiusAssignment& assignment, const StreamGraph& graph);

/// Text digraph export: "i -> j" per edge plus node annotation lines.
void write_digraph(std::ostream& os, const StreamGraph& graph,
                   const std::vector<std::optional<DirectionCone>>& cones = {},
                   const RadiusAssignment* radii = nullptr);

}  // namespace carleman
