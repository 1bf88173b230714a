#include "carleman/stream_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <queue>
#include <sstream>

namespace carleman {

std::vector<int> StreamGraph::outgoing(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
        if (e.tail == node) out.push_back(e.head);
    return out;
}

std::vector<int> StreamGraph::incoming(int node) const {
    std::vector<int> in;
    for (const auto& e : edges)
        if (e.head == node) in.push_back(e.tail);
    return in;
}

double RadiusAssignment::base_value() const {
    return std::max(domain_radius * field_norm / delta + 1.0, domain_radius) + margin;
}

double RadiusAssignment::max_radius() const {
    return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
}

EdgeSign classify_interface_sign(const VectorField& field, const Interface& interface,
                                 double density, double tol_sign) {
    auto samples = sample_surface(interface, density);
    if (samples.size() < 16) {
        // refine until the minimum sample count holds
        double boost = 16.0 / std::max<std::size_t>(samples.size(), 1);
        samples = sample_surface(interface, density * (boost + 1.0));
    }
    EdgeSign sign;
    sign.min_dot = std::numeric_limits<double>::infinity();
    sign.max_dot = -std::numeric_limits<double>::infinity();
    Vec2 neg_witness = Vec2::Zero(), pos_witness = Vec2::Zero();
    for (const auto& s : samples) {
        double dot = field(s.point).dot(s.normal);
        if (dot < sign.min_dot) {
            sign.min_dot = dot;
            neg_witness = s.point;
        }
        if (dot > sign.max_dot) {
            sign.max_dot = dot;
            pos_witness = s.point;
        }
    }
    if (sign.min_dot > tol_sign) {
        sign.kind = SignKind::Positive;
    } else if (sign.max_dot < -tol_sign) {
        sign.kind = SignKind::Negative;
    } else if (std::abs(sign.min_dot) <= tol_sign && std::abs(sign.max_dot) <= tol_sign) {
        sign.kind = SignKind::Zero;
    } else {
        sign.kind = SignKind::Indefinite;
        sign.witness = std::make_pair(neg_witness, pos_witness);
    }
    return sign;
}

StreamGraph build_graph(const Partition& partition, const VectorField& field, double density,
                        double tol_sign) {
    StreamGraph graph;
    graph.n_nodes = partition.size();
    for (std::size_t k = 0; k < partition.interfaces.size(); ++k) {
        const Interface& iface = partition.interfaces[k];
        if (iface.area() <= 0.0) continue;
        EdgeSign sign = classify_interface_sign(field, iface, density, tol_sign);
        switch (sign.kind) {
            case SignKind::Zero: break;  // not connected
            case SignKind::Positive:
                graph.edges.push_back({iface.i, iface.j, static_cast<int>(k)});
                break;
            case SignKind::Negative:
                graph.edges.push_back({iface.j, iface.i, static_cast<int>(k)});
                break;
            case SignKind::Indefinite: {
                std::ostringstream msg;
                msg << "interface (" << iface.i << "," << iface.j << ") changes sign: negative at ("
                    << sign.witness->first.x() << "," << sign.witness->first.y()
                    << "), positive at (" << sign.witness->second.x() << ","
                    << sign.witness->second.y() << ")";
                throw ConditionError("B", msg.str());
            }
        }
    }
    return graph;
}

StreamGraph build_graph(const Partition& partition, const VectorField& field, double density) {
    double norm = sup_norm(field, partition.domain, density);
    return build_graph(partition, field, density, Tolerances::sign_rel * norm);
}

bool has_closed_loop(const StreamGraph& graph) {
    // iterative DFS with back-edge detection
    enum : uint8_t { White, Grey, Black };
    std::vector<uint8_t> color(graph.n_nodes + 1, White);
    std::vector<std::vector<int>> adj(graph.n_nodes + 1);
    for (const auto& e : graph.edges) adj[e.tail].push_back(e.head);
    for (int start = 1; start <= graph.n_nodes; ++start) {
        if (color[start] != White) continue;
        std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
        color[start] = Grey;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < adj[node].size()) {
                int child = adj[node][next++];
                if (color[child] == Grey) return true;
                if (color[child] == White) {
                    color[child] = Grey;
                    stack.push_back({child, 0});
                }
            } else {
                color[node] = Black;
                stack.pop_back();
            }
        }
    }
    return false;
}

std::vector<int> find_cycle(const StreamGraph& graph) {
    enum : uint8_t { White, Grey, Black };
    std::vector<uint8_t> color(graph.n_nodes + 1, White);
    std::vector<std::vector<int>> adj(graph.n_nodes + 1);
    for (const auto& e : graph.edges) adj[e.tail].push_back(e.head);
    std::vector<int> path;
    std::function<std::vector<int>(int)> visit = [&](int node) -> std::vector<int> {
        color[node] = Grey;
        path.push_back(node);
        for (int child : adj[node]) {
            if (color[child] == Grey) {
                auto it = std::find(path.begin(), path.end(), child);
                std::vector<int> cycle(it, path.end());
                cycle.push_back(child);
                return cycle;
            }
            if (color[child] == White) {
                auto cycle = visit(child);
                if (!cycle.empty()) return cycle;
            }
        }
        color[node] = Black;
        path.pop_back();
        return {};
    };
    for (int start = 1; start <= graph.n_nodes; ++start) {
        if (color[start] != White) {
            continue;
        }
        auto cycle = visit(start);
        if (!cycle.empty()) return cycle;
    }
    return {};
}

std::vector<int> terminus_nodes(const StreamGraph& graph) {
    std::vector<int> out_degree(graph.n_nodes + 1, 0), in_degree(graph.n_nodes + 1, 0);
    for (const auto& e : graph.edges) {
        ++out_degree[e.tail];
        ++in_degree[e.head];
    }
    std::vector<int> result;
    for (int i = 1; i <= graph.n_nodes; ++i)
        if (out_degree[i] == 0 && in_degree[i] > 0) result.push_back(i);
    return result;
}

RadiusAssignment assign_radii(const StreamGraph& graph, double domain_radius, double field_norm,
                              double delta, double margin) {
    if (!(delta > 0.0)) throw std::invalid_argument("assign_radii: delta must be positive");
    if (!(margin > 0.0)) throw std::invalid_argument("assign_radii: margin must be positive");
    if (has_closed_loop(graph))
        throw NoAssignmentError("the stream graph has a closed loop (Condition (C) fails)");

    RadiusAssignment out;
    out.margin = margin;
    out.domain_radius = domain_radius;
    out.field_norm = field_norm;
    out.delta = delta;
    out.r.assign(graph.n_nodes, 0.0);

    const double base = out.base_value();
    const double R2 = domain_radius * domain_radius;

    // peel nodes whose upstream radii are all set (Kahn order on in-degree)
    std::vector<int> pending(graph.n_nodes + 1, 0);
    for (const auto& e : graph.edges) ++pending[e.head];
    std::queue<int> ready;
    for (int i = 1; i <= graph.n_nodes; ++i)
        if (pending[i] == 0) ready.push(i);
    std::vector<int> depth(graph.n_nodes + 1, 0);
    int assigned = 0;
    while (!ready.empty()) {
        int node = ready.front();
        ready.pop();
        double r = base;
        for (int up : graph.incoming(node)) {
            double ru = out.r[up - 1];
            r = std::max(r, std::sqrt(4.0 * ru * ru + 6.0 * R2) + margin);
            depth[node] = std::max(depth[node], depth[up] + 1);
        }
        out.r[node - 1] = r;
        out.max_depth = std::max(out.max_depth, depth[node]);
        ++assigned;
        for (const auto& e : graph.edges) {
            if (e.tail == node && --pending[e.head] == 0) ready.push(e.head);
        }
    }
    if (assigned != graph.n_nodes)
        throw NoAssignmentError("topological peeling stalled (cycle left undetected?)");
    // radii double per depth level; beyond depth 50 the squared values start
    // to lose headroom and the assignment is flagged rather than trusted
    out.depth_flagged = out.max_depth > 50;
    return out;
}

RadiusCheck check_radii(const RadiusAssignment& assignment, const StreamGraph& graph) {
    RadiusCheck check;
    const double R2 = assignment.domain_radius * assignment.domain_radius;
    double base = std::max(assignment.domain_radius * assignment.field_norm / assignment.delta + 1.0,
                           assignment.domain_radius);
    for (const auto& e : graph.edges) {
        double ri = assignment.r[e.head - 1];
        double rj = assignment.r[e.tail - 1];
        double lhs = ri * ri;
        double rhs = 4.0 * rj * rj + 6.0 * R2;
        if (!(lhs > rhs)) check.violations.push_back({e.head, e.tail, lhs, rhs});
    }
    for (int i = 1; i <= graph.n_nodes; ++i) {
        if (!(assignment.r[i - 1] > base)) check.violations.push_back({i, 0, assignment.r[i - 1], base});
    }
    check.ok = check.violations.empty();
    return check;
}

void write_digraph(std::ostream& os, const StreamGraph& graph,
                   const std::vector<std::optional<DirectionCone>>& cones,
                   const RadiusAssignment* radii) {
    os << "# stream graph: " << graph.n_nodes << " nodes, " << graph.edges.size() << " edges\n";
    for (int i = 1; i <= graph.n_nodes; ++i) {
        os << "node " << i;
        if (static_cast<int>(cones.size()) >= i && cones[i - 1])
            os << " v=(" << cones[i - 1]->v.x() << "," << cones[i - 1]->v.y()
               << ") delta1=" << cones[i - 1]->delta1;
        if (radii) os << " r=" << radii->r[i - 1];
        os << "\n";
    }
    for (const auto& e : graph.edges) os << e.tail << " -> " << e.head << "\n";
}

}  // namespace carleman
