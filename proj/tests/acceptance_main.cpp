// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Usage: acceptance <configs-dir>

#include "carleman/carleman_verify.hpp"
#include "carleman/commands.hpp"
#include "carleman/config.hpp"
#include "carleman/inverse.hpp"
#include "carleman/stream_graph.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace carleman;

namespace {

std::string g_config_dir;
int g_failures = 0;

void criterion(int number, const std::string& label, const std::function<bool(std::string&)>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << number << ". " << label << " ("
              << static_cast<int>(secs * 10) / 10.0 << " s)";
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n" << std::flush;
    if (!ok) ++g_failures;
}

ExperimentConfig fixture(const std::string& name) {
    ExperimentConfig c = load_config(g_config_dir + "/" + name + ".json");
    c.out_dir = (std::filesystem::temp_directory_path() / ("carleman_accept_" + name)).string();
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool oracle_has_cycle(const StreamGraph& g) {
    int n = g.n_nodes;
    std::vector<std::vector<long long>> a(n, std::vector<long long>(n, 0));
    for (const auto& e : g.edges) a[e.tail - 1][e.head - 1] = 1;
    auto mul = [&](const auto& x, const auto& y) {
        std::vector<std::vector<long long>> z(n, std::vector<long long>(n, 0));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (x[i][k])
                    for (int j = 0; j < n; ++j)
                        z[i][j] = std::min(z[i][j] + x[i][k] * y[k][j], 1LL << 40);
        return z;
    };
    auto power = a;
    for (int k = 1; k <= n; ++k) {
        for (int i = 0; i < n; ++i)
            if (power[i][i] > 0) return true;
        if (k < n) power = mul(power, a);
    }
    return false;
}

StreamGraph random_digraph(int n, double p_edge, Rng& rng) {
    StreamGraph g;
    g.n_nodes = n;
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) {
            if (!rng.bernoulli(p_edge)) continue;
            if (rng.bernoulli(0.5))
                g.edges.push_back({i, j, -1});
            else
                g.edges.push_back({j, i, -1});
        }
    return g;
}

StreamGraph random_dag(int n, double p_edge, Rng& rng) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i + 1;
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    StreamGraph g;
    g.n_nodes = n;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (rng.bernoulli(p_edge)) g.edges.push_back({order[a], order[b], -1});
    return g;
}

struct PiecewiseFixture {
    std::string name;
    Partition partition;
    VectorField field = VectorField::constant(1, 0);
    StreamGraph graph;
    CarlemanWeight weight;
};

PiecewiseFixture build_piecewise(const std::string& config_name) {
    ExperimentConfig c = fixture(config_name);
    PiecewiseFixture out;
    out.name = config_name;
    out.field = c.make_field();
    out.partition = c.make_partition();
    out.graph = build_graph(out.partition, out.field, c.quad_density);
    std::vector<std::optional<DirectionCone>> cones;
    for (const auto& sub : out.partition.subdomains)
        cones.push_back(find_direction_cone(out.field, sub, c.quad_density));
    double delta = uniform_cone_margin(cones);
    double norm = sup_norm(out.field, c.domain, c.quad_density);
    auto radii = assign_radii(out.graph, c.domain.max_abs(), norm, delta, c.margin);
    out.weight = build_piecewise_weight(out.partition, out.field, out.graph, cones, radii, c.beta,
                                        c.horizon, c.quad_density, c.margin);
    return out;
}

// ---------------------------------------------------------------- criteria

bool criterion_graph_oracle(std::string& detail) {
    // exhaustive: every subset of ordered pairs on up to 4 nodes
    long long graphs = 0;
    for (int n = 1; n <= 4; ++n) {
        std::vector<std::pair<int, int>> pairs;
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                if (i != j) pairs.emplace_back(i, j);
        for (std::uint64_t mask = 0; mask < (1ull << pairs.size()); ++mask) {
            StreamGraph g;
            g.n_nodes = n;
            for (std::size_t k = 0; k < pairs.size(); ++k)
                if (mask & (1ull << k)) g.edges.push_back({pairs[k].first, pairs[k].second, -1});
            if (has_closed_loop(g) != oracle_has_cycle(g)) {
                detail = "disagreement on an exhaustive graph with n = " + std::to_string(n);
                return false;
            }
            ++graphs;
        }
    }
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = random_digraph(rng.uniform_int(5, 8), rng.uniform(0.2, 0.7), rng);
        if (has_closed_loop(g) != oracle_has_cycle(g)) {
            detail = "disagreement on a random digraph";
            return false;
        }
    }
    // terminus properties on 500 random DAGs
    Rng rng2(202);
    for (int trial = 0; trial < 500; ++trial) {
        auto g = random_dag(rng2.uniform_int(2, 9), rng2.uniform(0.2, 0.8), rng2);
        if (has_closed_loop(g)) {
            detail = "random DAG generator produced a cycle";
            return false;
        }
        auto termini = terminus_nodes(g);
        if (!g.edges.empty() && termini.empty()) {
            detail = "loop-free graph with edges but no terminus";
            return false;
        }
        if (!termini.empty()) {
            int t = termini.front();
            StreamGraph reduced;
            reduced.n_nodes = g.n_nodes;
            for (const auto& e : g.edges)
                if (e.tail != t && e.head != t) reduced.edges.push_back(e);
            if (has_closed_loop(reduced)) {
                detail = "terminus deletion created a cycle";
                return false;
            }
        }
    }
    detail = std::to_string(graphs) + " exhaustive + 200 random digraphs + 500 DAGs";
    return true;
}

bool criterion_radius_assignment(std::string& detail) {
    Rng rng(303);
    int dags = 0, cycles = 0;
    while (dags < 100) {
        int n = rng.uniform_int(2, 10);
        auto g = random_digraph(n, rng.uniform(0.2, 0.8), rng);
        if (has_closed_loop(g)) {
            try {
                assign_radii(g, 2.0, 1.5, 0.7, 0.1);
                detail = "assignment succeeded on a cyclic graph";
                return false;
            } catch (const NoAssignmentError&) {
                ++cycles;
            }
            continue;
        }
        auto radii = assign_radii(g, 2.0, 1.5, 0.7, 0.1);
        auto rc = check_radii(radii, g);
        if (!rc.ok) {
            detail = "strict inequality failed on a DAG";
            return false;
        }
        ++dags;
    }
    StreamGraph four_cycle;
    four_cycle.n_nodes = 4;
    for (int i = 1; i <= 4; ++i) four_cycle.edges.push_back({i, i % 4 + 1, -1});
    try {
        assign_radii(four_cycle, 1.0, 1.0, 0.5, 0.1);
        detail = "4-cycle accepted";
        return false;
    } catch (const NoAssignmentError&) {
    }
    detail = std::to_string(dags) + " DAGs certified, " + std::to_string(cycles) + " cycles refused";
    return true;
}

bool criterion_trichotomy(std::string& detail) {
    std::ostringstream sink;
    int code0 = cmd_graph(fixture("polar_m0"), sink);
    int code2 = cmd_graph(fixture("polar_m2"), sink);
    std::ostringstream out1;
    int code1 = cmd_graph(fixture("polar_m1"), out1);
    bool cycle_reported = out1.str().find("closed loop") != std::string::npos &&
                          out1.str().find("64 sectors") != std::string::npos;
    if (code0 != 0 || code2 != 0 || code1 != 2 || !cycle_reported) {
        detail = "exit codes m0/m2/m1 = " + std::to_string(code0) + "/" + std::to_string(code2) +
                 "/" + std::to_string(code1);
        return false;
    }
    detail = "m=0, m=2 certified; m=1 cycles up to 64 sectors";
    return true;
}

bool criterion_interface_positivity(std::string& detail) {
    double worst = std::numeric_limits<double>::infinity();
    for (const std::string name : {"two_strip_square", "polar_m0", "polar_m2"}) {
        auto fx = build_piecewise(name);
        double s1 = fx.weight.s1();
        for (double s : logspace(s1, 10.0 * s1, 10)) {
            auto check = verify_interface_positivity(fx.weight, fx.graph, s, 100.0);
            if (!check.ok) {
                detail = name + " violates positivity at s = " + fmt(s) + " (margin " +
                         fmt(check.worst_margin) + ")";
                return false;
            }
            worst = std::min(worst, check.worst_margin);
        }
    }
    detail = "worst shifted-log margin " + fmt(worst);
    return true;
}

bool criterion_sweep_pass(std::string& detail) {
    std::ostringstream report;
    for (const std::string name : {"condA_square", "potential_annulus", "two_strip_square"}) {
        std::ostringstream out;
        int code = cmd_verify(fixture(name), out);
        if (code != 0) {
            detail = name + " did not pass: " + out.str();
            return false;
        }
        auto pos = out.str().find("C_emp_max = ");
        report << name << " " << out.str().substr(pos + 12, out.str().find(' ', pos + 12) - pos - 12)
               << "  ";
    }
    detail = "C_emp_max: " + report.str();
    return true;
}

bool criterion_counterexample(std::string& detail) {
    auto field = VectorField::rotation();
    auto profile = [](const Vec2& x) {
        double r2 = x.squaredNorm();
        return (r2 - 1) * (r2 - 4);
    };
    std::vector<double> ratios, traces, hs;
    for (int n : {32, 64, 128}) {
        Grid grid = Grid::make(Domain::annulus(1, 2), n, n, 6.0, 14 * n, field);
        GridSolution sol = solve_forward(grid, field, ScalarCoefficient::constant(0.0),
                                         SpaceTimeSource::zero(), profile,
                                         [](const Vec2&, double) { return 0.0; });
        SolutionNorms ns = norms(sol);
        ratios.push_back(ns.initial / ns.boundary);
        traces.push_back(ns.boundary / ns.initial);  // scale-free trace norm
        hs.push_back(grid.d1());
    }
    for (std::size_t k = 0; k < hs.size(); ++k) {
        if (traces[k] > 10.0 * hs[k]) {
            detail = "trace norm " + fmt(traces[k]) + " exceeds 10 h at level " + std::to_string(k);
            return false;
        }
    }
    if (ratios[1] < 2.0 * ratios[0] || ratios[2] < 2.0 * ratios[1]) {
        detail = "observability ratio grew only " + fmt(ratios[1] / ratios[0]) + "x / " +
                 fmt(ratios[2] / ratios[1]) + "x";
        return false;
    }
    std::ostringstream out;
    int code = cmd_verify(fixture("rotation_annulus"), out);
    if (code != 2) {
        detail = "forced single weight did not fail the sweep";
        return false;
    }
    detail = "ratio growth " + fmt(ratios[1] / ratios[0]) + "x, " + fmt(ratios[2] / ratios[1]) +
             "x per halving; forced sweep FAILs";
    return true;
}

bool criterion_convergence(std::string& detail) {
    auto l2q_error = [](const GridSolution& u, const SpaceTimeFunction& exact) {
        double err = 0.0;
        const Grid& g = u.grid;
        for (int n = 0; n < u.steps(); ++n) {
            double t = g.time(n);
            for (int i = 0; i < g.n1(); ++i)
                for (int j = 0; j < g.n2(); ++j) {
                    double d = u.levels[n](i, j) - exact(g.center(i, j), t);
                    err += g.step_length(n) * g.cell_volume(i, j) * d * d;
                }
        }
        return std::sqrt(err);
    };
    // periodic translation
    auto field = VectorField::constant(1, 0);
    auto exact = [](const Vec2& x, double t) { return std::sin(2 * kPi * (x.x() - t)); };
    std::vector<double> errors;
    for (int n : {32, 64, 128}) {
        Grid grid = Grid::make(Domain::rectangle(0, 1, 0, 0.25), n, 4, 1.0, 2 * n, field, 0.9, true);
        errors.push_back(l2q_error(solve_forward(grid, field, ScalarCoefficient::constant(0.0),
                                                 SpaceTimeSource::zero(),
                                                 [&](const Vec2& x) { return exact(x, 0); },
                                                 [](const Vec2&, double) { return 0.0; }),
                                   exact));
    }
    double o1 = std::log2(errors[0] / errors[1]), o2 = std::log2(errors[1] / errors[2]);
    // rotating annulus
    auto rot = VectorField::rotation();
    auto exact2 = [](const Vec2& x, double t) {
        double r = x.norm(), th = std::atan2(x.y(), x.x());
        return (r - 1) * (2 - r) * std::cos(th - t);
    };
    std::vector<double> errors2;
    for (int n : {24, 48, 96}) {
        Grid grid = Grid::make(Domain::annulus(1, 2), n, 2 * n, 1.0, 4 * n, rot);
        errors2.push_back(l2q_error(solve_forward(grid, rot, ScalarCoefficient::constant(0.0),
                                                  SpaceTimeSource::zero(),
                                                  [&](const Vec2& x) { return exact2(x, 0); },
                                                  [](const Vec2&, double) { return 0.0; }),
                                    exact2));
    }
    double o3 = std::log2(errors2[0] / errors2[1]), o4 = std::log2(errors2[1] / errors2[2]);
    if (o1 < 0.8 || o2 < 0.8 || o3 < 0.8 || o4 < 0.8) {
        detail = "orders " + fmt(o1) + ", " + fmt(o2) + ", " + fmt(o3) + ", " + fmt(o4);
        return false;
    }
    // discrete maximum principle, exact
    Grid grid = Grid::make(Domain::rectangle(0, 1, 0, 1), 32, 32, 1.5, 220, VectorField::constant(1, 0.5));
    GridSolution sol = solve_forward(grid, VectorField::constant(1, 0.5),
                                     ScalarCoefficient::constant(0.0), SpaceTimeSource::zero(),
                                     [](const Vec2& x) {
                                         return std::exp(-8 * (x - Vec2(0.4, 0.6)).squaredNorm());
                                     },
                                     [](const Vec2&, double) { return 0.3; });
    for (const auto& level : sol.levels) {
        if (level.minCoeff() < -1e-14 || level.maxCoeff() > 1.0 + 1e-14) {
            detail = "maximum principle violated";
            return false;
        }
    }
    detail = "orders " + fmt(o1) + ", " + fmt(o2) + " (translate); " + fmt(o3) + ", " + fmt(o4) +
             " (rotation); max principle exact";
    return true;
}

bool criterion_energy(std::string& detail) {
    Rng rng(404);
    double worst_margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
        double p_val = rng.uniform(-1.0, 1.0);  // M = 1
        double angle = rng.uniform(0.0, 2 * kPi);
        VectorField field = VectorField::constant(std::cos(angle), std::sin(angle));
        Vec2 c0(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
        double fw = rng.uniform(0.1, 0.3), fa = rng.uniform(-2.0, 2.0), fb = rng.uniform(-1.0, 1.0);
        auto F = SpaceTimeSource::custom([=](const Vec2& x, double t) {
            return fa * std::exp(-(x - c0).squaredNorm() / (fw * fw)) * (1.0 + fb * t);
        });
        double g0 = rng.uniform(-1.0, 1.0), gw = rng.uniform(0.5, 3.0);
        auto inflow = [=](const Vec2&, double t) { return g0 * std::sin(gw * t); };
        auto u0 = [&](const Vec2& x) {
            return std::sin(kPi * x.x()) * std::sin(kPi * x.y()) * rng.uniform(0.5, 1.5);
        };
        Grid grid = Grid::make(Domain::rectangle(0, 1, 0, 1), 32, 32, 1.0, 96, field);
        GridSolution sol = solve_forward(grid, field, ScalarCoefficient::constant(p_val), F, u0, inflow);
        auto report = energy_report(sol, F);
        double div_sup = divergence_sup(field, grid.domain(), 20.0);
        auto check = check_energy_estimate(report, 1.0, div_sup);
        if (!check.ok) {
            detail = "C_emp " + fmt(check.c_emp) + " exceeded the cap " + fmt(check.cap);
            return false;
        }
        worst_margin = std::min(worst_margin, check.cap / std::max(check.c_emp, 1e-12));
    }
    detail = "20 random configurations, worst cap/C_emp = " + fmt(worst_margin);
    return true;
}

bool criterion_source_stability(std::string& detail) {
    ExperimentConfig c = fixture("condA_square");
    VectorField field = c.make_field();
    auto p = c.make_coefficient();
    Grid grid = Grid::make(c.domain, c.grid_n, c.grid_n, c.horizon, c.grid_steps, field, c.cfl_max);
    auto cone = find_direction_cone(field, c.domain, c.quad_density);
    auto weight = build_condition_A_weight(c.domain, field, cone, c.beta.value_or(1.0), c.horizon,
                                           c.quad_density, c.margin);
    auto horizon = horizon_constants(weight, c.horizon, c.quad_density);
    std::ostringstream report;
    for (auto [tag, R] : {std::pair<std::string, SourceFactor>{"one", SourceFactor::one()},
                          {"one_plus_x1_t", SourceFactor::one_plus_x1_t()}}) {
        StudyOptions options;
        options.mesh_check = true;
        auto study = source_study(field, p, R, horizon, grid, c.ensemble, c.seed, options);
        if (study.verdict != Verdict::Pass) {
            detail = "R = " + tag + ": " + study.reason;
            return false;
        }
        report << tag << ": C_src " << fmt(study.c_src) << " drift " << fmt(100 * study.drift)
               << "%  ";
    }
    // zero source member
    StudyOptions zero_opt;
    zero_opt.mesh_check = false;
    zero_opt.profile_override = SpaceFunction([](const Vec2&) { return 0.0; });
    auto zero_study = source_study(field, p, SourceFactor::one(), horizon, grid, 1, c.seed, zero_opt);
    if (zero_study.members.front().ratio != 0.0) {
        detail = "zero source did not give ratio 0";
        return false;
    }
    detail = report.str() + "zero-f ratio 0";
    return true;
}

bool criterion_reconstruction(std::string& detail) {
    // adjoint gradient vs central differences (exact for the quadratic)
    auto field = VectorField::constant(1, 0);
    {
        Grid grid = Grid::make(Domain::rectangle(0, 1, 0, 1), 12, 12, 1.0, 48, field);
        SourceToDataMap map(grid, field, ScalarCoefficient::constant(0.0), SourceFactor::one());
        Rng rng(505);
        Eigen::ArrayXXd f_true(12, 12), f(12, 12);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) {
                f_true(i, j) = rng.uniform(-1, 1);
                f(i, j) = rng.uniform(-1, 1);
            }
        Eigen::ArrayXXd observed = map.apply(f_true);
        Eigen::ArrayXXd g = reconstruction_gradient(map, observed, 0.2, f);
        for (int dir = 0; dir < 10; ++dir) {
            Eigen::ArrayXXd d(12, 12);
            for (int i = 0; i < 12; ++i)
                for (int j = 0; j < 12; ++j) d(i, j) = rng.uniform(-1, 1);
            double eps = 1e-4;
            double fd = (reconstruction_objective(map, observed, 0.2, f + eps * d) -
                         reconstruction_objective(map, observed, 0.2, f - eps * d)) /
                        (2 * eps);
            double gd = (g * d).sum();
            if (std::abs(gd - fd) > 1e-4 * std::max(std::abs(fd), 1e-12)) {
                detail = "gradient mismatch " + fmt(gd) + " vs " + fmt(fd);
                return false;
            }
        }
    }
    // noiseless inversion at the baseline grid
    ExperimentConfig c = fixture("condA_square");
    Grid grid = Grid::make(c.domain, c.grid_n, c.grid_n, c.horizon, c.grid_steps, field, c.cfl_max);
    SourceToDataMap map(grid, field, c.make_coefficient(), SourceFactor::one());
    Eigen::ArrayXXd f_true(grid.n1(), grid.n2());
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) {
            Vec2 x = grid.center(i, j);
            f_true(i, j) = std::exp(-12 * (x - Vec2(0.45, 0.55)).squaredNorm());
        }
    Eigen::ArrayXXd observed = map.apply(f_true);
    ReconstructionOptions options;
    options.max_iters = 400;
    auto result = reconstruct_f_least_squares(map, observed, options, &f_true);
    if (result.relative_error > 0.10) {
        detail = "relative error " + fmt(result.relative_error) + " above 10%";
        return false;
    }
    detail = "adjoint matches FD on 10 directions; relative error " + fmt(result.relative_error);
    return true;
}

bool criterion_determinism(std::string& detail) {
    auto run_fixture = [&](const std::string& name, double scale, const std::string& tag,
                           std::vector<std::string>& payloads) {
        ExperimentConfig c = fixture(name);
        ConfigOverrides ov;
        ov.grid_scale = scale;
        apply_overrides(c, ov);
        c.out_dir = (std::filesystem::temp_directory_path() / ("carleman_det_" + name + tag)).string();
        std::ostringstream sink;
        cmd_verify(c, sink);
        cmd_observability(c, sink);
        payloads.push_back(slurp(c.out_dir + "/verify.csv") + "\x1e" +
                           slurp(c.out_dir + "/observability.csv"));
    };
    for (const std::string name : {"rotation_annulus", "two_strip_square"}) {
        double scale = name == "two_strip_square" ? 0.5 : 1.0;
        std::vector<std::string> payloads;
        run_fixture(name, scale, "_a", payloads);
        run_fixture(name, scale, "_b", payloads);
        if (payloads[0] != payloads[1] || payloads[0].empty()) {
            detail = name + " produced different bytes across runs";
            return false;
        }
    }
    detail = "verify + observability CSVs byte-identical across reruns";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <configs-dir>\n";
        return 64;
    }
    g_config_dir = argv[1];

    criterion(1, "graph-core oracle equivalence", criterion_graph_oracle);
    criterion(2, "constructive radius assignment", criterion_radius_assignment);
    criterion(3, "angular-partition winding trichotomy", criterion_trichotomy);
    criterion(4, "interface positivity in shifted-log form", criterion_interface_positivity);
    criterion(5, "weighted-estimate sweep passes on positive fixtures", criterion_sweep_pass);
    criterion(6, "rotating counterexample fails", criterion_counterexample);
    criterion(7, "solver convergence and maximum principle", criterion_convergence);
    criterion(8, "energy estimate under the Gronwall cap", criterion_energy);
    criterion(9, "inverse-source stability ratios", criterion_source_stability);
    criterion(10, "reconstruction sanity and adjoint check", criterion_reconstruction);
    criterion(11, "deterministic outputs", criterion_determinism);

    if (g_failures == 0) {
        std::cout << "all acceptance criteria passed\n";
    } else {
        std::cout << g_failures << " criteria failed\n";
    }
    return g_failures;
}
