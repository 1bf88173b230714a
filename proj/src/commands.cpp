#include "carleman/commands.hpp"

#include "carleman/carleman_verify.hpp"
#include "carleman/inverse.hpp"
#include "carleman/report.hpp"
#include "carleman/stream_graph.hpp"
#include "carleman/transport.hpp"
#include "carleman/weight.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <variant>

namespace carleman {

namespace {

struct Pipeline {
    VectorField field = VectorField::constant(1, 0);
    ScalarCoefficient p;
    double delta0 = 0.0;
    double field_norm = 0.0;
    Partition partition;
    bool auto_loop_free = true;
    int auto_sectors = 0;
    std::optional<DirectionCone> condition_a_cone;
    std::vector<std::optional<DirectionCone>> cones;
    std::optional<StreamGraph> graph;
    std::optional<RadiusAssignment> radii;
    std::variant<std::monostate, CarlemanWeight, GeneralWeight> weight;
    HorizonConstants horizon;
};

void build_field_stage(Pipeline& pipe, const ExperimentConfig& config) {
    pipe.field = config.make_field();
    pipe.p = config.make_coefficient();
    pipe.delta0 = check_nonvanishing(pipe.field, config.domain, config.quad_density);
    pipe.field_norm = sup_norm(pipe.field, config.domain, config.quad_density);
    pipe.condition_a_cone = find_direction_cone(pipe.field, config.domain, config.quad_density);
}

void build_partition_stage(Pipeline& pipe, const ExperimentConfig& config) {
    if (config.partition_kind == "auto") {
        auto proposed = propose_angular_partition(config.domain, pipe.field, config.auto_max_width,
                                                  config.auto_refine_limit);
        pipe.partition = proposed.partition;
        pipe.auto_loop_free = proposed.loop_free;
        pipe.auto_sectors = proposed.sectors;
    } else {
        pipe.partition = config.make_partition();
    }
    for (const auto& sub : pipe.partition.subdomains)
        pipe.cones.push_back(find_direction_cone(pipe.field, sub, config.quad_density));
}

void build_graph_stage(Pipeline& pipe, const ExperimentConfig& config) {
    pipe.graph = build_graph(pipe.partition, pipe.field, config.quad_density);
    if (has_closed_loop(*pipe.graph)) return;  // caller decides how to report
    double delta = uniform_cone_margin(pipe.cones);
    pipe.radii = assign_radii(*pipe.graph, pipe.partition.domain.max_abs(), pipe.field_norm, delta,
                              config.margin);
}

void build_weight_stage(Pipeline& pipe, const ExperimentConfig& config) {
    std::string mode = config.weight_mode;
    if (mode == "auto") {
        if (pipe.partition.size() > 1) {
            mode = "piecewise";
        } else if (pipe.condition_a_cone) {
            mode = "condition_a";
        } else if (pipe.field.kind() == VectorField::Kind::RadialPotential) {
            mode = "potential";
        } else {
            throw ConditionError("A", "no single-direction weight exists and no partition was given");
        }
    }
    if (mode == "piecewise") {
        if (!pipe.graph) build_graph_stage(pipe, config);
        if (!pipe.radii)
            throw NoAssignmentError("the stream graph has a closed loop (Condition (C) fails)");
        pipe.weight = build_piecewise_weight(pipe.partition, pipe.field, *pipe.graph, pipe.cones,
                                             *pipe.radii, config.beta, config.horizon,
                                             config.quad_density, config.margin);
    } else if (mode == "condition_a") {
        double beta = config.beta.value_or(
            pipe.condition_a_cone ? 0.5 * pipe.condition_a_cone->delta1 : 1.0);
        pipe.weight = build_condition_A_weight(config.domain, pipe.field, pipe.condition_a_cone,
                                               beta, config.horizon, config.quad_density,
                                               config.margin);
    } else if (mode == "potential") {
        auto rho = [](const Vec2& x) { return x.squaredNorm(); };
        auto grad_rho = [](const Vec2& x) { return Vec2(2.0 * x); };
        double beta = config.beta.value_or(1.0);
        pipe.weight = build_potential_weight(config.domain, pipe.field, rho, grad_rho, beta,
                                             config.horizon, config.quad_density);
    } else if (mode == "forced") {
        pipe.weight = build_forced_weight(config.domain, pipe.field, config.forced_v,
                                          config.forced_r, config.beta.value_or(0.5),
                                          config.horizon, config.quad_density);
    } else {
        throw std::invalid_argument("unknown weight mode " + mode);
    }
    pipe.horizon = std::visit(
        [&](const auto& w) -> HorizonConstants {
            if constexpr (std::is_same_v<std::decay_t<decltype(w)>, std::monostate>)
                return HorizonConstants{};
            else
                return horizon_constants(w, config.horizon, config.quad_density);
        },
        pipe.weight);
}

std::ofstream open_out(const ExperimentConfig& config, const std::string& name) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream os(std::filesystem::path(config.out_dir) / name);
    if (!os) throw std::runtime_error("cannot write to " + config.out_dir + "/" + name);
    return os;
}

Grid make_grid(const ExperimentConfig& config, const VectorField& field) {
    return Grid::make(config.domain, config.grid_n, config.grid_n, config.horizon,
                      config.grid_steps, field, config.cfl_max);
}

SpaceFunction stationary_annulus_profile(const Domain& domain) {
    double a = domain.r_in() * domain.r_in();
    double b = domain.r_out() * domain.r_out();
    return [a, b](const Vec2& x) {
        double r2 = x.squaredNorm();
        return (r2 - a) * (r2 - b);
    };
}

/// maps mathematical condition failures to exit code 2, config misuse to 1
template <typename Fn>
int guarded(std::ostream& out, Fn&& fn) {
    try {
        return fn();
    } catch (const ConditionError& e) {
        out << "condition violation: " << e.what() << "\n";
        return 2;
    } catch (const NoAssignmentError& e) {
        out << e.what() << "\n";
        return 2;
    } catch (const CertificationError& e) {
        out << e.what() << "\n";
        return 2;
    } catch (const VanishingFieldError& e) {
        out << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        out << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        out << "config error: " << e.what() << "\n";
        return 1;
    }
}

struct SweepOutcome {
    SweepResult baseline;
    double c_emp_halved = 0.0;
    double drift = 0.0;
    bool pass = false;
    std::string reason;
};

SweepOutcome run_verify_sweep(const Pipeline& pipe, const ExperimentConfig& config,
                              std::ostream& out) {
    auto suite_for = [&](const Grid& grid) -> LazySuite {
        if (config.suite_kind == "stationary") {
            LazySuite suite;
            suite.size = 1;
            suite.make = [&pipe, &config, grid](int) -> TestFunction {
                auto profile = stationary_annulus_profile(config.domain);
                auto zero_inflow = [](const Vec2&, double) { return 0.0; };
                return {"stationary", solve_forward(grid, pipe.field, pipe.p,
                                                    SpaceTimeSource::zero(), profile, zero_inflow)};
            };
            return suite;
        }
        return test_suite_lazy(grid, pipe.field, pipe.p, config.suite_size, config.seed);
    };

    auto sweep_at = [&](const Grid& grid, const std::vector<double>& s_grid) {
        SampledWeight sw = std::visit(
            [&](const auto& w) -> SampledWeight {
                if constexpr (std::is_same_v<std::decay_t<decltype(w)>, std::monostate>)
                    throw std::logic_error("no weight built");
                else
                    return sample_weight(grid, w);
            },
            pipe.weight);
        UpwindOperator op(grid, pipe.field);
        SweepOptions options;
        options.c_cap = config.c_cap;
        options.trend_tol = config.trend_tol;
        return sweep_constant(suite_for(grid), sw, op, pipe.p, s_grid, options);
    };

    // the s floor assembles the interface threshold and both absorption
    // mechanisms; with a zeroth-order term, the p = 0 constant is measured
    // on a short preliminary sweep
    double c_res = 0.0;
    Grid grid = make_grid(config, pipe.field);
    if (pipe.p.bound() > 0.0) {
        SampledWeight sw = std::visit(
            [&](const auto& w) -> SampledWeight {
                if constexpr (std::is_same_v<std::decay_t<decltype(w)>, std::monostate>)
                    throw std::logic_error("no weight built");
                else
                    return sample_weight(grid, w);
            },
            pipe.weight);
        UpwindOperator op(grid, pipe.field);
        auto pre_suite = test_suite_random(grid, pipe.field, ScalarCoefficient::constant(0.0),
                                           std::min(config.suite_size, 6), config.seed);
        auto pre = sweep_constant(pre_suite, sw, op, ScalarCoefficient::constant(0.0),
                                  {1.0, 2.0, 4.0}, {});
        c_res = std::isfinite(pre.c_emp_max) ? pre.c_emp_max : config.c_cap;
    }
    SFloor floor = std::visit(
        [&](const auto& w) -> SFloor {
            if constexpr (std::is_same_v<std::decay_t<decltype(w)>, std::monostate>)
                throw std::logic_error("no weight built");
            else if constexpr (std::is_same_v<std::decay_t<decltype(w)>, GeneralWeight>) {
                if (w.status() == WeightStatus::Forced) return SFloor{0, 0, 0, 0.5};
                return compute_s_floor(w, pipe.p, c_res, config.quad_density);
            } else {
                return compute_s_floor(w, pipe.p, c_res, config.quad_density);
            }
        },
        pipe.weight);

    std::vector<double> s_grid = logspace(floor.value, 5.0 * floor.value, config.s_points);
    out << "s floor = " << fmt(floor.value) << " (s1 = " << fmt(floor.s1)
        << ", p absorption = " << fmt(floor.p_absorption)
        << ", energy absorption = " << fmt(floor.energy_absorption) << ")\n";

    SweepOutcome outcome;
    outcome.baseline = sweep_at(grid, s_grid);
    outcome.pass = outcome.baseline.pass;
    outcome.reason = outcome.baseline.reason;
    if (config.mesh_check && outcome.pass) {
        Grid fine = Grid::make(config.domain, 2 * config.grid_n, 2 * config.grid_n, config.horizon,
                               2 * config.grid_steps, pipe.field, config.cfl_max);
        SweepResult fine_sweep = sweep_at(fine, s_grid);
        outcome.c_emp_halved = fine_sweep.c_emp_max;
        outcome.drift = outcome.baseline.c_emp_max > 0.0
                            ? std::abs(fine_sweep.c_emp_max - outcome.baseline.c_emp_max) /
                                  outcome.baseline.c_emp_max
                            : 0.0;
        if (fine_sweep.infinite || fine_sweep.c_emp_max > config.c_cap || outcome.drift > 0.25) {
            outcome.pass = false;
            outcome.reason = "mesh halving: C_emp_max " + fmt(outcome.baseline.c_emp_max) + " -> " +
                             fmt(fine_sweep.c_emp_max) + " (drift " + fmt(100.0 * outcome.drift) +
                             "%)";
        }
    }
    return outcome;
}

}  // namespace

int cmd_analyze(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        auto os = open_out(config, "analyze.txt");
        write_field_report(os, pipe.delta0, pipe.field_norm, pipe.condition_a_cone, pipe.cones);
        out << "delta0 = " << fmt(pipe.delta0) << ", sup|H| = " << fmt(pipe.field_norm) << "\n";
        if (pipe.condition_a_cone) {
            out << "condition A satisfied: v = (" << fmt(pipe.condition_a_cone->v.x()) << ", "
                << fmt(pipe.condition_a_cone->v.y())
                << "), delta1 = " << fmt(pipe.condition_a_cone->delta1) << "\n";
            return 0;
        }
        out << "condition A violated; per-subdomain cones written to analyze.txt\n";
        return 2;
    });
}

int cmd_graph(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        pipe.graph = build_graph(pipe.partition, pipe.field, config.quad_density);
        auto cycle = find_cycle(*pipe.graph);
        if (!cycle.empty()) {
            auto os = open_out(config, "graph.txt");
            write_digraph(os, *pipe.graph, pipe.cones, nullptr);
            out << "closed loop: ";
            for (std::size_t k = 0; k < cycle.size(); ++k)
                out << "O" << cycle[k] << (k + 1 < cycle.size() ? " -> " : "\n");
            if (config.partition_kind == "auto")
                out << "no loop-free partition up to " << pipe.auto_sectors << " sectors\n";
            return 2;
        }
        double delta = uniform_cone_margin(pipe.cones);
        pipe.radii = assign_radii(*pipe.graph, pipe.partition.domain.max_abs(), pipe.field_norm,
                                  delta, config.margin);
        RadiusCheck rc = check_radii(*pipe.radii, *pipe.graph);
        auto os = open_out(config, "graph.txt");
        write_digraph(os, *pipe.graph, pipe.cones, &*pipe.radii);
        out << "loop-free graph with " << pipe.graph->edges.size() << " edges; radii in ["
            << fmt(*std::min_element(pipe.radii->r.begin(), pipe.radii->r.end())) << ", "
            << fmt(pipe.radii->max_radius()) << "], certified: " << (rc.ok ? "yes" : "NO") << "\n";
        return rc.ok ? 0 : 2;
    });
}

int cmd_weights(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        build_weight_stage(pipe, config);
        auto os = open_out(config, "weights.txt");
        std::visit(
            [&](const auto& w) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(w)>, std::monostate>) {
                    write_weight_report(os, w, pipe.horizon);
                    write_weight_report(out, w, pipe.horizon);
                }
            },
            pipe.weight);
        return 0;
    });
}

int cmd_verify(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        build_weight_stage(pipe, config);
        SweepOutcome outcome = run_verify_sweep(pipe, config, out);
        auto os = open_out(config, "verify.csv");
        write_sweep_csv(os, outcome.baseline);
        out << "C_emp_max = " << fmt(outcome.baseline.c_emp_max);
        if (config.mesh_check)
            out << " (halved: " << fmt(outcome.c_emp_halved) << ", drift "
                << fmt(100.0 * outcome.drift) << "%)";
        out << "\nverdict: " << (outcome.pass ? "PASS" : "FAIL") << " - " << outcome.reason << "\n";
        return outcome.pass ? 0 : 2;
    });
}

int cmd_observability(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        build_weight_stage(pipe, config);
        Grid grid = make_grid(config, pipe.field);
        StudyOptions options;
        options.mesh_check = config.mesh_check;
        if (config.u0_kind == "stationary")
            options.profile_override = stationary_annulus_profile(config.domain);
        ObservabilityStudy study = observability_study(pipe.field, pipe.p, pipe.horizon, grid,
                                                       config.ensemble, config.seed, options);
        std::optional<ConditionAData> cond_a;
        if (pipe.condition_a_cone)
            cond_a = ConditionAData{pipe.condition_a_cone->delta1, pipe.field_norm,
                                    config.domain.max_abs()};
        MinimalTimeReport mt = minimal_time_report(pipe.horizon, cond_a);
        auto os = open_out(config, "observability.csv");
        write_observability_csv(os, study);
        out << "T0 = " << fmt(mt.T0);
        if (mt.condition_a_threshold)
            out << " (single-direction closed form: " << fmt(*mt.condition_a_threshold) << ")";
        out << ", mu = " << fmt(study.horizon.mu) << "\n";
        out << "C_obs = " << fmt(study.c_obs) << ", verdict: " << to_string(study.verdict) << " - "
            << study.reason << "\n";
        return study.verdict == Verdict::Fail ? 2 : 0;
    });
}

int cmd_inverse_source(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        build_partition_stage(pipe, config);
        build_weight_stage(pipe, config);
        Grid grid = make_grid(config, pipe.field);
        StudyOptions options;
        options.mesh_check = config.mesh_check;
        SourceStudy study = source_study(pipe.field, pipe.p, config.make_source_factor(),
                                         pipe.horizon, grid, config.ensemble, config.seed, options);
        auto os = open_out(config, "inverse_source.csv");
        write_source_csv(os, study);
        out << "C_src = " << fmt(study.c_src) << ", verdict: " << to_string(study.verdict) << " - "
            << study.reason << "\n";
        return study.verdict == Verdict::Fail ? 2 : 0;
    });
}

int cmd_reconstruct(const ExperimentConfig& config, std::ostream& out) {
    return guarded(out, [&]() {
        Pipeline pipe;
        build_field_stage(pipe, config);
        Grid grid = make_grid(config, pipe.field);
        SourceToDataMap map(grid, pipe.field, pipe.p, config.make_source_factor());

        // deterministic ground truth: one smooth bump, unit L2 norm
        Rng rng(config.seed);
        const Domain& dom = config.domain;
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
        Vec2 x0(rng.uniform(bx_lo, bx_hi), rng.uniform(by_lo, by_hi));
        double width = rng.uniform(0.12, 0.25) * dom.diameter();
        Eigen::ArrayXXd f_true(grid.n1(), grid.n2());
        for (int i = 0; i < grid.n1(); ++i)
            for (int j = 0; j < grid.n2(); ++j)
                f_true(i, j) = std::exp(-(grid.center(i, j) - x0).squaredNorm() / (width * width));
        f_true /= std::sqrt(map.cell_inner(f_true, f_true));

        Eigen::ArrayXXd observed = map.apply(f_true);
        if (config.rec_noise > 0.0) {
            double rms = std::sqrt((observed * observed).mean());
            Rng noise_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
            for (int i = 0; i < observed.rows(); ++i)
                for (int j = 0; j < observed.cols(); ++j)
                    observed(i, j) += config.rec_noise * rms * noise_rng.uniform(-1.0, 1.0);
        }

        ReconstructionOptions opts;
        opts.lambda = config.rec_lambda;
        opts.max_iters = config.rec_max_iters;
        ReconstructionResult result = reconstruct_f_least_squares(map, observed, opts, &f_true);

        auto os = open_out(config, "f_hat.csv");
        write_reconstruction_csv(os, grid, result.f_hat);
        auto hs = open_out(config, "residual_history.csv");
        write_residual_history_csv(hs, result.objective_history);
        out << "iterations = " << result.iters << ", converged = " << (result.converged ? "yes" : "no")
            << ", relative error = " << fmt(result.relative_error) << "\n";
        if (!result.converged) {
            out << "gradient descent hit max_iters; residual history written\n";
            return 2;
        }
        return 0;
    });
}

}  // namespace carleman
