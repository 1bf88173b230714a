#include "carleman/config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace carleman {

using nlohmann::json;

namespace {

Domain parse_domain(const json& j) {
    std::string shape = j.at("shape").get<std::string>();
    if (shape == "rectangle") {
        return Domain::rectangle(j.at("x_lo").get<double>(), j.at("x_hi").get<double>(),
                                 j.at("y_lo").get<double>(), j.at("y_hi").get<double>());
    }
    if (shape == "annulus") {
        return Domain::annulus(j.at("r_in").get<double>(), j.at("r_out").get<double>());
    }
    if (shape == "disk") {
        return Domain::disk(j.at("radius").get<double>());
    }
    throw std::invalid_argument("config: unknown domain shape '" + shape + "'");
}

}  // namespace

VectorField ExperimentConfig::make_field() const {
    if (field_builtin == "constant") return VectorField::constant(field_a, field_b);
    if (field_builtin == "rotation") return VectorField::rotation();
    if (field_builtin == "radial_potential") return VectorField::radial_potential();
    if (field_builtin == "polar_angle") return VectorField::polar_angle_linear(field_m);
    if (field_builtin == "csv") return VectorField::tabulated_from_csv(field_csv_path);
    throw std::invalid_argument("config: unknown field builtin '" + field_builtin + "'");
}

ScalarCoefficient ExperimentConfig::make_coefficient() const {
    return ScalarCoefficient::constant(p_value);
}

SourceFactor ExperimentConfig::make_source_factor() const {
    if (source_factor == "one") return SourceFactor::one();
    if (source_factor == "one_plus_t") return SourceFactor::one_plus_t();
    if (source_factor == "one_plus_x1_t") return SourceFactor::one_plus_x1_t();
    throw std::invalid_argument("config: unknown source factor '" + source_factor + "'");
}

Partition ExperimentConfig::make_partition() const {
    if (partition_kind == "none") return trivial_partition(domain);
    if (partition_kind == "strips") return build_rectangle_strip_partition(domain, cuts);
    if (partition_kind == "angles")
        return build_annulus_angular_partition(domain.r_in(), domain.r_out(), angles);
    if (partition_kind == "auto") {
        auto proposed =
            propose_angular_partition(domain, make_field(), auto_max_width, auto_refine_limit);
        return proposed.partition;
    }
    throw std::invalid_argument("config: unknown partition kind '" + partition_kind + "'");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
    }

    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 0);
    if (c.schema_version != 1)
        throw std::invalid_argument("config: unsupported schema_version (expected 1)");
    c.name = j.value("name", std::filesystem::path(path).stem().string());
    c.domain = parse_domain(j.at("domain"));

    const json& jf = j.at("field");
    c.field_builtin = jf.at("builtin").get<std::string>();
    c.field_a = jf.value("a", 1.0);
    c.field_b = jf.value("b", 0.0);
    c.field_m = jf.value("m", 0);
    c.field_csv_path = jf.value("path", std::string());
    if (c.field_builtin == "csv" && !std::filesystem::exists(c.field_csv_path))
        throw std::invalid_argument("config: field CSV not found: " + c.field_csv_path);

    if (j.contains("coefficient")) c.p_value = j.at("coefficient").value("value", 0.0);

    if (j.contains("partition")) {
        const json& jp = j.at("partition");
        c.partition_kind = jp.value("kind", "none");
        if (jp.contains("cuts")) c.cuts = jp.at("cuts").get<std::vector<double>>();
        if (jp.contains("angles")) c.angles = jp.at("angles").get<std::vector<double>>();
        c.auto_max_width = jp.value("max_width", kPi / 2.0);
        c.auto_refine_limit = jp.value("refine_limit", 4);
        if (c.partition_kind != "none" && c.partition_kind != "strips" &&
            c.partition_kind != "angles" && c.partition_kind != "auto")
            throw std::invalid_argument("config: unknown partition kind '" + c.partition_kind + "'");
    }

    if (j.contains("weight")) {
        const json& jw = j.at("weight");
        c.weight_mode = jw.value("mode", "auto");
        if (jw.contains("beta")) c.beta = jw.at("beta").get<double>();
        c.margin = jw.value("margin", 0.1);
        if (!(c.margin > 0.0)) throw std::invalid_argument("config: margin must be positive");
        if (jw.contains("forced_v")) {
            auto v = jw.at("forced_v").get<std::vector<double>>();
            if (v.size() != 2) throw std::invalid_argument("config: forced_v needs two entries");
            Vec2 fv(v[0], v[1]);
            if (fv.norm() == 0.0) throw std::invalid_argument("config: forced_v must be nonzero");
            c.forced_v = fv.normalized();
        }
        c.forced_r = jw.value("forced_r", 2.0);
        if (c.weight_mode != "auto" && c.weight_mode != "condition_a" && c.weight_mode != "potential" &&
            c.weight_mode != "piecewise" && c.weight_mode != "forced")
            throw std::invalid_argument("config: unknown weight mode '" + c.weight_mode + "'");
    }

    if (j.contains("grid")) {
        const json& jg = j.at("grid");
        c.grid_n = jg.value("n", 64);
        c.grid_steps = jg.value("steps", 256);
        c.cfl_max = jg.value("cfl_max", 0.9);
        if (c.grid_n < 2 || c.grid_steps < 1 || !(c.cfl_max > 0.0) || c.cfl_max > 1.0)
            throw std::invalid_argument("config: bad grid parameters");
    }

    c.horizon = j.contains("horizon") ? j.at("horizon").value("T", 1.0) : 1.0;
    if (!(c.horizon > 0.0)) throw std::invalid_argument("config: horizon T must be positive");

    if (j.contains("source_factor")) c.source_factor = j.at("source_factor").value("builtin", "one");

    if (j.contains("studies")) {
        const json& js = j.at("studies");
        c.ensemble = js.value("ensemble", 32);
        c.suite_size = js.value("suite_size", 50);
        c.s_points = js.value("s_points", 10);
        c.c_cap = js.value("c_cap", 1000.0);
        c.trend_tol = js.value("trend_tol", 0.05);
        c.mesh_check = js.value("mesh_check", true);
        c.quad_density = js.value("quad_density", 100.0);
        c.suite_kind = js.value("suite", "random");
        c.u0_kind = js.value("u0", "random");
        if (c.ensemble < 1 || c.suite_size < 1 || c.s_points < 2)
            throw std::invalid_argument("config: bad study parameters");
        if ((c.suite_kind != "random" && c.suite_kind != "stationary") ||
            (c.u0_kind != "random" && c.u0_kind != "stationary"))
            throw std::invalid_argument("config: suite/u0 must be 'random' or 'stationary'");
    }

    if (j.contains("reconstruct")) {
        const json& jr = j.at("reconstruct");
        c.rec_lambda = jr.value("lambda", 0.0);
        c.rec_max_iters = jr.value("max_iters", 300);
        c.rec_noise = jr.value("noise", 0.0);
        if (c.rec_lambda < 0.0 || c.rec_max_iters < 1 || c.rec_noise < 0.0)
            throw std::invalid_argument("config: bad reconstruction parameters");
    }

    c.seed = j.value("seed", 1);
    if (j.contains("output")) c.out_dir = j.at("output").value("dir", "out");
    return c;
}

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.grid_scale != 1.0) {
        if (!(overrides.grid_scale > 0.0))
            throw std::invalid_argument("grid-scale must be positive");
        config.grid_n = std::max(2, static_cast<int>(std::lround(config.grid_n * overrides.grid_scale)));
        config.grid_steps =
            std::max(1, static_cast<int>(std::lround(config.grid_steps * overrides.grid_scale)));
    }
}

}  // namespace carleman
