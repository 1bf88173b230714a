#pragma once

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace carleman {

// Parsed experiment configuration (JSON, schema_version 1). Validation
// happens entirely at parse time; commands assume a well-formed config.
struct ExperimentConfig {
    int schema_version = 1;
    std::string name;

    // domain
    Domain domain;

    // field
    std::string field_builtin;  // constant | rotation | radial_potential | polar_angle | csv
    double field_a = 1.0, field_b = 0.0;
    int field_m = 0;
    std::string field_csv_path;

    // coefficient p
    double p_value = 0.0;

    // partition: none | strips | angles | auto
    std::string partition_kind = "none";
    std::vector<double> cuts;
    std::vector<double> angles;
    double auto_max_width = kPi / 2.0;
    int auto_refine_limit = 4;  // 4 doublings from 4 sectors tops out at 64

    // weight: auto | condition_a | potential | piecewise | forced
    std::string weight_mode = "auto";
    std::optional<double> beta;
    double margin = 0.1;
    Vec2 forced_v{1.0, 0.0};
    double forced_r = 2.0;

    // grid
    int grid_n = 64;
    int grid_steps = 256;
    double cfl_max = 0.9;

    double horizon = 1.0;

    // source factor: one | one_plus_t | one_plus_x1_t
    std::string source_factor = "one";

    // studies
    int ensemble = 32;
    int suite_size = 50;
    int s_points = 10;
    double c_cap = 1000.0;
    double trend_tol = 0.05;
    bool mesh_check = true;
    double quad_density = 100.0;
    std::string suite_kind = "random";  // random | stationary (annulus profile)
    std::string u0_kind = "random";

    // reconstruction
    double rec_lambda = 0.0;
    int rec_max_iters = 300;
    double rec_noise = 0.0;

    std::uint64_t seed = 1;
    std::string out_dir = "out";

    VectorField make_field() const;
    ScalarCoefficient make_coefficient() const;
    SourceFactor make_source_factor() const;

    /// partition per the partition spec ("auto" runs the angular search and
    /// returns its result regardless of the loop flag)
    Partition make_partition() const;
};

/// Parses and validates; throws std::invalid_argument with a description on
/// any malformed entry or missing file.
ExperimentConfig load_config(const std::string& path);

/// CLI-side overrides (0 means "keep the config value").
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    double grid_scale = 1.0;
};

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

}  // namespace carleman
