#pragma once

#include "carleman/carleman_verify.hpp"
#include "carleman/transport.hpp"
#include "carleman/weight.hpp"

#include <optional>
#include <string>

namespace carleman {

enum class Verdict { Pass, Fail, NotApplicable };

std::string to_string(Verdict v);

struct StudyMember {
    int id = 0;
    double state_norm = 0.0;  // ||u(.,0)|| or ||f||
    double data_norm = 0.0;   // boundary trace norm
    double ratio = 0.0;       // 0/0 counts as 0
};

struct ObservabilityStudy {
    std::vector<StudyMember> members;
    double c_obs = 0.0;
    double c_obs_halved = 0.0;
    double drift = 0.0;  // |C_h/2 - C_h| / C_h
    HorizonConstants horizon;
    Verdict verdict = Verdict::Fail;
    std::string reason;
};

struct StudyOptions {
    bool mesh_check = true;
    double drift_cap = 0.25;
    /// fixed profile instead of the random ensemble: the initial state for
    /// observability runs, the source f for stability runs
    std::optional<SpaceFunction> profile_override;
};

/// Ratios ||u(.,0)|| / ||u||_{bdry x (0,T)} over an ensemble of unit-norm
/// smooth initial states, solved with zero source and inflow. Verdict is
/// NOT-APPLICABLE whenever mu <= 0 (horizon below T0).
ObservabilityStudy observability_study(const VectorField& field, const ScalarCoefficient& p,
                                       const HorizonConstants& horizon, const Grid& grid,
                                       int n_ensemble, std::uint64_t seed,
                                       const StudyOptions& options = {});

struct SourceStudy {
    std::vector<StudyMember> members;
    double c_src = 0.0;
    double c_src_halved = 0.0;
    double drift = 0.0;
    HorizonConstants horizon;
    Verdict verdict = Verdict::Fail;
    std::string reason;
};

/// Ratios ||f|| / ||du/dt||_{bdry x (0,T)} for unit-norm random sources in
/// the separated system F = R(x,t) f(x), u(.,0) = 0. Requires |R(.,0)| > 0.
SourceStudy source_study(const VectorField& field, const ScalarCoefficient& p,
                         const SourceFactor& R, const HorizonConstants& horizon, const Grid& grid,
                         int n_ensemble, std::uint64_t seed, const StudyOptions& options = {});

struct MinimalTimeReport {
    double T0 = 0.0;
    /// closed-form threshold 2 R (delta1 + |H|) / delta1^2 when the
    /// single-direction data is available
    std::optional<double> condition_a_threshold;
};

struct ConditionAData {
    double delta1 = 0.0;
    double field_norm = 0.0;
    double domain_radius = 0.0;
};

MinimalTimeReport minimal_time_report(const HorizonConstants& horizon,
                                      const std::optional<ConditionAData>& condition_a);

// Linear map from a spatial source f to the boundary data du/dt produced by
// the separated system, discretized exactly as the forward solver; the
// adjoint is the exact transpose (verified against finite differences).
class SourceToDataMap {
public:
    SourceToDataMap(const Grid& grid, const VectorField& field, const ScalarCoefficient& p,
                    const SourceFactor& R);

    /// faces x (steps+1) array of du/dt boundary data
    Eigen::ArrayXXd apply(const Eigen::ArrayXXd& f) const;
    /// Euclidean transpose of apply
    Eigen::ArrayXXd apply_adjoint(const Eigen::ArrayXXd& z) const;

    /// L2(bdry x (0,T)) inner product (face weights, trapezoid in time)
    double data_inner(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) const;
    /// L2(Omega) inner product (cell volumes)
    double cell_inner(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) const;

    const Grid& grid() const { return grid_; }
    /// per-entry quadrature weight of the data space (face weight x time weight)
    const Eigen::ArrayXXd& data_weights() const { return data_w_; }

private:
    Grid grid_;
    UpwindOperator op_;
    std::vector<Eigen::ArrayXXd> r_levels_;  // R(x, t_n) at cells
    Eigen::ArrayXXd p_cells_;
    Eigen::ArrayXXd vol_;
    Eigen::ArrayXXd data_w_;
};

struct ReconstructionOptions {
    double lambda = 0.0;
    int max_iters = 300;
    double grad_tol = 1e-10;  // on |grad| relative to its initial value
    double obj_tol = 1e-3;    // converged once J falls to obj_tol * J(0)
};

struct ReconstructionResult {
    Eigen::ArrayXXd f_hat;
    std::vector<double> objective_history;
    bool converged = false;
    int iters = 0;
    double relative_error = -1.0;  // against ground truth when supplied
};

/// Gradient descent with exact line search on
/// J(f) = 1/2 ||L f - observed||^2 + lambda/2 ||f||^2.
ReconstructionResult reconstruct_f_least_squares(const SourceToDataMap& map,
                                                 const Eigen::ArrayXXd& observed,
                                                 const ReconstructionOptions& options = {},
                                                 const Eigen::ArrayXXd* ground_truth = nullptr);

/// Euclidean gradient of J at f (exposed for the finite-difference check).
Eigen::ArrayXXd reconstruction_gradient(const SourceToDataMap& map, const Eigen::ArrayXXd& observed,
                                        double lambda, const Eigen::ArrayXXd& f);

double reconstruction_objective(const SourceToDataMap& map, const Eigen::ArrayXXd& observed,
                                double lambda, const Eigen::ArrayXXd& f);

}  // namespace carleman
