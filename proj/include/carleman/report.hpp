#pragma once

#include "carleman/carleman_verify.hpp"
#include "carleman/inverse.hpp"

#include <iosfwd>
#include <string>

namespace carleman {

void write_sweep_csv(std::ostream& os, const SweepResult& result);

void write_observability_csv(std::ostream& os, const ObservabilityStudy& study);
void write_source_csv(std::ostream& os, const SourceStudy& study);

void write_field_report(std::ostream& os, double delta0, double field_norm,
                        const std::optional<DirectionCone>& condition_a,
                        const std::vector<std::optional<DirectionCone>>& cones);

void write_reconstruction_csv(std::ostream& os, const Grid& grid, const Eigen::ArrayXXd& f_hat);
void write_residual_history_csv(std::ostream& os, const std::vector<double>& history);

}  // namespace carleman
