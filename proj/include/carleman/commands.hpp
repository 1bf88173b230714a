#pragma once

#include "carleman/config.hpp"

#include <iosfwd>

namespace carleman {

// Command bodies shared by the CLI and the test suites. Each writes its
// artifacts under config.out_dir, prints a summary to `out`, and returns the
// process exit code: 0 ok, 1 usage/config error, 2 mathematical condition
// violation or FAIL verdict.
int cmd_analyze(const ExperimentConfig& config, std::ostream& out);
int cmd_graph(const ExperimentConfig& config, std::ostream& out);
int cmd_weights(const ExperimentConfig& config, std::ostream& out);
int cmd_verify(const ExperimentConfig& config, std::ostream& out);
int cmd_observability(const ExperimentConfig& config, std::ostream& out);
int cmd_inverse_source(const ExperimentConfig& config, std::ostream& out);
int cmd_reconstruct(const ExperimentConfig& config, std::ostream& out);

}  // namespace carleman
