#include "carleman/report.hpp"

#include <ostream>

namespace carleman {

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << "s,id,lhs_init,lhs_bulk,lhs_minus,rhs_residual,rhs_plus,rhs_final,ratio\n";
    for (const auto& row : result.rows) {
        const CarlemanTerms& t = row.terms;
        os << fmt(row.s) << ',' << row.id << ',' << fmt(t.lhs_init) << ',' << fmt(t.lhs_bulk) << ','
           << fmt(t.lhs_minus) << ',' << fmt(t.rhs_residual) << ',' << fmt(t.rhs_plus) << ','
           << fmt(t.rhs_final) << ',' << fmt(t.ratio()) << "\n";
    }
    os << "summary,C_emp_max," << fmt(result.c_emp_max) << ",verdict,"
       << (result.pass ? "PASS" : "FAIL") << ",,,,\n";
}

namespace {

void write_members(std::ostream& os, const std::vector<StudyMember>& members) {
    os << "member,state_norm,data_norm,ratio\n";
    for (const auto& m : members)
        os << m.id << ',' << fmt(m.state_norm) << ',' << fmt(m.data_norm) << ',' << fmt(m.ratio)
           << "\n";
}

}  // namespace

void write_observability_csv(std::ostream& os, const ObservabilityStudy& study) {
    write_members(os, study.members);
    os << "summary,C_obs," << fmt(study.c_obs) << ',' << to_string(study.verdict) << "\n";
    os << "summary,C_obs_halved," << fmt(study.c_obs_halved) << ",drift," << fmt(study.drift)
       << "\n";
    os << "summary,T0," << fmt(study.horizon.T0) << ",mu," << fmt(study.horizon.mu) << "\n";
}

void write_source_csv(std::ostream& os, const SourceStudy& study) {
    write_members(os, study.members);
    os << "summary,C_src," << fmt(study.c_src) << ',' << to_string(study.verdict) << "\n";
    os << "summary,C_src_halved," << fmt(study.c_src_halved) << ",drift," << fmt(study.drift)
       << "\n";
    os << "summary,T0," << fmt(study.horizon.T0) << ",mu," << fmt(study.horizon.mu) << "\n";
}

void write_field_report(std::ostream& os, double delta0, double field_norm,
                        const std::optional<DirectionCone>& condition_a,
                        const std::vector<std::optional<DirectionCone>>& cones) {
    os << "delta0 = " << fmt(delta0) << "\n";
    os << "sup|H| = " << fmt(field_norm) << "\n";
    if (condition_a) {
        os << "condition A: satisfied, v = (" << fmt(condition_a->v.x()) << ", "
           << fmt(condition_a->v.y()) << "), delta1 = " << fmt(condition_a->delta1) << "\n";
    } else {
        os << "condition A: violated (direction range >= pi)\n";
    }
    for (std::size_t k = 0; k < cones.size(); ++k) {
        os << "subdomain " << (k + 1) << ": ";
        if (cones[k]) {
            os << "v = (" << fmt(cones[k]->v.x()) << ", " << fmt(cones[k]->v.y())
               << "), delta1 = " << fmt(cones[k]->delta1) << ", arc = " << fmt(cones[k]->arc_width)
               << "\n";
        } else {
            os << "no cone\n";
        }
    }
}

void write_reconstruction_csv(std::ostream& os, const Grid& grid, const Eigen::ArrayXXd& f_hat) {
    os << "x,y,f\n";
    for (int i = 0; i < grid.n1(); ++i)
        for (int j = 0; j < grid.n2(); ++j) {
            Vec2 c = grid.center(i, j);
            os << fmt(c.x()) << ',' << fmt(c.y()) << ',' << fmt(f_hat(i, j)) << "\n";
        }
}

void write_residual_history_csv(std::ostream& os, const std::vector<double>& history) {
    os << "iteration,objective\n";
    for (std::size_t k = 0; k < history.size(); ++k) os << k << ',' << fmt(history[k]) << "\n";
}

}  // namespace carleman
