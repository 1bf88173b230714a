#include "carleman/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace carleman {

namespace {

double wrap_angle(const Vec2& x) {
    double th = std::atan2(x.y(), x.x());
    if (th < 0) th += 2.0 * kPi;
    return th;
}

}  // namespace

VectorField VectorField::constant(double a, double b) {
    VectorField f;
    f.kind_ = Kind::Constant;
    f.const_value_ = Vec2(a, b);
    return f;
}

VectorField VectorField::rotation() {
    VectorField f;
    f.kind_ = Kind::Rotation;
    return f;
}

VectorField VectorField::radial_potential() {
    VectorField f;
    f.kind_ = Kind::RadialPotential;
    return f;
}

VectorField VectorField::polar_angle(PolarAngleSpec spec) {
    VectorField f;
    f.kind_ = Kind::PolarAngle;
    f.polar_ = std::move(spec);
    f.validate_polar();
    return f;
}

VectorField VectorField::polar_angle_linear(int m) {
    return polar_angle({[m](double th) { return m * th; }, m});
}

VectorField VectorField::tabulated(double x_lo, double x_hi, double y_lo, double y_hi,
                                   Eigen::MatrixXd h1, Eigen::MatrixXd h2) {
    if (h1.rows() < 2 || h1.cols() < 2 || h1.rows() != h2.rows() || h1.cols() != h2.cols())
        throw std::invalid_argument("tabulated field: need a regular grid of at least 2x2 values");
    VectorField f;
    f.kind_ = Kind::Tabulated;
    f.tx_lo_ = x_lo;
    f.tx_hi_ = x_hi;
    f.ty_lo_ = y_lo;
    f.ty_hi_ = y_hi;
    f.th1_ = std::move(h1);
    f.th2_ = std::move(h2);
    return f;
}

VectorField VectorField::tabulated_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("tabulated field: cannot open " + path);
    std::map<double, std::map<double, Vec2>> rows;  // y -> x -> H
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
        std::istringstream ls(line);
        double x, y, h1, h2;
        char comma;
        if (!(ls >> x >> comma >> y >> comma >> h1 >> comma >> h2))
            throw std::invalid_argument("tabulated field: malformed line '" + line + "'");
        rows[y][x] = Vec2(h1, h2);
    }
    if (rows.size() < 2) throw std::invalid_argument("tabulated field: need at least two rows");
    std::size_t nx = rows.begin()->second.size();
    std::size_t ny = rows.size();
    if (nx < 2) throw std::invalid_argument("tabulated field: need at least two columns");
    Eigen::MatrixXd h1(nx, ny), h2(nx, ny);
    std::size_t j = 0;
    for (const auto& [y, cols] : rows) {
        if (cols.size() != nx)
            throw std::invalid_argument("tabulated field: grid is not complete");
        std::size_t i = 0;
        for (const auto& [x, value] : cols) {
            h1(i, j) = value.x();
            h2(i, j) = value.y();
            ++i;
        }
        ++j;
    }
    double x_lo = rows.begin()->second.begin()->first;
    double x_hi = rows.begin()->second.rbegin()->first;
    double y_lo = rows.begin()->first;
    double y_hi = rows.rbegin()->first;
    return tabulated(x_lo, x_hi, y_lo, y_hi, std::move(h1), std::move(h2));
}

VectorField VectorField::custom(std::function<Vec2(const Vec2&)> eval) {
    VectorField f;
    f.kind_ = Kind::Custom;
    f.custom_ = std::move(eval);
    return f;
}

void VectorField::validate_polar() const {
    const double tol = 1e-8;
    if (!polar_.p) throw std::invalid_argument("polar-angle field: missing winding function");
    if (std::abs(polar_.p(0.0)) > tol)
        throw std::invalid_argument("polar-angle field: p(0) must be 0");
    if (std::abs(polar_.p(2.0 * kPi) - 2.0 * kPi * polar_.m) > tol)
        throw std::invalid_argument("polar-angle field: p(2 pi) must equal 2 pi m");
    const double h = 1e-6;
    double d0 = (polar_.p(h) - polar_.p(0.0)) / h;
    double d1 = (polar_.p(2.0 * kPi) - polar_.p(2.0 * kPi - h)) / h;
    if (std::abs(d1 - d0) > 1e-4)
        throw std::invalid_argument("polar-angle field: p'(2 pi) must equal p'(0)");
}

const PolarAngleSpec& VectorField::polar_spec() const {
    if (kind_ != Kind::PolarAngle) throw std::logic_error("polar_spec: not a polar-angle field");
    return polar_;
}

double VectorField::q(double theta) const {
    return polar_spec().p(theta) - theta;
}

Vec2 VectorField::operator()(const Vec2& x) const {
    switch (kind_) {
        case Kind::Constant: return const_value_;
        case Kind::Rotation: return Vec2(-x.y(), x.x());
        case Kind::RadialPotential: return 2.0 * x;
        case Kind::PolarAngle: {
            double p = polar_.p(wrap_angle(x));
            return Vec2(-std::sin(p), std::cos(p));
        }
        case Kind::Custom: return custom_(x);
        case Kind::Tabulated: {
            double fx = (x.x() - tx_lo_) / (tx_hi_ - tx_lo_) * (th1_.rows() - 1);
            double fy = (x.y() - ty_lo_) / (ty_hi_ - ty_lo_) * (th1_.cols() - 1);
            fx = std::clamp(fx, 0.0, static_cast<double>(th1_.rows() - 1));
            fy = std::clamp(fy, 0.0, static_cast<double>(th1_.cols() - 1));
            int i = std::min(static_cast<int>(fx), static_cast<int>(th1_.rows()) - 2);
            int j = std::min(static_cast<int>(fy), static_cast<int>(th1_.cols()) - 2);
            double sx = fx - i, sy = fy - j;
            auto lerp = [&](const Eigen::MatrixXd& m) {
                return (1 - sx) * (1 - sy) * m(i, j) + sx * (1 - sy) * m(i + 1, j) +
                       (1 - sx) * sy * m(i, j + 1) + sx * sy * m(i + 1, j + 1);
            };
            return Vec2(lerp(th1_), lerp(th2_));
        }
    }
    return Vec2::Zero();
}

ScalarCoefficient ScalarCoefficient::constant(double value) {
    ScalarCoefficient p;
    p.value_ = value;
    p.bound_ = std::abs(value);
    return p;
}

ScalarCoefficient ScalarCoefficient::custom(std::function<double(const Vec2&)> eval, double bound) {
    ScalarCoefficient p;
    p.eval_ = std::move(eval);
    p.bound_ = bound;
    return p;
}

SourceFactor SourceFactor::one() {
    return custom([](const Vec2&, double) { return 1.0; }, [](const Vec2&, double) { return 0.0; });
}

SourceFactor SourceFactor::one_plus_t() {
    return custom([](const Vec2&, double t) { return 1.0 + t; },
                  [](const Vec2&, double) { return 1.0; });
}

SourceFactor SourceFactor::one_plus_x1_t() {
    return custom([](const Vec2& x, double t) { return 1.0 + x.x() * t; },
                  [](const Vec2& x, double) { return x.x(); });
}

SourceFactor SourceFactor::custom(std::function<double(const Vec2&, double)> r,
                                  std::function<double(const Vec2&, double)> dr_dt) {
    SourceFactor f;
    f.r_ = std::move(r);
    f.dr_ = std::move(dr_dt);
    return f;
}

double SourceFactor::initial_floor(const Domain& domain, double density) const {
    double floor_value = std::numeric_limits<double>::infinity();
    Partition p = trivial_partition(domain);
    for (const auto& sample : sample_volume(p.subdomains.front(), density))
        floor_value = std::min(floor_value, std::abs(r_(sample.point, 0.0)));
    for (const auto& sample : domain.sample_boundary(density))
        floor_value = std::min(floor_value, std::abs(r_(sample.point, 0.0)));
    return floor_value;
}

SpaceTimeSource SpaceTimeSource::custom(std::function<double(const Vec2&, double)> f) {
    SpaceTimeSource s;
    s.f_ = std::move(f);
    return s;
}

SpaceTimeSource SpaceTimeSource::separated(SourceFactor r, std::function<double(const Vec2&)> f) {
    return custom([r = std::move(r), f = std::move(f)](const Vec2& x, double t) {
        return r(x, t) * f(x);
    });
}

namespace {

// volume, edge and corner samples of the closed domain
std::vector<Vec2> closure_samples(const Domain& domain, double density) {
    Partition p = trivial_partition(domain);
    std::vector<Vec2> pts = closure_sample_points(p.subdomains.front(), density);
    for (const auto& s : domain.sample_boundary(density)) pts.push_back(s.point);
    return pts;
}

std::optional<DirectionCone> cone_from_points(const VectorField& field,
                                              const std::vector<Vec2>& points) {
    // minimal enclosing arc of the direction angles; exists iff width < pi
    std::vector<double> angles;
    angles.reserve(points.size());
    for (const auto& x : points) {
        Vec2 h = field(x);
        angles.push_back(std::atan2(h.y(), h.x()));
    }
    std::sort(angles.begin(), angles.end());
    double max_gap = 2.0 * kPi - (angles.back() - angles.front());
    double gap_end = angles.front();  // arc start right after the largest gap
    for (std::size_t k = 1; k < angles.size(); ++k) {
        double gap = angles[k] - angles[k - 1];
        if (gap > max_gap) {
            max_gap = gap;
            gap_end = angles[k];
        }
    }
    double width = 2.0 * kPi - max_gap;
    if (width >= kPi) return std::nullopt;
    double bisector = gap_end + 0.5 * width;
    DirectionCone cone;
    cone.v = Vec2(std::cos(bisector), std::sin(bisector));
    cone.arc_width = width;
    cone.delta1 = std::numeric_limits<double>::infinity();
    for (const auto& x : points) cone.delta1 = std::min(cone.delta1, field(x).dot(cone.v));
    if (!(cone.delta1 > 0.0)) return std::nullopt;
    return cone;
}

}  // namespace

double check_nonvanishing(const VectorField& field, const Domain& domain, double density) {
    double best = std::numeric_limits<double>::infinity();
    Vec2 where = Vec2::Zero();
    for (const auto& x : closure_samples(domain, density)) {
        double mag = field(x).norm();
        if (mag < best) {
            best = mag;
            where = x;
        }
    }
    if (best <= Tolerances::field) throw VanishingFieldError(where, best);
    return best;
}

double sup_norm(const VectorField& field, const Domain& domain, double density) {
    double best = 0.0;
    for (const auto& x : closure_samples(domain, density)) best = std::max(best, field(x).norm());
    return best;
}

double divergence_sup(const VectorField& field, const Domain& domain, double density) {
    const double h = 1e-5 * domain.diameter();
    double best = 0.0;
    Partition p = trivial_partition(domain);
    for (const auto& s : sample_volume(p.subdomains.front(), density)) {
        const Vec2& x = s.point;
        double div = (field(x + Vec2(h, 0)).x() - field(x - Vec2(h, 0)).x()) / (2 * h) +
                     (field(x + Vec2(0, h)).y() - field(x - Vec2(0, h)).y()) / (2 * h);
        best = std::max(best, std::abs(div));
    }
    return best;
}

std::optional<DirectionCone> find_direction_cone(const VectorField& field, const Subdomain& sub,
                                                 double density) {
    return cone_from_points(field, closure_sample_points(sub, density));
}

std::optional<DirectionCone> find_direction_cone(const VectorField& field, const Domain& domain,
                                                 double density) {
    return cone_from_points(field, closure_samples(domain, density));
}

double uniform_cone_margin(const std::vector<std::optional<DirectionCone>>& cones) {
    if (cones.empty()) throw std::invalid_argument("uniform_cone_margin: empty list");
    double delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cones.size(); ++k) {
        if (!cones[k])
            throw ConditionError("B", "subdomain " + std::to_string(k + 1) +
                                          " admits no direction cone (angle range >= pi)");
        delta = std::min(delta, cones[k]->delta1);
    }
    return delta;
}

}  // namespace carleman
