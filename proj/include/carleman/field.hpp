#pragma once

#include "carleman/geometry.hpp"
#include "carleman/types.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace carleman {

/// Winding function of a polar-angle field: H = (-sin p(theta), cos p(theta)).
/// p must satisfy p(0) = 0, p(2 pi) = 2 pi m, p'(2 pi) = p'(0).
struct PolarAngleSpec {
    std::function<double(double)> p;
    int m = 0;
};

// Stream field H(x). Built-in families cover the reference examples; Custom
// and Tabulated admit arbitrary user fields (C^1 smoothness is the caller's
// responsibility for tabulated data).
class VectorField {
public:
    enum class Kind { Constant, Rotation, RadialPotential, PolarAngle, Tabulated, Custom };

    static VectorField constant(double a, double b);
    /// (-x2, x1)
    static VectorField rotation();
    /// (2 x1, 2 x2) = grad |x|^2
    static VectorField radial_potential();
    static VectorField polar_angle(PolarAngleSpec spec);
    /// p(theta) = m * theta
    static VectorField polar_angle_linear(int m);
    /// Bilinear interpolation of H sampled on a regular grid.
    static VectorField tabulated(double x_lo, double x_hi, double y_lo, double y_hi,
                                 Eigen::MatrixXd h1, Eigen::MatrixXd h2);
    /// CSV with columns x,y,H1,H2 listing a complete regular grid.
    static VectorField tabulated_from_csv(const std::string& path);
    static VectorField custom(std::function<Vec2(const Vec2&)> eval);

    Vec2 operator()(const Vec2& x) const;
    Kind kind() const { return kind_; }

    bool is_polar_angle() const { return kind_ == Kind::PolarAngle; }
    const PolarAngleSpec& polar_spec() const;
    /// q(theta) := p(theta) - theta; the sign of cos q at a cut angle is the
    /// sign of the normal flux across the radial interface there.
    double q(double theta) const;

private:
    Kind kind_ = Kind::Constant;
    Vec2 const_value_{1.0, 0.0};
    PolarAngleSpec polar_;
    std::function<Vec2(const Vec2&)> custom_;
    // tabulated grid
    double tx_lo_ = 0, tx_hi_ = 1, ty_lo_ = 0, ty_hi_ = 1;
    Eigen::MatrixXd th1_, th2_;

    void validate_polar() const;
};

/// Zeroth-order coefficient p(x) with an essential-sup bound M.
class ScalarCoefficient {
public:
    ScalarCoefficient() : value_(0.0), bound_(0.0) {}
    static ScalarCoefficient constant(double value);
    static ScalarCoefficient custom(std::function<double(const Vec2&)> eval, double bound);

    double operator()(const Vec2& x) const { return eval_ ? eval_(x) : value_; }
    double bound() const { return bound_; }

private:
    double value_ = 0.0;
    double bound_ = 0.0;
    std::function<double(const Vec2&)> eval_;
};

/// Separated source factor R(x,t) with its time derivative and the floor
/// rho_min = min_x |R(x,0)| required by the inverse-source theory.
class SourceFactor {
public:
    static SourceFactor one();
    static SourceFactor one_plus_t();
    /// R(x,t) = 1 + x1 * t
    static SourceFactor one_plus_x1_t();
    static SourceFactor custom(std::function<double(const Vec2&, double)> r,
                               std::function<double(const Vec2&, double)> dr_dt);

    double operator()(const Vec2& x, double t) const { return r_(x, t); }
    double dt(const Vec2& x, double t) const { return dr_(x, t); }

    /// min over domain samples of |R(x,0)|.
    double initial_floor(const Domain& domain, double density) const;

private:
    std::function<double(const Vec2&, double)> r_;
    std::function<double(const Vec2&, double)> dr_;
};

/// Right-hand side F(x,t).
class SpaceTimeSource {
public:
    SpaceTimeSource() : f_([](const Vec2&, double) { return 0.0; }) {}
    static SpaceTimeSource zero() { return SpaceTimeSource(); }
    static SpaceTimeSource custom(std::function<double(const Vec2&, double)> f);
    /// F(x,t) = R(x,t) f(x), the separated inverse-problem form.
    static SpaceTimeSource separated(SourceFactor r, std::function<double(const Vec2&)> f);

    double operator()(const Vec2& x, double t) const { return f_(x, t); }

private:
    std::function<double(const Vec2&, double)> f_;
};

/// Direction v with min (H . v) >= delta1 > 0 over a subdomain closure.
struct DirectionCone {
    Vec2 v;
    double delta1 = 0.0;
    /// half-width of the sampled direction arc (diagnostic)
    double arc_width = 0.0;
};

/// Returns the sampled minimum of |H| over the domain closure; throws
/// VanishingFieldError if it falls below the non-vanishing floor.
double check_nonvanishing(const VectorField& field, const Domain& domain, double density);

/// Sampled sup of |H| over the domain closure (volume + boundary samples).
double sup_norm(const VectorField& field, const Domain& domain, double density);

/// Sampled sup of |div H| (central differences).
double divergence_sup(const VectorField& field, const Domain& domain, double density);

/// Minimal-enclosing-arc construction: if the direction angles of H over the
/// subdomain fit in an open arc of width < pi, returns the arc bisector and
/// the measured margin min (H . v); otherwise nullopt.
std::optional<DirectionCone> find_direction_cone(const VectorField& field, const Subdomain& sub,
                                                 double density);

/// Whole-domain variant (Condition (A) check).
std::optional<DirectionCone> find_direction_cone(const VectorField& field, const Domain& domain,
                                                 double density);

/// delta = min_i delta1_i; throws ConditionError("B") naming the first
/// subdomain without a cone.
double uniform_cone_margin(const std::vector<std::optional<DirectionCone>>& cones);

}  // namespace carleman
