#pragma once

#include "carleman/types.hpp"

#include <optional>
#include <variant>

namespace carleman {

class VectorField;  // field.hpp

/// One quadrature node on a curve: position, unit normal, surface measure weight.
struct SurfaceSample {
    Vec2 point;
    Vec2 normal;
    double weight = 0.0;
};

/// One quadrature node in a 2-D region.
struct VolumeSample {
    Vec2 point;
    double weight = 0.0;
};

enum class DomainShape { Rectangle, Annulus, Disk };

// Bounded 2-D domain with a parametrized boundary carrying outward unit
// normals. Three built-in shapes; all quantities below are analytic.
class Domain {
public:
    static Domain rectangle(double x_lo, double x_hi, double y_lo, double y_hi);
    static Domain annulus(double r_in, double r_out);
    static Domain disk(double radius);

    DomainShape shape() const { return shape_; }

    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }
    double y_lo() const { return y_lo_; }
    double y_hi() const { return y_hi_; }
    double r_in() const { return r_in_; }
    double r_out() const { return r_out_; }

    double area() const;
    double perimeter() const;
    double diameter() const;
    /// max_{x in closure} |x|, the constant R of the radius inequalities.
    double max_abs() const;

    bool contains(const Vec2& x, double tol = 0.0) const;

    /// Composite midpoint samples of the whole boundary; weights sum to the
    /// perimeter exactly for the built-in shapes.
    std::vector<SurfaceSample> sample_boundary(double density) const;

private:
    DomainShape shape_ = DomainShape::Rectangle;
    double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;  // rectangle
    double r_in_ = 0, r_out_ = 1;                       // annulus / disk
};

/// Annular sector in polar coordinates, th_lo <= theta <= th_hi.
struct SectorSpec {
    double r_in, r_out, th_lo, th_hi;
};

/// Axis-aligned rectangle (vertical strip of a larger rectangle).
struct StripSpec {
    double x_lo, x_hi, y_lo, y_hi;
};

struct Subdomain {
    int id = 0;  // 1-based, matching node ids of the stream graph
    std::variant<SectorSpec, StripSpec> spec;

    double area() const;
    bool contains(const Vec2& x, double tol = 0.0) const;
};

/// Straight piece of an interface; nu is the unit normal pointing from
/// subdomain i into subdomain j, constant along the piece.
struct InterfacePiece {
    Vec2 a, b;
    Vec2 nu;
};

struct Interface {
    int i = 0, j = 0;  // subdomain ids, i != j
    std::vector<InterfacePiece> pieces;

    double area() const;
    /// Normal seen from subdomain `id` (negated when id == j).
    Vec2 normal_from(int id, const InterfacePiece& piece) const;
};

struct Partition {
    Domain domain;
    std::vector<Subdomain> subdomains;
    std::vector<Interface> interfaces;

    int size() const { return static_cast<int>(subdomains.size()); }
    /// Id of the subdomain claiming x (ties resolved to the lower id),
    /// or 0 if x lies outside every subdomain by more than tol.
    int locate(const Vec2& x, double tol) const;
    int locate(const Vec2& x) const { return locate(x, Tolerances::geom_rel * domain.diameter()); }
};

/// Boundary quadrature split by the sign of (H . nu): plus where >= 0.
struct BoundarySplit {
    std::vector<SurfaceSample> plus;
    std::vector<SurfaceSample> minus;
};

Partition trivial_partition(const Domain& domain);

/// Angular sectors of an annulus cut at the given angles
/// (0 = angles.front() < ... < angles.back() = 2*pi). Every cut angle,
/// including the wrap at 0 ~ 2*pi, produces a radial interface piece.
Partition build_annulus_angular_partition(double r_in, double r_out,
                                          const std::vector<double>& angles);

/// Vertical strips of a rectangle; interface normals point in +x.
Partition build_rectangle_strip_partition(const Domain& rect, const std::vector<double>& cuts);

BoundarySplit classify_boundary(const Domain& domain, const VectorField& field, int n_samples);

/// Tensor midpoint quadrature fitted to the subdomain shape (polar for
/// sectors). density = target nodes per unit length and axis.
std::vector<VolumeSample> sample_volume(const Subdomain& sub, double density);
std::vector<std::vector<VolumeSample>> sample_volume(const Partition& partition, double density);

/// Composite midpoint samples along the interface; normals are nu_{i->j}.
std::vector<SurfaceSample> sample_surface(const Interface& interface, double density);

/// Volume samples plus the subdomain's own boundary curves and corners, for
/// minima that are attained on the closure.
std::vector<Vec2> closure_sample_points(const Subdomain& sub, double density);

struct ProposedPartition {
    Partition partition;
    bool loop_free = false;  // false => refine_limit exhausted with a cycle at every stage
    int sectors = 0;
    int refinements = 0;
};

/// Searches for an angular partition on which the field's direction range is
/// < pi per sector and the induced stream graph is loop-free, doubling the
/// sector count up to refine_limit times. Requires a polar-angle field.
ProposedPartition propose_angular_partition(const Domain& annulus, const VectorField& field,
                                            double max_width, int refine_limit);

}  // namespace carleman
