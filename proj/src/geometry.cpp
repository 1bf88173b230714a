#include "carleman/geometry.hpp"

#include "carleman/field.hpp"
#include "carleman/stream_graph.hpp"

#include <algorithm>
#include <cmath>

namespace carleman {

namespace {

double wrap_angle(const Vec2& x) {
    double th = std::atan2(x.y(), x.x());
    if (th < 0) th += 2.0 * kPi;
    return th;
}

int midpoint_count(double density, double length) {
    return std::max(1, static_cast<int>(std::ceil(density * length)));
}

void append_circle(std::vector<SurfaceSample>& out, double radius, double density, bool outward) {
    int n = midpoint_count(density, 2.0 * kPi * radius);
    double dth = 2.0 * kPi / n;
    double w = 2.0 * kPi * radius / n;
    for (int k = 0; k < n; ++k) {
        double th = (k + 0.5) * dth;
        Vec2 e(std::cos(th), std::sin(th));
        out.push_back({radius * e, outward ? e : Vec2(-e), w});
    }
}

void append_segment(std::vector<SurfaceSample>& out, const Vec2& a, const Vec2& b, const Vec2& nu,
                    double density) {
    double len = (b - a).norm();
    int n = midpoint_count(density, len);
    double w = len / n;
    for (int k = 0; k < n; ++k) {
        Vec2 p = a + (b - a) * ((k + 0.5) / n);
        out.push_back({p, nu, w});
    }
}

}  // namespace

Domain Domain::rectangle(double x_lo, double x_hi, double y_lo, double y_hi) {
    if (!(x_lo < x_hi) || !(y_lo < y_hi)) throw std::invalid_argument("rectangle: empty extent");
    Domain d;
    d.shape_ = DomainShape::Rectangle;
    d.x_lo_ = x_lo;
    d.x_hi_ = x_hi;
    d.y_lo_ = y_lo;
    d.y_hi_ = y_hi;
    return d;
}

Domain Domain::annulus(double r_in, double r_out) {
    if (!(0.0 < r_in && r_in < r_out)) throw std::invalid_argument("annulus: need 0 < r_in < r_out");
    Domain d;
    d.shape_ = DomainShape::Annulus;
    d.r_in_ = r_in;
    d.r_out_ = r_out;
    return d;
}

Domain Domain::disk(double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("disk: radius must be positive");
    Domain d;
    d.shape_ = DomainShape::Disk;
    d.r_in_ = 0.0;
    d.r_out_ = radius;
    return d;
}

double Domain::area() const {
    switch (shape_) {
        case DomainShape::Rectangle: return (x_hi_ - x_lo_) * (y_hi_ - y_lo_);
        case DomainShape::Annulus: return kPi * (r_out_ * r_out_ - r_in_ * r_in_);
        case DomainShape::Disk: return kPi * r_out_ * r_out_;
    }
    return 0.0;
}

double Domain::perimeter() const {
    switch (shape_) {
        case DomainShape::Rectangle: return 2.0 * ((x_hi_ - x_lo_) + (y_hi_ - y_lo_));
        case DomainShape::Annulus: return 2.0 * kPi * (r_in_ + r_out_);
        case DomainShape::Disk: return 2.0 * kPi * r_out_;
    }
    return 0.0;
}

double Domain::diameter() const {
    switch (shape_) {
        case DomainShape::Rectangle: return std::hypot(x_hi_ - x_lo_, y_hi_ - y_lo_);
        case DomainShape::Annulus:
        case DomainShape::Disk: return 2.0 * r_out_;
    }
    return 0.0;
}

double Domain::max_abs() const {
    switch (shape_) {
        case DomainShape::Rectangle: {
            double mx = std::max(std::abs(x_lo_), std::abs(x_hi_));
            double my = std::max(std::abs(y_lo_), std::abs(y_hi_));
            return std::hypot(mx, my);
        }
        case DomainShape::Annulus:
        case DomainShape::Disk: return r_out_;
    }
    return 0.0;
}

bool Domain::contains(const Vec2& x, double tol) const {
    switch (shape_) {
        case DomainShape::Rectangle:
            return x.x() >= x_lo_ - tol && x.x() <= x_hi_ + tol && x.y() >= y_lo_ - tol &&
                   x.y() <= y_hi_ + tol;
        case DomainShape::Annulus: {
            double r = x.norm();
            return r >= r_in_ - tol && r <= r_out_ + tol;
        }
        case DomainShape::Disk: return x.norm() <= r_out_ + tol;
    }
    return false;
}

std::vector<SurfaceSample> Domain::sample_boundary(double density) const {
    if (!(density > 0.0)) throw std::invalid_argument("sample_boundary: density must be positive");
    std::vector<SurfaceSample> out;
    switch (shape_) {
        case DomainShape::Rectangle: {
            Vec2 bl(x_lo_, y_lo_), br(x_hi_, y_lo_), tr(x_hi_, y_hi_), tl(x_lo_, y_hi_);
            append_segment(out, bl, br, Vec2(0, -1), density);
            append_segment(out, br, tr, Vec2(1, 0), density);
            append_segment(out, tr, tl, Vec2(0, 1), density);
            append_segment(out, tl, bl, Vec2(-1, 0), density);
            break;
        }
        case DomainShape::Annulus:
            append_circle(out, r_out_, density, true);
            append_circle(out, r_in_, density, false);
            break;
        case DomainShape::Disk:
            append_circle(out, r_out_, density, true);
            break;
    }
    return out;
}

double Subdomain::area() const {
    if (const auto* s = std::get_if<SectorSpec>(&spec)) {
        return 0.5 * (s->r_out * s->r_out - s->r_in * s->r_in) * (s->th_hi - s->th_lo);
    }
    const auto& r = std::get<StripSpec>(spec);
    return (r.x_hi - r.x_lo) * (r.y_hi - r.y_lo);
}

bool Subdomain::contains(const Vec2& x, double tol) const {
    if (const auto* s = std::get_if<SectorSpec>(&spec)) {
        double r = x.norm();
        if (r < s->r_in - tol || r > s->r_out + tol) return false;
        double th = wrap_angle(x);
        double tol_th = tol / std::max(s->r_in, 1e-12);
        if (th >= s->th_lo - tol_th && th <= s->th_hi + tol_th) return true;
        // wrap ambiguity at theta ~ 0 / 2 pi
        if (th - 2.0 * kPi >= s->th_lo - tol_th && th - 2.0 * kPi <= s->th_hi + tol_th) return true;
        if (th + 2.0 * kPi >= s->th_lo - tol_th && th + 2.0 * kPi <= s->th_hi + tol_th) return true;
        return false;
    }
    const auto& r = std::get<StripSpec>(spec);
    return x.x() >= r.x_lo - tol && x.x() <= r.x_hi + tol && x.y() >= r.y_lo - tol &&
           x.y() <= r.y_hi + tol;
}

double Interface::area() const {
    double a = 0.0;
    for (const auto& piece : pieces) a += (piece.b - piece.a).norm();
    return a;
}

Vec2 Interface::normal_from(int id, const InterfacePiece& piece) const {
    if (id == i) return piece.nu;
    if (id == j) return -piece.nu;
    throw std::invalid_argument("normal_from: id is not a side of this interface");
}

int Partition::locate(const Vec2& x, double tol) const {
    for (const auto& sub : subdomains) {
        if (sub.contains(x, tol)) return sub.id;
    }
    return 0;
}

Partition trivial_partition(const Domain& domain) {
    Partition p;
    p.domain = domain;
    Subdomain sub;
    sub.id = 1;
    switch (domain.shape()) {
        case DomainShape::Rectangle:
            sub.spec = StripSpec{domain.x_lo(), domain.x_hi(), domain.y_lo(), domain.y_hi()};
            break;
        case DomainShape::Annulus:
            sub.spec = SectorSpec{domain.r_in(), domain.r_out(), 0.0, 2.0 * kPi};
            break;
        case DomainShape::Disk:
            sub.spec = SectorSpec{0.0, domain.r_out(), 0.0, 2.0 * kPi};
            break;
    }
    p.subdomains.push_back(sub);
    return p;
}

Partition build_annulus_angular_partition(double r_in, double r_out,
                                          const std::vector<double>& angles) {
    if (angles.size() < 3) throw std::invalid_argument("angular partition: need at least 2 sectors");
    for (std::size_t k = 1; k < angles.size(); ++k) {
        if (!(angles[k] > angles[k - 1]))
            throw std::invalid_argument("angular partition: angles must increase strictly");
    }
    if (std::abs(angles.front()) > 1e-12 || std::abs(angles.back() - 2.0 * kPi) > 1e-12)
        throw std::invalid_argument("angular partition: angles must run from 0 to 2*pi");

    Partition p;
    p.domain = Domain::annulus(r_in, r_out);
    int n = static_cast<int>(angles.size()) - 1;
    for (int i = 0; i < n; ++i) {
        Subdomain sub;
        sub.id = i + 1;
        sub.spec = SectorSpec{r_in, r_out, angles[i], angles[i + 1]};
        p.subdomains.push_back(sub);
    }
    // one radial cut per angle theta_1 .. theta_N (theta_N ~ 0 is the wrap
    // cut between sector N and sector 1), merged per unordered pair
    auto radial_piece = [&](double th) {
        double c = std::cos(th), s = std::sin(th);
        InterfacePiece piece;
        piece.a = Vec2(r_in * c, r_in * s);
        piece.b = Vec2(r_out * c, r_out * s);
        piece.nu = Vec2(-s, c);  // normal from the sector below the cut into its successor
        return piece;
    };
    std::vector<Interface> interfaces;
    for (int i = 1; i <= n; ++i) {
        int a = i, b = (i % n) + 1;  // cut at angles[i] separates sector i and i+1 (mod n)
        InterfacePiece piece = radial_piece(angles[i]);
        bool merged = false;
        for (auto& existing : interfaces) {
            if ((existing.i == std::min(a, b)) && (existing.j == std::max(a, b))) {
                if (existing.i != a) piece.nu = -piece.nu;  // store as nu_{i->j} of the record
                existing.pieces.push_back(piece);
                merged = true;
                break;
            }
        }
        if (!merged) {
            Interface f;
            f.i = std::min(a, b);
            f.j = std::max(a, b);
            if (f.i != a) piece.nu = -piece.nu;
            f.pieces.push_back(piece);
            interfaces.push_back(f);
        }
    }
    p.interfaces = std::move(interfaces);
    return p;
}

Partition build_rectangle_strip_partition(const Domain& rect, const std::vector<double>& cuts) {
    if (rect.shape() != DomainShape::Rectangle)
        throw std::invalid_argument("strip partition: domain must be a rectangle");
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        if (!(cuts[k] > rect.x_lo() && cuts[k] < rect.x_hi()))
            throw std::invalid_argument("strip partition: cut outside the rectangle");
        if (k > 0 && !(cuts[k] > cuts[k - 1]))
            throw std::invalid_argument("strip partition: cuts must increase strictly");
    }
    Partition p;
    p.domain = rect;
    std::vector<double> xs;
    xs.push_back(rect.x_lo());
    xs.insert(xs.end(), cuts.begin(), cuts.end());
    xs.push_back(rect.x_hi());
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        Subdomain sub;
        sub.id = static_cast<int>(k) + 1;
        sub.spec = StripSpec{xs[k], xs[k + 1], rect.y_lo(), rect.y_hi()};
        p.subdomains.push_back(sub);
    }
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        Interface f;
        f.i = static_cast<int>(k) + 1;
        f.j = static_cast<int>(k) + 2;
        InterfacePiece piece;
        piece.a = Vec2(cuts[k], rect.y_lo());
        piece.b = Vec2(cuts[k], rect.y_hi());
        piece.nu = Vec2(1, 0);
        f.pieces.push_back(piece);
        p.interfaces.push_back(f);
    }
    return p;
}

BoundarySplit classify_boundary(const Domain& domain, const VectorField& field, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("classify_boundary: need samples");
    double density = n_samples / domain.perimeter();
    BoundarySplit split;
    for (const auto& sample : domain.sample_boundary(density)) {
        double dot = field(sample.point).dot(sample.normal);
        (dot >= 0.0 ? split.plus : split.minus).push_back(sample);
    }
    return split;
}

std::vector<VolumeSample> sample_volume(const Subdomain& sub, double density) {
    if (!(density > 0.0)) throw std::invalid_argument("sample_volume: density must be positive");
    std::vector<VolumeSample> out;
    if (const auto* s = std::get_if<SectorSpec>(&sub.spec)) {
        double arc = 0.5 * (s->r_in + s->r_out) * (s->th_hi - s->th_lo);
        int nr = midpoint_count(density, s->r_out - s->r_in);
        int nth = midpoint_count(density, arc);
        double dr = (s->r_out - s->r_in) / nr;
        double dth = (s->th_hi - s->th_lo) / nth;
        out.reserve(static_cast<std::size_t>(nr) * nth);
        for (int i = 0; i < nr; ++i) {
            double r = s->r_in + (i + 0.5) * dr;
            double w = r * dr * dth;  // integrates r dr dth exactly per cell
            for (int j = 0; j < nth; ++j) {
                double th = s->th_lo + (j + 0.5) * dth;
                out.push_back({Vec2(r * std::cos(th), r * std::sin(th)), w});
            }
        }
        return out;
    }
    const auto& r = std::get<StripSpec>(sub.spec);
    int nx = midpoint_count(density, r.x_hi - r.x_lo);
    int ny = midpoint_count(density, r.y_hi - r.y_lo);
    double dx = (r.x_hi - r.x_lo) / nx;
    double dy = (r.y_hi - r.y_lo) / ny;
    out.reserve(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            out.push_back({Vec2(r.x_lo + (i + 0.5) * dx, r.y_lo + (j + 0.5) * dy), dx * dy});
        }
    }
    return out;
}

std::vector<std::vector<VolumeSample>> sample_volume(const Partition& partition, double density) {
    std::vector<std::vector<VolumeSample>> out;
    out.reserve(partition.subdomains.size());
    for (const auto& sub : partition.subdomains) out.push_back(sample_volume(sub, density));
    return out;
}

std::vector<SurfaceSample> sample_surface(const Interface& interface, double density) {
    if (!(density > 0.0)) throw std::invalid_argument("sample_surface: density must be positive");
    std::vector<SurfaceSample> out;
    for (const auto& piece : interface.pieces) append_segment(out, piece.a, piece.b, piece.nu, density);
    return out;
}

std::vector<Vec2> closure_sample_points(const Subdomain& sub, double density) {
    std::vector<Vec2> pts;
    for (const auto& s : sample_volume(sub, density)) pts.push_back(s.point);
    auto line = [&](const Vec2& a, const Vec2& b) {
        int n = midpoint_count(density, (b - a).norm());
        for (int k = 0; k <= n; ++k) pts.push_back(a + (b - a) * (static_cast<double>(k) / n));
    };
    if (const auto* s = std::get_if<SectorSpec>(&sub.spec)) {
        Vec2 e_lo(std::cos(s->th_lo), std::sin(s->th_lo));
        Vec2 e_hi(std::cos(s->th_hi), std::sin(s->th_hi));
        line(s->r_in * e_lo, s->r_out * e_lo);
        line(s->r_in * e_hi, s->r_out * e_hi);
        int n = midpoint_count(density, s->r_out * (s->th_hi - s->th_lo));
        for (int k = 0; k <= n; ++k) {
            double th = s->th_lo + (s->th_hi - s->th_lo) * k / n;
            Vec2 e(std::cos(th), std::sin(th));
            pts.push_back(s->r_out * e);
            if (s->r_in > 0.0) pts.push_back(s->r_in * e);
        }
    } else {
        const auto& r = std::get<StripSpec>(sub.spec);
        line({r.x_lo, r.y_lo}, {r.x_hi, r.y_lo});
        line({r.x_hi, r.y_lo}, {r.x_hi, r.y_hi});
        line({r.x_hi, r.y_hi}, {r.x_lo, r.y_hi});
        line({r.x_lo, r.y_hi}, {r.x_lo, r.y_lo});
    }
    return pts;
}

ProposedPartition propose_angular_partition(const Domain& annulus, const VectorField& field,
                                            double max_width, int refine_limit) {
    if (annulus.shape() != DomainShape::Annulus)
        throw std::invalid_argument("propose_angular_partition: domain must be an annulus");
    if (!field.is_polar_angle())
        throw std::invalid_argument("propose_angular_partition: field must be a polar-angle family");
    if (!(max_width > 0.0) || refine_limit < 0)
        throw std::invalid_argument("propose_angular_partition: bad parameters");

    const auto& spec = field.polar_spec();
    auto direction_range_ok = [&](int n) {
        // (2.7): the winding function must span less than pi on every sector
        for (int i = 0; i < n; ++i) {
            double lo = 2.0 * kPi * i / n, hi = 2.0 * kPi * (i + 1) / n;
            double pmin = spec.p(lo), pmax = pmin;
            const int probes = 64;
            for (int k = 0; k <= probes; ++k) {
                double v = spec.p(lo + (hi - lo) * k / probes);
                pmin = std::min(pmin, v);
                pmax = std::max(pmax, v);
            }
            if (pmax - pmin >= kPi) return false;
        }
        return true;
    };

    int n = std::max(2, static_cast<int>(std::ceil(2.0 * kPi / max_width)));
    while (!direction_range_ok(n)) n *= 2;

    ProposedPartition result;
    for (int round = 0; round <= refine_limit; ++round, n *= 2) {
        std::vector<double> angles(n + 1);
        for (int i = 0; i <= n; ++i) angles[i] = 2.0 * kPi * i / n;
        Partition partition =
            build_annulus_angular_partition(annulus.r_in(), annulus.r_out(), angles);
        StreamGraph graph = build_graph(partition, field, 64.0 / (annulus.r_out() - annulus.r_in()));
        result.partition = std::move(partition);
        result.sectors = n;
        result.refinements = round;
        if (!has_closed_loop(graph)) {
            result.loop_free = true;
            return result;
        }
    }
    result.loop_free = false;  // every refinement produced a cycle
    return result;
}

}  // namespace carleman
