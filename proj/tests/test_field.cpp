#include "carleman/field.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace carleman;

namespace {

// independent oracle: maximize min_x (H . v) over a dense direction grid
struct ConeOracle {
    double best_margin;
    Vec2 best_v;
};

ConeOracle brute_force_cone(const VectorField& field, const std::vector<Vec2>& points) {
    ConeOracle out{-std::numeric_limits<double>::infinity(), Vec2(1, 0)};
    for (int k = 0; k < 3600; ++k) {
        double th = 2 * kPi * k / 3600.0;
        Vec2 v(std::cos(th), std::sin(th));
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& x : points) margin = std::min(margin, field(x).dot(v));
        if (margin > out.best_margin) {
            out.best_margin = margin;
            out.best_v = v;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("check_nonvanishing") {
    SUBCASE("constant field") {
        CHECK(check_nonvanishing(VectorField::constant(1, 0), Domain::rectangle(0, 1, 0, 1), 40.0) ==
              doctest::Approx(1.0));
    }
    SUBCASE("rotation on the annulus attains |x| = r_in on the inner circle") {
        double d0 = check_nonvanishing(VectorField::rotation(), Domain::annulus(1, 2), 60.0);
        CHECK(d0 == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("identity field vanishes at the disk center") {
        auto field = VectorField::custom([](const Vec2& x) { return x; });
        CHECK_THROWS_AS(check_nonvanishing(field, Domain::disk(1.0), 40.0), VanishingFieldError);
    }
}

TEST_CASE("sup_norm attains boundary extremes") {
    CHECK(sup_norm(VectorField::constant(1, 0), Domain::rectangle(0, 1, 0, 1), 40.0) ==
          doctest::Approx(1.0));
    CHECK(sup_norm(VectorField::rotation(), Domain::annulus(1, 2), 60.0) ==
          doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sup_norm(VectorField::radial_potential(), Domain::annulus(1, 2), 60.0) ==
          doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("direction cones") {
    SUBCASE("constant field gives its own direction with margin 1") {
        auto cone = find_direction_cone(VectorField::constant(1, 0), Domain::rectangle(0, 1, 0, 1), 30.0);
        REQUIRE(cone);
        CHECK((cone->v - Vec2(1, 0)).norm() <= 1e-12);
        CHECK(cone->delta1 == doctest::Approx(1.0));
    }
    SUBCASE("rotation on the full annulus has no cone") {
        CHECK(!find_direction_cone(VectorField::rotation(), Domain::annulus(1, 2), 60.0));
    }
    SUBCASE("rotation on a quarter sector: bisector at 3 pi / 4") {
        Subdomain sub{1, SectorSpec{1, 2, 0, kPi / 2}};
        auto cone = find_direction_cone(VectorField::rotation(), sub, 120.0);
        REQUIRE(cone);
        Vec2 expected(std::cos(3 * kPi / 4), std::sin(3 * kPi / 4));
        CHECK((cone->v - expected).norm() <= 1e-3);
        CHECK(cone->delta1 >= 0.7071 - 1e-3);
        CHECK(cone->delta1 <= 1.0);
        // margin certified against an independent dense sample
        auto pts = closure_sample_points(sub, 200.0);
        for (const auto& x : pts) CHECK(VectorField::rotation()(x).dot(cone->v) >= cone->delta1 - 1e-12);
    }
}

TEST_CASE("cone existence agrees with the brute-force direction grid") {
    struct Case {
        VectorField field;
        Subdomain sub;
    };
    std::vector<Case> cases;
    cases.push_back({VectorField::rotation(), Subdomain{1, SectorSpec{1, 2, 0, 2 * kPi}}});
    cases.push_back({VectorField::rotation(), Subdomain{1, SectorSpec{1, 2, 0, kPi / 2}}});
    cases.push_back({VectorField::constant(2, 1), Subdomain{1, StripSpec{0, 1, 0, 1}}});
    cases.push_back({VectorField::radial_potential(), Subdomain{1, SectorSpec{1, 2, 0.3, 2.0}}});
    cases.push_back({VectorField::radial_potential(), Subdomain{1, SectorSpec{1, 2, 0, 2 * kPi}}});
    for (const auto& c : cases) {
        auto cone = find_direction_cone(c.field, c.sub, 60.0);
        auto pts = closure_sample_points(c.sub, 60.0);
        auto oracle = brute_force_cone(c.field, pts);
        if (cone) {
            CHECK(oracle.best_margin > 0.0);
            // the bisector construction is optimal in 2-D up to grid spacing
            CHECK(cone->delta1 >= oracle.best_margin - 2e-3 * std::abs(oracle.best_margin) - 1e-6);
        } else {
            CHECK(oracle.best_margin <= 1e-9);
        }
    }
}

TEST_CASE("find_direction_cone is rotation-equivariant") {
    auto base_field = [](const Vec2& x) { return Vec2(2.0 * x.x() + 3.0, x.y()); };
    double alpha = 0.7;
    Eigen::Rotation2D<double> rot(alpha);
    auto rotated_field = VectorField::custom([=](const Vec2& x) {
        return Vec2(rot * base_field(rot.inverse() * x));
    });
    Subdomain sub{1, SectorSpec{1, 2, 0.2, 1.3}};
    Subdomain sub_rot{1, SectorSpec{1, 2, 0.2 + alpha, 1.3 + alpha}};
    auto cone = find_direction_cone(VectorField::custom(base_field), sub, 150.0);
    auto cone_rot = find_direction_cone(rotated_field, sub_rot, 150.0);
    REQUIRE(cone);
    REQUIRE(cone_rot);
    CHECK((rot * cone->v - cone_rot->v).norm() <= 1e-8);
    CHECK(cone->delta1 == doctest::Approx(cone_rot->delta1).epsilon(1e-8));
}

TEST_CASE("uniform cone margin") {
    DirectionCone a{Vec2(1, 0), 1.0, 0.1};
    DirectionCone b{Vec2(0, 1), 0.5, 0.1};
    CHECK(uniform_cone_margin({a, b}) == doctest::Approx(0.5));
    CHECK(uniform_cone_margin({DirectionCone{Vec2(1, 0), 0.7071, 0.0}}) == doctest::Approx(0.7071));
    CHECK_THROWS_AS(uniform_cone_margin({a, std::nullopt}), ConditionError);
}

TEST_CASE("polar-angle fields") {
    SUBCASE("validation of the winding function") {
        CHECK_THROWS_AS(VectorField::polar_angle({[](double th) { return th + 0.5; }, 1}),
                        std::invalid_argument);
        CHECK_NOTHROW(VectorField::polar_angle_linear(3));
    }
    SUBCASE("normal flux across a radial cut equals cos q at the cut") {
        auto field = VectorField::polar_angle_linear(2);
        auto partition = build_annulus_angular_partition(1, 2, {0, 2 * kPi / 3, 4 * kPi / 3, 2 * kPi});
        const Interface& f12 = partition.interfaces.front();
        double expected = std::cos(field.q(2 * kPi / 3));
        for (const auto& s : sample_surface(f12, 64.0)) {
            CHECK(field(s.point).dot(s.normal) == doctest::Approx(expected).epsilon(1e-10));
        }
    }
    SUBCASE("unit magnitude everywhere") {
        auto field = VectorField::polar_angle_linear(1);
        Rng rng(7);
        for (int k = 0; k < 100; ++k) {
            double r = rng.uniform(1.0, 2.0), th = rng.uniform(0.0, 2 * kPi);
            CHECK(field(Vec2(r * std::cos(th), r * std::sin(th))).norm() == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("tabulated fields interpolate bilinearly") {
    Eigen::MatrixXd h1(3, 3), h2(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            h1(i, j) = 0.5 * i;   // H1 = x on [0,2] grid with spacing 1
            h2(i, j) = 1.0;
        }
    auto field = VectorField::tabulated(0, 1, 0, 1, h1, h2);
    CHECK(field(Vec2(0.5, 0.5)).x() == doctest::Approx(0.5));
    CHECK(field(Vec2(0.25, 0.8)).x() == doctest::Approx(0.25));
    CHECK(field(Vec2(0.3, 0.3)).y() == doctest::Approx(1.0));
}

TEST_CASE("tabulated fields load from csv") {
    auto dir = std::filesystem::temp_directory_path() / "carleman_field_csv";
    std::filesystem::create_directories(dir);
    auto path = (dir / "field.csv").string();
    {
        std::ofstream out(path);
        out << "x,y,H1,H2\n";
        for (double y : {0.0, 0.5, 1.0})
            for (double x : {0.0, 0.5, 1.0})
                out << x << "," << y << "," << x << "," << 1.0 << "\n";
    }
    auto field = VectorField::tabulated_from_csv(path);
    CHECK(field(Vec2(0.25, 0.75)).x() == doctest::Approx(0.25));
    CHECK(field(Vec2(0.6, 0.1)).y() == doctest::Approx(1.0));
    CHECK_THROWS_AS(VectorField::tabulated_from_csv("/nonexistent.csv"), std::invalid_argument);
}

TEST_CASE("source factors expose R, dR/dt and the initial floor") {
    auto r = SourceFactor::one_plus_x1_t();
    CHECK(r(Vec2(0.5, 0), 2.0) == doctest::Approx(2.0));
    CHECK(r.dt(Vec2(0.5, 0), 2.0) == doctest::Approx(0.5));
    CHECK(r.initial_floor(Domain::rectangle(0, 1, 0, 1), 30.0) == doctest::Approx(1.0));
    auto vanishing = SourceFactor::custom([](const Vec2& x, double) { return x.x(); },
                                          [](const Vec2&, double) { return 0.0; });
    CHECK(vanishing.initial_floor(Domain::rectangle(0, 1, 0, 1), 30.0) == doctest::Approx(0.0));
}
