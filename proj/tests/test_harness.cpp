#include <doctest.h>

#include "sppfem/harness.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sppfem;
using std::numbers::pi;

namespace {

SimplexSurface<2> square(double x0, double y0, double side)
{
    // Clockwise loop, the outward orientation of the direction vector convention.
    SimplexSurface<2> s;
    s.vertices = {Vec<2>(x0, y0), Vec<2>(x0, y0 + side), Vec<2>(x0 + side, y0 + side), Vec<2>(x0 + side, y0)};
    s.simplices = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    return s;
}

double max_edge(const SimplexSurface<3>& s)
{
    double m = 0.0;
    for (int j = 0; j < s.num_simplices(); ++j)
        m = std::max(m, max_edge_length(s.simplex(j)));
    return m;
}

} // namespace

TEST_CASE("cuboid generator")
{
    const auto c = make_cuboid(2, 1, 1, 0.5);
    validate_surface(c);
    CHECK(enclosed_volume(c) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(total_measure(c) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(make_cuboid(2, 1, 1, 0.25).num_simplices() == 4 * c.num_simplices());
    CHECK(max_edge(c) <= 0.5 * std::sqrt(2.0) + 1e-12);
    CHECK_THROWS_AS(make_cuboid(-1, 1, 1, 0.5), Error);
}

TEST_CASE("generators produce valid meshes for random parameters")
{
    std::mt19937_64 rng(0x5EED);
    std::uniform_real_distribution<double> len(0.3, 2.0), h(0.08, 0.4);
    for (int i = 0; i < 10; ++i) {
        const double a = len(rng), b = len(rng), c = len(rng), hh = h(rng);
        const auto box = make_cuboid(a, b, c, hh);
        validate_surface(box);
        CHECK(enclosed_volume(box) == doctest::Approx(a * b * c).epsilon(1e-12));
        const auto ell = make_ellipsoid(a, b, c, hh);
        validate_surface(ell);
        CHECK(enclosed_volume(ell) < 4.0 / 3.0 * pi * a * b * c);

        const auto r2 = make_box2d(a, b, hh);
        validate_surface(r2);
        CHECK(enclosed_volume(r2) == doctest::Approx(a * b).epsilon(1e-12));
        const auto e2 = make_ellipse(a, b, hh);
        validate_surface(e2);
        for (int j = 0; j < e2.num_simplices(); ++j)
            CHECK(area_and_normal(e2.simplex(j)).area <= hh + 1e-12);
    }
}

TEST_CASE("circle generator")
{
    const auto c = make_circle(1.0, 2 * pi / 256);
    CHECK(c.num_simplices() == 256);
    CHECK(enclosed_volume(c) == doctest::Approx(0.5 * 256 * std::sin(2 * pi / 256)).epsilon(1e-14));
    CHECK_THROWS_AS(make_circle(0.0, 0.1), Error);
}

TEST_CASE("time interpolation")
{
    SurfaceHistory<2> hist;
    const auto model = AnisotropyModel<2>::isotropic();
    FlowState<2> state = make_state(make_ellipse(1.0, 0.5, 0.2), 1e-3, model);
    hist.record(state);
    step(state, model, StabilizerField<2>::constant(0.0));
    hist.record(state);

    CHECK(time_interpolated_surface(hist, 0.0).vertices == hist.positions[0]);
    CHECK(time_interpolated_surface(hist, 1e-3).vertices == hist.positions[1]);
    const auto mid = time_interpolated_surface(hist, 5e-4);
    for (std::size_t i = 0; i < mid.vertices.size(); ++i)
        CHECK((mid.vertices[i] - 0.5 * (hist.positions[0][i] + hist.positions[1][i])).norm() < 1e-15);
    CHECK_THROWS_AS(time_interpolated_surface(hist, 2e-3), Error);
}

TEST_CASE("manifold distance, 2D examples")
{
    const auto a = square(0, 0, 1), b = square(3, 0, 1);
    CHECK(manifold_distance(a, b) == doctest::Approx(2.0).epsilon(1e-12));
    const auto big = square(-0.5, -0.5, 2), small = square(0, 0, 1);
    CHECK(manifold_distance(big, small) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(manifold_distance(a, a) == 0.0);

    const auto e1 = make_ellipse(1.0, 0.5, 0.05), e2 = make_ellipse(0.8, 0.7, 0.05);
    const double d12 = manifold_distance(e1, e2), d21 = manifold_distance(e2, e1);
    CHECK(d12 == d21);
    CHECK(d12 >= std::abs(enclosed_volume(e1) - enclosed_volume(e2)) - 1e-6);

    // Offset concentric circles: symmetric difference of two shifted discs.
    const auto c1 = make_circle(1.0, 0.01);
    auto c2 = c1;
    for (auto& v : c2.vertices)
        v[0] += 0.1;
    const double d = 0.1;
    const double lens = 2 * std::acos(d / 2) - d / 2 * std::sqrt(4 - d * d);
    const double exact = 2 * (enclosed_volume(c1) - lens);
    CHECK(manifold_distance(c1, c2, 4096) == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("manifold distance, 3D examples")
{
    const auto a = make_cuboid(1, 1, 1, 0.5);
    auto b = a, c = a;
    for (auto& v : b.vertices)
        v[2] += 0.25;
    for (auto& v : c.vertices)
        v[0] += 0.25;
    CHECK(manifold_distance(a, b, 64) == doctest::Approx(0.5).epsilon(1e-10));
    // Jumps across sampling columns cost O(cell width).
    CHECK(manifold_distance(a, c, 64) == doctest::Approx(0.5).epsilon(0.03));
    CHECK(manifold_distance(a, c, 256) == doctest::Approx(0.5).epsilon(0.008));
    CHECK(manifold_distance(a, a) == 0.0);
    const auto big = make_cuboid(2, 2, 2, 0.5);
    CHECK(manifold_distance(big, a) == doctest::Approx(7.0).epsilon(1e-10));

    const auto e = make_ellipsoid(1.0, 0.8, 0.7, 0.2);
    const double d1 = manifold_distance(e, a), d2 = manifold_distance(a, e);
    CHECK(d1 == d2);
    CHECK(d1 >= std::abs(enclosed_volume(e) - 1.0) - 1e-3);
}

TEST_CASE("diagnostics and convergence csv")
{
    std::vector<DiagnosticRecord> hist{{0.0, 2.0, 10.0, 0}, {0.1, 2.0, 9.0, 3}};
    std::ostringstream os;
    write_diagnostics_csv(os, hist);
    CHECK(os.str() == "t,V,W,dV_rel,W_rel,newton_iters\n0,2,10,0,1,0\n0.10000000000000001,2,9,0,0.90000000000000002,3\n");

    const RunSummary s = summarize(hist);
    CHECK(s.max_dV_rel == 0.0);
    CHECK(s.max_dW_increase <= 0.0);
    CHECK(s.newton_2to4_fraction == 1.0);

    std::ostringstream cs;
    write_convergence_csv(cs, {{0.5, 0.02, 0.1, {}}, {0.25, 0.005, 0.025, 2.0}});
    CHECK(cs.str() == "h,tau,error,order\n0.5,0.02,0.10000000000000001,-\n0.25,0.0050000000000000001,0.025000000000000001,2\n");
}

TEST_CASE("convergence study on a small 2D ladder")
{
    const ShapeSpec shape{"ellipse", {1.0, 0.5}, {}};
    const auto model = AnisotropyModel<2>::cubic(0.125);
    const auto k = StabilizerField<2>::constant(0.0);
    const auto rows = convergence_study<2>(shape, model, k, {0.25, 0.125}, 0.125, 0.02);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].order.has_value());
    CHECK(rows[1].error < 1e-9);
    CHECK(rows[0].tau == doctest::Approx(2.0 / 25.0 * 0.0625));
}

TEST_CASE("shape and model factories")
{
    CHECK(shape_dimension(ShapeSpec{"cuboid", {1, 1, 1}, {}}) == 3);
    CHECK(shape_dimension(ShapeSpec{"circle", {1}, {}}) == 2);
    CHECK(shape_dimension(ShapeSpec{"file", {}, "x.poly2d"}) == 2);
    CHECK(shape_dimension(ShapeSpec{"file", {}, "x.off"}) == 3);
    CHECK_THROWS_AS(make_shape<3>(ShapeSpec{"cuboid", {1, 1}, {}}, 0.5), Error);
    CHECK(make_model<3>(ModelSpec{"sign_riemannian", 0.0, 2.5, 1.5}).gamma(Vec<3>(1, 0, 0)) ==
          doctest::Approx(2.0));
    CHECK(ExperimentConfig::time_step_for(0.5) == doctest::Approx(0.02));
}
