#include <doctest.h>

#include "sppfem/harness.hpp"
#include "sppfem/scheme.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace sppfem;

namespace {

template <int Dim>
std::vector<Vec<Dim>> perturbed(const std::vector<Vec<Dim>>& X, double eps, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-eps, eps);
    std::vector<Vec<Dim>> Y = X;
    for (auto& p : Y)
        for (int k = 0; k < Dim; ++k)
            p[k] += u(rng);
    return Y;
}

template <int Dim>
void check_jacobian(const SimplexSurface<Dim>& surface, const AnisotropyModel<Dim>& model, double k)
{
    std::mt19937_64 rng(0x5EED);
    const auto kfield = StabilizerField<Dim>::constant(k);
    const auto geo = step_geometry(surface, model, kfield);
    const double tau = 1e-3;
    const auto X = perturbed<Dim>(surface.vertices, 0.02, rng);
    Eigen::VectorXd mu = Eigen::VectorXd::Random(surface.num_vertices());

    const LinearSystem sys = assemble_system(surface, geo, tau, X, mu);
    const Eigen::VectorXd R = scheme_residual(surface, geo, tau, X, mu);
    CHECK((sys.rhs + R).cwiseAbs().maxCoeff() < 1e-13);

    const Eigen::VectorXd z = pack_unknowns<Dim>(mu, X);
    const Eigen::MatrixXd J = Eigen::MatrixXd(sys.matrix);
    const double h = 1e-6;
    double worst = 0.0;
    for (int c = 0; c < z.size(); ++c) {
        Eigen::VectorXd zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        Eigen::VectorXd mp, mm;
        std::vector<Vec<Dim>> Xp, Xm;
        unpack_unknowns<Dim>(zp, mp, Xp);
        unpack_unknowns<Dim>(zm, mm, Xm);
        const Eigen::VectorXd col =
            (scheme_residual(surface, geo, tau, Xp, mp) - scheme_residual(surface, geo, tau, Xm, mm)) / (2 * h);
        worst = std::max(worst, (col - J.col(c)).cwiseAbs().maxCoeff() / (1.0 + col.cwiseAbs().maxCoeff()));
    }
    CHECK(worst < 1e-6);
}

} // namespace

TEST_CASE("semi-implicit normal")
{
    Simplex<2> s{Vec<2>(0.1, 0.2), Vec<2>(0.7, -0.4)};
    CHECK((semi_implicit_normal<2>(s, s) - area_and_normal(s).normal).norm() < 1e-15);

    Simplex<3> t{Vec<3>(0, 0, 0), Vec<3>(1, 0.2, 0), Vec<3>(0.3, 1, 0.5)};
    CHECK((semi_implicit_normal<3>(t, t) - area_and_normal(t).normal).norm() < 1e-15);

    const Vec<2> c = 0.5 * (s[0] + s[1]);
    Simplex<2> big{c + 2.0 * (s[0] - c), c + 2.0 * (s[1] - c)};
    CHECK((semi_implicit_normal<2>(s, big) - 1.5 * area_and_normal(s).normal).norm() < 1e-15);

    Simplex<2> deg{Vec<2>(1, 1), Vec<2>(1, 1)};
    CHECK_THROWS_AS(semi_implicit_normal<2>(deg, s), Error);
}

TEST_CASE("residual at the previous surface")
{
    const auto surface = make_ellipse(1.0, 0.6, 0.1);
    const auto model = AnisotropyModel<2>::cubic(0.125);
    const auto geo = step_geometry(surface, model, StabilizerField<2>::constant(0.1));
    const int N = surface.num_vertices();
    const Eigen::VectorXd R = scheme_residual(surface, geo, 1e-3, surface.vertices, Eigen::VectorXd::Zero(N));
    CHECK(R.head(N).cwiseAbs().maxCoeff() == 0.0);
    CHECK(R.tail(2 * N).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("isotropic k = 0 gives the identity G")
{
    const auto surface = make_cuboid(1, 1, 1, 0.5);
    const auto geo = step_geometry(surface, AnisotropyModel<3>::isotropic(), StabilizerField<3>::constant(0.0));
    for (const auto& G : geo.G)
        CHECK((G - Mat<3>::Identity()).norm() < 1e-15);
}

TEST_CASE("newton jacobian matches finite differences")
{
    check_jacobian<2>(make_ellipse(1.0, 0.6, 0.3), AnisotropyModel<2>::cubic(0.125), 0.2);
    check_jacobian<3>(make_cuboid(1, 1, 1, 0.5), AnisotropyModel<3>::cubic(0.25), 0.3);
    check_jacobian<3>(make_ellipsoid(1.0, 0.8, 0.6, 0.5), AnisotropyModel<3>::sign_riemannian(2.5, 1.5), 1.0);
}

TEST_CASE("steps conserve volume and dissipate energy")
{
    const auto model = AnisotropyModel<3>::cubic(0.125);
    const auto kfield = StabilizerField<3>::constant(0.1);
    FlowState<3> state = make_state(make_cuboid(2, 1, 1, 0.5), 0.02, model);
    for (int m = 0; m < 10; ++m) {
        const SimplexSurface<3> before = state.surface;
        step(state, model, kfield);
        const auto geo = step_geometry(before, model, kfield);
        const auto [lhs, rhs] = dissipation_identity(before, geo, state.tau, state.surface.vertices, state.mu);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(rhs)));
        CHECK(rhs <= 0.0);
    }
    const RunSummary s = summarize(state.history);
    CHECK(s.max_dV_rel <= 1e-11);
    CHECK(s.max_dW_increase <= 1e-12);
    CHECK(state.history.size() == 11);
    CHECK(state.time() == doctest::Approx(0.2));
}

TEST_CASE("run to T = 0 leaves the state unchanged")
{
    const auto model = AnisotropyModel<2>::isotropic();
    FlowState<2> state = make_state(make_circle(1.0, 0.2), 1e-3, model);
    const auto before = state.surface.vertices;
    run(state, model, StabilizerField<2>::constant(0.0), 0.0);
    CHECK(state.history.size() == 1);
    CHECK(state.surface.vertices == before);
}

TEST_CASE("equilibrium input converges immediately")
{
    const auto model = AnisotropyModel<2>::isotropic();
    FlowState<2> state = make_state(make_circle(1.0, 2 * std::numbers::pi / 64), 1e-4, model);
    const auto result = newton_solve(state, model, StabilizerField<2>::constant(0.0), NewtonOptions{1e-3, 50});
    CHECK(result.iters <= 1);
}

TEST_CASE("isotropic circle regression")
{
    const auto model = AnisotropyModel<2>::isotropic();
    const auto circle = make_circle(1.0, 2 * std::numbers::pi / 256);
    REQUIRE(circle.num_simplices() == 256);
    FlowState<2> state = make_state(circle, 1e-5, model);
    run(state, model, StabilizerField<2>::constant(0.0), 100 * 1e-5);
    CHECK(state.m == 100);
    CHECK(max_vertex_displacement(circle, state.surface) < 1e-4);
}

TEST_CASE("displacement scales linearly in tau")
{
    // X(tau) = X^m + T + tau V + O(tau^2): T is the tau-independent tangential redistribution fixed by the
    // stiffness block; the O(tau^2) term fades once tau is well below the smallest simplex size to the fourth.
    auto next = [](const auto& shape, const auto& model, double k, double tau) {
        using S = std::decay_t<decltype(shape)>;
        constexpr int D = std::tuple_size_v<typename decltype(S::simplices)::value_type>;
        std::vector<S> out;
        for (double t : {tau, tau / 2, tau / 4, tau / 8}) {
            FlowState<D> state = make_state(shape, t, model);
            step(state, model, StabilizerField<D>::constant(k), NewtonOptions{1e-10, 50});
            out.push_back(state.surface);
        }
        return out;
    };
    auto halving = [](const auto& s) {
        const double d0 = max_vertex_displacement(s[0], s[1]);
        const double d1 = max_vertex_displacement(s[1], s[2]);
        const double d2 = max_vertex_displacement(s[2], s[3]);
        CHECK(d0 / d1 == doctest::Approx(2.0).epsilon(0.05));
        CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.05));
    };
    halving(next(make_ellipse(1.0, 0.5, 0.3), AnisotropyModel<2>::cubic(0.125), 0.1, 4e-6));
    halving(next(make_ellipsoid(1.0, 0.7, 0.5, 0.5), AnisotropyModel<3>::cubic(0.25), 0.2, 1e-6));

    // A radially perturbed regular polygon has no redistribution, so the displacement itself halves.
    auto bumpy = make_circle(1.0, 2 * std::numbers::pi / 128);
    for (auto& v : bumpy.vertices)
        v *= 1.0 + 0.05 * std::cos(3 * std::atan2(v[1], v[0]));
    const auto s = next(bumpy, AnisotropyModel<2>::isotropic(), 0.0, 4e-5);
    const double d0 = max_vertex_displacement(bumpy, s[0]), d1 = max_vertex_displacement(bumpy, s[1]),
                 d2 = max_vertex_displacement(bumpy, s[2]);
    CHECK(d0 / d1 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("runs are bitwise reproducible")
{
    const auto model = AnisotropyModel<2>::cubic(0.125);
    const auto kfield = StabilizerField<2>::constant(0.05);
    auto go = [&] {
        FlowState<2> s = make_state(make_ellipse(1.0, 0.5, 0.1), 1e-3, model);
        run(s, model, kfield, 0.02);
        return s;
    };
    const auto a = go(), b = go();
    CHECK(a.surface.vertices == b.surface.vertices);
    CHECK(a.mu == b.mu);
}

TEST_CASE("newton failure reports the step")
{
    const auto model = AnisotropyModel<2>::cubic(0.125);
    FlowState<2> state = make_state(make_ellipse(1.0, 0.5, 0.2), 0.5, model);
    try {
        step(state, model, StabilizerField<2>::constant(0.0), NewtonOptions{1e-12, 1});
        FAIL("expected a step error");
    } catch (const StepError& e) {
        CHECK(e.step() == 1);
        CHECK(is_numerical(e.kind()));
    }
    CHECK(state.m == 0);
    CHECK(state.history.size() == 1);
}
