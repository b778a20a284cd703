#include <doctest.h>

#include "sppfem/k0_table.hpp"
#include "sppfem/stabilizer.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sppfem;
using std::numbers::pi;

namespace {

Vec<3> random_unit3(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    return Vec<3>(g(rng), g(rng), g(rng)).normalized();
}

Mat<3> random_rotation3(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    return q.toRotationMatrix();
}

Eigen::MatrixXd random_L(int n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> diag(1e-6, 10.0), off(-10.0, 10.0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = diag(rng);
        for (int j = 0; j < i; ++j)
            L(i, j) = off(rng);
    }
    return L;
}

const Eigen::Matrix4d anchor = (Eigen::Matrix4d() << 1, -0.5, 0, -0.5, -0.5, 1, 0, -0.5, 0, 0, 1, 0, -0.5, -0.5,
                                0, 1)
                                   .finished();

} // namespace

TEST_CASE("orthonormal frames")
{
    const auto f2 = orthonormal_frame<2>(Vec<2>(0, 1));
    CHECK(f2.tangents[0].isApprox(Vec<2>(1, 0)));
    CHECK(f2.matrix().determinant() == doctest::Approx(1.0));

    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const Vec<3> n = random_unit3(rng);
        const Mat<3> F = orthonormal_frame<3>(n).matrix();
        CHECK((F.transpose() * F - Mat<3>::Identity()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(std::abs(F.determinant() - 1.0) < 1e-12);
        CHECK((F.col(2) - n).norm() < 1e-15);
    }
    const Mat<3> Fz = orthonormal_frame<3>(Vec<3>(0, 0, 1)).matrix();
    CHECK(std::abs(Fz.determinant() - 1.0) < 1e-12);
}

TEST_CASE("rotation representations")
{
    CHECK(rotation_2d(0.0).isApprox(Eigen::Matrix2d::Identity()));
    CHECK(rotation_3d(0, 0, 0).isApprox(Eigen::Matrix3d::Identity()));
    CHECK((rotation_3d(0, 0, pi) - Eigen::Vector3d(-1, -1, 1).asDiagonal().toDenseMatrix()).norm() < 1e-15);

    const auto f = orthonormal_frame<2>(Vec<2>(0.6, 0.8));
    const Mat<2> U = to_world(f, rotation_2d(pi / 2));
    CHECK((U * f.tangents[0] + f.normal).norm() < 1e-15);
    CHECK((U * f.normal - f.tangents[0]).norm() < 1e-15);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(0.0, 2 * pi);
    for (int i = 0; i < 50; ++i) {
        const Eigen::Matrix3d R = rotation_3d(a(rng), a(rng), a(rng));
        CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-14);
        CHECK(R.determinant() == doctest::Approx(1.0));
    }
}

TEST_CASE("2x2 auxiliary matrix anchors")
{
    const auto cubic = AnisotropyModel<2>::cubic(0.125);
    const Vec<2> n = Vec<2>(0.6, -0.8);
    const double g = cubic.gamma(n);
    for (double alpha : {0.0, 0.5, 3.0}) {
        const Eigen::Matrix2d M = assemble_Mtilde(cubic, n, 0.0, alpha);
        CHECK((M - g * (Eigen::Matrix2d() << 1, -1, -1, 1).finished()).norm() < 1e-15);
    }
    const auto iso = AnisotropyModel<2>::isotropic();
    CHECK((assemble_Mtilde(iso, n, pi, 0.7) - Eigen::Matrix2d::Identity()).norm() < 1e-15);
    for (double theta = 0.0; theta < 2 * pi; theta += 0.37)
        for (double alpha : {0.0, 0.25, 2.0}) {
            const double c = std::cos(theta);
            const double det = (1 - c) * (alpha * (1 + c) + (3 + c) / 4);
            CHECK(assemble_Mtilde(iso, n, theta, alpha).determinant() == doctest::Approx(det).epsilon(1e-12));
        }
}

TEST_CASE("4x4 auxiliary matrix anchors")
{
    std::mt19937_64 rng(21);
    const std::vector<AnisotropyModel<3>> models{AnisotropyModel<3>::isotropic(), AnisotropyModel<3>::cubic(0.125),
                                                 AnisotropyModel<3>::cubic(0.25),
                                                 AnisotropyModel<3>::sign_riemannian(2.5, 1.5)};
    for (const auto& m : models) {
        for (int i = 0; i < 10; ++i) {
            const Frame<3> f = orthonormal_frame<3>(random_unit3(rng));
            const Vec<3>& n = f.normal;
            const double g = m.gamma(n), gm = m.gamma(-n);
            const Eigen::Matrix4d M0 = assemble_M3(m, f, Eigen::Vector3d::Zero(), 1.3);
            CHECK((M0 - g * anchor).cwiseAbs().maxCoeff() == 0.0);
            CHECK((M0 * Eigen::Vector4d(1, 1, 0, 1)).norm() < 1e-14);

            for (double psi = 0.1; psi < 2 * pi; psi += 0.5) {
                const double c2 = std::cos(2 * psi);
                const double det = g * g * (2 * g - gm) / 32 * (10 * g + 7 * gm - (2 * g - gm) * c2);
                const double got = assemble_M3(m, n, Eigen::Vector3d(pi, 0, psi), 0.4).determinant();
                CHECK(std::abs(got - det) <= 1e-10 * std::max(1.0, std::abs(det)));
                CHECK(got > 0.0);
            }
            // The closed form g^2 (2g - gm) / 32 (g (10 - 2 cos 2psi) + gm (7 - 2 cos 2psi)) agrees where
            // cos 2psi = 0.
            for (double psi : {pi / 4, 3 * pi / 4}) {
                const double det = g * g * (2 * g - gm) / 32 * (g * 10 + gm * 7);
                const double got = assemble_M3(m, n, Eigen::Vector3d(pi, 0, psi), 0.4).determinant();
                CHECK(std::abs(got - det) <= 1e-10 * std::max(1.0, std::abs(det)));
            }
        }
    }
    const auto iso = AnisotropyModel<3>::isotropic();
    for (double psi = 0.0; psi < 2 * pi; psi += 0.3) {
        const double det = 9 * std::sin(psi) * std::sin(psi) / 16;
        for (double alpha : {0.0, 1.0})
            CHECK(std::abs(assemble_M3(iso, Vec<3>(0, 0, 1), Eigen::Vector3d(0, 0, psi), alpha).determinant() -
                           det) <= 1e-12);
    }
}

TEST_CASE("auxiliary quadratic forms equal the trace slack")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const auto m3 = AnisotropyModel<3>::sign_riemannian(2.5, 1.5);
    const auto m2 = AnisotropyModel<2>::cubic(0.125);
    for (int i = 0; i < 200; ++i) {
        const Frame<3> f = orthonormal_frame<3>(random_unit3(rng));
        const Eigen::Vector3d Phi(u(rng), u(rng), u(rng));
        const double alpha = std::abs(u(rng));
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
        L(0, 0) = u(rng);
        L(1, 1) = u(rng);
        L(1, 0) = u(rng);
        const Eigen::Vector4d x(L(0, 0), L(1, 1), L(1, 0), 1.0);
        const double slack =
            trace_inequality_slack<3>(m3, f, to_world(f, rotation_3d(Phi[0], Phi[1], Phi[2])), L, alpha);
        CHECK(x.dot(assemble_M3(m3, f, Phi, alpha) * x) == doctest::Approx(slack).epsilon(1e-12));

        const Frame<2> f2 = orthonormal_frame<2>(Vec<2>(u(rng), u(rng)).normalized());
        const double theta = u(rng);
        Eigen::MatrixXd l(1, 1);
        l(0, 0) = u(rng);
        const Eigen::Vector2d y(l(0, 0), 1.0);
        const double slack2 = trace_inequality_slack<2>(m2, f2, to_world(f2, rotation_2d(theta)), l, alpha);
        CHECK(y.dot(assemble_Mtilde(m2, f2, theta, alpha) * y) == doctest::Approx(slack2).epsilon(1e-12));
    }
}

TEST_CASE("psd_check examples")
{
    CHECK(psd_check(Eigen::Matrix3d::Identity()));
    CHECK_FALSE(psd_check(Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix()));
    CHECK(psd_check(1.1 * (Eigen::Matrix2d() << 1, -1, -1, 1).finished()));
    CHECK(min_eigenvalue(Eigen::Vector3d(3, -2, 1).asDiagonal().toDenseMatrix()) == doctest::Approx(-2.0));
}

TEST_CASE("trace inequality oracle basics")
{
    const auto iso2 = AnisotropyModel<2>::isotropic();
    const auto f2 = orthonormal_frame<2>(Vec<2>(0, 1));
    Eigen::MatrixXd L1 = Eigen::MatrixXd::Identity(1, 1);
    CHECK(std::abs(trace_inequality_slack<2>(iso2, f2, Mat<2>::Identity(), L1, 0.0)) < 1e-15);

    const auto f3 = orthonormal_frame<3>(Vec<3>(0.48, 0.6, 0.64));
    const auto cubic = AnisotropyModel<3>::cubic(0.125);
    CHECK(std::abs(trace_inequality_slack<3>(cubic, f3, Mat<3>::Identity(), Eigen::MatrixXd::Identity(2, 2), 0.7)) <
          1e-14);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> th(0.0, 2 * pi), l(1e-6, 10.0);
    int failures = 0;
    for (int i = 0; i < 100000; ++i) {
        Eigen::MatrixXd L(1, 1);
        L(0, 0) = l(rng);
        failures += !trace_inequality_check(iso2, f2, to_world(f2, rotation_2d(th(rng))), L, 0.0);
    }
    CHECK(failures == 0);

    Eigen::MatrixXd big(1, 1);
    big(0, 0) = 100.0;
    CHECK_FALSE(trace_inequality_check(iso2, f2, to_world(f2, rotation_2d(pi / 2)), big, -2.0));
}

TEST_CASE("k0 estimates")
{
    CHECK(k0_estimate(AnisotropyModel<2>::isotropic(), Vec<2>(1, 0)) <= 1e-4);
    CHECK(k0_estimate(AnisotropyModel<2>::isotropic(), Vec<2>(0.6, 0.8)) <= 1e-4);
    CHECK(k0_estimate(AnisotropyModel<3>::isotropic(), Vec<3>(0, 0, 1)) <= 1e-4);

    const auto case2 = AnisotropyModel<3>::cubic(0.25);
    const double k = k0_estimate(case2, Vec<3>(-1, 0, 0));
    CHECK(k > 0.05);
    CHECK(k < 1.0);

    CHECK_THROWS_AS(k0_estimate(AnisotropyModel<3>::cubic(0.5), Vec<3>(-1, 0, 0)), Error);
}

TEST_CASE("k0 dual oracle agreement")
{
    std::mt19937_64 rng(0x5EED);
    const std::vector<AnisotropyModel<3>> models{AnisotropyModel<3>::cubic(0.25),
                                                 AnisotropyModel<3>::sign_riemannian(2.5, 1.5)};
    for (const auto& m : models) {
        for (int i = 0; i < 2; ++i) {
            const Vec<3> n = random_unit3(rng);
            const Frame<3> f = orthonormal_frame<3>(n);
            const double alpha = k0_estimate(m, f) + 0.01;
            int failures = 0;
            for (int s = 0; s < 20000; ++s)
                failures += !trace_inequality_check(m, f, random_rotation3(rng), random_L(2, rng), alpha);
            CHECK(failures == 0);
        }
    }
}

TEST_CASE("k0 is independent of the tangent gauge")
{
    const auto m2 = AnisotropyModel<2>::cubic(0.2);
    const Vec<2> n2 = Vec<2>(-0.8, 0.6);
    CHECK(k0_estimate(m2, n2) >= 0.0);

    const auto m = AnisotropyModel<3>::cubic(0.25);
    const Vec<3> n = Vec<3>(-0.9, 0.3, std::sqrt(1 - 0.81 - 0.09));
    const Frame<3> f = orthonormal_frame<3>(n);
    const double a = k0_estimate(m, f);
    const double b = k0_estimate(m, rotate_tangents(f, 1.234));
    CHECK(std::abs(a - b) <= 2e-4);
}

TEST_CASE("feasibility is monotone in alpha")
{
    const auto m = AnisotropyModel<3>::sign_riemannian(2.5, 1.5);
    const Vec<3> n(0, 0, 1);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> a(0.0, 2 * pi);
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector3d Phi(a(rng), a(rng), a(rng));
        double prev = -1e300;
        for (double alpha : {0.0, 0.5, 1.0, 2.0, 8.0}) {
            const double lam = min_eigenvalue(assemble_M3(m, n, Phi, alpha));
            CHECK(lam >= prev - 1e-12);
            prev = lam;
        }
    }
}

TEST_CASE("stabilizer tables")
{
    const auto table2 = build_table<2>(AnisotropyModel<2>::isotropic(), default_grid<2>());
    for (double v : table2.values())
        CHECK(v <= 1e-4);

    TableGrid grid{4, 1};
    const auto t = StabilizerField<2>::table(grid, {0.0, 1.0, 3.0, 2.0}, 0.5);
    CHECK(t.interpolate(Vec<2>(0, 1)) == doctest::Approx(1.0));
    CHECK(t(Vec<2>(0, 1)) == doctest::Approx(1.5));
    CHECK(t.interpolate(Vec<2>(std::cos(pi / 4), std::sin(pi / 4))) == doctest::Approx(0.5));
    CHECK(t.interpolate(Vec<2>(std::cos(7 * pi / 4), std::sin(7 * pi / 4))) == doctest::Approx(1.0));
    CHECK(t.sup() == doctest::Approx(3.5));
    CHECK(t.sup_field().is_constant());

    TableGrid g3{6, 5};
    const auto nodes = table_nodes<3>(g3);
    REQUIRE(nodes.size() == 30);
    std::vector<double> vals(30);
    for (std::size_t i = 0; i < vals.size(); ++i)
        vals[i] = 0.1 * static_cast<double>(i % 7);
    const auto t3 = StabilizerField<3>::table(g3, vals, 1e-4, "synthetic");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        // Nodes at the poles and the periodic seam describe one normal with several values.
        if (std::abs(std::abs(nodes[i][2]) - 1.0) < 1e-9)
            continue;
        // Rows with cos(theta) < 0 repeat other rows shifted by pi in phi.
        const int j = static_cast<int>(i % 5);
        const double theta = 2 * pi * static_cast<double>(i / 5 + 1) / 6;
        if (j == 4 || std::cos(theta) < 1e-9)
            continue;
        CHECK(t3.interpolate(nodes[i]) == doctest::Approx(vals[i]));
    }

    std::stringstream ss;
    t3.write(ss);
    const auto back = StabilizerField<3>::read(ss);
    CHECK(back.values() == t3.values());
    CHECK(back.margin() == t3.margin());
    CHECK(back.grid().n_theta == 6);
    CHECK(back.model_name() == "synthetic");

    std::stringstream bad("K0TABLE d=3 model=x\ngrid n_theta=2 n_phi=2 margin=0\n1 2\n");
    CHECK_THROWS_AS(StabilizerField<3>::read(bad), Error);
}
