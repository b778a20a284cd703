#include "sppfem/anisotropy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace sppfem {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign_plus(double x) { return std::abs(x) < 1e-9 || x > 0.0 ? 1.0 : -1.0; }

} // namespace

template <int Dim>
void require_unit(const Vec<Dim>& n)
{
    if (!(std::abs(n.norm() - 1.0) <= 1e-12))
        throw Error(ErrorKind::NonUnitInput, "expected a unit vector");
}

template <int Dim>
AnisotropyModel<Dim>::AnisotropyModel(Family family)
    : m_family(std::move(family))
{
    if (const auto* c = std::get_if<Custom<Dim>>(&m_family); c && !c->gamma)
        throw Error(ErrorKind::ValidationError, "custom anisotropy needs a gamma evaluator");
    if (const auto* s = std::get_if<SignRiemannian>(&m_family); s && (s->a - std::abs(s->b) <= 0.0))
        throw Error(ErrorKind::ValidationError, "sign-riemannian needs a > |b|");
}

template <int Dim>
std::string AnisotropyModel<Dim>::name() const
{
    std::ostringstream os;
    os.precision(17);
    std::visit(Overloaded{
                   [&](const Isotropic&) { os << "isotropic"; },
                   [&](const CubicPolynomial& c) { os << "cubic(beta=" << c.beta << ")"; },
                   [&](const SignRiemannian& s) { os << "sign_riemannian(a=" << s.a << ",b=" << s.b << ")"; },
                   [&](const Custom<Dim>& c) { os << "custom(" << c.name << ")"; },
               },
               m_family);
    return os.str();
}

template <int Dim>
double AnisotropyModel<Dim>::gamma(const Vec<Dim>& n) const
{
    return std::visit(Overloaded{
                          [&](const Isotropic&) { return 1.0; },
                          [&](const CubicPolynomial& c) { return 1.0 + c.beta * n.array().cube().sum(); },
                          [&](const SignRiemannian& s) {
                              const double c1 = s.a + s.b * sign_plus(n[0]);
                              return std::sqrt(c1 * n[0] * n[0] + n.tail(Dim - 1).squaredNorm());
                          },
                          [&](const Custom<Dim>& c) { return c.gamma(n); },
                      },
                      m_family);
}

template <int Dim>
double AnisotropyModel<Dim>::gamma_hom(const Vec<Dim>& p) const
{
    const double r = p.norm();
    if (r == 0.0)
        return 0.0;
    return r * gamma(p / r);
}

template <int Dim>
Vec<Dim> AnisotropyModel<Dim>::xi(const Vec<Dim>& n) const
{
    require_unit<Dim>(n);
    return xi_unchecked(n);
}

template <int Dim>
Vec<Dim> AnisotropyModel<Dim>::xi_unchecked(const Vec<Dim>& n) const
{
    return std::visit(
        Overloaded{
            [&](const Isotropic&) -> Vec<Dim> { return n; },
            [&](const CubicPolynomial& c) -> Vec<Dim> {
                const double S = n.array().cube().sum();
                Vec<Dim> x;
                for (int i = 0; i < Dim; ++i)
                    x[i] = n[i] + 3.0 * c.beta * n[i] * n[i] - 2.0 * c.beta * n[i] * S;
                return x;
            },
            [&](const SignRiemannian& s) -> Vec<Dim> {
                const double c1 = s.a + s.b * sign_plus(n[0]);
                const double g = std::sqrt(c1 * n[0] * n[0] + n.tail(Dim - 1).squaredNorm());
                Vec<Dim> x = n / g;
                x[0] *= c1;
                return x;
            },
            [&](const Custom<Dim>& c) -> Vec<Dim> {
                if (c.xi)
                    return c.xi(n);
                Vec<Dim> x;
                for (int i = 0; i < Dim; ++i) {
                    Vec<Dim> e = Vec<Dim>::Zero();
                    e[i] = fd_step;
                    x[i] = (gamma_hom(n + e) - gamma_hom(n - e)) / (2.0 * fd_step);
                }
                const double defect = gamma(n) - x.dot(n);
                if (std::abs(defect) > 1e-5 * (1.0 + std::abs(gamma(n))))
                    throw Error(ErrorKind::NonSmoothPoint,
                                "finite-difference xi violates the Euler identity");
                return x + defect * n;
            },
        },
        m_family);
}

template <int Dim>
double AnisotropyModel<Dim>::stability_margin(const Vec<Dim>& n) const
{
    return (5 - Dim) * gamma(n) - gamma(Vec<Dim>(-n));
}

template <int Dim>
Mat<Dim> AnisotropyModel<Dim>::build_G(const Vec<Dim>& n, double k) const
{
    const Vec<Dim> x = xi(n);
    return gamma(n) * Mat<Dim>::Identity() - n * x.transpose() + x * n.transpose() + k * n * n.transpose();
}

template <int Dim>
std::vector<Vec<Dim>> sample_unit_vectors(int count)
{
    std::vector<Vec<Dim>> out;
    out.reserve(count);
    if constexpr (Dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * std::numbers::pi * (i + 0.5) / count;
            out.emplace_back(std::cos(t), std::sin(t));
        }
    } else {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double t = golden * i;
            out.emplace_back(r * std::cos(t), r * std::sin(t), z);
        }
    }
    return out;
}

template <int Dim>
void check_model(const AnisotropyModel<Dim>& model, int samples)
{
    for (const Vec<Dim>& n : sample_unit_vectors<Dim>(samples)) {
        const double g = model.gamma(n);
        if (!(g > 0.0))
            throw Error(ErrorKind::ValidationError, "gamma is not positive on the unit sphere");
        const Vec<Dim> x = model.xi(n.normalized());
        if (std::abs(x.dot(n) - g) > 1e-10 * (1.0 + g))
            throw Error(ErrorKind::ValidationError, "xi violates the Euler identity gamma = xi . n");
    }
}

template <int Dim>
double min_stability_margin(const AnisotropyModel<Dim>& model, int samples)
{
    double m = std::numeric_limits<double>::infinity();
    for (const Vec<Dim>& n : sample_unit_vectors<Dim>(samples))
        m = std::min(m, model.stability_margin(n));
    for (int i = 0; i < Dim; ++i)
        for (double s : {-1.0, 1.0}) {
            Vec<Dim> e = Vec<Dim>::Zero();
            e[i] = s;
            m = std::min(m, model.stability_margin(e));
        }
    return m;
}

template class AnisotropyModel<2>;
template class AnisotropyModel<3>;
template void require_unit<2>(const Vec<2>&);
template void require_unit<3>(const Vec<3>&);
template std::vector<Vec<2>> sample_unit_vectors<2>(int);
template std::vector<Vec<3>> sample_unit_vectors<3>(int);
template void check_model<2>(const AnisotropyModel<2>&, int);
template void check_model<3>(const AnisotropyModel<3>&, int);
template double min_stability_margin<2>(const AnisotropyModel<2>&, int);
template double min_stability_margin<3>(const AnisotropyModel<3>&, int);

} // namespace sppfem
