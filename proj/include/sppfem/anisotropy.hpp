#pragma once

#include "sppfem/types.hpp"

#include <functional>
#include <string>
#include <variant>

namespace sppfem {

struct Isotropic {};

/// gamma(n) = 1 + beta * sum_k n_k^3.
struct CubicPolynomial {
    double beta;
};

/// gamma(n) = sqrt((a + b sign(n_1)) n_1^2 + |n_rest|^2), with sign(0) taken as +1.
struct SignRiemannian {
    double a;
    double b;
};

template <int Dim>
struct Custom {
    std::string name;
    std::function<double(const Vec<Dim>&)> gamma;            // unit-sphere values
    std::function<Vec<Dim>(const Vec<Dim>&)> xi;             // optional
};

template <int Dim>
class AnisotropyModel {
public:
    using Family = std::variant<Isotropic, CubicPolynomial, SignRiemannian, Custom<Dim>>;

    static constexpr double kink_eps = 1e-9;
    static constexpr double fd_step = 1e-6;

    explicit AnisotropyModel(Family family = Isotropic{});

    static AnisotropyModel isotropic() { return AnisotropyModel(Isotropic{}); }
    static AnisotropyModel cubic(double beta) { return AnisotropyModel(CubicPolynomial{beta}); }
    static AnisotropyModel sign_riemannian(double a, double b)
    {
        return AnisotropyModel(SignRiemannian{a, b});
    }

    const Family& family() const { return m_family; }
    std::string name() const;

    /// gamma on the unit sphere; arguments are not renormalized.
    double gamma(const Vec<Dim>& n) const;

    /// One-homogeneous extension |p| gamma(p/|p|), zero at the origin.
    double gamma_hom(const Vec<Dim>& p) const;

    /// Cahn-Hoffman vector; throws NonUnitInput if | |n| - 1 | > 1e-12.
    Vec<Dim> xi(const Vec<Dim>& n) const;

    /// (5 - d) gamma(n) - gamma(-n); positive where the energy-stable condition holds.
    double stability_margin(const Vec<Dim>& n) const;

    /// G_k(n) = gamma I - n xi^T + xi n^T + k n n^T.
    Mat<Dim> build_G(const Vec<Dim>& n, double k) const;

private:
    Vec<Dim> xi_unchecked(const Vec<Dim>& n) const;

    Family m_family;
};

template <int Dim>
void require_unit(const Vec<Dim>& n);

/// Deterministic near-uniform unit vectors: a circle grid (Dim = 2) or a Fibonacci sphere.
template <int Dim>
std::vector<Vec<Dim>> sample_unit_vectors(int count);

/// Sampled check of gamma > 0 and the Euler identity; throws ValidationError on failure.
template <int Dim>
void check_model(const AnisotropyModel<Dim>& model, int samples = 2000);

/// Minimum of the stability margin over sampled unit vectors.
template <int Dim>
double min_stability_margin(const AnisotropyModel<Dim>& model, int samples = 20000);

} // namespace sppfem
