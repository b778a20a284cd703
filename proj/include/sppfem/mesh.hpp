#pragma once

#include "sppfem/types.hpp"

#include <vector>

namespace sppfem {

template <int Dim>
class AnisotropyModel;

/// Closed oriented surface: segments (Dim = 2) or triangles (Dim = 3) over a vertex list.
template <int Dim>
struct SimplexSurface {
    static_assert(Dim == 2 || Dim == 3);

    std::vector<Vec<Dim>> vertices;
    std::vector<std::array<int, std::size_t(Dim)>> simplices;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_simplices() const { return static_cast<int>(simplices.size()); }

    Simplex<Dim> simplex(int j) const;
    Simplex<Dim> simplex(int j, const std::vector<Vec<Dim>>& positions) const;
};

template <int Dim>
struct AreaNormal {
    double area;
    Vec<Dim> normal;
};

/// Per-(simplex, corner) samples, the storage used by the lumped quadrature.
template <int Dim, class T>
using CornerField = std::vector<std::array<T, std::size_t(Dim)>>;

template <int Dim>
Vec<Dim> direction_vector(const Simplex<Dim>& s);

template <int Dim>
double max_edge_length(const Simplex<Dim>& s);

/// Threshold below which |J| counts as degenerate: 1e-14 * (max edge)^(d-1).
template <int Dim>
double degenerate_threshold(const Simplex<Dim>& s);

template <int Dim>
bool is_degenerate(const Simplex<Dim>& s);

template <int Dim>
AreaNormal<Dim> area_and_normal(const Simplex<Dim>& s);

template <int Dim>
double enclosed_volume(const SimplexSurface<Dim>& surface);

template <int Dim>
double total_energy(const SimplexSurface<Dim>& surface, const AnisotropyModel<Dim>& model);

template <int Dim>
double total_measure(const SimplexSurface<Dim>& surface);

/// Lumped inner product (1/d) sum_j sum_i |s_j| u_ji . v_ji; dot product for vectors,
/// Frobenius product for matrices.
template <int Dim, class T>
double mass_lumped_inner(const CornerField<Dim, T>& u, const CornerField<Dim, T>& v,
                         const SimplexSurface<Dim>& surface);

template <int Dim, class T>
CornerField<Dim, T> nodal_to_corner(const SimplexSurface<Dim>& surface, const std::vector<T>& nodal);

template <int Dim, class T>
CornerField<Dim, T> piecewise_constant_to_corner(const std::vector<T>& per_simplex);

template <int Dim>
Vec<Dim> grad_pwl(const Simplex<Dim>& s, const std::array<double, std::size_t(Dim)>& f);

template <int Dim>
Mat<Dim> surface_jacobian(const Simplex<Dim>& s, const std::array<Vec<Dim>, std::size_t(Dim)>& F);

/// Throws InvalidMesh unless the surface is closed, consistently oriented,
/// nondegenerate and encloses positive volume.
template <int Dim>
void validate_surface(const SimplexSurface<Dim>& surface);

template <int Dim>
double min_simplex_measure(const SimplexSurface<Dim>& surface);

template <int Dim>
double max_simplex_measure(const SimplexSurface<Dim>& surface);

} // namespace sppfem
