#include "sppfem/mesh.hpp"

#include "sppfem/anisotropy.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sppfem {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::DegenerateSimplex: return "DegenerateSimplex";
    case ErrorKind::NonUnitInput: return "NonUnitInput";
    case ErrorKind::NonSmoothPoint: return "NonSmoothPoint";
    case ErrorKind::UnstableAnisotropy: return "UnstableAnisotropy";
    case ErrorKind::NoFeasibleAlpha: return "NoFeasibleAlpha";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::MeshCollapse: return "MeshCollapse";
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::InvalidMesh: return "InvalidMesh";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_numerical(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::DegenerateSimplex:
    case ErrorKind::NonUnitInput:
    case ErrorKind::NonSmoothPoint:
    case ErrorKind::UnstableAnisotropy:
    case ErrorKind::NoFeasibleAlpha:
    case ErrorKind::SingularMatrix:
    case ErrorKind::NoConvergence:
    case ErrorKind::MeshCollapse:
        return true;
    default:
        return false;
    }
}

template <int Dim>
Simplex<Dim> SimplexSurface<Dim>::simplex(int j) const
{
    return simplex(j, vertices);
}

template <int Dim>
Simplex<Dim> SimplexSurface<Dim>::simplex(int j, const std::vector<Vec<Dim>>& positions) const
{
    Simplex<Dim> s;
    for (int i = 0; i < Dim; ++i)
        s[i] = positions[simplices[j][i]];
    return s;
}

template <int Dim>
Vec<Dim> direction_vector(const Simplex<Dim>& s)
{
    if constexpr (Dim == 2) {
        const Vec<2> u = s[1] - s[0];
        return Vec<2>(-u.y(), u.x());
    } else {
        return (s[1] - s[0]).cross(s[2] - s[0]);
    }
}

template <int Dim>
double max_edge_length(const Simplex<Dim>& s)
{
    double m = 0.0;
    for (int i = 0; i < Dim; ++i)
        for (int j = i + 1; j < Dim; ++j)
            m = std::max(m, (s[j] - s[i]).norm());
    return m;
}

template <int Dim>
double degenerate_threshold(const Simplex<Dim>& s)
{
    return 1e-14 * std::pow(max_edge_length(s), Dim - 1);
}

template <int Dim>
bool is_degenerate(const Simplex<Dim>& s)
{
    return direction_vector(s).norm() <= degenerate_threshold(s);
}

template <int Dim>
AreaNormal<Dim> area_and_normal(const Simplex<Dim>& s)
{
    const Vec<Dim> J = direction_vector(s);
    const double len = J.norm();
    if (!(len > degenerate_threshold(s)))
        throw Error(ErrorKind::DegenerateSimplex, "simplex direction vector vanishes");
    return {len / (Dim - 1), J / len};
}

template <int Dim>
double enclosed_volume(const SimplexSurface<Dim>& surface)
{
    double sum = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j) {
        const Simplex<Dim> s = surface.simplex(j);
        const AreaNormal<Dim> an = area_and_normal(s);
        double c = 0.0;
        for (int i = 0; i < Dim; ++i)
            c += s[i].dot(an.normal);
        sum += an.area * c;
    }
    return sum / (Dim * Dim);
}

template <int Dim>
double total_energy(const SimplexSurface<Dim>& surface, const AnisotropyModel<Dim>& model)
{
    double sum = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j) {
        const AreaNormal<Dim> an = area_and_normal(surface.simplex(j));
        sum += an.area * model.gamma(an.normal);
    }
    return sum;
}

template <int Dim>
double total_measure(const SimplexSurface<Dim>& surface)
{
    double sum = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j)
        sum += area_and_normal(surface.simplex(j)).area;
    return sum;
}

namespace {

double pair_product(double a, double b) { return a * b; }

template <int R, int C>
double pair_product(const Eigen::Matrix<double, R, C>& a, const Eigen::Matrix<double, R, C>& b)
{
    return a.cwiseProduct(b).sum();
}

} // namespace

template <int Dim, class T>
double mass_lumped_inner(const CornerField<Dim, T>& u, const CornerField<Dim, T>& v,
                         const SimplexSurface<Dim>& surface)
{
    if (u.size() != surface.simplices.size() || v.size() != surface.simplices.size())
        throw Error(ErrorKind::ValidationError, "corner field size does not match simplex count");
    double sum = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j) {
        const double area = area_and_normal(surface.simplex(j)).area;
        double c = 0.0;
        for (int i = 0; i < Dim; ++i)
            c += pair_product(u[j][i], v[j][i]);
        sum += area * c;
    }
    return sum / Dim;
}

template <int Dim, class T>
CornerField<Dim, T> nodal_to_corner(const SimplexSurface<Dim>& surface, const std::vector<T>& nodal)
{
    CornerField<Dim, T> out(surface.simplices.size());
    for (int j = 0; j < surface.num_simplices(); ++j)
        for (int i = 0; i < Dim; ++i)
            out[j][i] = nodal[surface.simplices[j][i]];
    return out;
}

template <int Dim, class T>
CornerField<Dim, T> piecewise_constant_to_corner(const std::vector<T>& per_simplex)
{
    CornerField<Dim, T> out(per_simplex.size());
    for (std::size_t j = 0; j < per_simplex.size(); ++j)
        out[j].fill(per_simplex[j]);
    return out;
}

template <int Dim>
Vec<Dim> grad_pwl(const Simplex<Dim>& s, const std::array<double, std::size_t(Dim)>& f)
{
    const AreaNormal<Dim> an = area_and_normal(s);
    if constexpr (Dim == 2) {
        return (f[1] - f[0]) * (s[1] - s[0]) / (an.area * an.area);
    } else {
        const Vec<3> w = f[0] * (s[1] - s[2]) + f[1] * (s[2] - s[0]) + f[2] * (s[0] - s[1]);
        return w.cross(an.normal) / (2.0 * an.area);
    }
}

template <int Dim>
Mat<Dim> surface_jacobian(const Simplex<Dim>& s, const std::array<Vec<Dim>, std::size_t(Dim)>& F)
{
    Mat<Dim> J;
    for (int r = 0; r < Dim; ++r) {
        std::array<double, std::size_t(Dim)> f;
        for (int i = 0; i < Dim; ++i)
            f[i] = F[i][r];
        J.row(r) = grad_pwl(s, f).transpose();
    }
    return J;
}

template <int Dim>
void validate_surface(const SimplexSurface<Dim>& surface)
{
    const int N = surface.num_vertices();
    if (N == 0 || surface.simplices.empty())
        throw Error(ErrorKind::InvalidMesh, "empty surface");
    for (const auto& t : surface.simplices)
        for (int v : t)
            if (v < 0 || v >= N)
                throw Error(ErrorKind::InvalidMesh, "vertex index out of range");

    if constexpr (Dim == 2) {
        std::vector<int> as_first(N, 0);
        std::vector<int> as_second(N, 0);
        for (const auto& t : surface.simplices) {
            if (t[0] == t[1])
                throw Error(ErrorKind::InvalidMesh, "segment with repeated vertex");
            ++as_first[t[0]];
            ++as_second[t[1]];
        }
        for (int i = 0; i < N; ++i)
            if (as_first[i] != 1 || as_second[i] != 1) {
                std::ostringstream os;
                os << "vertex " << i << " is not on exactly two consistently oriented segments";
                throw Error(ErrorKind::InvalidMesh, os.str());
            }
    } else {
        std::map<std::pair<int, int>, int> directed;
        for (const auto& t : surface.simplices) {
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw Error(ErrorKind::InvalidMesh, "triangle with repeated vertex");
            for (int e = 0; e < 3; ++e)
                ++directed[{t[e], t[(e + 1) % 3]}];
        }
        for (const auto& [edge, count] : directed) {
            const auto it = directed.find({edge.second, edge.first});
            if (count != 1 || it == directed.end() || it->second != 1) {
                std::ostringstream os;
                os << "edge (" << edge.first << "," << edge.second
                   << ") is not shared by exactly two oppositely oriented triangles";
                throw Error(ErrorKind::InvalidMesh, os.str());
            }
        }
        std::vector<char> used(N, 0);
        for (const auto& t : surface.simplices)
            for (int v : t)
                used[v] = 1;
        if (std::find(used.begin(), used.end(), 0) != used.end())
            throw Error(ErrorKind::InvalidMesh, "unreferenced vertex");
    }

    for (int j = 0; j < surface.num_simplices(); ++j)
        if (is_degenerate(surface.simplex(j))) {
            std::ostringstream os;
            os << "simplex " << j << " is degenerate";
            throw Error(ErrorKind::InvalidMesh, os.str());
        }
    if (!(enclosed_volume(surface) > 0.0))
        throw Error(ErrorKind::InvalidMesh, "enclosed volume is not positive (inward orientation?)");
}

template <int Dim>
double min_simplex_measure(const SimplexSurface<Dim>& surface)
{
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < surface.num_simplices(); ++j)
        m = std::min(m, direction_vector(surface.simplex(j)).norm() / (Dim - 1));
    return m;
}

template <int Dim>
double max_simplex_measure(const SimplexSurface<Dim>& surface)
{
    double m = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j)
        m = std::max(m, direction_vector(surface.simplex(j)).norm() / (Dim - 1));
    return m;
}

#define SPPFEM_INSTANTIATE_MESH(D)                                                                  \
    template struct SimplexSurface<D>;                                                              \
    template Vec<D> direction_vector<D>(const Simplex<D>&);                                         \
    template double max_edge_length<D>(const Simplex<D>&);                                          \
    template double degenerate_threshold<D>(const Simplex<D>&);                                     \
    template bool is_degenerate<D>(const Simplex<D>&);                                              \
    template AreaNormal<D> area_and_normal<D>(const Simplex<D>&);                                   \
    template double enclosed_volume<D>(const SimplexSurface<D>&);                                   \
    template double total_energy<D>(const SimplexSurface<D>&, const AnisotropyModel<D>&);           \
    template double total_measure<D>(const SimplexSurface<D>&);                                     \
    template double mass_lumped_inner<D, double>(const CornerField<D, double>&,                     \
                                                 const CornerField<D, double>&,                     \
                                                 const SimplexSurface<D>&);                         \
    template double mass_lumped_inner<D, Vec<D>>(const CornerField<D, Vec<D>>&,                     \
                                                 const CornerField<D, Vec<D>>&,                     \
                                                 const SimplexSurface<D>&);                         \
    template double mass_lumped_inner<D, Mat<D>>(const CornerField<D, Mat<D>>&,                     \
                                                 const CornerField<D, Mat<D>>&,                     \
                                                 const SimplexSurface<D>&);                         \
    template CornerField<D, double> nodal_to_corner<D, double>(const SimplexSurface<D>&,            \
                                                               const std::vector<double>&);         \
    template CornerField<D, Vec<D>> nodal_to_corner<D, Vec<D>>(const SimplexSurface<D>&,            \
                                                               const std::vector<Vec<D>>&);         \
    template CornerField<D, double> piecewise_constant_to_corner<D, double>(                        \
        const std::vector<double>&);                                                                \
    template CornerField<D, Vec<D>> piecewise_constant_to_corner<D, Vec<D>>(                        \
        const std::vector<Vec<D>>&);                                                                \
    template CornerField<D, Mat<D>> piecewise_constant_to_corner<D, Mat<D>>(                        \
        const std::vector<Mat<D>>&);                                                                \
    template Vec<D> grad_pwl<D>(const Simplex<D>&, const std::array<double, D>&);                   \
    template Mat<D> surface_jacobian<D>(const Simplex<D>&, const std::array<Vec<D>, D>&);           \
    template void validate_surface<D>(const SimplexSurface<D>&);                                    \
    template double min_simplex_measure<D>(const SimplexSurface<D>&);                               \
    template double max_simplex_measure<D>(const SimplexSurface<D>&);

SPPFEM_INSTANTIATE_MESH(2)
SPPFEM_INSTANTIATE_MESH(3)

} // namespace sppfem
