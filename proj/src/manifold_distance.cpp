#include "sppfem/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sppfem {

namespace {

/// Offsets (in cell units) that keep sampling lines off mesh vertices and edges.
constexpr double jitter_x = 1.4142135623730951e-7;
constexpr double jitter_y = 1.7320508075688772e-7;

double total_length(const std::vector<double>& z)
{
    double L = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); i += 2)
        L += z[i + 1] - z[i];
    return L;
}

/// Length of the intersection of two sorted interval lists given as endpoint pairs.
double overlap(const std::vector<double>& a, const std::vector<double>& b)
{
    double L = 0.0;
    std::size_t i = 0, j = 0;
    while (i + 1 < a.size() && j + 1 < b.size()) {
        const double lo = std::max(a[i], b[j]);
        const double hi = std::min(a[i + 1], b[j + 1]);
        if (hi > lo)
            L += hi - lo;
        const double ea = a[i + 1], eb = b[j + 1];
        if (ea <= eb)
            i += 2;
        if (eb <= ea)
            j += 2;
    }
    return L;
}

void finish_crossings(std::vector<double>& z, double scale)
{
    std::sort(z.begin(), z.end());
    if (z.size() % 2 == 0)
        return;
    for (std::size_t i = 0; i + 1 < z.size(); ++i)
        if (z[i + 1] - z[i] <= 1e-12 * scale) {
            z.erase(z.begin() + static_cast<std::ptrdiff_t>(i));
            return;
        }
    throw Error(ErrorKind::InvalidMesh, "odd number of crossings along a sampling line; surface not closed");
}

double symmetric_difference_on_line(std::vector<double>& za, std::vector<double>& zb, double scale)
{
    finish_crossings(za, scale);
    finish_crossings(zb, scale);
    return total_length(za) + total_length(zb) - 2.0 * overlap(za, zb);
}

template <int Dim>
void bounding_box(const SimplexSurface<Dim>& a, const SimplexSurface<Dim>& b, Vec<Dim>& lo, Vec<Dim>& hi)
{
    lo = a.vertices.front();
    hi = lo;
    for (const auto* s : {&a, &b})
        for (const auto& v : s->vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
}

double distance_2d(const SimplexSurface<2>& a, const SimplexSurface<2>& b, int n)
{
    Vec<2> lo, hi;
    bounding_box<2>(a, b, lo, hi);
    const double dx = (hi[0] - lo[0]) / n;
    const double scale = (hi - lo).norm();
    auto crossings = [](const SimplexSurface<2>& s, double x, std::vector<double>& out) {
        out.clear();
        for (int j = 0; j < s.num_simplices(); ++j) {
            const Vec<2>& p = s.vertices[s.simplices[j][0]];
            const Vec<2>& q = s.vertices[s.simplices[j][1]];
            if ((p[0] <= x && x < q[0]) || (q[0] <= x && x < p[0]))
                out.push_back(p[1] + (x - p[0]) * (q[1] - p[1]) / (q[0] - p[0]));
        }
    };
    std::vector<double> za, zb;
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
        const double x = lo[0] + (c + 0.5 + jitter_x) * dx;
        crossings(a, x, za);
        crossings(b, x, zb);
        sum += symmetric_difference_on_line(za, zb, scale);
    }
    return sum * dx;
}

double distance_3d(const SimplexSurface<3>& a, const SimplexSurface<3>& b, int n)
{
    Vec<3> lo, hi;
    bounding_box<3>(a, b, lo, hi);
    const double dx = (hi[0] - lo[0]) / n;
    const double dy = (hi[1] - lo[1]) / n;
    const double scale = (hi - lo).norm();
    auto column_x = [&](int i) { return lo[0] + (i + 0.5 + jitter_x) * dx; };
    auto column_y = [&](int j) { return lo[1] + (j + 0.5 + jitter_y) * dy; };

    // buckets[s][i * n + j]: triangles of surface s whose xy bounding box covers column (i, j)
    std::vector<std::vector<int>> buckets[2];
    const SimplexSurface<3>* surf[2] = {&a, &b};
    for (int s = 0; s < 2; ++s) {
        buckets[s].assign(static_cast<std::size_t>(n) * n, {});
        for (int t = 0; t < surf[s]->num_simplices(); ++t) {
            const Simplex<3> tri = surf[s]->simplex(t);
            double x0 = tri[0][0], x1 = x0, y0 = tri[0][1], y1 = y0;
            for (int c = 1; c < 3; ++c) {
                x0 = std::min(x0, tri[c][0]);
                x1 = std::max(x1, tri[c][0]);
                y0 = std::min(y0, tri[c][1]);
                y1 = std::max(y1, tri[c][1]);
            }
            const int i0 = std::max(0, static_cast<int>(std::floor((x0 - lo[0]) / dx - 0.5 - jitter_x)));
            const int i1 = std::min(n - 1, static_cast<int>(std::ceil((x1 - lo[0]) / dx - 0.5 - jitter_x)));
            const int j0 = std::max(0, static_cast<int>(std::floor((y0 - lo[1]) / dy - 0.5 - jitter_y)));
            const int j1 = std::min(n - 1, static_cast<int>(std::ceil((y1 - lo[1]) / dy - 0.5 - jitter_y)));
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j)
                    buckets[s][static_cast<std::size_t>(i) * n + j].push_back(t);
        }
    }

    auto crossings = [&](int s, int i, int j, std::vector<double>& out) {
        out.clear();
        const double x = column_x(i), y = column_y(j);
        for (int t : buckets[s][static_cast<std::size_t>(i) * n + j]) {
            const Simplex<3> tri = surf[s]->simplex(t);
            const double ex1 = tri[1][0] - tri[0][0], ey1 = tri[1][1] - tri[0][1];
            const double ex2 = tri[2][0] - tri[0][0], ey2 = tri[2][1] - tri[0][1];
            const double det = ex1 * ey2 - ex2 * ey1;
            if (det == 0.0)
                continue;
            const double px = x - tri[0][0], py = y - tri[0][1];
            const double u = (px * ey2 - ex2 * py) / det;
            const double v = (ex1 * py - px * ey1) / det;
            if (u < 0.0 || v < 0.0 || u + v > 1.0)
                continue;
            out.push_back(tri[0][2] + u * (tri[1][2] - tri[0][2]) + v * (tri[2][2] - tri[0][2]));
        }
    };

    std::vector<double> za, zb;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            crossings(0, i, j, za);
            crossings(1, i, j, zb);
            sum += symmetric_difference_on_line(za, zb, scale);
        }
    return sum * dx * dy;
}

} // namespace

template <int Dim>
int default_distance_resolution()
{
    return Dim == 2 ? 512 : 192;
}

template <int Dim>
double manifold_distance(const SimplexSurface<Dim>& a, const SimplexSurface<Dim>& b, int resolution)
{
    const int n = resolution > 0 ? resolution : default_distance_resolution<Dim>();
    if (a.vertices.empty() || b.vertices.empty())
        throw Error(ErrorKind::InvalidMesh, "empty surface");
    if constexpr (Dim == 2)
        return distance_2d(a, b, n);
    else
        return distance_3d(a, b, n);
}

template <int Dim>
double max_vertex_displacement(const SimplexSurface<Dim>& a, const SimplexSurface<Dim>& b)
{
    if (a.num_vertices() != b.num_vertices())
        throw Error(ErrorKind::ValidationError, "vertex counts differ");
    double m = 0.0;
    for (int i = 0; i < a.num_vertices(); ++i)
        m = std::max(m, (a.vertices[i] - b.vertices[i]).norm());
    return m;
}

template int default_distance_resolution<2>();
template int default_distance_resolution<3>();
template double manifold_distance<2>(const SimplexSurface<2>&, const SimplexSurface<2>&, int);
template double manifold_distance<3>(const SimplexSurface<3>&, const SimplexSurface<3>&, int);
template double max_vertex_displacement<2>(const SimplexSurface<2>&, const SimplexSurface<2>&);
template double max_vertex_displacement<3>(const SimplexSurface<3>&, const SimplexSurface<3>&);

} // namespace sppfem
