#include "sppfem/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

namespace sppfem {

namespace {

void require_positive(std::initializer_list<double> values, const char* what)
{
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::InvalidShape, std::string(what) + " parameters must be positive");
}

int cells(double length, double h)
{
    return std::max(1, static_cast<int>(std::ceil(length / h - 1e-9)));
}

/// Surface lattice of the box [0,nx]x[0,ny]x[0,nz]: every lattice point with an extreme coordinate
/// becomes a vertex, and every face square becomes two triangles.
struct BoxLattice {
    int n[3];
    std::map<std::tuple<int, int, int>, int> index;
    std::vector<Eigen::Vector3i> points;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Eigen::Vector3d> outward;

    int vertex(int i, int j, int k)
    {
        const auto [it, inserted] = index.emplace(std::make_tuple(i, j, k), static_cast<int>(points.size()));
        if (inserted)
            points.emplace_back(i, j, k);
        return it->second;
    }

    explicit BoxLattice(int nx, int ny, int nz)
        : n{nx, ny, nz}
    {
        for (int axis = 0; axis < 3; ++axis) {
            const int u = (axis + 1) % 3;
            const int v = (axis + 2) % 3;
            for (int side = 0; side < 2; ++side) {
                Eigen::Vector3d out = Eigen::Vector3d::Zero();
                out[axis] = side == 0 ? -1.0 : 1.0;
                for (int a = 0; a < n[u]; ++a)
                    for (int b = 0; b < n[v]; ++b) {
                        auto at = [&](int da, int db) {
                            int p[3];
                            p[axis] = side == 0 ? 0 : n[axis];
                            p[u] = a + da;
                            p[v] = b + db;
                            return vertex(p[0], p[1], p[2]);
                        };
                        const int q00 = at(0, 0), q10 = at(1, 0), q11 = at(1, 1), q01 = at(0, 1);
                        triangles.push_back({q00, q10, q11});
                        triangles.push_back({q00, q11, q01});
                        outward.push_back(out);
                        outward.push_back(out);
                    }
            }
        }
    }
};

SimplexSurface<3> orient_outward(SimplexSurface<3> s, const std::vector<Eigen::Vector3d>& outward)
{
    for (int j = 0; j < s.num_simplices(); ++j)
        if (direction_vector(s.simplex(j)).dot(outward[j]) < 0.0)
            std::swap(s.simplices[j][1], s.simplices[j][2]);
    return s;
}

} // namespace

SimplexSurface<3> make_cuboid(double a, double b, double c, double h)
{
    require_positive({a, b, c, h}, "cuboid");
    BoxLattice lat(cells(a, h), cells(b, h), cells(c, h));
    const double d[3] = {a / lat.n[0], b / lat.n[1], c / lat.n[2]};
    const double lo[3] = {-0.5 * a, -0.5 * b, -0.5 * c};
    SimplexSurface<3> s;
    for (const auto& p : lat.points) {
        Vec<3> x;
        for (int k = 0; k < 3; ++k)
            x[k] = p[k] == lat.n[k] ? -lo[k] : lo[k] + p[k] * d[k];
        s.vertices.push_back(x);
    }
    s.simplices = lat.triangles;
    s = orient_outward(std::move(s), lat.outward);
    validate_surface(s);
    return s;
}

SimplexSurface<3> make_ellipsoid(double a, double b, double c, double h)
{
    require_positive({a, b, c, h}, "ellipsoid");
    const double r = std::max({a, b, c});
    const int n = std::max(2, static_cast<int>(std::ceil(0.5 * std::numbers::pi * r / h - 1e-9)));
    BoxLattice lat(n, n, n);
    SimplexSurface<3> s;
    for (const auto& p : lat.points) {
        Vec<3> q;
        for (int k = 0; k < 3; ++k)
            q[k] = std::tan(0.25 * std::numbers::pi * (2.0 * p[k] / n - 1.0));
        q.normalize();
        s.vertices.emplace_back(a * q[0], b * q[1], c * q[2]);
    }
    s.simplices = lat.triangles;
    std::vector<Eigen::Vector3d> outward(s.simplices.size());
    for (int j = 0; j < s.num_simplices(); ++j) {
        Vec<3> centroid = Vec<3>::Zero();
        for (int v : s.simplices[j])
            centroid += s.vertices[v];
        outward[j] = Vec<3>(centroid[0] / (a * a), centroid[1] / (b * b), centroid[2] / (c * c));
    }
    s = orient_outward(std::move(s), outward);
    validate_surface(s);
    return s;
}

namespace {

/// Closed polygon from points listed clockwise, the outward orientation of the 2D direction vector.
SimplexSurface<2> polygon(std::vector<Vec<2>> points)
{
    SimplexSurface<2> s;
    s.vertices = std::move(points);
    const int n = s.num_vertices();
    for (int i = 0; i < n; ++i)
        s.simplices.push_back({i, (i + 1) % n});
    validate_surface(s);
    return s;
}

} // namespace

SimplexSurface<2> make_box2d(double a, double b, double h)
{
    require_positive({a, b, h}, "box2d");
    const int nx = cells(a, h), ny = cells(b, h);
    const double x0 = -0.5 * a, y0 = -0.5 * b;
    std::vector<Vec<2>> pts;
    for (int i = 0; i < ny; ++i)
        pts.emplace_back(x0, y0 + b * i / ny);
    for (int i = 0; i < nx; ++i)
        pts.emplace_back(x0 + a * i / nx, -y0);
    for (int i = 0; i < ny; ++i)
        pts.emplace_back(-x0, -y0 - b * i / ny);
    for (int i = 0; i < nx; ++i)
        pts.emplace_back(-x0 - a * i / nx, y0);
    return polygon(std::move(pts));
}

SimplexSurface<2> make_circle(double r, double h)
{
    require_positive({r, h}, "circle");
    const int n = std::max(3, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / h - 1e-9)));
    std::vector<Vec<2>> pts;
    for (int i = 0; i < n; ++i) {
        const double t = -2.0 * std::numbers::pi * i / n;
        pts.emplace_back(r * std::cos(t), r * std::sin(t));
    }
    return polygon(std::move(pts));
}

SimplexSurface<2> make_ellipse(double a, double b, double h)
{
    require_positive({a, b, h}, "ellipse");
    const int fine = 1 << 16;
    std::vector<double> arclen(fine + 1, 0.0);
    auto point = [&](double t) { return Vec<2>(a * std::cos(t), -b * std::sin(t)); };
    for (int i = 1; i <= fine; ++i)
        arclen[i] = arclen[i - 1] + (point(2.0 * std::numbers::pi * i / fine) - point(2.0 * std::numbers::pi * (i - 1) / fine)).norm();
    const double perimeter = arclen[fine];
    const int n = std::max(3, static_cast<int>(std::ceil(perimeter / h - 1e-9)));
    std::vector<Vec<2>> pts;
    int seg = 0;
    for (int i = 0; i < n; ++i) {
        const double target = perimeter * i / n;
        while (seg < fine - 1 && arclen[seg + 1] < target)
            ++seg;
        const double w = (target - arclen[seg]) / (arclen[seg + 1] - arclen[seg]);
        pts.push_back(point(2.0 * std::numbers::pi * (seg + w) / fine));
    }
    return polygon(std::move(pts));
}

int shape_dimension(const ShapeSpec& shape)
{
    if (shape.kind == "cuboid" || shape.kind == "ellipsoid")
        return 3;
    if (shape.kind == "box2d" || shape.kind == "circle" || shape.kind == "ellipse")
        return 2;
    if (shape.kind == "file") {
        const auto dot = shape.path.rfind('.');
        const std::string ext = dot == std::string::npos ? "" : shape.path.substr(dot);
        if (ext == ".off")
            return 3;
        if (ext == ".poly2d")
            return 2;
        throw Error(ErrorKind::ValidationError, "shape.path must end in .off or .poly2d");
    }
    throw Error(ErrorKind::ValidationError, "shape.kind: unknown shape '" + shape.kind + "'");
}

} // namespace sppfem
