#include "sppfem/stabilizer.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace sppfem {

template <int Dim>
Mat<Dim> Frame<Dim>::matrix() const
{
    Mat<Dim> F;
    for (int i = 0; i < Dim - 1; ++i)
        F.col(i) = tangents[i];
    F.col(Dim - 1) = normal;
    return F;
}

template <int Dim>
Frame<Dim> orthonormal_frame(const Vec<Dim>& n)
{
    require_unit<Dim>(n);
    Frame<Dim> f;
    f.normal = n;
    if constexpr (Dim == 2) {
        f.tangents[0] = Vec<2>(n[1], -n[0]);
    } else {
        int a = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(n[i]) < std::abs(n[a]))
                a = i;
        const Vec<3> e = Vec<3>::Unit(a);
        f.tangents[0] = e.cross(n).normalized();
        f.tangents[1] = n.cross(f.tangents[0]);
    }
    if (std::abs(f.matrix().determinant() - 1.0) > 1e-12)
        throw Error(ErrorKind::ValidationError, "frame is not positively oriented");
    return f;
}

template <int Dim>
Frame<Dim> rotate_tangents(const Frame<Dim>& frame, double angle)
{
    if constexpr (Dim == 2) {
        return frame;
    } else {
        Frame<3> f = frame;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        f.tangents[0] = c * frame.tangents[0] + s * frame.tangents[1];
        f.tangents[1] = -s * frame.tangents[0] + c * frame.tangents[1];
        return f;
    }
}

Eigen::Matrix2d rotation_2d(double theta)
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d U;
    U << c, s, -s, c;
    return U;
}

Eigen::Matrix3d rotation_3d(double phi, double theta, double psi)
{
    const double cf = std::cos(phi), sf = std::sin(phi);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(psi), sp = std::sin(psi);
    Eigen::Matrix3d U;
    U << ct * cp, -cf * sp + sf * st * cp, sf * sp + cf * st * cp,
         ct * sp, cf * cp + sf * st * sp, -sf * cp + cf * st * sp,
         -st, sf * ct, cf * ct;
    return U;
}

template <int Dim>
Mat<Dim> to_world(const Frame<Dim>& frame, const Mat<Dim>& local)
{
    const Mat<Dim> F = frame.matrix();
    return F * local * F.transpose();
}

namespace {

/// Quantities of the auxiliary matrices that do not depend on the rotation.
template <int Dim>
struct NormalData {
    Frame<Dim> frame;
    double g;
    Vec<Dim> xi;
    std::array<double, Dim - 1> tau_xi;
};

template <int Dim>
NormalData<Dim> normal_data(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame)
{
    NormalData<Dim> d{frame, model.gamma(frame.normal), model.xi(frame.normal), {}};
    for (int i = 0; i < Dim - 1; ++i)
        d.tau_xi[i] = frame.tangents[i].dot(d.xi);
    return d;
}

template <int Dim>
double gamma_rotated_normal(const AnisotropyModel<Dim>& model, const NormalData<Dim>& d,
                            const Mat<Dim>& local)
{
    Vec<Dim> un = Vec<Dim>::Zero();
    for (int j = 0; j < Dim - 1; ++j)
        un += local(j, Dim - 1) * d.frame.tangents[j];
    un += local(Dim - 1, Dim - 1) * d.frame.normal;
    return un == d.frame.normal ? d.g : model.gamma_hom(un);
}

/// A(U, alpha) = A0 + alpha D for the 2x2 matrix.
void pencil_2d(const AnisotropyModel<2>& model, const NormalData<2>& d, double theta,
               Eigen::Matrix2d& A0, Eigen::Matrix2d& D)
{
    const Eigen::Matrix2d U = rotation_2d(theta);
    const double tt = U(0, 0);
    const double tn = U(1, 0);
    const double gun = gamma_rotated_normal<2>(model, d, U);
    A0 << d.g, 0.0, 0.0, d.g;
    A0(1, 0) = A0(0, 1) = -0.5 * (d.g * tt + tn * d.tau_xi[0] + gun);
    D.setZero();
    D(0, 0) = tn * tn;
}

void pencil_3d(const AnisotropyModel<3>& model, const NormalData<3>& d, const Eigen::Vector3d& Phi,
               Eigen::Matrix4d& A0, Eigen::Matrix4d& D)
{
    const Eigen::Matrix3d U = rotation_3d(Phi[0], Phi[1], Phi[2]);
    const double v1 = U(2, 0);
    const double v2 = U(2, 1);
    const double gun = gamma_rotated_normal<3>(model, d, U);
    A0 = d.g * Eigen::Matrix4d::Identity();
    A0(1, 0) = -0.5 * gun;
    A0(3, 0) = -0.5 * (d.g * U(0, 0) + v1 * d.tau_xi[0]);
    A0(3, 1) = -0.5 * (d.g * U(1, 1) + v2 * d.tau_xi[1]);
    A0(3, 2) = -0.5 * (d.g * U(0, 1) + v2 * d.tau_xi[0]);
    for (int r = 0; r < 4; ++r)
        for (int c = r + 1; c < 4; ++c)
            A0(r, c) = A0(c, r);
    D.setZero();
    D(0, 0) = v1 * v1;
    D(1, 1) = v2 * v2;
    D(2, 2) = v2 * v2;
    D(2, 0) = D(0, 2) = v1 * v2;
}

} // namespace

Eigen::Matrix2d assemble_Mtilde(const AnisotropyModel<2>& model, const Frame<2>& frame,
                                double theta, double alpha)
{
    Eigen::Matrix2d A0, D;
    pencil_2d(model, normal_data(model, frame), theta, A0, D);
    return A0 + alpha * D;
}

Eigen::Matrix2d assemble_Mtilde(const AnisotropyModel<2>& model, const Vec<2>& n, double theta,
                                double alpha)
{
    return assemble_Mtilde(model, orthonormal_frame<2>(n), theta, alpha);
}

Eigen::Matrix4d assemble_M3(const AnisotropyModel<3>& model, const Frame<3>& frame,
                            const Eigen::Vector3d& Phi, double alpha)
{
    Eigen::Matrix4d A0, D;
    pencil_3d(model, normal_data(model, frame), Phi, A0, D);
    return A0 + alpha * D;
}

Eigen::Matrix4d assemble_M3(const AnisotropyModel<3>& model, const Vec<3>& n,
                            const Eigen::Vector3d& Phi, double alpha)
{
    return assemble_M3(model, orthonormal_frame<3>(n), Phi, alpha);
}

double min_eigenvalue(const Eigen::MatrixXd& A)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool psd_check(const Eigen::MatrixXd& A, double tol)
{
    const double scale = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
    return min_eigenvalue(A) >= -tol * scale;
}

template <int Dim>
double trace_inequality_slack(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame,
                              const Mat<Dim>& U, const Eigen::MatrixXd& L, double alpha)
{
    constexpr int m = Dim - 1;
    const Vec<Dim>& n = frame.normal;
    const double g = model.gamma(n);
    const Vec<Dim> xi = model.xi(n);
    Eigen::MatrixXd P(m, m), Q(m, m);
    for (int i = 0; i < m; ++i) {
        const Vec<Dim> ui = U * frame.tangents[i];
        for (int j = 0; j < m; ++j) {
            const Vec<Dim> uj = U * frame.tangents[j];
            P(i, j) = (i == j ? g : 0.0) + alpha * ui.dot(n) * uj.dot(n);
            Q(i, j) = g * ui.dot(frame.tangents[j]) + ui.dot(n) * frame.tangents[j].dot(xi);
        }
    }
    const double lhs = (L.transpose() * (P * L - Q)).trace();
    const double rhs = model.gamma_hom(U * n) * L.diagonal().prod() - g;
    return lhs - rhs;
}

template <int Dim>
bool trace_inequality_check(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame,
                            const Mat<Dim>& U, const Eigen::MatrixXd& L, double alpha)
{
    const double scale = 1.0 + L.squaredNorm() * (model.gamma(frame.normal) + alpha);
    return trace_inequality_slack<Dim>(model, frame, U, L, alpha) >= -1e-12 * scale;
}

template <int Dim>
void require_stable(const AnisotropyModel<Dim>& model, const Vec<Dim>& n)
{
    const double scale = model.gamma(n) + model.gamma(Vec<Dim>(-n));
    const double margin = std::min(model.stability_margin(n), model.stability_margin(Vec<Dim>(-n)));
    if (margin < -1e-12 * scale) {
        std::ostringstream os;
        os.precision(17);
        os << "energy-stable condition fails at n = (" << n.transpose() << "), margin " << margin;
        throw Error(ErrorKind::UnstableAnisotropy, os.str());
    }
}

namespace {

constexpr int pencil_size(int dim) { return dim == 2 ? 2 : 4; }

template <int Dim>
class PencilSet {
public:
    static constexpr int K = pencil_size(Dim);
    using Matrix = Eigen::Matrix<double, K, K>;
    using Angles = Eigen::Matrix<double, Dim == 2 ? 1 : 3, 1>;

    PencilSet(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame, double tol)
        : m_model(model)
        , m_data(normal_data(model, frame))
        , m_tol(tol)
    {}

    void add(const Angles& a)
    {
        Matrix A0, D;
        if constexpr (Dim == 2)
            pencil_2d(m_model, m_data, a[0], A0, D);
        else
            pencil_3d(m_model, m_data, a, A0, D);
        m_angles.push_back(a);
        m_A0.push_back(A0);
        m_D.push_back(D);
    }

    int size() const { return static_cast<int>(m_angles.size()); }
    const Angles& angles(int i) const { return m_angles[i]; }

    bool feasible_at(int i, double alpha) const
    {
        const Matrix A = m_A0[i] + alpha * m_D[i];
        const double shift = m_tol * (1.0 + A.cwiseAbs().rowwise().sum().maxCoeff());
        Eigen::LLT<Matrix> llt(A + shift * Matrix::Identity());
        return llt.info() == Eigen::Success;
    }

    /// Eigenvalue normalized by the PSD scale.
    double normalized_min_eigenvalue(int i, double alpha) const
    {
        return normalized_min_eigenvalue(m_A0[i] + alpha * m_D[i]);
    }

    double normalized_min_eigenvalue_at(const Angles& a, double alpha) const
    {
        Matrix A0, D;
        if constexpr (Dim == 2)
            pencil_2d(m_model, m_data, a[0], A0, D);
        else
            pencil_3d(m_model, m_data, a, A0, D);
        return normalized_min_eigenvalue(A0 + alpha * D);
    }

    bool feasible(double alpha)
    {
        if (m_witness >= 0 && m_witness < size() && !feasible_at(m_witness, alpha))
            return false;
        for (int i = 0; i < size(); ++i)
            if (!feasible_at(i, alpha)) {
                m_witness = i;
                return false;
            }
        return true;
    }

private:
    static double normalized_min_eigenvalue(const Matrix& A)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() / (1.0 + A.cwiseAbs().rowwise().sum().maxCoeff());
    }

    const AnisotropyModel<Dim>& m_model;
    NormalData<Dim> m_data;
    double m_tol;
    std::vector<Angles> m_angles;
    std::vector<Matrix> m_A0;
    std::vector<Matrix> m_D;
    int m_witness = -1;
};

/// Smallest feasible alpha in [lo, alpha_max], knowing alpha < lo is infeasible (or lo = 0).
template <int Dim>
double bisect_alpha(PencilSet<Dim>& set, double lo, const K0Options& opts)
{
    if (set.feasible(lo))
        return lo;
    double hi = std::max(1.0, 2.0 * lo);
    while (!set.feasible(hi)) {
        lo = hi;
        if (hi >= opts.alpha_max) {
            std::ostringstream os;
            os << "no feasible alpha up to " << opts.alpha_max;
            throw Error(ErrorKind::NoFeasibleAlpha, os.str());
        }
        hi = std::min(2.0 * hi, opts.alpha_max);
    }
    while (hi - lo > opts.alpha_tol) {
        const double mid = 0.5 * (lo + hi);
        if (set.feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Point of the shell around a locus from polar/azimuth angles of the direction.
struct Locus3 {
    Eigen::Vector3d center;
    double radius;
    Eigen::Vector3d operator()(const Eigen::Vector2d& p) const
    {
        return center + radius * Eigen::Vector3d(std::sin(p[0]) * std::cos(p[1]), std::sin(p[0]) * std::sin(p[1]),
                                                 std::cos(p[0]));
    }
};

/// Indices of the `count` samples with the lowest normalized eigenvalue at alpha.
template <int Dim>
std::vector<int> lowest_samples(const PencilSet<Dim>& set, int first, double alpha, int count)
{
    std::vector<std::pair<double, int>> scored;
    scored.reserve(set.size() - first);
    for (int i = first; i < set.size(); ++i)
        scored.emplace_back(set.normalized_min_eigenvalue(i, alpha), i);
    const int keep = std::min<int>(count, static_cast<int>(scored.size()));
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end());
    std::vector<int> out;
    for (int r = 0; r < keep; ++r)
        out.push_back(scored[r].second);
    return out;
}

/// Cyclic coordinate descent of the normalized eigenvalue over parameters p, with Brent steps of
/// half-width `radius`; `to_angles` maps parameters to rotation angles.
template <int Dim, class Params, class Map>
Params polish(const PencilSet<Dim>& set, Params p, const Map& to_angles, double alpha, double radius, int sweeps)
{
    constexpr int bits = 40;
    double best = set.normalized_min_eigenvalue_at(to_angles(p), alpha);
    for (int s = 0; s < sweeps; ++s) {
        const double before = best;
        for (int c = 0; c < p.size(); ++c) {
            auto f = [&](double x) {
                Params q = p;
                q[c] = x;
                return set.normalized_min_eigenvalue_at(to_angles(q), alpha);
            };
            std::uintmax_t iters = 60;
            const auto [x, fx] = boost::math::tools::brent_find_minima(f, p[c] - radius, p[c] + radius, bits, iters);
            if (fx < best) {
                best = fx;
                p[c] = x;
            }
        }
        if (before - best <= 1e-15)
            break;
    }
    return p;
}

} // namespace

template <int Dim>
double k0_estimate(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame, const K0Options& opts)
{
    require_stable<Dim>(model, frame.normal);
    using Set = PencilSet<Dim>;
    using Angles = typename Set::Angles;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    Set set(model, frame, opts.psd_tol);
    const int n = Dim == 2 ? opts.n_theta : opts.n_euler;
    if (n < 1)
        throw Error(ErrorKind::ValidationError, "rotation grid must have at least one point");
    double spacing = two_pi / n;

    if constexpr (Dim == 2) {
        for (int i = 0; i < n; ++i)
            set.add(Angles(i * spacing));
        set.add(Angles(0.0));
        set.add(Angles(std::numbers::pi));
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    set.add(Angles(i * spacing, j * spacing, k * spacing));
        set.add(Angles(0.0, 0.0, 0.0));
        set.add(Angles(0.0, 0.0, std::numbers::pi));
    }

    double alpha = bisect_alpha<Dim>(set, 0.0, opts);
    int first = 0;
    for (int level = 0; level < opts.refine_levels; ++level) {
        const int last = set.size();
        std::vector<int> centers = lowest_samples<Dim>(set, first, alpha, opts.refine_keep);
        for (int i = first; i < last; ++i)
            if (set.normalized_min_eigenvalue(i, alpha) < opts.refine_factor * opts.psd_tol)
                centers.push_back(i);
        std::sort(centers.begin(), centers.end());
        centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

        const double sub = spacing / 5.0;
        for (int c : centers) {
            const Angles base = set.angles(c);
            if constexpr (Dim == 2) {
                for (int a = -2; a <= 2; ++a)
                    if (a != 0)
                        set.add(Angles(base[0] + a * sub));
            } else {
                for (int a = -2; a <= 2; ++a)
                    for (int b = -2; b <= 2; ++b)
                        for (int e = -2; e <= 2; ++e)
                            if (a != 0 || b != 0 || e != 0)
                                set.add(Angles(base[0] + a * sub, base[1] + b * sub, base[2] + e * sub));
            }
        }
        spacing = sub;
        first = last;
        if (!set.feasible(alpha))
            alpha = bisect_alpha<Dim>(set, alpha, opts);
    }

    // The supremum is often a directional limit at the zero-determinant loci, reached on a small shell
    // around them: Phi = locus + t d with |d| = 1.
    const int grid_end = set.size();
    std::vector<Angles> loci;
    std::vector<std::pair<Angles, Angles>> shell; // (locus, direction)
    if constexpr (Dim == 2) {
        loci = {Angles(0.0), Angles(std::numbers::pi)};
        for (const auto& l : loci)
            for (double sgn : {-1.0, 1.0})
                shell.emplace_back(l, Angles(sgn));
    } else {
        loci = {Angles(0.0, 0.0, 0.0), Angles(0.0, 0.0, std::numbers::pi)};
        for (const auto& l : loci)
            for (const Vec<3>& d : sample_unit_vectors<3>(opts.shell_directions))
                shell.emplace_back(l, d);
    }
    for (const auto& [l, d] : shell)
        set.add(l + opts.shell_radius * d);
    if (!set.feasible(alpha))
        alpha = bisect_alpha<Dim>(set, alpha, opts);

    for (int round = 0; round < opts.polish_rounds; ++round) {
        for (int c : lowest_samples<Dim>(set, 0, alpha, opts.polish_starts)) {
            if (c >= grid_end && c < grid_end + static_cast<int>(shell.size())) {
                const auto& [l, d] = shell[c - grid_end];
                if constexpr (Dim == 2) {
                    continue;
                } else {
                    const Locus3 map{l, opts.shell_radius};
                    const Eigen::Vector2d p0(std::acos(std::clamp(d[2], -1.0, 1.0)), std::atan2(d[1], d[0]));
                    set.add(map(polish<Dim>(set, p0, map, alpha, 0.1, opts.polish_sweeps)));
                }
            } else {
                const auto identity = [](const Angles& a) { return a; };
                set.add(polish<Dim>(set, set.angles(c), identity, alpha, spacing, opts.polish_sweeps));
            }
        }
        if (set.feasible(alpha))
            break;
        alpha = bisect_alpha<Dim>(set, alpha, opts);
    }
    return alpha;
}

template <int Dim>
double k0_estimate(const AnisotropyModel<Dim>& model, const Vec<Dim>& n, const K0Options& opts)
{
    return k0_estimate<Dim>(model, orthonormal_frame<Dim>(n), opts);
}

template struct Frame<2>;
template struct Frame<3>;
template Frame<2> orthonormal_frame<2>(const Vec<2>&);
template Frame<3> orthonormal_frame<3>(const Vec<3>&);
template Frame<2> rotate_tangents<2>(const Frame<2>&, double);
template Frame<3> rotate_tangents<3>(const Frame<3>&, double);
template Mat<2> to_world<2>(const Frame<2>&, const Mat<2>&);
template Mat<3> to_world<3>(const Frame<3>&, const Mat<3>&);
template double trace_inequality_slack<2>(const AnisotropyModel<2>&, const Frame<2>&, const Mat<2>&,
                                          const Eigen::MatrixXd&, double);
template double trace_inequality_slack<3>(const AnisotropyModel<3>&, const Frame<3>&, const Mat<3>&,
                                          const Eigen::MatrixXd&, double);
template bool trace_inequality_check<2>(const AnisotropyModel<2>&, const Frame<2>&, const Mat<2>&,
                                        const Eigen::MatrixXd&, double);
template bool trace_inequality_check<3>(const AnisotropyModel<3>&, const Frame<3>&, const Mat<3>&,
                                        const Eigen::MatrixXd&, double);
template void require_stable<2>(const AnisotropyModel<2>&, const Vec<2>&);
template void require_stable<3>(const AnisotropyModel<3>&, const Vec<3>&);
template double k0_estimate<2>(const AnisotropyModel<2>&, const Frame<2>&, const K0Options&);
template double k0_estimate<3>(const AnisotropyModel<3>&, const Frame<3>&, const K0Options&);
template double k0_estimate<2>(const AnisotropyModel<2>&, const Vec<2>&, const K0Options&);
template double k0_estimate<3>(const AnisotropyModel<3>&, const Vec<3>&, const K0Options&);

} // namespace sppfem
