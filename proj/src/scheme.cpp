#include "sppfem/scheme.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace sppfem {

template <int Dim>
FlowState<Dim> make_state(SimplexSurface<Dim> surface, double tau, const AnisotropyModel<Dim>& model)
{
    if (!(tau > 0.0))
        throw Error(ErrorKind::ValidationError, "time step must be positive");
    validate_surface(surface);
    FlowState<Dim> state;
    state.surface = std::move(surface);
    state.tau = tau;
    state.mu = Eigen::VectorXd::Zero(state.surface.num_vertices());
    state.history.push_back({0.0, enclosed_volume(state.surface), total_energy(state.surface, model), 0});
    return state;
}

template <int Dim>
Vec<Dim> semi_implicit_normal(const Simplex<Dim>& old_s, const Simplex<Dim>& new_s)
{
    const double area = area_and_normal(old_s).area;
    if constexpr (Dim == 2) {
        return (direction_vector(old_s) + direction_vector(new_s)) / (2.0 * area);
    } else {
        Simplex<3> mid;
        for (int i = 0; i < 3; ++i)
            mid[i] = 0.5 * (old_s[i] + new_s[i]);
        return (direction_vector(old_s) + 4.0 * direction_vector(mid) + direction_vector(new_s)) / (12.0 * area);
    }
}

template <int Dim>
StepGeometry<Dim> step_geometry(const SimplexSurface<Dim>& surface, const AnisotropyModel<Dim>& model,
                                const StabilizerField<Dim>& kfield)
{
    const int J = surface.num_simplices();
    StepGeometry<Dim> geo;
    geo.area.resize(J);
    geo.normal.resize(J);
    geo.basis_grad.resize(J);
    geo.G.resize(J);
    for (int j = 0; j < J; ++j) {
        const Simplex<Dim> s = surface.simplex(j);
        const AreaNormal<Dim> an = area_and_normal(s);
        geo.area[j] = an.area;
        geo.normal[j] = an.normal;
        for (int c = 0; c < Dim; ++c) {
            std::array<double, std::size_t(Dim)> e{};
            e[c] = 1.0;
            geo.basis_grad[j][c] = grad_pwl(s, e);
        }
        geo.G[j] = model.build_G(an.normal, kfield(an.normal));
    }
    return geo;
}

template <int Dim>
Eigen::VectorXd pack_unknowns(const Eigen::VectorXd& mu, const std::vector<Vec<Dim>>& X)
{
    const int N = static_cast<int>(X.size());
    Eigen::VectorXd z((Dim + 1) * N);
    z.head(N) = mu;
    for (int k = 0; k < Dim; ++k)
        for (int i = 0; i < N; ++i)
            z[N + k * N + i] = X[i][k];
    return z;
}

template <int Dim>
void unpack_unknowns(const Eigen::VectorXd& z, Eigen::VectorXd& mu, std::vector<Vec<Dim>>& X)
{
    const int N = static_cast<int>(z.size()) / (Dim + 1);
    mu = z.head(N);
    X.resize(N);
    for (int k = 0; k < Dim; ++k)
        for (int i = 0; i < N; ++i)
            X[i][k] = z[N + k * N + i];
}

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
    Eigen::Matrix3d S;
    S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return S;
}

/// Derivatives of the semi-implicit normal with respect to each new corner position.
template <int Dim>
std::array<Mat<Dim>, std::size_t(Dim)> normal_derivatives(const Simplex<Dim>& old_s, const Simplex<Dim>& new_s,
                                                         double area)
{
    std::array<Mat<Dim>, std::size_t(Dim)> dN;
    if constexpr (Dim == 2) {
        Mat<2> R;
        R << 0.0, -1.0, 1.0, 0.0;
        dN[0] = -R / (2.0 * area);
        dN[1] = R / (2.0 * area);
    } else {
        Simplex<3> mid;
        for (int i = 0; i < 3; ++i)
            mid[i] = 0.5 * (old_s[i] + new_s[i]);
        auto D = [](const Simplex<3>& p, int c) {
            switch (c) {
            case 0: return skew(p[2] - p[1]);
            case 1: return skew(p[0] - p[2]);
            default: return skew(p[1] - p[0]);
            }
        };
        for (int c = 0; c < 3; ++c)
            dN[c] = (2.0 * D(mid, c) + D(new_s, c)) / (12.0 * area);
    }
    return dN;
}

template <int Dim>
void assemble(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo, double tau,
              const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu, Eigen::VectorXd& residual,
              std::vector<Eigen::Triplet<double>>* triplets)
{
    const int N = surface.num_vertices();
    if (static_cast<int>(X.size()) != N || mu.size() != N)
        throw Error(ErrorKind::ValidationError, "guess does not match the vertex count");
    residual = Eigen::VectorXd::Zero((Dim + 1) * N);
    if (triplets) {
        triplets->clear();
        triplets->reserve(static_cast<std::size_t>(surface.num_simplices()) * Dim * Dim * (1 + 3 * Dim + Dim * Dim));
    }
    auto xcol = [N](int v, int k) { return N + k * N + v; };

    for (int j = 0; j < surface.num_simplices(); ++j) {
        const auto& t = surface.simplices[j];
        const Simplex<Dim> old_s = surface.simplex(j);
        const Simplex<Dim> new_s = surface.simplex(j, X);
        const Vec<Dim> nt = semi_implicit_normal(old_s, new_s);
        const double a = geo.area[j];
        const double lump = a / Dim;
        const double w = lump / tau;
        const Mat<Dim>& G = geo.G[j];

        Eigen::Matrix<double, Dim, Dim> A;
        for (int c = 0; c < Dim; ++c)
            for (int b = 0; b < Dim; ++b)
                A(c, b) = a * geo.basis_grad[j][c].dot(geo.basis_grad[j][b]);

        std::array<Vec<Dim>, std::size_t(Dim)> GX;
        for (int b = 0; b < Dim; ++b)
            GX[b] = G * X[t[b]];

        for (int c = 0; c < Dim; ++c) {
            const int vc = t[c];
            const Vec<Dim> dx = X[vc] - surface.vertices[vc];
            double r1 = w * dx.dot(nt);
            Vec<Dim> r2 = lump * mu[vc] * nt;
            for (int b = 0; b < Dim; ++b) {
                r1 += A(c, b) * mu[t[b]];
                r2 -= A(c, b) * GX[b];
            }
            residual[vc] += r1;
            for (int k = 0; k < Dim; ++k)
                residual[xcol(vc, k)] += r2[k];
        }

        if (!triplets)
            continue;
        const auto dN = normal_derivatives<Dim>(old_s, new_s, a);
        for (int c = 0; c < Dim; ++c) {
            const int vc = t[c];
            const Vec<Dim> dx = X[vc] - surface.vertices[vc];
            for (int b = 0; b < Dim; ++b) {
                const int vb = t[b];
                triplets->emplace_back(vc, vb, A(c, b));
                const Vec<Dim> dvel = w * (dN[b].transpose() * dx);
                for (int l = 0; l < Dim; ++l)
                    triplets->emplace_back(vc, xcol(vb, l), dvel[l] + (b == c ? w * nt[l] : 0.0));
                for (int k = 0; k < Dim; ++k)
                    for (int l = 0; l < Dim; ++l)
                        triplets->emplace_back(xcol(vc, k), xcol(vb, l),
                                               lump * mu[vc] * dN[b](k, l) - A(c, b) * G(k, l));
            }
            for (int k = 0; k < Dim; ++k)
                triplets->emplace_back(xcol(vc, k), vc, lump * nt[k]);
        }
    }
}

template <int Dim>
LinearSystem build_system(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo, double tau,
                          const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu)
{
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd residual;
    assemble<Dim>(surface, geo, tau, X, mu, residual, &triplets);
    const int n = static_cast<int>(residual.size());
    LinearSystem sys;
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    sys.matrix.makeCompressed();
    sys.rhs = -residual;
    return sys;
}

/// Row then column scaling by inverse max magnitudes; factorization reuses the symbolic analysis.
class EquilibratedSolver {
public:
    Eigen::VectorXd solve(const LinearSystem& sys)
    {
        const Eigen::SparseMatrix<double>& A = sys.matrix;
        const int n = static_cast<int>(A.rows());
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n), c = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
                r[it.row()] = std::max(r[it.row()], std::abs(it.value()));
        for (int i = 0; i < n; ++i) {
            if (r[i] == 0.0)
                throw Error(ErrorKind::SingularMatrix, "empty matrix row");
            r[i] = 1.0 / r[i];
        }
        for (int k = 0; k < A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
                c[it.col()] = std::max(c[it.col()], std::abs(r[it.row()] * it.value()));
        for (int i = 0; i < n; ++i) {
            if (c[i] == 0.0)
                throw Error(ErrorKind::SingularMatrix, "empty matrix column");
            c[i] = 1.0 / c[i];
        }
        Eigen::SparseMatrix<double> S = r.asDiagonal() * A * c.asDiagonal();
        S.makeCompressed();
        if (!m_analyzed || m_n != n || m_nnz != S.nonZeros()) {
            m_lu.analyzePattern(S);
            m_analyzed = true;
            m_n = n;
            m_nnz = S.nonZeros();
        }
        m_lu.factorize(S);
        if (m_lu.info() != Eigen::Success)
            throw Error(ErrorKind::SingularMatrix, "sparse LU factorization failed: " + m_lu.lastErrorMessage());
        Eigen::VectorXd y = m_lu.solve(r.asDiagonal() * sys.rhs);
        if (m_lu.info() != Eigen::Success || !y.allFinite())
            throw Error(ErrorKind::SingularMatrix, "sparse LU solve failed");
        return c.asDiagonal() * y;
    }

private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> m_lu;
    bool m_analyzed = false;
    int m_n = 0;
    Eigen::Index m_nnz = 0;
};

} // namespace

template <int Dim>
Eigen::VectorXd scheme_residual(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo,
                                double tau, const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu)
{
    Eigen::VectorXd residual;
    assemble<Dim>(surface, geo, tau, X, mu, residual, nullptr);
    return residual;
}

template <int Dim>
LinearSystem assemble_system(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo, double tau,
                             const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu)
{
    return build_system<Dim>(surface, geo, tau, X, mu);
}

template <int Dim>
LinearSystem assemble_system(const FlowState<Dim>& state, const std::vector<Vec<Dim>>& X_guess,
                             const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield)
{
    const StepGeometry<Dim> geo = step_geometry(state.surface, model, kfield);
    return build_system<Dim>(state.surface, geo, state.tau, X_guess,
                             Eigen::VectorXd::Zero(state.surface.num_vertices()));
}

Eigen::VectorXd newton_step_solve(const LinearSystem& system)
{
    EquilibratedSolver solver;
    return solver.solve(system);
}

template <int Dim>
NewtonResult<Dim> newton_solve(const FlowState<Dim>& state, const AnisotropyModel<Dim>& model,
                               const StabilizerField<Dim>& kfield, const NewtonOptions& opts)
{
    if (!(opts.tol > 0.0) || opts.max_iters < 1)
        throw Error(ErrorKind::ValidationError, "Newton tolerance and iteration cap must be positive");
    const SimplexSurface<Dim>& surface = state.surface;
    const StepGeometry<Dim> geo = step_geometry(surface, model, kfield);
    NewtonResult<Dim> res;
    res.X = surface.vertices;
    res.mu = Eigen::VectorXd::Zero(surface.num_vertices());
    EquilibratedSolver solver;
    while (true) {
        Eigen::VectorXd residual;
        assemble<Dim>(surface, geo, state.tau, res.X, res.mu, residual, nullptr);
        res.residual = residual.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(res.residual))
            throw Error(ErrorKind::NoConvergence, "Newton residual is not finite");
        if (res.residual <= opts.tol)
            return res;
        if (res.iters >= opts.max_iters) {
            std::ostringstream os;
            os << "Newton did not reach " << opts.tol << " in " << opts.max_iters << " iterations (residual "
               << res.residual << ")";
            throw Error(ErrorKind::NoConvergence, os.str());
        }
        const LinearSystem sys = build_system<Dim>(surface, geo, state.tau, res.X, res.mu);
        const Eigen::VectorXd delta = solver.solve(sys);
        const int N = surface.num_vertices();
        res.mu += delta.head(N);
        for (int k = 0; k < Dim; ++k)
            for (int i = 0; i < N; ++i)
                res.X[i][k] += delta[N + k * N + i];
        ++res.iters;
    }
}

template <int Dim>
void step(FlowState<Dim>& state, const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
          const NewtonOptions& opts)
{
    const std::int64_t next = state.m + 1;
    const double t_next = static_cast<double>(next) * state.tau;
    NewtonResult<Dim> res;
    try {
        res = newton_solve(state, model, kfield, opts);
    } catch (const Error& e) {
        throw StepError(e.kind(), e.what(), next, t_next);
    }
    SimplexSurface<Dim> next_surface{res.X, state.surface.simplices};
    for (int j = 0; j < next_surface.num_simplices(); ++j)
        if (is_degenerate(next_surface.simplex(j))) {
            std::ostringstream os;
            os << "simplex " << j << " collapsed";
            throw StepError(ErrorKind::MeshCollapse, os.str(), next, t_next);
        }
    const double V = enclosed_volume(next_surface);
    const double W = total_energy(next_surface, model);
    state.surface = std::move(next_surface);
    state.mu = res.mu;
    state.m = next;
    state.history.push_back({t_next, V, W, res.iters});
}

template <int Dim>
void run(FlowState<Dim>& state, const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
         double T_final, const NewtonOptions& opts, const StepObserver<Dim>& observer)
{
    if (!(T_final >= 0.0))
        throw Error(ErrorKind::ValidationError, "final time must be >= 0");
    const std::int64_t steps = std::llround(T_final / state.tau);
    for (std::int64_t s = 0; s < steps; ++s) {
        step(state, model, kfield, opts);
        if (observer)
            observer(state);
    }
}

template <int Dim>
std::pair<double, double> dissipation_identity(const SimplexSurface<Dim>& surface,
                                               const StepGeometry<Dim>& geo, double tau,
                                               const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu)
{
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j) {
        const auto& t = surface.simplices[j];
        Mat<Dim> gradX = Mat<Dim>::Zero(), gradD = Mat<Dim>::Zero();
        Vec<Dim> gradmu = Vec<Dim>::Zero();
        for (int c = 0; c < Dim; ++c) {
            const Vec<Dim>& g = geo.basis_grad[j][c];
            gradX += X[t[c]] * g.transpose();
            gradD += (X[t[c]] - surface.vertices[t[c]]) * g.transpose();
            gradmu += mu[t[c]] * g;
        }
        lhs += geo.area[j] * (geo.G[j] * gradX).cwiseProduct(gradD).sum();
        rhs -= tau * geo.area[j] * gradmu.squaredNorm();
    }
    return {lhs, rhs};
}

#define SPPFEM_INSTANTIATE_SCHEME(D)                                                                       \
    template FlowState<D> make_state<D>(SimplexSurface<D>, double, const AnisotropyModel<D>&);             \
    template Vec<D> semi_implicit_normal<D>(const Simplex<D>&, const Simplex<D>&);                         \
    template StepGeometry<D> step_geometry<D>(const SimplexSurface<D>&, const AnisotropyModel<D>&,         \
                                              const StabilizerField<D>&);                                  \
    template Eigen::VectorXd pack_unknowns<D>(const Eigen::VectorXd&, const std::vector<Vec<D>>&);        \
    template void unpack_unknowns<D>(const Eigen::VectorXd&, Eigen::VectorXd&, std::vector<Vec<D>>&);     \
    template Eigen::VectorXd scheme_residual<D>(const SimplexSurface<D>&, const StepGeometry<D>&, double,  \
                                                const std::vector<Vec<D>>&, const Eigen::VectorXd&);       \
    template LinearSystem assemble_system<D>(const SimplexSurface<D>&, const StepGeometry<D>&, double,     \
                                             const std::vector<Vec<D>>&, const Eigen::VectorXd&);          \
    template LinearSystem assemble_system<D>(const FlowState<D>&, const std::vector<Vec<D>>&,              \
                                             const AnisotropyModel<D>&, const StabilizerField<D>&);        \
    template NewtonResult<D> newton_solve<D>(const FlowState<D>&, const AnisotropyModel<D>&,               \
                                             const StabilizerField<D>&, const NewtonOptions&);             \
    template void step<D>(FlowState<D>&, const AnisotropyModel<D>&, const StabilizerField<D>&,             \
                          const NewtonOptions&);                                                           \
    template void run<D>(FlowState<D>&, const AnisotropyModel<D>&, const StabilizerField<D>&, double,      \
                         const NewtonOptions&, const StepObserver<D>&);                                    \
    template std::pair<double, double> dissipation_identity<D>(const SimplexSurface<D>&,                   \
                                                               const StepGeometry<D>&, double,             \
                                                               const std::vector<Vec<D>>&,                 \
                                                               const Eigen::VectorXd&);

SPPFEM_INSTANTIATE_SCHEME(2)
SPPFEM_INSTANTIATE_SCHEME(3)

} // namespace sppfem
