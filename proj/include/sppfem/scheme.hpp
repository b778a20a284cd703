#pragma once

#include "sppfem/anisotropy.hpp"
#include "sppfem/k0_table.hpp"
#include "sppfem/mesh.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace sppfem {

struct DiagnosticRecord {
    double t;
    double V;
    double W;
    int newton_iters;
};

template <int Dim>
struct FlowState {
    SimplexSurface<Dim> surface;
    std::int64_t m = 0;
    double tau = 0.0;
    Eigen::VectorXd mu;
    std::vector<DiagnosticRecord> history;

    double time() const { return static_cast<double>(m) * tau; }
};

/// Starts a flow at t = 0 with the initial diagnostic record; validates the surface.
template <int Dim>
FlowState<Dim> make_state(SimplexSurface<Dim> surface, double tau, const AnisotropyModel<Dim>& model);

/// (J_old + J_new) / (2 |s_old|) for Dim = 2, (J_old + 4 J_mid + J_new) / (12 |s_old|) for Dim = 3.
template <int Dim>
Vec<Dim> semi_implicit_normal(const Simplex<Dim>& old_s, const Simplex<Dim>& new_s);

/// Newton matrix and right-hand side -R; unknowns are mu (N) then X component-major (d N).
struct LinearSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

struct NewtonOptions {
    double tol = 1e-12;
    int max_iters = 50;
};

template <int Dim>
struct NewtonResult {
    std::vector<Vec<Dim>> X;
    Eigen::VectorXd mu;
    int iters = 0;
    double residual = 0.0;
};

/// Quantities of Gamma^m frozen during one time step.
template <int Dim>
struct StepGeometry {
    std::vector<double> area;
    std::vector<Vec<Dim>> normal;
    std::vector<std::array<Vec<Dim>, std::size_t(Dim)>> basis_grad;
    std::vector<Mat<Dim>> G;
};

template <int Dim>
StepGeometry<Dim> step_geometry(const SimplexSurface<Dim>& surface, const AnisotropyModel<Dim>& model,
                                const StabilizerField<Dim>& kfield);

/// Packs mu and X into the unknown vector and back.
template <int Dim>
Eigen::VectorXd pack_unknowns(const Eigen::VectorXd& mu, const std::vector<Vec<Dim>>& X);

template <int Dim>
void unpack_unknowns(const Eigen::VectorXd& z, Eigen::VectorXd& mu, std::vector<Vec<Dim>>& X);

/// Residual of both equation blocks at (X, mu), tested with every nodal basis function.
template <int Dim>
Eigen::VectorXd scheme_residual(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo,
                                double tau, const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu);

template <int Dim>
LinearSystem assemble_system(const SimplexSurface<Dim>& surface, const StepGeometry<Dim>& geo, double tau,
                             const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu);

template <int Dim>
LinearSystem assemble_system(const FlowState<Dim>& state, const std::vector<Vec<Dim>>& X_guess,
                             const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield);

/// Solves the equilibrated system; throws SingularMatrix.
Eigen::VectorXd newton_step_solve(const LinearSystem& system);

template <int Dim>
NewtonResult<Dim> newton_solve(const FlowState<Dim>& state, const AnisotropyModel<Dim>& model,
                               const StabilizerField<Dim>& kfield, const NewtonOptions& opts = {});

/// Advances one time step and appends a diagnostic record; on failure the state is unchanged.
template <int Dim>
void step(FlowState<Dim>& state, const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
          const NewtonOptions& opts = {});

/// Called after each accepted step.
template <int Dim>
using StepObserver = std::function<void(const FlowState<Dim>&)>;

/// Runs round(T_final / tau) steps.
template <int Dim>
void run(FlowState<Dim>& state, const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
         double T_final, const NewtonOptions& opts = {}, const StepObserver<Dim>& observer = {});

/// Both sides of the discrete dissipation identity at a converged step:
/// <G grad X^{m+1}, grad (X^{m+1} - X^m)> and -tau (grad mu, grad mu).
template <int Dim>
std::pair<double, double> dissipation_identity(const SimplexSurface<Dim>& surface,
                                               const StepGeometry<Dim>& geo, double tau,
                                               const std::vector<Vec<Dim>>& X, const Eigen::VectorXd& mu);

} // namespace sppfem
