#pragma once

#include "sppfem/anisotropy.hpp"

#include <Eigen/Core>

namespace sppfem {

/// Orthonormal basis {tau_1, ..., tau_{d-1}, n} with det = +1.
template <int Dim>
struct Frame {
    std::array<Vec<Dim>, Dim - 1> tangents;
    Vec<Dim> normal;

    /// Columns tau_1, ..., tau_{d-1}, n.
    Mat<Dim> matrix() const;
};

template <int Dim>
Frame<Dim> orthonormal_frame(const Vec<Dim>& n);

/// Same normal, tangents rotated in-plane by `angle` (identity for Dim = 2).
template <int Dim>
Frame<Dim> rotate_tangents(const Frame<Dim>& frame, double angle);

/// [[cos, sin], [-sin, cos]]: the SO(2) representation in frame coordinates.
Eigen::Matrix2d rotation_2d(double theta);

/// Euler-angle SO(3) representation in frame coordinates, Phi = (phi, theta, psi).
Eigen::Matrix3d rotation_3d(double phi, double theta, double psi);

/// World-space rotation U with U [tau.., n] = [tau.., n] local.
template <int Dim>
Mat<Dim> to_world(const Frame<Dim>& frame, const Mat<Dim>& local);

Eigen::Matrix2d assemble_Mtilde(const AnisotropyModel<2>& model, const Frame<2>& frame,
                                double theta, double alpha);
Eigen::Matrix2d assemble_Mtilde(const AnisotropyModel<2>& model, const Vec<2>& n, double theta,
                                double alpha);

Eigen::Matrix4d assemble_M3(const AnisotropyModel<3>& model, const Frame<3>& frame,
                            const Eigen::Vector3d& Phi, double alpha);
Eigen::Matrix4d assemble_M3(const AnisotropyModel<3>& model, const Vec<3>& n,
                            const Eigen::Vector3d& Phi, double alpha);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& A);

/// True iff the smallest eigenvalue is >= -tol (1 + ||A||_inf).
bool psd_check(const Eigen::MatrixXd& A, double tol = 1e-10);

/// Slack Tr(L^T (P_alpha L - Q)) - (gamma(Un) prod l_ii - gamma(n)) for a world rotation U.
template <int Dim>
double trace_inequality_slack(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame,
                              const Mat<Dim>& U, const Eigen::MatrixXd& L, double alpha);

template <int Dim>
bool trace_inequality_check(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame,
                            const Mat<Dim>& U, const Eigen::MatrixXd& L, double alpha);

struct K0Options {
    double alpha_tol = 1e-4;
    int n_theta = 720;
    int n_euler = 48;
    int refine_levels = 1;
    int refine_keep = 16;        // lowest-eigenvalue cells always refined
    double refine_factor = 10.0; // refine cells with lambda_min below factor * tol
    int polish_starts = 16;      // local descent from the lowest samples after refinement
    int polish_sweeps = 8;
    int polish_rounds = 4;
    int shell_directions = 2000; // samples on the small sphere around each zero-determinant locus
    double shell_radius = 1e-3;
    double psd_tol = 1e-10;
    double alpha_max = 1e4;
};

/// Smallest alpha >= 0 making the auxiliary matrix PSD over the sampled rotation group.
template <int Dim>
double k0_estimate(const AnisotropyModel<Dim>& model, const Frame<Dim>& frame,
                   const K0Options& opts = {});

template <int Dim>
double k0_estimate(const AnisotropyModel<Dim>& model, const Vec<Dim>& n, const K0Options& opts = {});

/// Throws UnstableAnisotropy if the margin is negative (beyond rounding) at n or -n.
template <int Dim>
void require_stable(const AnisotropyModel<Dim>& model, const Vec<Dim>& n);

} // namespace sppfem
