#pragma once

#include "sppfem/scheme.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sppfem {

/// Axis-aligned a x b x c box centered at the origin, faces on a uniform grid of pitch <= h.
SimplexSurface<3> make_cuboid(double a, double b, double c, double h);

/// Ellipsoid with semi-axes (a, b, c): a cube grid projected radially, then scaled.
SimplexSurface<3> make_ellipsoid(double a, double b, double c, double h);

/// a x b rectangle centered at the origin with side pitch <= h.
SimplexSurface<2> make_box2d(double a, double b, double h);

/// Regular polygon inscribed in the circle of radius r with ceil(2 pi r / h) vertices.
SimplexSurface<2> make_circle(double r, double h);

/// Polygon with vertices equally spaced in arclength on the ellipse with semi-axes (a, b).
SimplexSurface<2> make_ellipse(double a, double b, double h);

/// Stored meshes of one run (shared connectivity), used for time interpolation.
template <int Dim>
struct SurfaceHistory {
    std::vector<std::array<int, std::size_t(Dim)>> simplices;
    std::vector<double> times;
    std::vector<std::vector<Vec<Dim>>> positions;

    void record(const FlowState<Dim>& state);
};

/// Vertexwise interpolation lambda Gamma(t_{m+1}) + (1 - lambda) Gamma(t_m), lambda = (t - t_m)/(t_{m+1} - t_m).
template <int Dim>
SimplexSurface<Dim> time_interpolated_surface(const SurfaceHistory<Dim>& history, double t);

/// |Omega_1 symmetric-difference Omega_2| = 2 |Omega_1 u Omega_2| - |Omega_1| - |Omega_2|, from exact
/// crossing intervals along `resolution` (Dim = 2) or resolution^2 (Dim = 3) parallel lines,
/// integrated with the midpoint rule over the joint bounding box.
template <int Dim>
double manifold_distance(const SimplexSurface<Dim>& a, const SimplexSurface<Dim>& b, int resolution = 0);

template <int Dim>
int default_distance_resolution();

/// Maximum vertex displacement between two meshes with equal vertex counts.
template <int Dim>
double max_vertex_displacement(const SimplexSurface<Dim>& a, const SimplexSurface<Dim>& b);

struct ShapeSpec {
    std::string kind = "cuboid"; // cuboid | ellipsoid | box2d | circle | ellipse | file
    std::vector<double> params{2.0, 1.0, 1.0};
    std::string path;
};

struct ModelSpec {
    std::string family = "cubic"; // isotropic | cubic | sign_riemannian
    double beta = 0.125;
    double a = 2.5;
    double b = 1.5;
};

struct StabilizerSpec {
    std::string mode = "table"; // table | constant | sup
    double k = 0.0;
    std::string table_file;
    int table_n_theta = 0; // 0: default grid of the dimension
    int table_n_phi = 0;
    K0Options k0;
};

struct ExperimentConfig {
    int dim = 3;
    ShapeSpec shape;
    double h = 0.5;
    std::optional<double> tau; // default (2/25) h^2
    ModelSpec model;
    StabilizerSpec stabilizer;
    double T_final = 0.5;
    NewtonOptions newton;
    std::string out_dir = "out";
    std::vector<double> converge_levels{0.5, 0.25};
    double converge_reference = 0.125;
    std::uint64_t seed = 0x5EED;
    int threads = 1;

    double effective_tau() const { return tau ? *tau : time_step_for(h); }
    static double time_step_for(double h) { return 2.0 / 25.0 * h * h; }

    bool operator==(const ExperimentConfig&) const;
};

int shape_dimension(const ShapeSpec& shape);

template <int Dim>
SimplexSurface<Dim> make_shape(const ShapeSpec& shape, double h);

template <int Dim>
AnisotropyModel<Dim> make_model(const ModelSpec& spec);

/// Stabilizer for a config: loads or builds the k0 table as requested.
template <int Dim>
StabilizerField<Dim> make_stabilizer(const StabilizerSpec& spec, const AnisotropyModel<Dim>& model,
                                     int threads);

struct RunSummary {
    std::vector<DiagnosticRecord> history;
    double max_dV_rel = 0.0;
    double max_dW_increase = 0.0; // max_m (W^{m+1} - W^m) / W^0
    double newton_2to4_fraction = 0.0;
};

RunSummary summarize(const std::vector<DiagnosticRecord>& history);

/// CSV columns t,V,W,dV_rel,W_rel,newton_iters with 17 significant digits.
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticRecord>& history);

struct ConvergenceRow {
    double h;
    double tau;
    double error;
    std::optional<double> order;
};

/// CSV columns h,tau,error,order; the first order is "-".
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);

/// Flow of `shape` to time T at each (h, (2/25) h^2); errors against the reference level.
template <int Dim>
std::vector<ConvergenceRow> convergence_study(const ShapeSpec& shape, const AnisotropyModel<Dim>& model,
                                              const StabilizerField<Dim>& kfield,
                                              const std::vector<double>& levels, double h_reference,
                                              double T, const NewtonOptions& newton = {},
                                              int resolution = 0);

/// One run of the configured flow, returning its diagnostics and final state.
template <int Dim>
FlowState<Dim> conservation_study(const SimplexSurface<Dim>& initial, double tau,
                                  const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
                                  double T, const NewtonOptions& newton = {});

} // namespace sppfem
