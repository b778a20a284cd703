#include "sppfem/harness.hpp"

#include "sppfem/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace sppfem {

template <int Dim>
void SurfaceHistory<Dim>::record(const FlowState<Dim>& state)
{
    if (simplices.empty())
        simplices = state.surface.simplices;
    times.push_back(state.time());
    positions.push_back(state.surface.vertices);
}

template <int Dim>
SimplexSurface<Dim> time_interpolated_surface(const SurfaceHistory<Dim>& history, double t)
{
    if (history.times.empty())
        throw Error(ErrorKind::OutOfRange, "empty surface history");
    const double t0 = history.times.front(), t1 = history.times.back();
    const double slack = 1e-12 * std::max(1.0, std::abs(t1));
    if (t < t0 - slack || t > t1 + slack)
        throw Error(ErrorKind::OutOfRange, "time outside the stored interval");
    const auto it = std::upper_bound(history.times.begin(), history.times.end(), t);
    std::size_t m1 = static_cast<std::size_t>(it - history.times.begin());
    SimplexSurface<Dim> s;
    s.simplices = history.simplices;
    if (m1 == 0) {
        s.vertices = history.positions.front();
        return s;
    }
    if (m1 == history.times.size()) {
        s.vertices = history.positions.back();
        return s;
    }
    const std::size_t m0 = m1 - 1;
    const double lambda = (t - history.times[m0]) / (history.times[m1] - history.times[m0]);
    if (lambda == 0.0) {
        s.vertices = history.positions[m0];
        return s;
    }
    s.vertices.resize(history.positions[m0].size());
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        s.vertices[i] = lambda * history.positions[m1][i] + (1.0 - lambda) * history.positions[m0][i];
    return s;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const
{
    auto k0_eq = [](const K0Options& x, const K0Options& y) {
        return x.alpha_tol == y.alpha_tol && x.n_theta == y.n_theta && x.n_euler == y.n_euler &&
               x.refine_levels == y.refine_levels && x.refine_keep == y.refine_keep &&
               x.refine_factor == y.refine_factor && x.polish_starts == y.polish_starts &&
               x.polish_sweeps == y.polish_sweeps && x.polish_rounds == y.polish_rounds &&
               x.shell_directions == y.shell_directions && x.shell_radius == y.shell_radius && x.psd_tol == y.psd_tol && x.alpha_max == y.alpha_max;
    };
    return dim == o.dim && shape.kind == o.shape.kind && shape.params == o.shape.params &&
           shape.path == o.shape.path && h == o.h && tau == o.tau && model.family == o.model.family &&
           model.beta == o.model.beta && model.a == o.model.a && model.b == o.model.b &&
           stabilizer.mode == o.stabilizer.mode && stabilizer.k == o.stabilizer.k &&
           stabilizer.table_file == o.stabilizer.table_file &&
           stabilizer.table_n_theta == o.stabilizer.table_n_theta &&
           stabilizer.table_n_phi == o.stabilizer.table_n_phi && k0_eq(stabilizer.k0, o.stabilizer.k0) &&
           T_final == o.T_final && newton.tol == o.newton.tol && newton.max_iters == o.newton.max_iters &&
           out_dir == o.out_dir && converge_levels == o.converge_levels &&
           converge_reference == o.converge_reference && seed == o.seed && threads == o.threads;
}

template <int Dim>
SimplexSurface<Dim> make_shape(const ShapeSpec& shape, double h)
{
    if (shape_dimension(shape) != Dim)
        throw Error(ErrorKind::ValidationError, "shape.kind does not match the dimension");
    auto need = [&](std::size_t count) {
        if (shape.params.size() != count)
            throw Error(ErrorKind::ValidationError,
                        "shape.size: '" + shape.kind + "' needs " + std::to_string(count) + " values");
    };
    const auto& p = shape.params;
    if constexpr (Dim == 3) {
        if (shape.kind == "cuboid") {
            need(3);
            return make_cuboid(p[0], p[1], p[2], h);
        }
        if (shape.kind == "ellipsoid") {
            need(3);
            return make_ellipsoid(p[0], p[1], p[2], h);
        }
        return load_mesh<3>(shape.path);
    } else {
        if (shape.kind == "box2d") {
            need(2);
            return make_box2d(p[0], p[1], h);
        }
        if (shape.kind == "circle") {
            need(1);
            return make_circle(p[0], h);
        }
        if (shape.kind == "ellipse") {
            need(2);
            return make_ellipse(p[0], p[1], h);
        }
        return load_mesh<2>(shape.path);
    }
}

template <int Dim>
AnisotropyModel<Dim> make_model(const ModelSpec& spec)
{
    if (spec.family == "isotropic")
        return AnisotropyModel<Dim>::isotropic();
    if (spec.family == "cubic")
        return AnisotropyModel<Dim>::cubic(spec.beta);
    if (spec.family == "sign_riemannian")
        return AnisotropyModel<Dim>::sign_riemannian(spec.a, spec.b);
    throw Error(ErrorKind::ValidationError, "model.family: unknown family '" + spec.family + "'");
}

template <int Dim>
StabilizerField<Dim> make_stabilizer(const StabilizerSpec& spec, const AnisotropyModel<Dim>& model,
                                     int threads)
{
    if (spec.mode == "constant")
        return StabilizerField<Dim>::constant(spec.k);
    if (spec.mode != "table" && spec.mode != "sup")
        throw Error(ErrorKind::ValidationError, "stabilizer.mode: unknown mode '" + spec.mode + "'");
    StabilizerField<Dim> table = StabilizerField<Dim>::constant(0.0);
    if (!spec.table_file.empty()) {
        table = StabilizerField<Dim>::load(spec.table_file);
    } else {
        TableGrid grid = default_grid<Dim>();
        if (spec.table_n_theta > 0)
            grid.n_theta = spec.table_n_theta;
        if (spec.table_n_phi > 0)
            grid.n_phi = spec.table_n_phi;
        table = build_table<Dim>(model, grid, spec.k0, threads);
    }
    return spec.mode == "sup" ? table.sup_field() : table;
}

RunSummary summarize(const std::vector<DiagnosticRecord>& history)
{
    RunSummary s;
    s.history = history;
    if (history.empty())
        return s;
    const double V0 = history.front().V, W0 = history.front().W;
    int good = 0;
    for (std::size_t m = 1; m < history.size(); ++m) {
        s.max_dV_rel = std::max(s.max_dV_rel, std::abs(history[m].V - V0) / std::abs(V0));
        s.max_dW_increase = std::max(s.max_dW_increase, (history[m].W - history[m - 1].W) / W0);
        if (history[m].newton_iters >= 2 && history[m].newton_iters <= 4)
            ++good;
    }
    if (history.size() > 1)
        s.newton_2to4_fraction = static_cast<double>(good) / static_cast<double>(history.size() - 1);
    else
        s.max_dW_increase = 0.0;
    return s;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticRecord>& history)
{
    os << "t,V,W,dV_rel,W_rel,newton_iters\n";
    if (history.empty())
        return;
    const double V0 = history.front().V, W0 = history.front().W;
    os << std::setprecision(17);
    for (const auto& r : history)
        os << r.t << ',' << r.V << ',' << r.W << ',' << (r.V - V0) / V0 << ',' << r.W / W0 << ','
           << r.newton_iters << '\n';
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows)
{
    os << "h,tau,error,order\n" << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.h << ',' << r.tau << ',' << r.error << ',';
        if (r.order)
            os << *r.order;
        else
            os << '-';
        os << '\n';
    }
}

namespace {

template <int Dim>
SimplexSurface<Dim> surface_at(const ShapeSpec& shape, double h, const AnisotropyModel<Dim>& model,
                               const StabilizerField<Dim>& kfield, double T, const NewtonOptions& newton)
{
    const double tau = ExperimentConfig::time_step_for(h);
    FlowState<Dim> state = make_state(make_shape<Dim>(shape, h), tau, model);
    const std::int64_t steps = static_cast<std::int64_t>(std::ceil(T / tau - 1e-9));
    SurfaceHistory<Dim> hist;
    for (std::int64_t s = 0; s < steps; ++s) {
        if (s == steps - 1)
            hist.record(state);
        step(state, model, kfield, newton);
    }
    hist.record(state);
    return time_interpolated_surface(hist, T);
}

} // namespace

template <int Dim>
std::vector<ConvergenceRow> convergence_study(const ShapeSpec& shape, const AnisotropyModel<Dim>& model,
                                              const StabilizerField<Dim>& kfield,
                                              const std::vector<double>& levels, double h_reference,
                                              double T, const NewtonOptions& newton, int resolution)
{
    if (levels.empty() || !(h_reference > 0.0) || !(T >= 0.0))
        throw Error(ErrorKind::ValidationError, "convergence study needs levels, a reference h and T >= 0");
    const SimplexSurface<Dim> reference = surface_at<Dim>(shape, h_reference, model, kfield, T, newton);
    std::vector<ConvergenceRow> rows;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double h = levels[k];
        const SimplexSurface<Dim> s =
            h == h_reference ? reference : surface_at<Dim>(shape, h, model, kfield, T, newton);
        ConvergenceRow row{h, ExperimentConfig::time_step_for(h), manifold_distance(s, reference, resolution), {}};
        if (k > 0 && rows.back().error > 0.0 && row.error > 0.0)
            row.order = std::log(rows.back().error / row.error) / std::log(rows.back().h / h);
        rows.push_back(row);
    }
    return rows;
}

template <int Dim>
FlowState<Dim> conservation_study(const SimplexSurface<Dim>& initial, double tau,
                                  const AnisotropyModel<Dim>& model, const StabilizerField<Dim>& kfield,
                                  double T, const NewtonOptions& newton)
{
    FlowState<Dim> state = make_state(initial, tau, model);
    run(state, model, kfield, T, newton);
    return state;
}

#define SPPFEM_INSTANTIATE_STUDIES(D)                                                                      \
    template struct SurfaceHistory<D>;                                                                     \
    template SimplexSurface<D> time_interpolated_surface<D>(const SurfaceHistory<D>&, double);             \
    template SimplexSurface<D> make_shape<D>(const ShapeSpec&, double);                                    \
    template AnisotropyModel<D> make_model<D>(const ModelSpec&);                                           \
    template StabilizerField<D> make_stabilizer<D>(const StabilizerSpec&, const AnisotropyModel<D>&, int); \
    template std::vector<ConvergenceRow> convergence_study<D>(                                             \
        const ShapeSpec&, const AnisotropyModel<D>&, const StabilizerField<D>&, const std::vector<double>&, \
        double, double, const NewtonOptions&, int);                                                        \
    template FlowState<D> conservation_study<D>(const SimplexSurface<D>&, double, const AnisotropyModel<D>&, \
                                                const StabilizerField<D>&, double, const NewtonOptions&);

SPPFEM_INSTANTIATE_STUDIES(2)
SPPFEM_INSTANTIATE_STUDIES(3)

} // namespace sppfem
