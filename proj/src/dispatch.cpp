#include "sppfem/dispatch.hpp"

#include "sppfem/config.hpp"
#include "sppfem/mesh_io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>

namespace sppfem {

namespace fs = std::filesystem;

namespace {

struct Context {
    ExperimentConfig config;
    fs::path out;
    std::ostream& out_stream;
};

std::ofstream open_output(const fs::path& path)
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return os;
}

void validate_paths(const ExperimentConfig& c, const fs::path& out)
{
    if (c.shape.kind == "file" && !fs::is_regular_file(c.shape.path))
        throw Error(ErrorKind::IoError, "shape.path: no such file " + c.shape.path);
    if (!c.stabilizer.table_file.empty() && !fs::is_regular_file(c.stabilizer.table_file))
        throw Error(ErrorKind::IoError, "stabilizer.table_file: no such file " + c.stabilizer.table_file);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out))
        throw Error(ErrorKind::IoError, "cannot create output directory " + out.string());
}

template <int Dim>
void stability_gate(const AnisotropyModel<Dim>& model)
{
    check_model(model);
    const double margin = min_stability_margin(model);
    if (margin < -1e-12) {
        std::ostringstream os;
        os << "energy-stable condition violated, minimum sampled margin " << margin;
        throw Error(ErrorKind::UnstableAnisotropy, os.str());
    }
}

template <int Dim>
StabilizerField<Dim> stabilizer_with_dump(const Context& ctx, const AnisotropyModel<Dim>& model)
{
    const ExperimentConfig& c = ctx.config;
    if (c.stabilizer.mode == "constant")
        return make_stabilizer<Dim>(c.stabilizer, model, c.threads);
    StabilizerSpec table_spec = c.stabilizer;
    table_spec.mode = "table";
    const StabilizerField<Dim> table = make_stabilizer<Dim>(table_spec, model, c.threads);
    if (c.stabilizer.table_file.empty())
        table.save((ctx.out / "k0.table").string());
    return c.stabilizer.mode == "sup" ? table.sup_field() : table;
}

template <int Dim>
int run_flow(const Context& ctx, bool report)
{
    const ExperimentConfig& c = ctx.config;
    const AnisotropyModel<Dim> model = make_model<Dim>(c.model);
    stability_gate(model);
    SimplexSurface<Dim> initial = make_shape<Dim>(c.shape, c.h);
    const StabilizerField<Dim> k = stabilizer_with_dump<Dim>(ctx, model);
    FlowState<Dim> state = make_state(std::move(initial), c.effective_tau(), model);
    std::exception_ptr failure;
    try {
        run(state, model, k, c.T_final, c.newton);
    } catch (const StepError&) {
        failure = std::current_exception();
    }
    {
        std::ofstream os = open_output(ctx.out / "diag.csv");
        write_diagnostics_csv(os, state.history);
    }
    save_mesh<Dim>((ctx.out / (std::string("mesh_final") + mesh_extension<Dim>())).string(), state.surface);
    if (failure)
        std::rethrow_exception(failure);
    if (report) {
        const RunSummary s = summarize(state.history);
        ctx.out_stream << std::setprecision(6) << "steps " << state.m << "\nmax_dV_rel " << s.max_dV_rel
                       << "\nmax_dW_increase_rel " << s.max_dW_increase << "\nnewton_2to4_fraction "
                       << s.newton_2to4_fraction << '\n';
    }
    return Success;
}

template <int Dim>
int run_converge(const Context& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const AnisotropyModel<Dim> model = make_model<Dim>(c.model);
    stability_gate(model);
    const StabilizerField<Dim> k = stabilizer_with_dump<Dim>(ctx, model);
    const auto rows = convergence_study<Dim>(c.shape, model, k, c.converge_levels, c.converge_reference,
                                             c.T_final, c.newton);
    std::ofstream os = open_output(ctx.out / "convergence.csv");
    write_convergence_csv(os, rows);
    write_convergence_csv(ctx.out_stream, rows);
    return Success;
}

template <int Dim>
int run_table(const Context& ctx)
{
    const ExperimentConfig& c = ctx.config;
    const AnisotropyModel<Dim> model = make_model<Dim>(c.model);
    check_model(model);
    StabilizerSpec spec = c.stabilizer;
    spec.mode = "table";
    spec.table_file.clear();
    const StabilizerField<Dim> table = make_stabilizer<Dim>(spec, model, c.threads);
    table.save((ctx.out / "k0.table").string());
    ctx.out_stream << std::setprecision(6) << "nodes " << table.values().size() << "\nmax_k0 "
                   << table.sup() - table.margin() << '\n';
    return Success;
}

template <int Dim>
int run_check(const Context& ctx)
{
    const ExperimentConfig& c = ctx.config;
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> gauss;
    int failures = 0;
    auto report = [&](const char* name, bool ok, double value) {
        ctx.out_stream << (ok ? "PASS " : "FAIL ") << name << ' ' << std::setprecision(6) << value << '\n';
        failures += ok ? 0 : 1;
    };

    const AnisotropyModel<Dim> model = make_model<Dim>(c.model);
    double euler = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec<Dim> n;
        for (int k = 0; k < Dim; ++k)
            n[k] = gauss(rng);
        n.normalize();
        euler = std::max(euler, std::abs(model.gamma(n) - model.xi(n).dot(n)));
    }
    report("euler_identity", euler <= 1e-10, euler);
    const double margin = min_stability_margin(model);
    report("stability_margin", margin >= -1e-12, margin);

    const SimplexSurface<Dim> surface = make_shape<Dim>(c.shape, c.h);
    double tangency = 0.0, jac = 0.0;
    for (int j = 0; j < surface.num_simplices(); ++j) {
        const Simplex<Dim> s = surface.simplex(j);
        const AreaNormal<Dim> an = area_and_normal(s);
        std::array<double, std::size_t(Dim)> f;
        for (auto& v : f)
            v = gauss(rng);
        tangency = std::max(tangency, std::abs(grad_pwl(s, f).dot(an.normal)));
        const Mat<Dim> P = Mat<Dim>::Identity() - an.normal * an.normal.transpose();
        jac = std::max(jac, (surface_jacobian(s, s) - P).cwiseAbs().maxCoeff());
    }
    report("grad_tangency", tangency <= 1e-13 * (1.0 + 1.0 / c.h), tangency);
    report("jacobian_of_identity", jac <= 1e-13, jac);
    const double V = enclosed_volume(surface);
    report("enclosed_volume_positive", V > 0.0, V);

    if (margin >= -1e-12) {
        const StabilizerField<Dim> k = make_stabilizer<Dim>(c.stabilizer, model, c.threads);
        FlowState<Dim> state = make_state(surface, c.effective_tau(), model);
        step(state, model, k, c.newton);
        const RunSummary s = summarize(state.history);
        report("one_step_volume", s.max_dV_rel <= 1e-11, s.max_dV_rel);
        report("one_step_dissipation", s.max_dW_increase <= 1e-12, s.max_dW_increase);
    }
    return failures == 0 ? Success : NumericalFailure;
}

template <int Dim>
int dispatch_dim(const Command& cmd, const Context& ctx)
{
    if (cmd.name == "run")
        return run_flow<Dim>(ctx, false);
    if (cmd.name == "conserve")
        return run_flow<Dim>(ctx, true);
    if (cmd.name == "converge")
        return run_converge<Dim>(ctx);
    if (cmd.name == "k0-table")
        return run_table<Dim>(ctx);
    return run_check<Dim>(ctx);
}

void error_line(std::ostream& err, const Error& e)
{
    err << "error kind=" << to_string(e.kind());
    if (const auto* se = dynamic_cast<const StepError*>(&e))
        err << " step=" << se->step() << " t=" << std::setprecision(17) << se->time();
    err << " message=\"" << e.what() << "\"\n";
}

} // namespace

int dispatch(const Command& cmd, std::ostream& out, std::ostream& err)
{
    static const char* names[] = {"run", "converge", "conserve", "k0-table", "check"};
    if (std::find(std::begin(names), std::end(names), cmd.name) == std::end(names)) {
        err << "error kind=UsageError message=\"unknown command '" << cmd.name << "'\"\n";
        return UsageError;
    }
    try {
        std::vector<std::string> overrides = cmd.overrides;
        if (cmd.out_dir)
            overrides.push_back("output.dir=" + *cmd.out_dir);
        if (cmd.threads)
            overrides.push_back("run.threads=" + std::to_string(*cmd.threads));
        if (cmd.seed)
            overrides.push_back("run.seed=" + std::to_string(*cmd.seed));
        Context ctx{parse_config(cmd.config_path, overrides), {}, out};
        ctx.out = ctx.config.out_dir;
        validate_paths(ctx.config, ctx.out);
        {
            std::ofstream os = open_output(ctx.out / "config.echo");
            write_config(os, ctx.config);
        }
        return ctx.config.dim == 2 ? dispatch_dim<2>(cmd, ctx) : dispatch_dim<3>(cmd, ctx);
    } catch (const Error& e) {
        error_line(err, e);
        return is_numerical(e.kind()) ? NumericalFailure : UsageError;
    } catch (const std::exception& e) {
        err << "error kind=UsageError message=\"" << e.what() << "\"\n";
        return UsageError;
    }
}

} // namespace sppfem
