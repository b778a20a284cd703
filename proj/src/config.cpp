#include "sppfem/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace sppfem {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"shape", {"kind", "size", "path", "h"}},
        {"model", {"family", "beta", "a", "b"}},
        {"stabilizer",
         {"mode", "k", "table_file", "table_n_theta", "table_n_phi", "n_euler", "n_theta", "refine_levels",
          "refine_keep", "refine_factor", "polish_starts", "polish_sweeps", "polish_rounds", "shell_directions",
          "shell_radius", "alpha_tol", "psd_tol", "alpha_max"}},
        {"time", {"T", "tau", "newton_tol", "max_iters"}},
        {"output", {"dir"}},
        {"converge", {"levels", "reference"}},
        {"run", {"seed", "threads"}},
    };
    return keys;
}

[[noreturn]] void invalid(const std::string& field, const std::string& why)
{
    throw Error(ErrorKind::ValidationError, field + ": " + why);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, const std::string& text)
{
    std::istringstream ss(trim(text));
    double v;
    if (!(ss >> v) || !ss.eof() || !std::isfinite(v))
        invalid(field, "expected a number, got '" + text + "'");
    return v;
}

long long to_integer(const std::string& field, const std::string& text)
{
    const std::string t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used, 0);
    } catch (const std::exception&) {
        invalid(field, "expected an integer, got '" + text + "'");
    }
    if (used != t.size())
        invalid(field, "expected an integer, got '" + text + "'");
    return v;
}

std::vector<double> to_list(const std::string& field, const std::string& text)
{
    std::istringstream ss(text);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok)
        out.push_back(to_double(field, tok));
    return out;
}

ExperimentConfig from_tree(const pt::ptree& tree)
{
    for (const auto& [section, node] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end() || !node.data().empty())
            invalid(section, "unknown key");
        for (const auto& [key, child] : node) {
            if (!it->second.count(key))
                invalid(section + "." + key, "unknown key");
            if (!child.empty())
                invalid(section + "." + key, "nested keys are not allowed");
        }
    }

    ExperimentConfig c;
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (const auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.')))
            return trim(*v);
        return std::nullopt;
    };
    auto num = [&](const std::string& path, auto& target) {
        if (const auto v = get(path)) {
            using T = std::decay_t<decltype(target)>;
            if constexpr (std::is_floating_point_v<T>)
                target = to_double(path, *v);
            else
                target = static_cast<T>(to_integer(path, *v));
        }
    };

    if (const auto v = get("shape.kind"))
        c.shape.kind = *v;
    if (const auto v = get("shape.size"))
        c.shape.params = to_list("shape.size", *v);
    if (const auto v = get("shape.path"))
        c.shape.path = *v;
    if (c.shape.kind == "cuboid" && !get("shape.size"))
        c.shape.params = {2.0, 1.0, 1.0};
    num("shape.h", c.h);

    if (const auto v = get("model.family"))
        c.model.family = *v;
    num("model.beta", c.model.beta);
    num("model.a", c.model.a);
    num("model.b", c.model.b);

    if (const auto v = get("stabilizer.mode"))
        c.stabilizer.mode = *v;
    num("stabilizer.k", c.stabilizer.k);
    if (const auto v = get("stabilizer.table_file"))
        c.stabilizer.table_file = *v;
    num("stabilizer.table_n_theta", c.stabilizer.table_n_theta);
    num("stabilizer.table_n_phi", c.stabilizer.table_n_phi);
    num("stabilizer.n_euler", c.stabilizer.k0.n_euler);
    num("stabilizer.n_theta", c.stabilizer.k0.n_theta);
    num("stabilizer.refine_levels", c.stabilizer.k0.refine_levels);
    num("stabilizer.refine_keep", c.stabilizer.k0.refine_keep);
    num("stabilizer.refine_factor", c.stabilizer.k0.refine_factor);
    num("stabilizer.polish_starts", c.stabilizer.k0.polish_starts);
    num("stabilizer.polish_sweeps", c.stabilizer.k0.polish_sweeps);
    num("stabilizer.polish_rounds", c.stabilizer.k0.polish_rounds);
    num("stabilizer.shell_directions", c.stabilizer.k0.shell_directions);
    num("stabilizer.shell_radius", c.stabilizer.k0.shell_radius);
    num("stabilizer.alpha_tol", c.stabilizer.k0.alpha_tol);
    num("stabilizer.psd_tol", c.stabilizer.k0.psd_tol);
    num("stabilizer.alpha_max", c.stabilizer.k0.alpha_max);

    num("time.T", c.T_final);
    if (const auto v = get("time.tau"))
        c.tau = to_double("time.tau", *v);
    num("time.newton_tol", c.newton.tol);
    num("time.max_iters", c.newton.max_iters);

    if (const auto v = get("output.dir"))
        c.out_dir = *v;

    if (const auto v = get("converge.levels"))
        c.converge_levels = to_list("converge.levels", *v);
    num("converge.reference", c.converge_reference);

    if (const auto v = get("run.seed"))
        c.seed = static_cast<std::uint64_t>(std::stoull(*v, nullptr, 0));
    num("run.threads", c.threads);

    c.dim = shape_dimension(c.shape);
    if (!(c.h > 0.0))
        invalid("shape.h", "must be > 0");
    if (c.tau && !(*c.tau > 0.0))
        invalid("time.tau", "must be > 0");
    if (!(c.T_final >= 0.0))
        invalid("time.T", "must be >= 0");
    if (!(c.newton.tol > 0.0))
        invalid("time.newton_tol", "must be > 0");
    if (c.newton.max_iters < 1)
        invalid("time.max_iters", "must be >= 1");
    if (c.threads < 1)
        invalid("run.threads", "must be >= 1");
    if (c.model.family != "isotropic" && c.model.family != "cubic" && c.model.family != "sign_riemannian")
        invalid("model.family", "unknown family '" + c.model.family + "'");
    if (c.stabilizer.mode != "table" && c.stabilizer.mode != "constant" && c.stabilizer.mode != "sup")
        invalid("stabilizer.mode", "unknown mode '" + c.stabilizer.mode + "'");
    if (!(c.stabilizer.k >= 0.0))
        invalid("stabilizer.k", "must be >= 0");
    const K0Options& k0 = c.stabilizer.k0;
    if (k0.n_euler < 2 || k0.n_theta < 2)
        invalid("stabilizer.n_euler", "grid sizes must be >= 2");
    if (k0.refine_levels < 0 || k0.refine_keep < 0 || k0.polish_starts < 0 || k0.polish_sweeps < 0 ||
        k0.polish_rounds < 0 || k0.shell_directions < 0)
        invalid("stabilizer.refine_levels", "search counts must be >= 0");
    if (!(k0.shell_radius > 0.0) || !(k0.alpha_tol > 0.0) || !(k0.psd_tol >= 0.0) || !(k0.alpha_max > 0.0))
        invalid("stabilizer.alpha_tol", "tolerances must be positive");
    if (c.shape.kind == "file" && c.shape.path.empty())
        invalid("shape.path", "required for kind = file");
    for (double h : c.converge_levels)
        if (!(h > 0.0))
            invalid("converge.levels", "entries must be > 0");
    if (c.converge_levels.empty())
        invalid("converge.levels", "must not be empty");
    if (!(c.converge_reference > 0.0))
        invalid("converge.reference", "must be > 0");
    return c;
}

void apply_override(pt::ptree& tree, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw Error(ErrorKind::ValidationError, "override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
        invalid(key, "unknown key");
    tree.put(pt::ptree::path_type(key, '.'), trim(assignment.substr(eq + 1)));
}

} // namespace

ExperimentConfig parse_config(std::istream& is, const std::vector<std::string>& overrides)
{
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        std::ostringstream os;
        os << "line " << e.line() << ": " << e.message();
        throw Error(ErrorKind::ParseError, os.str());
    }
    for (const auto& o : overrides)
        apply_override(tree, o);
    return from_tree(tree);
}

ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::IoError, "cannot read config " + path);
    return parse_config(is, overrides);
}

void write_config(std::ostream& os, const ExperimentConfig& c)
{
    os << std::setprecision(17);
    auto list = [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i)
            os << (i ? " " : "") << v[i];
        os << '\n';
    };
    os << "[shape]\nkind = " << c.shape.kind << "\nsize = ";
    list(c.shape.params);
    if (!c.shape.path.empty())
        os << "path = " << c.shape.path << '\n';
    os << "h = " << c.h << "\n\n";

    os << "[model]\nfamily = " << c.model.family << "\nbeta = " << c.model.beta << "\na = " << c.model.a
       << "\nb = " << c.model.b << "\n\n";

    const K0Options& k = c.stabilizer.k0;
    os << "[stabilizer]\nmode = " << c.stabilizer.mode << "\nk = " << c.stabilizer.k << '\n';
    if (!c.stabilizer.table_file.empty())
        os << "table_file = " << c.stabilizer.table_file << '\n';
    os << "table_n_theta = " << c.stabilizer.table_n_theta << "\ntable_n_phi = " << c.stabilizer.table_n_phi
       << "\nn_euler = " << k.n_euler << "\nn_theta = " << k.n_theta << "\nrefine_levels = " << k.refine_levels
       << "\nrefine_keep = " << k.refine_keep << "\nrefine_factor = " << k.refine_factor
       << "\npolish_starts = " << k.polish_starts << "\npolish_sweeps = " << k.polish_sweeps
       << "\npolish_rounds = " << k.polish_rounds << "\nshell_directions = " << k.shell_directions
       << "\nshell_radius = " << k.shell_radius
       << "\nalpha_tol = " << k.alpha_tol << "\npsd_tol = " << k.psd_tol << "\nalpha_max = " << k.alpha_max
       << "\n\n";

    os << "[time]\nT = " << c.T_final << '\n';
    if (c.tau)
        os << "tau = " << *c.tau << '\n';
    os << "newton_tol = " << c.newton.tol << "\nmax_iters = " << c.newton.max_iters << "\n\n";

    os << "[output]\ndir = " << c.out_dir << "\n\n";
    os << "[converge]\nlevels = ";
    list(c.converge_levels);
    os << "reference = " << c.converge_reference << "\n\n";
    os << "[run]\nseed = " << c.seed << "\nthreads = " << c.threads << '\n';
}

} // namespace sppfem
