#include "sppfem/k0_table.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace sppfem {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_2pi(double t)
{
    t = std::fmod(t, two_pi);
    if (t < 0.0)
        t += two_pi;
    if (t >= two_pi)
        t = 0.0;
    return t;
}

int valid_theta_count(const TableGrid& g)
{
    if (g.n_theta < 2)
        throw Error(ErrorKind::ValidationError, "table needs n_theta >= 2");
    return g.n_theta;
}

} // namespace

template <int Dim>
TableGrid default_grid()
{
    if constexpr (Dim == 2)
        return {64, 1};
    else
        return {20, 21};
}

template <int Dim>
std::vector<Vec<Dim>> table_nodes(const TableGrid& grid)
{
    const int nt = valid_theta_count(grid);
    std::vector<Vec<Dim>> nodes;
    if constexpr (Dim == 2) {
        for (int i = 0; i < nt; ++i) {
            const double t = two_pi * i / nt;
            nodes.emplace_back(std::cos(t), std::sin(t));
        }
    } else {
        if (grid.n_phi < 2)
            throw Error(ErrorKind::ValidationError, "table needs n_phi >= 2");
        for (int i = 1; i <= nt; ++i) {
            const double th = two_pi * i / nt;
            for (int j = 1; j <= grid.n_phi; ++j) {
                const double ph = -0.5 * std::numbers::pi + two_pi * (j - 1) / (grid.n_phi - 1);
                Vec<3> n(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), std::sin(th));
                nodes.push_back(n.normalized());
            }
        }
    }
    return nodes;
}

template <int Dim>
StabilizerField<Dim> StabilizerField<Dim>::constant(double k)
{
    if (!(k >= 0.0) || !std::isfinite(k))
        throw Error(ErrorKind::ValidationError, "stabilizer constant must be finite and >= 0");
    StabilizerField f;
    f.m_constant = true;
    f.m_k = k;
    return f;
}

template <int Dim>
StabilizerField<Dim> StabilizerField<Dim>::table(const TableGrid& grid, std::vector<double> values,
                                                 double margin, std::string model_name)
{
    const std::size_t expected = table_nodes<Dim>(grid).size();
    if (values.size() != expected)
        throw Error(ErrorKind::ValidationError, "table value count does not match the grid");
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::ValidationError, "table values must be finite and >= 0");
    if (!(margin >= 0.0))
        throw Error(ErrorKind::ValidationError, "table margin must be >= 0");
    StabilizerField f;
    f.m_constant = false;
    f.m_grid = grid;
    f.m_values = std::move(values);
    f.m_margin = margin;
    f.m_model = std::move(model_name);
    return f;
}

template <int Dim>
double StabilizerField<Dim>::interpolate(const Vec<Dim>& n) const
{
    if (m_constant)
        return m_k;
    const int nt = m_grid.n_theta;
    const double dth = two_pi / nt;
    if constexpr (Dim == 2) {
        const double u = wrap_2pi(std::atan2(n[1], n[0])) / dth;
        const int i0 = std::min(static_cast<int>(std::floor(u)), nt - 1);
        const double w = u - i0;
        const double a = m_values[i0];
        const double b = m_values[(i0 + 1) % nt];
        return w == 0.0 ? a : (1.0 - w) * a + w * b;
    } else {
        const int np = m_grid.n_phi;
        const double dph = two_pi / (np - 1);
        const double th = wrap_2pi(std::asin(std::clamp(n[2] / n.norm(), -1.0, 1.0)));
        double ph = std::atan2(n[1], n[0]);
        if (ph < -0.5 * std::numbers::pi)
            ph += two_pi;
        const double u = th / dth;
        const int i0 = std::min(static_cast<int>(std::floor(u)), nt - 1);
        const double wu = u - i0;
        const double v = std::clamp((ph + 0.5 * std::numbers::pi) / dph, 0.0, double(np - 1));
        const int j0 = std::min(static_cast<int>(std::floor(v)), np - 2);
        const double wv = v - j0;
        // node i (numbered 1..nt, with nt equivalent to 0) is stored at row i - 1
        auto at = [&](int i, int j) { return m_values[((i - 1 + nt) % nt) * np + j]; };
        const double c00 = at(i0, j0), c01 = at(i0, j0 + 1);
        const double c10 = at(i0 + 1, j0), c11 = at(i0 + 1, j0 + 1);
        auto lerp = [](double a, double b, double w) { return w == 0.0 ? a : (1.0 - w) * a + w * b; };
        return lerp(lerp(c00, c01, wv), lerp(c10, c11, wv), wu);
    }
}

template <int Dim>
double StabilizerField<Dim>::operator()(const Vec<Dim>& n) const
{
    return m_constant ? m_k : interpolate(n) + m_margin;
}

template <int Dim>
double StabilizerField<Dim>::sup() const
{
    if (m_constant)
        return m_k;
    return *std::max_element(m_values.begin(), m_values.end()) + m_margin;
}

template <int Dim>
void StabilizerField<Dim>::write(std::ostream& os) const
{
    if (m_constant)
        throw Error(ErrorKind::ValidationError, "only tables are serialized");
    os << "K0TABLE d=" << Dim << " model=" << (m_model.empty() ? "unknown" : m_model) << '\n';
    os << std::setprecision(17);
    os << "grid n_theta=" << m_grid.n_theta << " n_phi=" << m_grid.n_phi << " margin=" << m_margin << '\n';
    const int row = Dim == 2 ? 1 : m_grid.n_phi;
    for (std::size_t i = 0; i < m_values.size(); ++i)
        os << m_values[i] << ((i + 1) % row == 0 ? '\n' : ' ');
}

template <int Dim>
StabilizerField<Dim> StabilizerField<Dim>::read(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("K0TABLE d=", 0) != 0)
        throw Error(ErrorKind::ParseError, "line 1: expected K0TABLE header");
    std::istringstream head(line.substr(10));
    int d = 0;
    head >> d;
    if (d != Dim)
        throw Error(ErrorKind::ParseError, "line 1: table dimension does not match");
    std::string model;
    const auto pos = line.find("model=");
    if (pos != std::string::npos)
        model = line.substr(pos + 6);

    if (!std::getline(is, line))
        throw Error(ErrorKind::ParseError, "line 2: missing grid line");
    TableGrid grid;
    double margin = 0.0;
    if (std::sscanf(line.c_str(), "grid n_theta=%d n_phi=%d margin=%lf", &grid.n_theta, &grid.n_phi,
                    &margin) != 3)
        throw Error(ErrorKind::ParseError, "line 2: malformed grid line");
    const std::size_t count = table_nodes<Dim>(grid).size();
    std::vector<double> values;
    values.reserve(count);
    double v;
    while (values.size() < count && is >> v)
        values.push_back(v);
    if (values.size() != count)
        throw Error(ErrorKind::ParseError, "table has fewer values than the grid requires");
    return table(grid, std::move(values), margin, model);
}

template <int Dim>
void StabilizerField<Dim>::save(const std::string& path) const
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::IoError, "cannot write " + path);
    write(os);
}

template <int Dim>
StabilizerField<Dim> StabilizerField<Dim>::load(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::IoError, "cannot read " + path);
    return read(is);
}

template <int Dim>
StabilizerField<Dim> build_table(const AnisotropyModel<Dim>& model, const TableGrid& grid,
                                 const K0Options& opts, int threads)
{
    const std::vector<Vec<Dim>> nodes = table_nodes<Dim>(grid);

    std::map<std::array<long long, Dim>, int> seen;
    std::vector<int> unique_of(nodes.size());
    std::vector<int> unique_nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::array<long long, Dim> key;
        for (int c = 0; c < Dim; ++c)
            key[c] = std::llround(nodes[i][c] * 1e9);
        const auto [it, inserted] = seen.emplace(key, static_cast<int>(unique_nodes.size()));
        if (inserted)
            unique_nodes.push_back(static_cast<int>(i));
        unique_of[i] = it->second;
    }

    std::vector<double> k0(unique_nodes.size(), 0.0);
    std::vector<std::exception_ptr> errors(unique_nodes.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < unique_nodes.size(); u = next++) {
            try {
                k0[u] = k0_estimate<Dim>(model, nodes[unique_nodes[u]], opts);
            } catch (...) {
                errors[u] = std::current_exception();
            }
        }
    };
    const int nthreads = std::max(1, threads);
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        values[i] = k0[unique_of[i]];
    return StabilizerField<Dim>::table(grid, std::move(values), opts.alpha_tol, model.name());
}

template TableGrid default_grid<2>();
template TableGrid default_grid<3>();
template std::vector<Vec<2>> table_nodes<2>(const TableGrid&);
template std::vector<Vec<3>> table_nodes<3>(const TableGrid&);
template class StabilizerField<2>;
template class StabilizerField<3>;
template StabilizerField<2> build_table<2>(const AnisotropyModel<2>&, const TableGrid&, const K0Options&, int);
template StabilizerField<3> build_table<3>(const AnisotropyModel<3>&, const TableGrid&, const K0Options&, int);

} // namespace sppfem
