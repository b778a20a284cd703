#include "sppfem/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace sppfem {

namespace {

/// Reads whitespace-separated tokens while tracking line numbers and skipping '#' comments.
class TokenReader {
public:
    explicit TokenReader(std::istream& is)
        : m_is(is)
    {}

    std::string next(const char* what)
    {
        while (!(m_line >> m_token)) {
            std::string raw;
            if (!std::getline(m_is, raw)) {
                std::ostringstream os;
                os << "line " << m_lineno << ": unexpected end of file, expected " << what;
                throw Error(ErrorKind::ParseError, os.str());
            }
            ++m_lineno;
            if (const auto hash = raw.find('#'); hash != std::string::npos)
                raw.erase(hash);
            m_line.clear();
            m_line.str(raw);
        }
        return m_token;
    }

    template <class T>
    T number(const char* what)
    {
        const std::string tok = next(what);
        std::istringstream ss(tok);
        T value;
        if (!(ss >> value) || !ss.eof()) {
            std::ostringstream os;
            os << "line " << m_lineno << ": expected " << what << ", got '" << tok << "'";
            throw Error(ErrorKind::ParseError, os.str());
        }
        return value;
    }

private:
    std::istream& m_is;
    std::istringstream m_line;
    std::string m_token;
    int m_lineno = 0;
};

} // namespace

void write_off(std::ostream& os, const SimplexSurface<3>& surface)
{
    os << "OFF\n" << surface.num_vertices() << ' ' << surface.num_simplices() << " 0\n";
    os << std::setprecision(17);
    for (const auto& v : surface.vertices)
        os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& t : surface.simplices)
        os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

SimplexSurface<3> read_off(std::istream& is)
{
    TokenReader in(is);
    if (in.next("OFF header") != "OFF")
        throw Error(ErrorKind::ParseError, "line 1: expected OFF header");
    const int nv = in.number<int>("vertex count");
    const int nf = in.number<int>("face count");
    in.number<int>("edge count");
    if (nv <= 0 || nf <= 0)
        throw Error(ErrorKind::ParseError, "OFF counts must be positive");
    SimplexSurface<3> s;
    s.vertices.resize(nv);
    for (auto& v : s.vertices)
        for (int c = 0; c < 3; ++c)
            v[c] = in.number<double>("vertex coordinate");
    s.simplices.resize(nf);
    for (auto& t : s.simplices) {
        if (in.number<int>("face arity") != 3)
            throw Error(ErrorKind::ParseError, "only triangular faces are supported");
        for (int c = 0; c < 3; ++c)
            t[c] = in.number<int>("face vertex index");
    }
    return s;
}

void write_polyline(std::ostream& os, const SimplexSurface<2>& surface)
{
    std::vector<int> next(surface.num_vertices(), -1);
    for (const auto& t : surface.simplices)
        next[t[0]] = t[1];
    os << "POLYLINE2D " << surface.num_vertices() << '\n' << std::setprecision(17);
    int v = surface.simplices.empty() ? 0 : surface.simplices[0][0];
    for (int i = 0; i < surface.num_vertices(); ++i) {
        os << surface.vertices[v][0] << ' ' << surface.vertices[v][1] << '\n';
        v = next[v];
        if (v < 0)
            throw Error(ErrorKind::InvalidMesh, "polyline output requires a single closed loop");
    }
}

SimplexSurface<2> read_polyline(std::istream& is)
{
    TokenReader in(is);
    if (in.next("POLYLINE2D header") != "POLYLINE2D")
        throw Error(ErrorKind::ParseError, "line 1: expected POLYLINE2D header");
    const int n = in.number<int>("vertex count");
    if (n < 3)
        throw Error(ErrorKind::ParseError, "a closed polyline needs at least 3 vertices");
    SimplexSurface<2> s;
    s.vertices.resize(n);
    for (auto& v : s.vertices)
        for (int c = 0; c < 2; ++c)
            v[c] = in.number<double>("vertex coordinate");
    for (int i = 0; i < n; ++i)
        s.simplices.push_back({i, (i + 1) % n});
    return s;
}

template <int Dim>
void save_mesh(const std::string& path, const SimplexSurface<Dim>& surface)
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::IoError, "cannot write " + path);
    if constexpr (Dim == 2)
        write_polyline(os, surface);
    else
        write_off(os, surface);
}

template <int Dim>
SimplexSurface<Dim> load_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::IoError, "cannot read " + path);
    SimplexSurface<Dim> s;
    if constexpr (Dim == 2)
        s = read_polyline(is);
    else
        s = read_off(is);
    validate_surface(s);
    return s;
}

template <int Dim>
const char* mesh_extension()
{
    return Dim == 2 ? ".poly2d" : ".off";
}

template void save_mesh<2>(const std::string&, const SimplexSurface<2>&);
template void save_mesh<3>(const std::string&, const SimplexSurface<3>&);
template SimplexSurface<2> load_mesh<2>(const std::string&);
template SimplexSurface<3> load_mesh<3>(const std::string&);
template const char* mesh_extension<2>();
template const char* mesh_extension<3>();

} // namespace sppfem
