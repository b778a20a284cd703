#pragma once

#include "sppfem/mesh.hpp"

#include <iosfwd>
#include <string>

namespace sppfem {

/// OFF triangle meshes ("OFF", counts, vertex lines, "3 i j k" faces).
void write_off(std::ostream& os, const SimplexSurface<3>& surface);
SimplexSurface<3> read_off(std::istream& is);

/// "POLYLINE2D N" followed by N lines "x y"; segment i joins vertex i to i+1 mod N.
void write_polyline(std::ostream& os, const SimplexSurface<2>& surface);
SimplexSurface<2> read_polyline(std::istream& is);

/// File helpers; loaders run validate_surface before returning.
template <int Dim>
void save_mesh(const std::string& path, const SimplexSurface<Dim>& surface);

template <int Dim>
SimplexSurface<Dim> load_mesh(const std::string& path);

/// Extension used for mesh dumps: ".off" or ".poly2d".
template <int Dim>
const char* mesh_extension();

} // namespace sppfem
