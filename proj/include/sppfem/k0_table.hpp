#pragma once

#include "sppfem/stabilizer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sppfem {

/// Node layout of a k0 table.
/// Dim = 2: n_theta nodes n = (cos t, sin t), t = 2 pi i / n_theta.
/// Dim = 3: n = (cos th cos ph, cos th sin ph, sin th) with th_i = 2 pi i / n_theta (i = 1..n_theta,
/// periodic) and ph_j = -pi/2 + 2 pi (j - 1) / (n_phi - 1) (j = 1..n_phi).
struct TableGrid {
    int n_theta = 20;
    int n_phi = 21;
};

template <int Dim>
TableGrid default_grid();

template <int Dim>
std::vector<Vec<Dim>> table_nodes(const TableGrid& grid);

/// Stabilizing function k(n): a constant or an interpolated table of k0 plus a safety margin.
template <int Dim>
class StabilizerField {
public:
    static StabilizerField constant(double k);
    static StabilizerField table(const TableGrid& grid, std::vector<double> values, double margin,
                                 std::string model_name = {});

    bool is_constant() const { return m_constant; }
    const TableGrid& grid() const { return m_grid; }
    const std::vector<double>& values() const { return m_values; }
    double margin() const { return m_margin; }
    const std::string& model_name() const { return m_model; }

    /// Raw interpolated table value without the margin (the constant for constant fields).
    double interpolate(const Vec<Dim>& n) const;

    /// k(n) used by the scheme.
    double operator()(const Vec<Dim>& n) const;

    /// Largest value of k over the table nodes, margin included.
    double sup() const;

    /// Constant field at sup(), the "k = sup k0" variant.
    StabilizerField sup_field() const { return constant(sup()); }

    void write(std::ostream& os) const;
    static StabilizerField read(std::istream& is);
    void save(const std::string& path) const;
    static StabilizerField load(const std::string& path);

private:
    bool m_constant = true;
    double m_k = 0.0;
    TableGrid m_grid;
    std::vector<double> m_values;
    double m_margin = 0.0;
    std::string m_model;
};

/// k0 at every table node (deduplicated for nodes describing the same normal), in parallel.
template <int Dim>
StabilizerField<Dim> build_table(const AnisotropyModel<Dim>& model, const TableGrid& grid,
                                 const K0Options& opts = {}, int threads = 1);

} // namespace sppfem
