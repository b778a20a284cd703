#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sppfem {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Ordered corner positions of one (d-1)-simplex; the order carries orientation.
template <int Dim>
using Simplex = std::array<Vec<Dim>, std::size_t(Dim)>;

enum class ErrorKind {
    DegenerateSimplex,
    NonUnitInput,
    NonSmoothPoint,
    UnstableAnisotropy,
    NoFeasibleAlpha,
    SingularMatrix,
    NoConvergence,
    MeshCollapse,
    InvalidShape,
    InvalidMesh,
    OutOfRange,
    ParseError,
    ValidationError,
    IoError,
};

const char* to_string(ErrorKind kind);

/// True for failures of the numerics (exit code 1), false for usage/config problems.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , m_kind(kind)
    {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

/// Failure raised while advancing the flow; carries the step index and time.
class StepError : public Error {
public:
    StepError(ErrorKind kind, const std::string& what, std::int64_t step, double time)
        : Error(kind, what)
        , m_step(step)
        , m_time(time)
    {}

    std::int64_t step() const noexcept { return m_step; }
    double time() const noexcept { return m_time; }

private:
    std::int64_t m_step;
    double m_time;
};

} // namespace sppfem
