#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace phaseless {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Signals are stored flattened; 2D signals are row-major (see Shape).
using Signal = CVector;

enum class Field { Real, Complex };

// Storage shape of a signal: `rows` x `cols`, 1D signals have cols == 1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 1;

    std::size_t size() const { return rows * cols; }
    bool is_2d() const { return cols > 1; }
    bool operator==(const Shape&) const = default;
};

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    RankDeficient,
    Numeric,
    Io,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

} // namespace phaseless
