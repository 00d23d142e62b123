#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ddfc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using MatrixRef = Eigen::Ref<Matrix>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;
using Index = Eigen::Index;

/// Raised when a caller breaks a documented precondition (shape, length, range).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a forward or backward recursion produces a non-finite value.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Selects the serial reference loop or the OpenMP kernel for data-parallel work.
/// Both produce bitwise-identical results: random draws happen either before the
/// parallel loop or from a stream owned by the work item.
enum class Execution { serial, parallel };

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ContractViolation(message);
    }
}

std::string format_vector(ConstVectorRef v);

} // namespace ddfc
