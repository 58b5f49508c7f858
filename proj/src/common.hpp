#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibnet {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Fine-grained failure reasons. Each maps onto one of the coarse categories
// the command line reports as an exit status.
enum class ErrorCode {
    usage,
    schema,
    integrity,
    parse,
    infeasible,
    dimension,
    domain,
    lookup,
    arity,
    size,
    class_empty,
    divergence,
    convergence,
    separation,
    io,
};

enum class ErrorCategory { usage = 2, data = 3, numerical = 4, io = 5 };

ErrorCategory category_of(ErrorCode code);
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

// Shortest round-trip decimal form, used for every number written to disk so
// repeated runs produce identical bytes.
std::string format_double(double value);

}  // namespace ibnet
