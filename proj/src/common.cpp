#include "common.hpp"

#include <fmt/format.h>

#include <cmath>

namespace ibnet {

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage:
            return ErrorCategory::usage;
        case ErrorCode::divergence:
        case ErrorCode::convergence:
        case ErrorCode::separation:
            return ErrorCategory::numerical;
        case ErrorCode::io:
            return ErrorCategory::io;
        default:
            return ErrorCategory::data;
    }
}

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage: return "usage error";
        case ErrorCode::schema: return "schema error";
        case ErrorCode::integrity: return "integrity error";
        case ErrorCode::parse: return "parse error";
        case ErrorCode::infeasible: return "infeasibility error";
        case ErrorCode::dimension: return "dimension error";
        case ErrorCode::domain: return "domain error";
        case ErrorCode::lookup: return "lookup error";
        case ErrorCode::arity: return "arity error";
        case ErrorCode::size: return "size error";
        case ErrorCode::class_empty: return "class error";
        case ErrorCode::divergence: return "divergence error";
        case ErrorCode::convergence: return "convergence error";
        case ErrorCode::separation: return "separation error";
        case ErrorCode::io: return "I/O error";
    }
    return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

std::string format_double(double value) {
    if (value == 0.0) return "0";  // folds -0 into 0
    if (std::isnan(value)) return "nan";
    return fmt::format("{}", value);
}

}  // namespace ibnet
