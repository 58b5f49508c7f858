#pragma once

#include "common.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ibnet {

/// Bilateral interbank loans: w(i, j) is the amount bank i lent to bank j.
struct ExposureMatrix {
    std::vector<std::string> bank_ids;
    Matrix w;

    Index n() const { return w.rows(); }
};

struct RasReport {
    int iterations = 0;
    double max_marginal_error = 0.0;
    bool converged = false;
};

struct RasOptions {
    double tolerance = 1e-8;
    int max_iter = 10000;
    // Called after every half step; `step` counts row and column rescales from 1.
    std::function<void(int step, const Matrix&)> observer;
};

struct MarginalErrors {
    std::vector<double> rows;
    std::vector<double> cols;

    double max() const;
};

/// Iterative proportional fitting from the uniform off-diagonal seed. Rows are
/// rescaled to the interbank assets first, then columns to the liabilities.
std::pair<ExposureMatrix, RasReport> reconstruct(std::span<const double> ia, std::span<const double> il,
                                                 const RasOptions& options = {});

MarginalErrors marginal_errors(const Matrix& w, std::span<const double> ia, std::span<const double> il);

// Binary dump: magic "IBNW0001", u64 n, then n*n little-endian doubles row-major.
void write_matrix_dump(const std::filesystem::path& path, const ExposureMatrix& m);
ExposureMatrix read_matrix_dump(const std::filesystem::path& path);

}  // namespace ibnet
