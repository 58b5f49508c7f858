#include "network_reconstruction.hpp"

#include "csv.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ibnet {

namespace {

constexpr double kMarginalEps = 1e-12;
constexpr char kMagic[8] = {'I', 'B', 'N', 'W', '0', '0', '0', '1'};

double relative_error(double actual, double target) {
    return std::abs(actual - target) / std::max(target, kMarginalEps);
}

// Fixed left-to-right reductions keep results independent of any later
// parallelisation over lines.
void rescale_rows(Matrix& w, std::span<const double> ia) {
    const Index n = w.rows();
    for (Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (Index j = 0; j < n; ++j) sum += w(i, j);
        const double scale = sum > 0.0 ? ia[i] / sum : 0.0;
        for (Index j = 0; j < n; ++j) w(i, j) *= scale;
    }
}

void rescale_cols(Matrix& w, std::span<const double> il) {
    const Index n = w.rows();
    std::vector<double> sums(n, 0.0);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) sums[j] += w(i, j);
    std::vector<double> scale(n);
    for (Index j = 0; j < n; ++j) scale[j] = sums[j] > 0.0 ? il[j] / sums[j] : 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) w(i, j) *= scale[j];
}

void check_inputs(std::span<const double> ia, std::span<const double> il) {
    if (ia.size() != il.size()) {
        throw Error(ErrorCode::dimension, "interbank assets have " + std::to_string(ia.size()) +
                                              " entries, liabilities " + std::to_string(il.size()));
    }
    const std::size_t n = ia.size();
    if (n < 2) throw Error(ErrorCode::dimension, "reconstruction needs at least 2 banks");
    double sum_ia = 0.0;
    double sum_il = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(ia[i] >= 0.0) || !(il[i] >= 0.0) || !std::isfinite(ia[i]) || !std::isfinite(il[i]))
            throw Error(ErrorCode::domain, "marginals must be finite and non-negative (bank index " +
                                               std::to_string(i) + ")");
        sum_ia += ia[i];
        sum_il += il[i];
    }
    if (std::abs(sum_ia - sum_il) > 1e-9 * std::max(sum_ia, sum_il)) {
        throw Error(ErrorCode::infeasible, "interbank system is not closed (assets " + format_double(sum_ia) +
                                               ", liabilities " + format_double(sum_il) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (ia[i] > 0.0 && sum_il - il[i] <= 0.0)
            throw Error(ErrorCode::infeasible, "bank index " + std::to_string(i) +
                                                   " lends but no other bank borrows");
        if (il[i] > 0.0 && sum_ia - ia[i] <= 0.0)
            throw Error(ErrorCode::infeasible, "bank index " + std::to_string(i) +
                                                   " borrows but no other bank lends");
    }
}

}  // namespace

double MarginalErrors::max() const {
    double m = 0.0;
    for (double e : rows) m = std::max(m, e);
    for (double e : cols) m = std::max(m, e);
    return m;
}

MarginalErrors marginal_errors(const Matrix& w, std::span<const double> ia, std::span<const double> il) {
    const Index n = w.rows();
    if (w.cols() != n || static_cast<Index>(ia.size()) != n || static_cast<Index>(il.size()) != n)
        throw Error(ErrorCode::dimension, "matrix and marginal sizes disagree");
    MarginalErrors out;
    out.rows.resize(n);
    out.cols.resize(n);
    std::vector<double> col_sums(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Index j = 0; j < n; ++j) {
            row += w(i, j);
            col_sums[j] += w(i, j);
        }
        out.rows[i] = relative_error(row, ia[i]);
    }
    for (Index j = 0; j < n; ++j) out.cols[j] = relative_error(col_sums[j], il[j]);
    return out;
}

std::pair<ExposureMatrix, RasReport> reconstruct(std::span<const double> ia, std::span<const double> il,
                                                 const RasOptions& options) {
    check_inputs(ia, il);
    const Index n = static_cast<Index>(ia.size());

    ExposureMatrix result;
    result.w = Matrix::Ones(n, n);
    result.w.diagonal().setZero();

    RasReport report;
    int step = 0;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        rescale_rows(result.w, ia);
        if (options.observer) options.observer(++step, result.w);
        rescale_cols(result.w, il);
        if (options.observer) options.observer(++step, result.w);

        report.iterations = iter;
        report.max_marginal_error = marginal_errors(result.w, ia, il).max();
        if (report.max_marginal_error <= options.tolerance) {
            report.converged = true;
            break;
        }
    }
    return {std::move(result), report};
}

void write_matrix_dump(const std::filesystem::path& path, const ExposureMatrix& m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");

    auto put_u64 = [&](std::uint64_t v) {
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
        out.write(bytes, 8);
    };
    out.write(kMagic, 8);
    put_u64(static_cast<std::uint64_t>(m.n()));
    for (Index i = 0; i < m.n(); ++i)
        for (Index j = 0; j < m.n(); ++j) put_u64(std::bit_cast<std::uint64_t>(m.w(i, j)));
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");

    std::string ids = "bank_id\n";
    for (const auto& id : m.bank_ids) ids += csv::join_line({id}) + "\n";
    csv::write_file(path.string() + ".ids.csv", ids);
}

ExposureMatrix read_matrix_dump(const std::filesystem::path& path) {
    const std::string bytes = csv::read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw Error(ErrorCode::parse, "'" + path.string() + "' is not an exposure matrix dump");
    auto get_u64 = [&](std::size_t offset) {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
        return v;
    };
    const std::uint64_t n = get_u64(8);
    if (bytes.size() != 16 + n * n * 8)
        throw Error(ErrorCode::parse, "'" + path.string() + "' has a truncated payload");
    ExposureMatrix m;
    m.w.resize(static_cast<Index>(n), static_cast<Index>(n));
    std::size_t offset = 16;
    for (Index i = 0; i < m.n(); ++i)
        for (Index j = 0; j < m.n(); ++j, offset += 8) m.w(i, j) = std::bit_cast<double>(get_u64(offset));

    const auto ids_path = path.string() + ".ids.csv";
    if (std::filesystem::exists(ids_path)) {
        const auto table = csv::read(ids_path);
        const auto col = table.require_column("bank_id");
        for (const auto& row : table.rows) m.bank_ids.push_back(row.at(col));
    }
    return m;
}

}  // namespace ibnet
