#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ibnet::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    std::optional<std::size_t> column(std::string_view name) const;
    // Throws a schema error naming the column when absent.
    std::size_t require_column(std::string_view name) const;
};

// Minimal RFC 4180 reader: comma separated, optional double quotes, header row.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);
std::string join_line(const std::vector<std::string>& fields);

// Parses a finite double; throws a parse error citing the line number and column.
double parse_number(std::string_view text, std::size_t line, std::string_view column);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace ibnet::csv
