#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dae {

// Minimal comma-separated tables. Fields never contain commas, quotes or
// newlines in any file this project writes, so no quoting is supported.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws DataError when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string join_csv(const std::vector<std::string>& fields);
/// Parses a double; `line` is only used for the error message.
double parse_double(const std::string& field, std::size_t line);
/// Shortest round-trippable text for a double ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double value);

}  // namespace dae
