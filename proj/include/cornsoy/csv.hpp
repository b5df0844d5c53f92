#pragma once

// Minimal delimited-text tables: comma separated, one header row, one record
// per line, decimal point, no quoting or locale formatting. All numeric output
// is rendered with 17 significant digits so doubles round-trip exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "cornsoy/errors.hpp"

namespace cornsoy::csv {

struct Table {
    std::string path;  // where it was read from, for error messages
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// Index of a required column; throws SchemaMismatch if absent.
    std::size_t require(const std::string& column) const;
    bool has_column(const std::string& column) const;

    double number(std::size_t row, std::size_t col) const;
    long integer(std::size_t row, std::size_t col) const;
    const std::string& text(std::size_t row, std::size_t col) const;
};

/// Reads a whole table. Throws ParseError on structural problems (ragged rows,
/// truncated final line, empty file) and SchemaMismatch on duplicate columns.
Table read_table(const std::filesystem::path& path);

/// Renders a double with 17 significant digits (exact round trip).
std::string format_double(double v);

/// Writer that accumulates rows and commits atomically (temp file + rename).
class Writer {
public:
    explicit Writer(std::vector<std::string> columns);
    void add_row(std::vector<std::string> cells);
    /// Writes to `path` via a temporary sibling, then renames into place.
    void commit(const std::filesystem::path& path) const;
    std::string to_string() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Atomically writes `content` to `path` (temp file in the same directory,
/// then rename). Either the complete file appears or nothing does.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit content hash, hex encoded; used for run manifests.
std::string content_hash(const std::filesystem::path& path);

}  // namespace cornsoy::csv
