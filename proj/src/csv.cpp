#include "cornsoy/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cornsoy::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

std::size_t Table::require(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == column) return i;
    throw SchemaMismatch(path, column, "required column is missing");
}

bool Table::has_column(const std::string& column) const {
    for (const auto& c : columns)
        if (c == column) return true;
    return false;
}

double Table::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows[row][col];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError(path, static_cast<long>(row) + 2, static_cast<long>(col) + 1,
                         "expected a number, got '" + cell + "'");
    return value;
}

long Table::integer(std::size_t row, std::size_t col) const {
    const std::string& cell = rows[row][col];
    long value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError(path, static_cast<long>(row) + 2, static_cast<long>(col) + 1,
                         "expected an integer, got '" + cell + "'");
    return value;
}

const std::string& Table::text(std::size_t row, std::size_t col) const {
    return rows[row][col];
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());

    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    if (content.empty())
        throw ParseError(path.string(), 1, 1, "empty file");
    if (content.back() != '\n')
        throw ParseError(path.string(),
                         static_cast<long>(1 + std::count(content.begin(), content.end(), '\n')),
                         1, "truncated final line (missing newline)");

    Table table;
    table.path = path.string();

    std::istringstream stream(content);
    std::string line;
    long line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto cells = split_line(line);
        if (line_no == 1) {
            table.columns = cells;
            for (std::size_t i = 0; i < cells.size(); ++i)
                for (std::size_t j = i + 1; j < cells.size(); ++j)
                    if (cells[i] == cells[j])
                        throw SchemaMismatch(table.path, cells[i], "duplicate column");
            continue;
        }
        if (cells.size() != table.columns.size())
            throw ParseError(table.path, line_no, static_cast<long>(cells.size()),
                             "expected " + std::to_string(table.columns.size()) +
                                 " fields, got " + std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Writer::Writer(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Writer::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size())
        throw Error("row width does not match header");
    rows_.push_back(std::move(cells));
}

std::string Writer::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out.push_back(',');
        out += columns_[i];
    }
    out.push_back('\n');
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += row[i];
        }
        out.push_back('\n');
    }
    return out;
}

void Writer::commit(const std::filesystem::path& path) const {
    write_file_atomic(path, to_string());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace cornsoy::csv
