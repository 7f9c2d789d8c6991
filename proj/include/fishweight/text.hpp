#ifndef FISHWEIGHT_TEXT_HPP
#define FISHWEIGHT_TEXT_HPP

// Small CSV and number-formatting helpers shared by the file formats.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fishweight/error.hpp"

namespace fishweight::text {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) { throw Error("cannot format number"); }
    return std::string(buf, end);
}

/// Parses a complete decimal field; surrounding blanks are tolerated.
inline bool parse_number(std::string_view s, double& out)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) { s.remove_suffix(1); }
    if (s.empty()) { return false; }
    if (s.front() == '+') { s.remove_prefix(1); }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

inline std::string quote_csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) { return s; }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') { out += '"'; }
        out += c;
    }
    return out + '"';
}

struct CsvTable {
    std::vector<std::string> header;
    /// Data rows with their 1-based line numbers in the file.
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

    /// Column index for `name`, or -1.
    int column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) { return static_cast<int>(i); }
        }
        return -1;
    }
};

/// Reads a CSV with a mandatory header row. LF and CRLF line endings are
/// accepted, a UTF-8 byte-order mark is skipped and blank lines are ignored.
inline CsvTable read_csv(std::istream& in)
{
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') { line.pop_back(); }
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) { line.erase(0, 3); }
        if (line.find_first_not_of(" \t") == std::string::npos) { continue; }
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            for (auto& f : fields) {
                auto b = f.find_first_not_of(" \t");
                auto e = f.find_last_not_of(" \t");
                f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
            }
            table.header = std::move(fields);
        } else {
            table.rows.emplace_back(lineno, std::move(fields));
        }
    }
    if (table.header.empty()) { throw ParseError("missing CSV header row"); }
    return table;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw Error("cannot open " + path.string()); }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `contents` to a sibling temporary file and renames it into place, so
/// readers never observe a partially written output.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) { throw Error("cannot write " + tmp.string()); }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) { throw Error("write failed for " + tmp.string()); }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

} // namespace fishweight::text

#endif // FISHWEIGHT_TEXT_HPP
