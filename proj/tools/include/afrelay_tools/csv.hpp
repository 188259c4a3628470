#pragma once

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace afr::tools {

// A table with `# key: value` metadata lines above the header row.
struct CsvDocument {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
    // Appends a row; throws if its width differs from the header.
    void add_row(std::vector<std::string> row);
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    const std::string& text(std::size_t row, const std::string& name) const;
};

// Shortest round-tripping decimal form; "nan" for NaN.
std::string fmt(double v);
std::string fmt(long long v);
inline std::string fmt(int v) { return fmt(static_cast<long long>(v)); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

void write_csv(std::ostream& out, const CsvDocument& doc);
std::string to_string(const CsvDocument& doc);
// Body only (header row and data rows), for reproducibility comparisons.
std::string body_string(const CsvDocument& doc);

CsvDocument parse_csv(const std::string& text);
CsvDocument read_csv(const std::string& path);

}  // namespace afr::tools
