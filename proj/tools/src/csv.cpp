#include "afrelay_tools/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "afrelay/errors.hpp"

namespace afr::tools {

void CsvDocument::add_row(std::vector<std::string> row)
{
    if (row.size() != columns.size())
        throw Error("csv row has " + std::to_string(row.size()) + " fields, header has " +
                    std::to_string(columns.size()));
    for (const auto& f : row)
        if (f.find_first_of(",\n\r") != std::string::npos)
            throw Error("csv field contains a separator: '" + f + "'");
    rows.push_back(std::move(row));
}

std::size_t CsvDocument::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    throw Error("no csv column named '" + name + "'");
}

double CsvDocument::number(std::size_t row, const std::string& name) const
{
    const std::string& s = text(row, name);
    if (s == "nan")
        return std::nan("");
    return std::stod(s);
}

const std::string& CsvDocument::text(std::size_t row, const std::string& name) const
{
    return rows.at(row).at(column(name));
}

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt(long long v) { return std::to_string(v); }

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << ',';
        out << fields[i];
    }
    out << '\n';
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_csv(std::ostream& out, const CsvDocument& doc)
{
    for (const auto& [k, v] : doc.meta)
        out << "# " << k << ": " << v << '\n';
    out << body_string(doc);
}

std::string to_string(const CsvDocument& doc)
{
    std::ostringstream ss;
    write_csv(ss, doc);
    return ss.str();
}

std::string body_string(const CsvDocument& doc)
{
    std::ostringstream ss;
    write_line(ss, doc.columns);
    for (const auto& r : doc.rows)
        write_line(ss, r);
    return ss.str();
}

CsvDocument parse_csv(const std::string& text)
{
    CsvDocument doc;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (!header && line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ')
                body.erase(0, 1);
            const auto colon = body.find(": ");
            if (colon == std::string::npos)
                doc.add_meta(body, "");
            else
                doc.add_meta(body.substr(0, colon), body.substr(colon + 2));
            continue;
        }
        if (!header) {
            doc.columns = split(line);
            header = true;
            continue;
        }
        doc.add_row(split(line));
    }
    if (!header)
        throw Error("csv has no header row");
    return doc;
}

CsvDocument read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace afr::tools
