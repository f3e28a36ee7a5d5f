#include "sginfer/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sginfer/errors.hpp"

namespace sginfer::csv {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void append_row(std::string& out, const double* vals, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(',');
        out += format_double(vals[i]);
    }
    out.push_back('\n');
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open CSV file: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw usage_error("empty CSV file: " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t ncols = t.header.size();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(ncols);
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            const char* comma = p;
            while (comma < end && *comma != ',') ++comma;
            double v;
            auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc{} || res.ptr != comma) {
                throw usage_error(path + ":" + std::to_string(lineno) + ": bad numeric field");
            }
            row.push_back(v);
            if (comma == end) break;
            p = comma + 1;
        }
        if (row.size() != ncols) {
            throw usage_error(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(ncols) + " fields, got " + std::to_string(row.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw usage_error("cannot open for writing: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw usage_error("write failed: " + path);
}

}  // namespace sginfer::csv
