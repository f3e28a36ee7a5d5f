#pragma once

#include <string>
#include <vector>

namespace sginfer::csv {

// 17 significant digits, '.' decimal point, locale-independent.
std::string format_double(double v);

void append_row(std::string& out, const double* vals, std::size_t n);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Parses a numeric CSV with one header row. Throws usage_error on ragged
// rows or unparseable fields.
Table read_table(const std::string& path);

void write_file(const std::string& path, const std::string& contents);

}  // namespace sginfer::csv
