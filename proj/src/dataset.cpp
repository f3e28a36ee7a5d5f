#include "sginfer/dataset.hpp"

#include <cmath>

#include "sginfer/csv.hpp"
#include "sginfer/errors.hpp"

namespace sginfer {

void Dataset::validate() const {
    if (n < 1 || p < 1) throw usage_error("Dataset: n and p must be >= 1");
    if (x.size() != n * p) throw usage_error("Dataset: x size != n*p");
    if (y.size() != n) throw usage_error("Dataset: y size != n");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw usage_error("Dataset: non-finite x entry");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(y[i])) throw usage_error("Dataset: non-finite y entry");
    }
}

std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    out.reserve(data.n * (data.p + 1) * 20);
    for (std::size_t j = 0; j < data.p; ++j) {
        out += "x" + std::to_string(j + 1) + ",";
    }
    out += "y\n";
    std::vector<double> rowbuf(data.p + 1);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* r = data.row(i);
        for (std::size_t j = 0; j < data.p; ++j) rowbuf[j] = r[j];
        rowbuf[data.p] = data.y[i];
        csv::append_row(out, rowbuf.data(), rowbuf.size());
    }
    return out;
}

Dataset dataset_from_csv(const std::string& path) {
    csv::Table t = csv::read_table(path);
    if (t.header.size() < 2 || t.header.back() != "y") {
        throw usage_error("dataset CSV must have header x1,...,xp,y");
    }
    Dataset d;
    d.p = t.header.size() - 1;
    d.n = t.rows.size();
    d.x.reserve(d.n * d.p);
    d.y.reserve(d.n);
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < d.p; ++j) d.x.push_back(row[j]);
        d.y.push_back(row[d.p]);
    }
    d.validate();
    return d;
}

}  // namespace sginfer
