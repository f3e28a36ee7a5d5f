#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sginfer {

// One problem instance: n samples of p features plus responses, row-major.
struct Dataset {
    std::vector<double> x;  // n * p
    std::vector<double> y;  // n
    std::size_t n = 0;
    std::size_t p = 0;

    const double* row(std::size_t i) const { return x.data() + i * p; }
    double* row(std::size_t i) { return x.data() + i * p; }

    // Throws usage_error on size mismatch or non-finite entries.
    void validate() const;
};

// CSV schema: header `x1,...,xp,y`, 17 significant digits.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& path);

}  // namespace sginfer
