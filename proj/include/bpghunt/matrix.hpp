#pragma once

#include <cstddef>
#include <vector>

namespace bpghunt {

/// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

}  // namespace bpghunt
