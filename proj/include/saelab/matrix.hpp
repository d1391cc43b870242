#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace saelab {

// Dense row-major matrix of doubles. Rows are samples throughout the library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix from_rows(const std::vector<std::vector<double>>& src) {
        if (src.empty()) return Matrix();
        Matrix m(src.size(), src[0].size());
        for (std::size_t r = 0; r < src.size(); ++r) {
            if (src[r].size() != m.cols) throw std::invalid_argument("ragged row data");
            for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = src[r][c];
        }
        return m;
    }

    // Copies a contiguous row range [begin, end).
    Matrix slice_rows(std::size_t begin, std::size_t end) const {
        if (begin > end || end > rows) throw std::out_of_range("slice_rows out of range");
        Matrix m(end - begin, cols);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                  data.begin() + static_cast<std::ptrdiff_t>(end * cols), m.data.begin());
        return m;
    }
};

}  // namespace saelab
