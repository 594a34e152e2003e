#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sscap {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1, scalars 1x1.
struct Array2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Array2() = default;
    Array2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Array2: negative shape");
    }
    Array2(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != static_cast<size_t>(r) * static_cast<size_t>(c))
            throw std::invalid_argument("Array2: data length does not match shape");
    }

    size_t size() const { return data.size(); }
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    // Value of a 1x1 array.
    double scalar() const {
        if (rows != 1 || cols != 1)
            throw std::logic_error("Array2::scalar: array is " + shape_str() + ", not 1x1");
        return data[0];
    }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Array2& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const {
        return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_same_shape(const Array2& a, const Array2& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

}  // namespace sscap
