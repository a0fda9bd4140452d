#ifndef CCE_TENSOR_HPP
#define CCE_TENSOR_HPP

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace cce {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All training math runs in 64-bit floats.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    std::span<double> row(std::size_t r) {
        assert(r < rows);
        return {data.data() + r * cols, cols};
    }
    std::span<const double> row(std::size_t r) const {
        assert(r < rows);
        return {data.data() + r * cols, cols};
    }

    bool empty() const { return data.empty(); }
    bool operator==(const Mat&) const = default;
};

// y = m * x
inline Vec matvec(const Mat& m, std::span<const double> x) {
    assert(x.size() == m.cols);
    Vec y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y += m * x
inline void matvec_add(const Mat& m, std::span<const double> x, std::span<double> y) {
    assert(x.size() == m.cols && y.size() == m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// y += m^T * x
inline void matTvec_add(const Mat& m, std::span<const double> x, std::span<double> y) {
    assert(x.size() == m.rows && y.size() == m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double xr = x[r];
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
    }
}

// m += a * b^T (outer product accumulation)
inline void add_outer(Mat& m, std::span<const double> a, std::span<const double> b) {
    assert(a.size() == m.rows && b.size() == m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.data.data() + r * m.cols;
        const double ar = a[r];
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
    }
}

} // namespace cce

#endif
