#pragma once

#include <cstddef>
#include <vector>

namespace excon {

// Dense row-major matrix of doubles. Just enough linear algebra for this
// project; everything heavier is written out where it is used.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// y += M x  (y: rows, x: cols)
inline void matvec_acc(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.row_ptr(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// m += a * outer(u, v)  (u: rows, v: cols)
inline void outer_acc(Matrix& m, const double* u, const double* v, double a = 1.0) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* row = m.row_ptr(r);
        const double ur = a * u[r];
        for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ur * v[c];
    }
}

// y += M^T x  (x: rows, y: cols)
inline void matvec_transpose_acc(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.row_ptr(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < m.cols(); ++c) y[c] += xr * row[c];
    }
}

}  // namespace excon
