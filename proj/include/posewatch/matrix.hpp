#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace posewatch {

// Dense row-major matrix of doubles. The whole model runs on these; kernels
// below are written so the inner loops stay unit-stride and vectorize.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    // Resize without preserving contents. Keeps capacity, so reusing a
    // matrix across iterations does not reallocate.
    void reshape(int r, int c) {
        rows = r;
        cols = c;
        data.resize(static_cast<std::size_t>(r) * static_cast<std::size_t>(c));
    }
};

// out = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
// out += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);
// out += a^T * b  (a is k x m, b is k x n, out is m x n)
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T  (a is m x k, b is n x k, out is m x n)
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
// out += a * b^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);

// out = a + b, shapes must match
void add(const Matrix& a, const Matrix& b, Matrix& out);
// a += b
void add_inplace(Matrix& a, const Matrix& b);
// Adds the 1 x cols bias row to every row of m.
void add_row_vector(Matrix& m, const Matrix& bias);
// bias_grad (1 x cols) += column sums of m
void add_col_sums(const Matrix& m, Matrix& bias_grad);

double dot(const double* a, const double* b, int n);
void axpy(double alpha, const double* x, double* y, int n);

}  // namespace posewatch
