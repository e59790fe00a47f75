#include "posewatch/matrix.hpp"

#include <stdexcept>

namespace posewatch {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.rows);
    out.reshape(a.rows, b.cols);
    out.zero();
    matmul_acc(a, b, out);
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = out.row(i);
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b.row(kk);
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
    const int k = a.rows, m = a.cols, n = b.cols;
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a.row(kk);
        const double* brow = b.row(kk);
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = out.row(i);
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.cols);
    out.reshape(a.rows, b.rows);
    const int m = a.rows, n = b.rows, k = a.cols;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = out.row(i);
        for (int j = 0; j < n; ++j) crow[j] = dot(arow, b.row(j), k);
    }
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
    const int m = a.rows, n = b.rows, k = a.cols;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* crow = out.row(i);
        for (int j = 0; j < n; ++j) crow[j] += dot(arow, b.row(j), k);
    }
}

void add(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.same_shape(b));
    out.reshape(a.rows, a.cols);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
}

void add_inplace(Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

void add_row_vector(Matrix& m, const Matrix& bias) {
    assert(bias.rows == 1 && bias.cols == m.cols);
    for (int i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        const double* b = bias.row(0);
        for (int j = 0; j < m.cols; ++j) row[j] += b[j];
    }
}

void add_col_sums(const Matrix& m, Matrix& bias_grad) {
    assert(bias_grad.rows == 1 && bias_grad.cols == m.cols);
    double* g = bias_grad.row(0);
    for (int i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (int j = 0; j < m.cols; ++j) g[j] += row[j];
    }
}

double dot(const double* a, const double* b, int n) {
    // Independent accumulator chains so the loop vectorizes without
    // reassociation flags.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace posewatch
