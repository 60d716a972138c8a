#pragma once

#include <span>
#include <vector>

namespace gexpect {

/// Small dense matrix, row-major. Dimensions in this library are tiny
/// (d = 1 or 2 in practice), so everything is plain loops.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n);
    static Matrix scalar1x1(double v);

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    Matrix transposed() const;
    Matrix operator*(const Matrix& other) const;
    Matrix operator+(const Matrix& other) const;
    Matrix operator-(const Matrix& other) const;
    Matrix scaled(double s) const;

    const std::vector<double>& data() const { return data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// tr[a*b]
double trace_product(const Matrix& a, const Matrix& b);

double trace(const Matrix& a);

/// <A x, x>
double quadratic_form(const Matrix& a, std::span<const double> x);

bool is_symmetric(const Matrix& a, double tol);

/// outer product c c^T
Matrix outer(std::span<const double> c);

/// Eigenvalues (ascending) of a symmetric matrix via cyclic Jacobi rotations.
/// If `vectors` is non-null it receives the orthonormal eigenvectors as columns.
std::vector<double> jacobi_eigen_sym(const Matrix& a, Matrix* vectors = nullptr);

double largest_eigenvalue_sym(const Matrix& a);

/// Principal (symmetric PSD) square root. Small negative eigenvalues within
/// `tol` are clamped to zero; below that the input is rejected.
Matrix sym_sqrt(const Matrix& psd, double tol = 1e-10);

}  // namespace gexpect
