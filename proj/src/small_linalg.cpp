#include "gexpect/small_linalg.hpp"

#include <algorithm>
#include <cmath>

#include "gexpect/errors.hpp"

namespace gexpect {

Matrix Matrix::identity(int n) {
    Matrix m(n, n, 0.0);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::scalar1x1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::operator*(const Matrix& other) const {
    if (cols_ != other.rows_) throw_validation("matrix product dimension mismatch");
    Matrix r(rows_, other.cols_, 0.0);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            double a = (*this)(i, k);
            for (int j = 0; j < other.cols_; ++j) r(i, j) += a * other(k, j);
        }
    return r;
}

Matrix Matrix::operator+(const Matrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw_validation("matrix sum dimension mismatch");
    Matrix r = *this;
    for (size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += other.data_[i];
    return r;
}

Matrix Matrix::operator-(const Matrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw_validation("matrix difference dimension mismatch");
    Matrix r = *this;
    for (size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= other.data_[i];
    return r;
}

Matrix Matrix::scaled(double s) const {
    Matrix r = *this;
    for (double& v : r.data_) v *= s;
    return r;
}

double trace_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows() || a.rows() != b.cols())
        throw_validation("trace_product dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, i);
    return s;
}

double trace(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
    return s;
}

double quadratic_form(const Matrix& a, std::span<const double> x) {
    if (a.rows() != static_cast<int>(x.size()) || a.cols() != static_cast<int>(x.size()))
        throw_validation("quadratic_form dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < a.cols(); ++j) row += a(i, j) * x[j];
        s += row * x[i];
    }
    return s;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

Matrix outer(std::span<const double> c) {
    int n = static_cast<int>(c.size());
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = c[i] * c[j];
    return m;
}

std::vector<double> jacobi_eigen_sym(const Matrix& a, Matrix* vectors) {
    if (a.rows() != a.cols()) throw_validation("jacobi_eigen_sym: matrix not square");
    int n = a.rows();
    Matrix m = a;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-30) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m(p, q)) < 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return m(i, i) < m(j, j); });

    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = m(order[i], order[i]);
    if (vectors) {
        *vectors = Matrix(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) (*vectors)(i, j) = v(i, order[j]);
    }
    return eig;
}

double largest_eigenvalue_sym(const Matrix& a) {
    if (a.rows() == 1) return a(0, 0);
    return jacobi_eigen_sym(a).back();
}

Matrix sym_sqrt(const Matrix& psd, double tol) {
    if (psd.rows() == 1) {
        double v = psd(0, 0);
        if (v < -tol) throw_validation("sym_sqrt: matrix is not PSD");
        return Matrix::scalar1x1(std::sqrt(std::max(0.0, v)));
    }
    Matrix vec;
    std::vector<double> eig = jacobi_eigen_sym(psd, &vec);
    int n = psd.rows();
    Matrix r(n, n, 0.0);
    for (int k = 0; k < n; ++k) {
        if (eig[k] < -tol) throw_validation("sym_sqrt: matrix is not PSD");
        double s = std::sqrt(std::max(0.0, eig[k]));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(i, j) += s * vec(i, k) * vec(j, k);
    }
    return r;
}

}  // namespace gexpect
