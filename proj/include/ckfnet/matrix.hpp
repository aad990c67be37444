#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace ckfnet {

/**
 * @brief Dense row-major matrix of 64-bit reals.
 *
 * Constructors that accept entries reject NaN/Inf; everything downstream
 * (filters, training) relies on values staying finite.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    Matrix transpose() const;
    double trace() const;
    double max_abs() const;
    bool is_symmetric(double tol) const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense vector of 64-bit reals; entry-taking constructors reject NaN/Inf.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim);  // zero-filled
    Vector(std::size_t dim, std::vector<double> entries);
    Vector(std::initializer_list<double> entries);

    std::size_t dim() const { return data_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double dot(const Vector& other) const;
    double norm() const;
    double max_abs() const;
    bool all_finite() const;
    void fill(double v);

    Vector& operator+=(const Vector& other);
    Vector& operator-=(const Vector& other);
    Vector& operator*=(double s);

    friend Vector operator+(Vector a, const Vector& b) { return a += b; }
    friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
    friend Vector operator*(Vector a, double s) { return a *= s; }
    friend Vector operator*(double s, Vector a) { return a *= s; }

private:
    std::vector<double> data_;
};

Vector operator*(const Matrix& a, const Vector& x);

/// a x xᵀ added into m (rank-1 accumulate).
void add_outer(Matrix& m, double a, const Vector& x);

/// y += s * (A x); A row-major.
void matvec_accum(const Matrix& a, const Vector& x, double s, Vector& y);

/// y += s * (Aᵀ x).
void matvec_transpose_accum(const Matrix& a, const Vector& x, double s, Vector& y);

/**
 * @brief Lower-triangular Cholesky-style factor with strictly positive diagonal.
 *
 * lower() * lower()ᵀ is symmetric positive definite by construction.
 */
class SpdFactor {
public:
    explicit SpdFactor(Matrix lower);

    std::size_t dim() const { return lower_.rows(); }
    const Matrix& lower() const { return lower_; }

    /// lower() * lower()ᵀ.
    Matrix product() const;

private:
    Matrix lower_;
};

}  // namespace ckfnet
