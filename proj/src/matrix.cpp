#include "ckfnet/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace ckfnet {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

bool finite_range(const double* p, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    require(rows > 0 && cols > 0, "Matrix: dimensions must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    require(rows > 0 && cols > 0, "Matrix: dimensions must be positive");
    require(data_.size() == rows * cols, "Matrix: entry count must equal rows*cols");
    require(finite_range(data_.data(), data_.size()), "Matrix: entries must be finite");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    require(rows_ > 0, "Matrix: empty initializer");
    cols_ = rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        require(r.size() == cols_, "Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require(finite_range(data_.data(), data_.size()), "Matrix: entries must be finite");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

double Matrix::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_ && i < cols_; ++i) s += (*this)(i, i);
    return s;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

bool Matrix::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = r + 1; c < cols_; ++c)
            if (std::fabs((*this)(r, c) - (*this)(c, r)) > tol) return false;
    return true;
}

bool Matrix::all_finite() const { return finite_range(data_.data(), data_.size()); }

Matrix& Matrix::operator+=(const Matrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "Matrix+: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "Matrix-: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "Matrix*: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double arK = a(r, k);
            if (arK == 0.0) continue;
            const double* brow = b.row(k);
            double* orow = out.row(r);
            for (std::size_t c = 0; c < b.cols(); ++c) orow[c] += arK * brow[c];
        }
    }
    return out;
}

Vector::Vector(std::size_t dim) : data_(dim, 0.0) {
    require(dim > 0, "Vector: dimension must be positive");
}

Vector::Vector(std::size_t dim, std::vector<double> entries) : data_(std::move(entries)) {
    require(dim > 0, "Vector: dimension must be positive");
    require(data_.size() == dim, "Vector: entry count must equal dim");
    require(finite_range(data_.data(), data_.size()), "Vector: entries must be finite");
}

Vector::Vector(std::initializer_list<double> entries) : data_(entries) {
    require(!data_.empty(), "Vector: empty initializer");
    require(finite_range(data_.data(), data_.size()), "Vector: entries must be finite");
}

double Vector::dot(const Vector& other) const {
    require(dim() == other.dim(), "Vector::dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
    return s;
}

double Vector::norm() const { return std::sqrt(dot(*this)); }

double Vector::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

bool Vector::all_finite() const { return finite_range(data_.data(), data_.size()); }

void Vector::fill(double v) {
    for (double& x : data_) x = v;
}

Vector& Vector::operator+=(const Vector& other) {
    require(dim() == other.dim(), "Vector+: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Vector& Vector::operator-=(const Vector& other) {
    require(dim() == other.dim(), "Vector-: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Vector& Vector::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Vector operator*(const Matrix& a, const Vector& x) {
    require(a.cols() == x.dim(), "Matrix*Vector: dimension mismatch");
    Vector y(a.rows());
    matvec_accum(a, x, 1.0, y);
    return y;
}

void add_outer(Matrix& m, double a, const Vector& x) {
    require(m.rows() == x.dim() && m.cols() == x.dim(), "add_outer: shape mismatch");
    // grouped as a*(x_r*x_c) so (r,c) and (c,r) stay bit-identical
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* mrow = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) mrow[c] += a * (x[r] * x[c]);
    }
}

void matvec_accum(const Matrix& a, const Vector& x, double s, Vector& y) {
    require(a.cols() == x.dim() && a.rows() == y.dim(), "matvec_accum: shape mismatch");
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* arow = a.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) acc += arow[c] * x[c];
        y[r] += s * acc;
    }
}

void matvec_transpose_accum(const Matrix& a, const Vector& x, double s, Vector& y) {
    require(a.rows() == x.dim() && a.cols() == y.dim(), "matvec_transpose_accum: shape mismatch");
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double sxr = s * x[r];
        if (sxr == 0.0) continue;
        const double* arow = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += sxr * arow[c];
    }
}

SpdFactor::SpdFactor(Matrix lower) : lower_(std::move(lower)) {
    require(lower_.rows() == lower_.cols(), "SpdFactor: factor must be square");
    for (std::size_t r = 0; r < lower_.rows(); ++r) {
        if (!(lower_(r, r) > 0.0))
            throw std::invalid_argument("SpdFactor: diagonal must be strictly positive");
        for (std::size_t c = r + 1; c < lower_.cols(); ++c)
            if (lower_(r, c) != 0.0)
                throw std::invalid_argument("SpdFactor: upper triangle must be zero");
    }
}

Matrix SpdFactor::product() const {
    const std::size_t n = dim();
    Matrix p(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k <= std::min(r, c); ++k) s += lower_(r, k) * lower_(c, k);
            p(r, c) = s;
            p(c, r) = s;
        }
    return p;
}

}  // namespace ckfnet
