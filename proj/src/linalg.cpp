#include "ckfnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ckfnet/errors.hpp"

namespace ckfnet {

namespace {
constexpr double kPivotTol = 1e-12;
constexpr int kMaxJacobiSweeps = 100;
}  // namespace

void symmetrize(Matrix& p) {
    for (std::size_t r = 0; r < p.rows(); ++r)
        for (std::size_t c = r + 1; c < p.cols(); ++c) {
            const double v = 0.5 * (p(r, c) + p(c, r));
            p(r, c) = v;
            p(c, r) = v;
        }
}

SpdFactor cholesky(const Matrix& p) {
    if (p.rows() != p.cols()) throw std::invalid_argument("cholesky: matrix must be square");
    Matrix a = p;
    symmetrize(a);
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= kPivotTol)
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(d) + " at index " +
                                      std::to_string(j));
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return SpdFactor(std::move(l));
}

Vector solve_lower(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

Vector solve_lower_transpose(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows();
    Vector y(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
        y[ii] = s / l(ii, ii);
    }
    return y;
}

Vector solve_with_factor(const SpdFactor& factor, const Vector& b) {
    return solve_lower_transpose(factor.lower(), solve_lower(factor.lower(), b));
}

Matrix solve_with_factor(const SpdFactor& factor, const Matrix& b) {
    const std::size_t n = factor.dim();
    if (b.rows() != n) throw std::invalid_argument("solve_with_factor: row count mismatch");
    Matrix x(n, b.cols());
    Vector col(n);
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = b(r, c);
        Vector sol = solve_with_factor(factor, col);
        for (std::size_t r = 0; r < n; ++r) x(r, c) = sol[r];
    }
    return x;
}

Matrix spd_solve(const Matrix& p, const Matrix& b) { return solve_with_factor(cholesky(p), b); }

Vector spd_solve(const Matrix& p, const Vector& b) { return solve_with_factor(cholesky(p), b); }

SymmetricEigen jacobi_eigen(const Matrix& p) {
    if (p.rows() != p.cols()) throw std::invalid_argument("jacobi_eigen: matrix must be square");
    const std::size_t n = p.rows();
    Matrix a = p;
    symmetrize(a);
    Matrix q = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) s += 2.0 * a(r, c) * a(r, c);
        return std::sqrt(s);
    };

    double scale = a.max_abs();
    if (scale == 0.0) scale = 1.0;
    const double stop = 1e-14 * scale * static_cast<double>(n);

    int sweep = 0;
    while (off_norm() > stop) {
        if (++sweep > kMaxJacobiSweeps)
            throw NoConvergence("jacobi_eigen: no convergence after 100 sweeps");
        for (std::size_t pp = 0; pp + 1 < n; ++pp) {
            for (std::size_t qq = pp + 1; qq < n; ++qq) {
                const double apq = a(pp, qq);
                if (std::fabs(apq) <= 1e-300) continue;
                const double tau = (a(qq, qq) - a(pp, pp)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // A <- Jᵀ A J with J the (pp,qq) rotation
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, pp);
                    const double akq = a(k, qq);
                    a(k, pp) = c * akp - s * akq;
                    a(k, qq) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(pp, k);
                    const double aqk = a(qq, k);
                    a(pp, k) = c * apk - s * aqk;
                    a(qq, k) = s * apk + c * aqk;
                }
                a(pp, qq) = 0.0;
                a(qq, pp) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, pp);
                    const double qkq = q(k, qq);
                    q(k, pp) = c * qkp - s * qkq;
                    q(k, qq) = s * qkp + c * qkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = q(r, order[k]);
    }
    return out;
}

Matrix spd_perturb(const Matrix& p, const Vector& factors) {
    if (factors.dim() != p.rows())
        throw std::invalid_argument("spd_perturb: one factor per eigenvalue required");
    for (std::size_t i = 0; i < factors.dim(); ++i)
        if (factors[i] < 0.8 || factors[i] > 1.2)
            throw std::invalid_argument("spd_perturb: factors must lie in [0.8, 1.2]");
    const SymmetricEigen eig = jacobi_eigen(p);
    const std::size_t n = p.rows();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = eig.values[k] * factors[k];
        for (std::size_t r = 0; r < n; ++r) {
            const double vrk = lam * eig.vectors(r, k);
            for (std::size_t c = 0; c < n; ++c) out(r, c) += vrk * eig.vectors(c, k);
        }
    }
    symmetrize(out);
    return out;
}

Matrix cholesky_reverse(const Matrix& l, const Matrix& l_bar) {
    const std::size_t n = l.rows();
    // G = Phi(Lᵀ L̄): lower triangle with halved diagonal
    Matrix g(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += l(k, r) * l_bar(k, c);
            g(r, c) = (r == c) ? 0.5 * s : s;
        }
    // A_bar = L⁻ᵀ G L⁻¹, computed as two triangular solves
    // First Y with Lᵀ Y = G (column-wise), then solve X Lᵀ... = Y row-wise.
    Matrix y(n, n);
    Vector col(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = g(r, c);
        Vector sol = solve_lower_transpose(l, col);
        for (std::size_t r = 0; r < n; ++r) y(r, c) = sol[r];
    }
    // Now A_bar = Y L⁻¹  <=>  A_barᵀ = L⁻ᵀ Yᵀ <=> Lᵀ A_barᵀ = Yᵀ
    Matrix a_bar(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) col[c] = y(r, c);
        Vector sol = solve_lower_transpose(l, col);
        for (std::size_t c = 0; c < n; ++c) a_bar(r, c) = sol[c];
    }
    return a_bar;
}

}  // namespace ckfnet
