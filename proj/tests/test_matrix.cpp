#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckfnet/errors.hpp"
#include "ckfnet/linalg.hpp"
#include "ckfnet/matrix.hpp"
#include "ckfnet/rng.hpp"

using namespace ckfnet;

namespace {

Matrix random_square(RngStream& rng, std::size_t n, double scale = 1.0) {
    Matrix a(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) a(r, c) = rng.next_uniform_in(-scale, scale);
    return a;
}

// random AᵀA + εI: SPD by construction
Matrix random_spd(RngStream& rng, std::size_t n, double eps = 0.01) {
    const Matrix a = random_square(rng, n);
    Matrix p = a.transpose() * a;
    for (std::size_t i = 0; i < n; ++i) p(i, i) += eps;
    return p;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            m = std::max(m, std::fabs(a(r, c) - b(r, c)));
    return m;
}

}  // namespace

TEST_CASE("matrix constructors reject non-finite entries") {
    CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(Vector(2, {1.0, INFINITY}), std::invalid_argument);
    CHECK_NOTHROW(Matrix(2, 2, {1.0, 2.0, 3.0, 4.0}));
}

TEST_CASE("spd factor validation") {
    CHECK_THROWS_AS(SpdFactor(Matrix{{0.0, 0.0}, {1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SpdFactor(Matrix{{1.0, 0.5}, {0.0, 1.0}}), std::invalid_argument);
    const SpdFactor f(Matrix{{2.0, 0.0}, {1.0, 3.0}});
    const Matrix p = f.product();
    CHECK(p(0, 0) == doctest::Approx(4.0));
    CHECK(p(1, 0) == doctest::Approx(2.0));
    CHECK(p(1, 1) == doctest::Approx(10.0));
}

TEST_CASE("cholesky identity and hand case") {
    const SpdFactor f = cholesky(Matrix::identity(4));
    CHECK(max_abs_diff(f.lower(), Matrix::identity(4)) == 0.0);

    const Matrix p{{4.0, 2.0}, {2.0, 3.0}};
    const SpdFactor g = cholesky(p);
    CHECK(max_abs_diff(g.product(), p) < 1e-12);
}

TEST_CASE("cholesky rejects indefinite input") {
    // leading minors 1 and -3
    CHECK_THROWS_AS(cholesky(Matrix{{1.0, 2.0}, {2.0, 1.0}}), NotPositiveDefinite);
}

TEST_CASE("cholesky reconstruction property over random spd family") {
    RngStream rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const Matrix p = random_spd(rng, n);
        const SpdFactor f = cholesky(p);
        CHECK(max_abs_diff(f.product(), p) < 1e-10);
    }
}

TEST_CASE("spd_solve identity and diagonal") {
    const Matrix b(3, 1, {1.0, -2.0, 7.0});
    const Matrix x = spd_solve(Matrix::identity(3), b);
    CHECK(max_abs_diff(x, b) < 1e-15);

    const Matrix x2 = spd_solve(Matrix{{2.0, 0.0}, {0.0, 2.0}}, Matrix(2, 1, {4.0, 6.0}));
    CHECK(x2(0, 0) == doctest::Approx(2.0));
    CHECK(x2(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("spd_solve residual bound on random family") {
    RngStream rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const Matrix p = random_spd(rng, n);
        const Matrix b = Matrix::identity(n);
        const Matrix x = spd_solve(p, b);
        const double resid = max_abs_diff(p * x, b);
        CHECK(resid <= 1e-8 * std::max(1.0, b.max_abs()));
    }
}

TEST_CASE("jacobi eigen on diagonal and hand cases") {
    const SymmetricEigen d = jacobi_eigen(Matrix{{3.0, 0.0}, {0.0, 1.0}});
    CHECK(d.values[0] == doctest::Approx(3.0));
    CHECK(d.values[1] == doctest::Approx(1.0));
    CHECK(max_abs_diff(d.vectors, Matrix::identity(2)) < 1e-14);

    const SymmetricEigen e = jacobi_eigen(Matrix{{2.0, 1.0}, {1.0, 2.0}});
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    // the paper's process-noise covariance: 0.1 I
    const SymmetricEigen w = jacobi_eigen(Matrix::identity(4) * 0.1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(w.values[i] == doctest::Approx(0.1));
}

TEST_CASE("jacobi eigen reconstruction and orthogonality over random family") {
    RngStream rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Matrix p = random_square(rng, n);
        p += p.transpose();  // symmetric, possibly indefinite
        const SymmetricEigen eig = jacobi_eigen(p);

        Matrix recon(n, n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    recon(r, c) += eig.values[k] * eig.vectors(r, k) * eig.vectors(c, k);
        CHECK(max_abs_diff(recon, p) < 1e-9);

        const Matrix qtq = eig.vectors.transpose() * eig.vectors;
        CHECK(max_abs_diff(qtq, Matrix::identity(n)) < 1e-9);

        for (std::size_t k = 1; k < n; ++k) CHECK(eig.values[k - 1] >= eig.values[k]);
    }
}

TEST_CASE("spd_perturb scales eigenvalues") {
    const Matrix base = Matrix::identity(4) * 0.1;
    Vector up(4);
    up.fill(1.2);
    CHECK(max_abs_diff(spd_perturb(base, up), Matrix::identity(4) * 0.12) < 1e-12);

    Vector ones(4);
    ones.fill(1.0);
    CHECK(max_abs_diff(spd_perturb(base, ones), base) < 1e-12);

    const Matrix p{{2.0, 1.0}, {1.0, 2.0}};
    const Matrix perturbed = spd_perturb(p, Vector{1.1, 0.9});
    CHECK(perturbed.is_symmetric(1e-12));
    const SymmetricEigen eig = jacobi_eigen(perturbed);
    CHECK(eig.values[0] == doctest::Approx(3.3).epsilon(1e-9));
    CHECK(eig.values[1] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("spd_perturb rejects out-of-range factors") {
    CHECK_THROWS_AS(spd_perturb(Matrix::identity(2), Vector{1.5, 1.0}), std::invalid_argument);
}

TEST_CASE("spd_perturb eigenvalue property over random family") {
    RngStream rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const Matrix p = random_spd(rng, n);
        Vector factors(n);
        for (std::size_t i = 0; i < n; ++i) factors[i] = rng.next_uniform_in(0.8, 1.2);
        const SymmetricEigen before = jacobi_eigen(p);
        const SymmetricEigen after = jacobi_eigen(spd_perturb(p, factors));

        std::vector<double> expected;
        for (std::size_t i = 0; i < n; ++i) expected.push_back(before.values[i] * factors[i]);
        std::sort(expected.begin(), expected.end(), std::greater<double>());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::fabs(after.values[i] - expected[i]) < 1e-9);
    }
}

TEST_CASE("cholesky_reverse matches finite differences") {
    RngStream rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const Matrix p = random_spd(rng, n, 0.1);
        const Matrix l = cholesky(p).lower();
        // random lower-triangular upstream gradient
        Matrix l_bar(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c <= r; ++c) l_bar(r, c) = rng.next_uniform_in(-1.0, 1.0);
        const Matrix a_bar = cholesky_reverse(l, l_bar);

        // probe a random symmetric direction
        Matrix da(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c <= r; ++c) {
                const double v = rng.next_uniform_in(-1.0, 1.0);
                da(r, c) = v;
                da(c, r) = v;
            }
        const double eps = 1e-7;
        Matrix p_plus = p;
        Matrix p_minus = p;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                p_plus(r, c) += eps * da(r, c);
                p_minus(r, c) -= eps * da(r, c);
            }
        const Matrix l_plus = cholesky(p_plus).lower();
        const Matrix l_minus = cholesky(p_minus).lower();
        double fd = 0.0;
        double an = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                fd += l_bar(r, c) * (l_plus(r, c) - l_minus(r, c)) / (2.0 * eps);
                an += a_bar(r, c) * da(r, c);
            }
        CHECK(std::fabs(fd - an) < 1e-6 * std::max(1.0, std::fabs(fd)));
    }
}
