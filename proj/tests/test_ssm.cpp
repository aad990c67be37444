#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckfnet/linalg.hpp"
#include "ckfnet/rng.hpp"
#include "ckfnet/ssm.hpp"

using namespace ckfnet;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("rng streams are reproducible from (seed, counter)") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42);
    for (int i = 0; i < 7; ++i) c.next_u64();
    RngStream d(42, 7);  // resume mid-stream
    CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("gaussian_draw: degenerate factor, determinism, moments") {
    const Matrix zero(3, 3);
    RngStream rng(1);
    const Vector z = gaussian_draw(rng, zero);
    for (std::size_t i = 0; i < 3; ++i) CHECK(z[i] == 0.0);

    RngStream r1(2), r2(2);
    const Vector a = gaussian_draw(r1, Matrix::identity(4));
    const Vector b = gaussian_draw(r2, Matrix::identity(4));
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == b[i]);

    // Monte Carlo moments over 1e5 scalar draws
    RngStream r3(3);
    const Matrix one = Matrix::identity(1);
    double sum = 0.0, sum_sq = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const double x = gaussian_draw(r3, one)[0];
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / N;
    const double var = sum_sq / N - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(var > 0.98);
    CHECK(var < 1.02);
}

TEST_CASE("linear nav model matches the constant-velocity system") {
    const StateSpaceModel full = linear_nav_model(1.0, 0.1, 0.1, false);
    CHECK(full.n == 4);
    CHECK(full.m == 4);
    const Matrix f_mat = full.f_jacobian(Vector(4));
    CHECK(f_mat(0, 0) == 1.0);
    CHECK(f_mat(0, 1) == 0.0);
    CHECK(f_mat(0, 2) == 1.0);
    CHECK(f_mat(0, 3) == 0.0);
    CHECK(full.W(0, 0) == doctest::Approx(0.1));
    CHECK(full.W(0, 1) == 0.0);

    // noiseless constant-velocity integration: positions t after t steps
    Vector x{0.0, 0.0, 1.0, 1.0};
    for (int t = 0; t < 10; ++t) x = full.f(x);
    CHECK(x[0] == 10.0);
    CHECK(x[1] == 10.0);
    CHECK(x[2] == 1.0);

    const StateSpaceModel partial = linear_nav_model(1.0, 0.1, 0.1, true);
    CHECK(partial.m == 2);
    const Vector z = partial.h(Vector{1.0, 2.0, 3.0, 4.0});
    CHECK(z.dim() == 2);
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 2.0);
    // h must equal H·x for the partial observation matrix
    const Vector hx = partial.h_jacobian(Vector(4)) * Vector{1.0, 2.0, 3.0, 4.0};
    CHECK(hx[0] == z[0]);
    CHECK(hx[1] == z[1]);
}

TEST_CASE("nonlinear measurement map evaluates per the hand-derived cases") {
    const StateSpaceModel model = nonlinear_nav_model(0.1, 0.1);

    const Vector z0 = model.h(Vector{0.0, 0.0, 0.0, 0.0});
    CHECK(z0[0] == 0.0);
    CHECK(z0[1] == 0.0);
    CHECK(z0[2] == 0.0);
    CHECK(z0[3] == doctest::Approx(-3.0 * kPi / 4.0));

    // at the sensor position the bearing follows the angle(0,0) = 0 convention
    const Vector z1 = model.h(Vector{100.0, 100.0, 0.0, 0.0});
    CHECK(z1[0] == doctest::Approx(-100.0));
    CHECK(z1[1] == doctest::Approx(-100.0));
    CHECK(z1[2] == doctest::Approx(100.0 * std::sqrt(2.0)));
    CHECK(z1[3] == 0.0);

    const Vector z2 = model.h(Vector{1.0, 0.0, 0.0, 0.0});
    CHECK(z2[0] == doctest::Approx(-1.0));
    CHECK(z2[1] == 0.0);
    CHECK(z2[2] == doctest::Approx(1.0));
    CHECK(z2[3] == doctest::Approx(std::atan2(-100.0, -99.0)));
}

TEST_CASE("nonlinear h ranges: component 3 nonnegative, component 4 in (-pi, pi]") {
    const StateSpaceModel model = nonlinear_nav_model(0.1, 0.1);
    RngStream rng(7);
    for (int i = 0; i < 2000; ++i) {
        Vector x(4);
        for (std::size_t k = 0; k < 4; ++k) x[k] = rng.next_uniform_in(-300.0, 300.0);
        const Vector z = model.h(x);
        CHECK(z[2] >= 0.0);
        CHECK(z[3] > -kPi);
        CHECK(z[3] <= kPi);
    }
}

TEST_CASE("nonlinear h jacobian matches finite differences away from singularities") {
    const StateSpaceModel model = nonlinear_nav_model(0.1, 0.1);
    RngStream rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Vector x(4);
        for (std::size_t k = 0; k < 4; ++k) x[k] = rng.next_uniform_in(-50.0, 40.0);
        if (std::hypot(x[0], x[1]) < 1.0) continue;
        const Matrix j = model.h_jacobian(x);
        const double eps = 1e-6;
        for (std::size_t c = 0; c < 4; ++c) {
            Vector xp = x, xm = x;
            xp[c] += eps;
            xm[c] -= eps;
            const Vector zp = model.h(xp);
            const Vector zm = model.h(xm);
            for (std::size_t r = 0; r < 4; ++r) {
                const double fd = (zp[r] - zm[r]) / (2.0 * eps);
                CHECK(std::fabs(j(r, c) - fd) < 1e-5 * std::max(1.0, std::fabs(fd)));
            }
        }
    }
}

TEST_CASE("simulation: zero-noise mode gives identically zero trajectories") {
    const StateSpaceModel quiet = linear_nav_model(1.0, 1e-30, 1e-30, false);
    RngStream rng(5);
    const Trajectory t = simulate_trajectory(quiet, Vector(4), 50, rng);
    for (const Vector& x : t.states)
        for (std::size_t i = 0; i < 4; ++i) CHECK(x[i] == 0.0);
    for (const Vector& z : t.measurements)
        for (std::size_t i = 0; i < 4; ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("simulation determinism: same seed reproduces bit-exactly") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        RngStream r1(seed), r2(seed);
        const Trajectory a = simulate_trajectory(model, Vector(4), 40, r1);
        const Trajectory b = simulate_trajectory(model, Vector(4), 40, r2);
        for (std::size_t t = 0; t < 40; ++t)
            for (std::size_t i = 0; i < 4; ++i) {
                CHECK(a.states[t][i] == b.states[t][i]);
                CHECK(a.measurements[t][i] == b.measurements[t][i]);
            }
    }
}

TEST_CASE("noiseless linear simulation equals matrix-power propagation exactly") {
    const StateSpaceModel quiet = linear_nav_model(1.0, 1e-30, 1e-30, false);
    const Vector x0{2.0, -3.0, 1.0, 4.0};  // integer-valued: exact arithmetic
    RngStream rng(6);
    const Trajectory t = simulate_trajectory(quiet, x0, 30, rng);
    const Matrix f_mat = quiet.f_jacobian(x0);
    Matrix power = f_mat;
    for (std::size_t step = 0; step < 30; ++step) {
        const Vector expected = power * x0;
        for (std::size_t i = 0; i < 4; ++i) CHECK(t.states[step][i] == expected[i]);
        power = f_mat * power;
    }
}

TEST_CASE("monte carlo noise calibration of the simulator") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    const Matrix f_mat = model.f_jacobian(Vector(4));
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (int traj = 0; traj < 1000; ++traj) {
        RngStream rng(5000 + traj);
        const Trajectory t = simulate_trajectory(model, Vector(4), 100, rng);
        Vector prev(4);
        for (std::size_t step = 0; step < t.length(); ++step) {
            const Vector w = t.states[step] - f_mat * prev;
            for (std::size_t i = 0; i < 4; ++i) {
                sum += w[i];
                sum_sq += w[i] * w[i];
                ++count;
            }
            prev = t.states[step];
        }
    }
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    CHECK(var > 0.09);
    CHECK(var < 0.11);
}
