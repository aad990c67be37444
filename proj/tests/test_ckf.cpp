#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckfnet/ckf.hpp"
#include "ckfnet/linalg.hpp"
#include "ckfnet/rng.hpp"
#include "ckfnet/ssm.hpp"

using namespace ckfnet;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            m = std::max(m, std::fabs(a(r, c) - b(r, c)));
    return m;
}

double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

Matrix random_spd(RngStream& rng, std::size_t n, double eps = 0.01) {
    Matrix a(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) a(r, c) = rng.next_uniform_in(-1.0, 1.0);
    Matrix p = a.transpose() * a;
    for (std::size_t i = 0; i < n; ++i) p(i, i) += eps;
    return p;
}

}  // namespace

TEST_CASE("cubature points: identity factor layout and hand case") {
    const CubaturePointSet set = cubature_points(Vector(2), SpdFactor(Matrix::identity(2)));
    REQUIRE(set.points.size() == 4);
    const double s = std::sqrt(2.0);
    CHECK(set.points[0][0] == doctest::Approx(s));
    CHECK(set.points[0][1] == 0.0);
    CHECK(set.points[1][1] == doctest::Approx(s));
    CHECK(set.points[2][0] == doctest::Approx(-s));
    CHECK(set.points[3][1] == doctest::Approx(-s));
    for (double w : set.weights) CHECK(w == doctest::Approx(0.25));

    const CubaturePointSet scalar =
        cubature_points(Vector{5.0}, SpdFactor(Matrix(1, 1, {2.0})));
    CHECK(scalar.points[0][0] == doctest::Approx(7.0));
    CHECK(scalar.points[1][0] == doctest::Approx(3.0));
}

TEST_CASE("cubature moment matching over random means and factors") {
    RngStream rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + trial % 6;
        Vector mean(n);
        for (std::size_t i = 0; i < n; ++i) mean[i] = rng.next_uniform_in(-3.0, 3.0);
        const SpdFactor factor = cholesky(random_spd(rng, n));
        const CubaturePointSet set = cubature_points(mean, factor);

        Vector wmean(n);
        for (std::size_t k = 0; k < set.points.size(); ++k)
            wmean += set.points[k] * set.weights[k];
        CHECK(max_abs_diff(wmean, mean) < 1e-12);

        Matrix scatter(n, n);
        for (std::size_t k = 0; k < set.points.size(); ++k)
            add_outer(scatter, set.weights[k], set.points[k] - mean);
        CHECK(max_abs_diff(scatter, factor.product()) < 1e-11);
    }
}

TEST_CASE("ckf_predict: cubature rule is exact for linear dynamics") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    const Matrix f_mat = model.f_jacobian(Vector(4));
    RngStream rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        FilterState prior;
        prior.mean = Vector(4);
        for (std::size_t i = 0; i < 4; ++i) prior.mean[i] = rng.next_uniform_in(-5.0, 5.0);
        prior.cov = random_spd(rng, 4, 0.05);

        const FilterState pred = ckf_predict(prior, model);
        const Vector expected_mean = f_mat * prior.mean;
        CHECK(max_abs_diff(pred.mean, expected_mean) < 1e-12);

        const Matrix expected_cov = f_mat * prior.cov * f_mat.transpose() + model.W;
        CHECK(max_abs_diff(pred.cov, expected_cov) < 1e-10);
    }
}

TEST_CASE("ckf_predict: identity dynamics with zero process noise is a fixed point") {
    StateSpaceModel model;
    model.id = "identity";
    model.n = 3;
    model.m = 3;
    model.f = [](const Vector& x) { return x; };
    model.h = [](const Vector& x) { return x; };
    model.f_jacobian = [](const Vector&) { return Matrix::identity(3); };
    model.h_jacobian = [](const Vector&) { return Matrix::identity(3); };
    model.W = Matrix(3, 3);  // exactly zero
    model.V = Matrix::identity(3);

    FilterState prior;
    prior.mean = Vector{1.0, -2.0, 0.5};
    prior.cov = Matrix::identity(3);
    const FilterState pred = ckf_predict(prior, model);
    CHECK(max_abs_diff(pred.mean, prior.mean) < 1e-13);
    CHECK(max_abs_diff(pred.cov, prior.cov) < 1e-12);
}

TEST_CASE("ckf_update: zero innovation leaves the mean unchanged") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    FilterState predicted;
    predicted.mean = Vector{1.0, 2.0, 0.3, -0.4};
    predicted.cov = Matrix::identity(4) * 0.5;
    const Vector z = model.h(predicted.mean);  // exactly the predicted measurement
    const FilterState post = ckf_update(predicted, model, z);
    CHECK(max_abs_diff(post.mean, predicted.mean) < 1e-12);
}

TEST_CASE("ckf_update: huge measurement noise keeps the prediction") {
    StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    model.V = Matrix::identity(4) * 1e6;
    FilterState predicted;
    predicted.mean = Vector{1.0, 2.0, 0.3, -0.4};
    predicted.cov = Matrix::identity(4) * 0.5;
    Vector z{5.0, -3.0, 2.0, 1.0};
    const FilterState post = ckf_update(predicted, model, z);
    CHECK(max_abs_diff(post.mean, predicted.mean) <= 1e-3);
}

TEST_CASE("kf_step hand case: K = 0.5 I") {
    FilterState prior;
    prior.mean = Vector(1);
    prior.cov = Matrix::identity(1);
    const FilterState post = kf_step(prior, Matrix::identity(1), Matrix::identity(1),
                                     Matrix(1, 1), Matrix::identity(1), Vector{1.0});
    CHECK(post.mean[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kf_step: huge noise means no information") {
    FilterState prior;
    prior.mean = Vector{1.0, -1.0};
    prior.cov = Matrix::identity(2);
    const Matrix f_mat = Matrix{{1.0, 0.5}, {0.0, 1.0}};
    const FilterState post =
        kf_step(prior, f_mat, Matrix::identity(2), Matrix::identity(2) * 0.1,
                Matrix::identity(2) * 1e12, Vector{100.0, 100.0});
    const Vector expected = f_mat * prior.mean;
    CHECK(max_abs_diff(post.mean, expected) < 1e-6);
}

TEST_CASE("linear-model equivalence: CKF matches the KF oracle over trajectories") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    const Matrix f_mat = model.f_jacobian(Vector(4));
    const Matrix h_mat = model.h_jacobian(Vector(4));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream rng(900 + seed);
        const Trajectory traj = simulate_trajectory(model, Vector(4), 100, rng);
        const std::vector<FilterState> ckf_run =
            run_ckf(model, traj.measurements, Vector(4), Matrix::identity(4));

        FilterState kf;
        kf.mean = Vector(4);
        kf.cov = Matrix::identity(4);
        for (std::size_t t = 0; t < traj.length(); ++t) {
            kf = kf_step(kf, f_mat, h_mat, model.W, model.V, traj.measurements[t]);
            CHECK(max_abs_diff(kf.mean, ckf_run[t].mean) < 1e-8);
            CHECK(max_abs_diff(kf.cov, ckf_run[t].cov) < 1e-7);
        }
    }
}

TEST_CASE("run_ckf: single measurement returns a single posterior") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    RngStream rng(31);
    const Trajectory traj = simulate_trajectory(model, Vector(4), 1, rng);
    const auto out = run_ckf(model, traj.measurements, Vector(4), Matrix::identity(4));
    CHECK(out.size() == 1);
}

TEST_CASE("run_ckf converges on near-noiseless data with the exact model") {
    const StateSpaceModel gen = linear_nav_model(1.0, 1e-6, 1e-6, false);
    RngStream rng(32);
    const Trajectory traj = simulate_trajectory(gen, Vector{0.0, 0.0, 1.0, -1.0}, 60, rng);
    const auto out = run_ckf(gen, traj.measurements, Vector(4), Matrix::identity(4));
    double first = 0.0, last = 0.0;
    for (std::size_t t = 0; t < 10; ++t) {
        const Vector e0 = out[t].mean - traj.states[t];
        const Vector e1 = out[out.size() - 1 - t].mean - traj.states[traj.length() - 1 - t];
        first += e0.dot(e0);
        last += e1.dot(e1);
    }
    CHECK(last < first);
}

TEST_CASE("ckf posterior covariance: symmetry and bounded trace over a long run") {
    const StateSpaceModel model = linear_nav_model(1.0, 0.1, 0.1, false);
    RngStream rng(33);
    const Trajectory traj = simulate_trajectory(model, Vector(4), 1000, rng);

    FilterState state;
    state.mean = Vector(4);
    state.cov = Matrix::identity(4);
    for (std::size_t t = 0; t < traj.length(); ++t) {
        const FilterState pred = ckf_predict(state, model);
        state = ckf_update(pred, model, traj.measurements[t]);
        CHECK(state.cov.is_symmetric(1e-9));
        CHECK(state.cov.trace() <= pred.cov.trace() + 1e-9);
        const SymmetricEigen eig = jacobi_eigen(state.cov);
        CHECK(eig.values[3] >= -1e-9);
    }
}
