#include "ckfnet/ssm.hpp"

#include <cmath>
#include <stdexcept>

#include "ckfnet/linalg.hpp"

namespace ckfnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix nav_transition(double dt) {
    return Matrix{{1, 0, dt, 0}, {0, 1, 0, dt}, {0, 0, 1, 0}, {0, 0, 0, 1}};
}

// two-argument arctangent with the angle(0,0) := 0 convention, range (-pi, pi]
double bearing(double dy, double dx) {
    if (dy == 0.0 && dx == 0.0) return 0.0;
    double a = std::atan2(dy, dx);
    if (a == -kPi) a = kPi;
    return a;
}

bool effectively_zero(const Matrix& cov) { return cov.max_abs() <= 1e-29; }

}  // namespace

StateSpaceModel linear_nav_model(double dt, double q, double r, bool partial) {
    if (!(dt > 0.0) || !(q > 0.0) || !(r > 0.0))
        throw std::invalid_argument("linear_nav_model: dt, q, r must be positive");
    const std::size_t n = 4;
    const std::size_t m = partial ? 2 : 4;
    Matrix f_mat = nav_transition(dt);
    Matrix h_mat(m, n);
    for (std::size_t i = 0; i < m; ++i) h_mat(i, i) = 1.0;

    StateSpaceModel model;
    model.id = partial ? "lin-nav-partial" : "lin-nav-full";
    model.n = n;
    model.m = m;
    model.f = [f_mat](const Vector& x) { return f_mat * x; };
    model.h = [h_mat](const Vector& x) { return h_mat * x; };
    model.f_jacobian = [f_mat](const Vector&) { return f_mat; };
    model.h_jacobian = [h_mat](const Vector&) { return h_mat; };
    model.W = Matrix::identity(n) * q;
    model.V = Matrix::identity(m) * r;
    return model;
}

StateSpaceModel nonlinear_nav_model(double q, double r) {
    if (!(q > 0.0) || !(r > 0.0))
        throw std::invalid_argument("nonlinear_nav_model: q, r must be positive");
    const std::size_t n = 4;
    const std::size_t m = 4;
    Matrix f_mat = nav_transition(1.0);

    StateSpaceModel model;
    model.id = "nonlin-nav";
    model.n = n;
    model.m = m;
    model.f = [f_mat](const Vector& x) { return f_mat * x; };
    model.f_jacobian = [f_mat](const Vector&) { return f_mat; };
    model.h = [](const Vector& x) {
        Vector z(4);
        z[0] = -x[0] - x[2];
        z[1] = -x[1] - x[3];
        z[2] = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        z[3] = bearing(x[1] - 100.0, x[0] - 100.0);
        return z;
    };
    model.h_jacobian = [](const Vector& x) {
        Matrix j(4, 4);
        j(0, 0) = -1.0;
        j(0, 2) = -1.0;
        j(1, 1) = -1.0;
        j(1, 3) = -1.0;
        const double range = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        if (range > 0.0) {
            j(2, 0) = x[0] / range;
            j(2, 1) = x[1] / range;
        }
        const double dx = x[0] - 100.0;
        const double dy = x[1] - 100.0;
        const double d2 = dx * dx + dy * dy;
        if (d2 > 0.0) {
            j(3, 0) = -dy / d2;
            j(3, 1) = dx / d2;
        }
        return j;
    };
    model.W = Matrix::identity(n) * q;
    model.V = Matrix::identity(m) * r;
    return model;
}

StateSpaceModel make_model(const std::string& model_id) {
    if (model_id == "lin-nav-full") return linear_nav_model(1.0, 0.1, 0.1, false);
    if (model_id == "lin-nav-partial") return linear_nav_model(1.0, 0.1, 0.1, true);
    if (model_id == "nonlin-nav") return nonlinear_nav_model(0.1, 0.1);
    throw std::invalid_argument("make_model: unknown model_id '" + model_id + "'");
}

Trajectory simulate_trajectory(const StateSpaceModel& model, const Vector& x0, std::size_t T,
                               RngStream& rng) {
    if (T < 1) throw std::invalid_argument("simulate_trajectory: T must be >= 1");
    if (x0.dim() != model.n) throw std::invalid_argument("simulate_trajectory: x0 dimension");

    const Matrix w_factor =
        effectively_zero(model.W) ? Matrix(model.n, model.n) : cholesky(model.W).lower();
    const Matrix v_factor =
        effectively_zero(model.V) ? Matrix(model.m, model.m) : cholesky(model.V).lower();

    Trajectory traj;
    traj.seed = rng.seed();
    traj.model_id = model.id;
    traj.states.reserve(T);
    traj.measurements.reserve(T);

    Vector x = x0;
    for (std::size_t t = 0; t < T; ++t) {
        x = model.f(x) + gaussian_draw(rng, w_factor);
        traj.states.push_back(x);
        traj.measurements.push_back(model.h(x) + gaussian_draw(rng, v_factor));
    }
    return traj;
}

}  // namespace ckfnet
