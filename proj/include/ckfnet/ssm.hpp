#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ckfnet/matrix.hpp"
#include "ckfnet/rng.hpp"

namespace ckfnet {

/**
 * @brief Discrete-time state-space model x_i = f(x_{i-1}) + w, z_i = h(x_i) + v.
 *
 * Jacobians of f and h are carried alongside the maps; training differentiates
 * through both. W and V are the process / measurement noise covariances.
 */
struct StateSpaceModel {
    std::string id;
    std::size_t n = 0;  ///< state dimension
    std::size_t m = 0;  ///< measurement dimension
    std::function<Vector(const Vector&)> f;
    std::function<Vector(const Vector&)> h;
    std::function<Matrix(const Vector&)> f_jacobian;
    std::function<Matrix(const Vector&)> h_jacobian;
    Matrix W;
    Matrix V;
};

/// Time-indexed ground truth and measurements, with seed provenance.
struct Trajectory {
    std::uint64_t traj_id = 0;
    std::uint64_t seed = 0;
    std::string model_id;
    std::vector<Vector> states;
    std::vector<Vector> measurements;

    std::size_t length() const { return states.size(); }
};

/**
 * @brief Constant-velocity land navigation model (4 states, unit or chosen step).
 *
 * State is [north pos, east pos, north vel, east vel]. Full observation uses
 * H = I4; the partial mode observes positions only (first two rows of I4).
 */
StateSpaceModel linear_nav_model(double dt, double q, double r, bool partial);

/**
 * @brief Same transition as the linear model with a nonlinear observation:
 * negated position/velocity sums, range from the origin, and bearing relative
 * to a sensor at (100, 100). The bearing uses the two-argument arctangent with
 * angle(0, 0) defined as 0.
 */
StateSpaceModel nonlinear_nav_model(double q, double r);

/// Model lookup by identifier: lin-nav-full | lin-nav-partial | nonlin-nav.
StateSpaceModel make_model(const std::string& model_id);

/**
 * @brief Simulates T steps from x0: states[0] = f(x0) + w0, measurements[0] =
 * h(states[0]) + v0, and so on. Noise is Gaussian via Cholesky factors of W, V;
 * a covariance with max |entry| <= 1e-29 runs in exact noise-free mode.
 */
Trajectory simulate_trajectory(const StateSpaceModel& model, const Vector& x0, std::size_t T,
                               RngStream& rng);

}  // namespace ckfnet
