#pragma once

#include <string>
#include <vector>

#include "ckfnet/ckfnet.hpp"
#include "ckfnet/ssm.hpp"
#include "ckfnet/training.hpp"

namespace ckfnet {

enum class Algorithm { Ckf, CkfNet, KfOracle };

std::string algorithm_name(Algorithm a);

/// One row of a sweep table: scenario, algorithm, AMSE, timing.
struct EvalResult {
    std::string algorithm;
    std::string model_id;
    std::size_t T = 0;
    double noise_scale = 1.0;
    std::string obs_mode;  // full | partial
    double amse = 0.0;
    std::vector<double> per_traj_mse;
    double mean_time_s = 0.0;
    double time_var_s2 = 0.0;
};

/// (1/T) Σ ‖x̂_i − x_i‖².
double trajectory_mse(const std::vector<Vector>& estimates, const std::vector<Vector>& truths);

/// Arithmetic mean of per-trajectory MSEs.
double amse(const std::vector<double>& per_traj_mse);

/// Sensor-read mode implied by the model.
std::string obs_mode_of(const StateSpaceModel& model);

/**
 * @brief Runs one algorithm over a test set. The filter always starts from
 * the zero estimate with unit covariance. `assumed_model` carries the noise
 * covariances the model-based filters believe in (the mismatch knob);
 * CKFNet reads only f, h, and dimensions from it.
 */
EvalResult evaluate_algorithm(Algorithm algo, const StateSpaceModel& assumed_model,
                              const CkfNetParams* params,
                              const std::vector<Trajectory>& test, double noise_scale,
                              int threads);

/**
 * @brief Horizon-generalization study: fresh test sets per horizon, all
 * algorithms on identical measurements, one row per (algorithm, horizon).
 * The KF oracle row appears only for linear models.
 */
std::vector<EvalResult> horizon_sweep(const CkfNetParams& params, const StateSpaceModel& model,
                                      const std::vector<std::size_t>& horizons,
                                      std::size_t n_test, std::uint64_t base_seed, int threads);

/**
 * @brief Noise-robustness study: data generated with the measurement
 * covariance scaled to s·V per scale while the CKF keeps the nominal
 * covariances (the mismatch scenario; scaling W and V jointly would leave the
 * optimal gain unchanged and hide the mismatch). CKFNet uses its trained
 * parameters unchanged. The KF oracle (linear only) is given the true scaled
 * covariances.
 */
std::vector<EvalResult> noise_sweep(const CkfNetParams& params, const StateSpaceModel& model,
                                    const std::vector<double>& scales, std::size_t T,
                                    std::size_t n_test, std::uint64_t base_seed, int threads);

/**
 * @brief Wall-clock timing of the filter loops only: shared measurements,
 * sequential execution, first 3 trajectories discarded as warm-up.
 */
std::vector<EvalResult> time_filters(const CkfNetParams& params, const StateSpaceModel& model,
                                     std::size_t n_traj, std::size_t T,
                                     std::uint64_t base_seed);

/// Test sets for sweeps; seeds run base_seed + offset + index.
std::vector<Trajectory> make_test_set(const StateSpaceModel& gen_model, std::size_t count,
                                      std::size_t T, std::uint64_t base_seed,
                                      std::uint64_t offset);

}  // namespace ckfnet
