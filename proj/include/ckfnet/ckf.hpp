#pragma once

#include <optional>
#include <vector>

#include "ckfnet/matrix.hpp"
#include "ckfnet/ssm.hpp"

namespace ckfnet {

/// The 2n cubature points, their weights, and optionally their images.
struct CubaturePointSet {
    std::size_t n = 0;
    std::vector<Vector> points;
    std::vector<double> weights;
    std::vector<Vector> propagated;
};

/// Filter mean/covariance plus the update-phase intermediates when available.
struct FilterState {
    Vector mean;
    Matrix cov;
    std::optional<Vector> predicted_meas;
    std::optional<Matrix> gain;
    std::optional<Matrix> innovation_cov;
    std::optional<Matrix> cross_cov;
};

/**
 * @brief Third-degree cubature rule points: mean ± √n · (k-th factor column),
 * each with weight 1/(2n).
 */
CubaturePointSet cubature_points(const Vector& mean, const SpdFactor& cov_factor);

/// Prediction step: propagates points through f, adds W.
FilterState ckf_predict(const FilterState& prior, const StateSpaceModel& model);

/// Update step: redraws points from the prediction, fuses measurement z.
FilterState ckf_update(const FilterState& predicted, const StateSpaceModel& model,
                       const Vector& z);

/**
 * @brief Textbook linear Kalman predict+update, used as an independent oracle
 * for the CKF on linear models.
 */
FilterState kf_step(const FilterState& prior, const Matrix& F, const Matrix& H, const Matrix& W,
                    const Matrix& V, const Vector& z);

/// Chains predict/update over a measurement sequence; one posterior per step.
std::vector<FilterState> run_ckf(const StateSpaceModel& model,
                                 const std::vector<Vector>& measurements, const Vector& x0,
                                 const Matrix& P0);

}  // namespace ckfnet
