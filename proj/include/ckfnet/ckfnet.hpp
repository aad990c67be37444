#pragma once

#include <cstdint>
#include <vector>

#include "ckfnet/gru.hpp"
#include "ckfnet/matrix.hpp"
#include "ckfnet/ssm.hpp"
#include "ckfnet/tape.hpp"

namespace ckfnet {

/**
 * @brief All trainable tensors of the hybrid filter.
 *
 * Prediction phase: gru_S learns the cubature spread factor, gru_w the point
 * weights, gru_fuse merges both hidden states; head_Q reads the learned
 * process-noise factor off the fusion state. Update phase: gru_Pxz and
 * gru_Pzz learn the cross and innovation covariances that produce the gain.
 */
struct CkfNetParams {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t hidden_dim = 0;

    GruCellParams gru_S;    // input [F3, F4] (2n)
    GruCellParams gru_w;    // input [F3, F4] (2n)
    GruCellParams gru_fuse; // input [h_S, h_w] (2*hidden)
    GruCellParams gru_Pxz;  // input [F1, F2, h_fuse] (2m + hidden)
    GruCellParams gru_Pzz;  // input [F1, F2, h_fuse] (2m + hidden)

    LinearHeadParams head_S;    // hidden -> n(n+1)/2
    LinearHeadParams head_w;    // hidden -> 2n
    LinearHeadParams head_Q;    // hidden -> n(n+1)/2
    LinearHeadParams head_Pxz;  // hidden -> n*m
    LinearHeadParams head_Pzz;  // hidden -> m(m+1)/2

    static CkfNetParams zeros(std::size_t n, std::size_t m, std::size_t hidden_dim);
    static CkfNetParams init(std::size_t n, std::size_t m, std::size_t hidden_dim,
                             std::uint64_t seed);
};

/// Registers every tensor of `params`/`grads` in canonical order.
ParamTape make_tape(CkfNetParams& params, CkfNetParams& grads);

/// Recurrent filter state owned by one run.
struct CkfNetState {
    Vector x_post;         // x_{i-1|i-1}
    Vector x_prior_prev;   // x_{i-1|i-2}
    Vector x_post_prev2;   // x_{i-2|i-2}
    Vector z_prev;
    bool has_measurement = false;  // false until the first update sets z_prev
    Vector h_S, h_w, h_fuse, h_Pxz, h_Pzz;
};

CkfNetState init_ckfnet_state(const CkfNetParams& params, const Vector& x0);

/**
 * @brief Fills a lower triangle row-wise from a packed vector of n(n+1)/2
 * reals; diagonal entries pass through softplus(·) + 1e-6 so the factor's
 * product is SPD for any input.
 */
SpdFactor head_to_spd_factor(const Vector& raw, std::size_t n);

/// Softmax over 2n logits: strictly positive weights summing to 1.
Vector head_to_weights(const Vector& logits);

/**
 * @brief Componentwise tanh squashing applied to GRU input features.
 *
 * Keeps the inputs bounded whatever the filter's error scale while preserving
 * the magnitude information the gain adaptation depends on (a unit-norm
 * rescaling would leave the network blind to the noise level).
 */
Vector feature_squash(const Vector& v);

struct CkfNetPrediction {
    Vector x_prior;
    SpdFactor s_pred;
    Vector weights;  // 2n learned cubature weights

    CkfNetPrediction(Vector xp, SpdFactor sp, Vector w)
        : x_prior(std::move(xp)), s_pred(std::move(sp)), weights(std::move(w)) {}
};

struct CkfNetStepCache;

/**
 * @brief Prediction phase: learned spread/weights/process noise produce the
 * prior mean and predicted factor. Advances the prediction-phase hidden
 * states in `state`; fills `cache` when non-null.
 */
CkfNetPrediction ckfnet_predict(CkfNetState& state, const CkfNetParams& params,
                                const StateSpaceModel& model, CkfNetStepCache* cache);

/**
 * @brief Update phase: learned cross/innovation covariances produce the gain
 * and the posterior mean. Advances the update-phase hidden states and the
 * carried means in `state`.
 */
Vector ckfnet_update(CkfNetState& state, const CkfNetPrediction& pred,
                     const CkfNetParams& params, const StateSpaceModel& model, const Vector& z,
                     CkfNetStepCache* cache);

/// Full recurrent loop; one posterior mean per measurement.
std::vector<Vector> ckfnet_run(const CkfNetParams& params, const StateSpaceModel& model,
                               const std::vector<Vector>& measurements, const Vector& x0);

/// (1/T) Σ ‖x̂_i − x_i‖², the data term of the training loss.
double ckfnet_data_loss(const CkfNetParams& params, const StateSpaceModel& model,
                        const std::vector<Vector>& measurements,
                        const std::vector<Vector>& truths, const Vector& x0);

/// Per-step intermediates retained by the forward pass for exact BPTT.
struct CkfNetStepCache {
    Vector x_post_prev, x_prior_prev, x_post_prev2;
    GruCache g_S, g_w, g_fuse, g_Pxz, g_Pzz;
    Vector h_S_new, h_w_new, h_fuse_new, h_Pxz_new, h_Pzz_new;
    Vector raw_S;
    Matrix s_spread;  // lower factor from head_to_spd_factor
    Vector raw_w;
    Vector weights;
    std::vector<Vector> chi;   // prediction-phase points
    std::vector<Vector> xi;    // f images
    Vector x_prior;
    Vector raw_Q;
    Matrix l_w;       // learned process-noise factor
    Matrix s_pred;    // chol(P_pred + jitter)
    std::vector<Vector> chi_u;  // update-phase points
    std::vector<Vector> g_img;  // h images
    Vector z_hat;
    Vector innov;     // z - z_hat, also feature F1 before squashing
    Vector raw_Pxz;
    Matrix p_xz;
    Vector raw_Pzz;
    Matrix l_zz;
    Matrix gain;
    Vector x_post;
};

/// Reusable per-thread buffers for BPTT over one trajectory.
struct BpttWorkspace {
    std::vector<CkfNetStepCache> steps;
};

/**
 * @brief Forward + exact reverse pass of the data loss over one trajectory.
 *
 * Accumulates dL/dΞ into `grads` (+=) and returns the data loss. The λ‖Ξ‖²
 * gradient is applied separately by the optimizer.
 */
double ckfnet_bptt(const CkfNetParams& params, const StateSpaceModel& model,
                   const std::vector<Vector>& measurements, const std::vector<Vector>& truths,
                   const Vector& x0, CkfNetParams& grads, BpttWorkspace& ws);

}  // namespace ckfnet
