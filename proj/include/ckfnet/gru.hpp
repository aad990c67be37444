#pragma once

#include "ckfnet/matrix.hpp"
#include "ckfnet/rng.hpp"

namespace ckfnet {

/**
 * @brief Gated recurrent unit cell parameters.
 *
 * Convention fixed repo-wide:
 *   z = σ(W_z x + U_z h + b_z)
 *   r = σ(W_r x + U_r h + b_r)
 *   h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
 *   h' = (1 − z) ⊙ h + z ⊙ h~
 *
 * The same struct doubles as the gradient holder (shapes mirror exactly).
 */
struct GruCellParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix W_z, W_r, W_h;  // hidden × input
    Matrix U_z, U_r, U_h;  // hidden × hidden
    Vector b_z, b_r, b_h;  // hidden

    static GruCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
};

/// Gate activations saved by the forward pass for exact backpropagation.
struct GruCache {
    Vector x, h_prev;
    Vector z, r, h_tilde;
    Vector rh;  // r ⊙ h_prev
};

/// One cell step; fills `cache` when non-null.
Vector gru_forward(const GruCellParams& p, const Vector& x, const Vector& h_prev,
                   GruCache* cache);

/**
 * @brief Exact reverse-mode step. Accumulates (+=) parameter gradients into
 * `grads` and input/hidden gradients into `dx` and `dh_prev`.
 */
void gru_backward(const GruCellParams& p, const GruCache& cache, const Vector& dh_new,
                  GruCellParams& grads, Vector& dx, Vector& dh_prev);

/// Affine head y = W x + b; gradient holder mirrors the shape.
struct LinearHeadParams {
    Matrix W;  // out × in
    Vector b;  // out

    static LinearHeadParams zeros(std::size_t out_dim, std::size_t in_dim);
};

Vector linear_forward(const LinearHeadParams& p, const Vector& x);

void linear_backward(const LinearHeadParams& p, const Vector& x, const Vector& dy,
                     LinearHeadParams& grads, Vector& dx);

/// Uniform(-k, k) with k = 1/sqrt(hidden_dim) on weights, zero biases.
void init_gru(GruCellParams& p, double k, RngStream& rng);
void init_linear(LinearHeadParams& p, double k, RngStream& rng);

}  // namespace ckfnet
