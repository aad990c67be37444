#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ckfnet/matrix.hpp"

namespace ckfnet {

/// A named view onto one parameter tensor and its gradient accumulator.
struct TensorRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;  // 1 for vectors

    std::size_t size() const { return rows * cols; }
};

/**
 * @brief Ordered registry over all trainable tensors (the full Ξ) with their
 * parallel gradient accumulators. The registration order is the canonical
 * order for the optimizer state and for serialization.
 */
class ParamTape {
public:
    void add(const std::string& name, Matrix& value, Matrix& grad);
    void add(const std::string& name, Vector& value, Vector& grad);

    const std::vector<TensorRef>& tensors() const { return tensors_; }
    std::vector<TensorRef>& tensors() { return tensors_; }

    std::size_t parameter_count() const;

    void zero_gradients();

    /// Global ℓ2 norm of the gradient accumulator.
    double gradient_norm() const;

    /// ‖Ξ‖², the Tikhonov term's square norm.
    double value_norm_sq() const;

private:
    std::vector<TensorRef> tensors_;
};

/// Adaptive-moment optimizer state; moments mirror the tape's tensor order.
struct OptimizerState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static OptimizerState init(const ParamTape& tape, double learning_rate);
};

/**
 * @brief One bias-corrected adaptive-moment update over every tensor.
 *
 * The ℓ2 term enters as gradient += 2·weight_decay·θ before the moment
 * update (coupled regularization, the exact gradient of λ‖Ξ‖²). Gradients
 * are zeroed afterward.
 */
void adam_step(OptimizerState& opt, ParamTape& tape, double weight_decay);

/**
 * @brief Scales all gradients by max_norm/g when the global norm g exceeds
 * max_norm; returns the pre-clip norm.
 */
double clip_gradients(ParamTape& tape, double max_norm);

}  // namespace ckfnet
