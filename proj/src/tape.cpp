#include "ckfnet/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace ckfnet {

void ParamTape::add(const std::string& name, Matrix& value, Matrix& grad) {
    if (value.rows() != grad.rows() || value.cols() != grad.cols())
        throw std::invalid_argument("ParamTape: gradient shape must mirror parameter");
    tensors_.push_back({name, value.data(), grad.data(), value.rows(), value.cols()});
}

void ParamTape::add(const std::string& name, Vector& value, Vector& grad) {
    if (value.dim() != grad.dim())
        throw std::invalid_argument("ParamTape: gradient shape must mirror parameter");
    tensors_.push_back({name, value.data(), grad.data(), value.dim(), 1});
}

std::size_t ParamTape::parameter_count() const {
    std::size_t total = 0;
    for (const auto& t : tensors_) total += t.size();
    return total;
}

void ParamTape::zero_gradients() {
    for (auto& t : tensors_)
        for (std::size_t i = 0; i < t.size(); ++i) t.grad[i] = 0.0;
}

double ParamTape::gradient_norm() const {
    double s = 0.0;
    for (const auto& t : tensors_)
        for (std::size_t i = 0; i < t.size(); ++i) s += t.grad[i] * t.grad[i];
    return std::sqrt(s);
}

double ParamTape::value_norm_sq() const {
    double s = 0.0;
    for (const auto& t : tensors_)
        for (std::size_t i = 0; i < t.size(); ++i) s += t.value[i] * t.value[i];
    return s;
}

OptimizerState OptimizerState::init(const ParamTape& tape, double learning_rate) {
    OptimizerState opt;
    opt.learning_rate = learning_rate;
    opt.m.reserve(tape.tensors().size());
    opt.v.reserve(tape.tensors().size());
    for (const auto& t : tape.tensors()) {
        opt.m.emplace_back(t.size(), 0.0);
        opt.v.emplace_back(t.size(), 0.0);
    }
    return opt;
}

void adam_step(OptimizerState& opt, ParamTape& tape, double weight_decay) {
    if (opt.m.size() != tape.tensors().size())
        throw std::invalid_argument("adam_step: optimizer state does not match tape");
    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t ti = 0; ti < tape.tensors().size(); ++ti) {
        TensorRef& t = tape.tensors()[ti];
        std::vector<double>& m = opt.m[ti];
        std::vector<double>& v = opt.v[ti];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double g = t.grad[i] + 2.0 * weight_decay * t.value[i];
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            t.value[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
        }
    }
    tape.zero_gradients();
}

double clip_gradients(ParamTape& tape, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
    const double g = tape.gradient_norm();
    if (g > max_norm) {
        const double scale = max_norm / g;
        for (auto& t : tape.tensors())
            for (std::size_t i = 0; i < t.size(); ++i) t.grad[i] *= scale;
    }
    return g;
}

}  // namespace ckfnet
