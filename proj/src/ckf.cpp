#include "ckfnet/ckf.hpp"

#include <cmath>
#include <stdexcept>

#include "ckfnet/linalg.hpp"

namespace ckfnet {

namespace {

// resymmetrize and, if needed, floor negative eigenvalues by |λ_min| + 1e-12
void repair_covariance(Matrix& p) {
    symmetrize(p);
    const SymmetricEigen eig = jacobi_eigen(p);
    const double lam_min = eig.values[eig.values.dim() - 1];
    if (lam_min < 0.0) {
        const double bump = std::fabs(lam_min) + 1e-12;
        for (std::size_t i = 0; i < p.rows(); ++i) p(i, i) += bump;
    }
}

}  // namespace

CubaturePointSet cubature_points(const Vector& mean, const SpdFactor& cov_factor) {
    const std::size_t n = mean.dim();
    if (cov_factor.dim() != n)
        throw std::invalid_argument("cubature_points: dimension mismatch");
    const double scale = std::sqrt(static_cast<double>(n));
    const Matrix& l = cov_factor.lower();

    CubaturePointSet set;
    set.n = n;
    set.points.reserve(2 * n);
    set.weights.assign(2 * n, 1.0 / (2.0 * static_cast<double>(n)));
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = mean;
        for (std::size_t r = 0; r < n; ++r) p[r] += scale * l(r, k);
        set.points.push_back(std::move(p));
    }
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = mean;
        for (std::size_t r = 0; r < n; ++r) p[r] -= scale * l(r, k);
        set.points.push_back(std::move(p));
    }
    return set;
}

FilterState ckf_predict(const FilterState& prior, const StateSpaceModel& model) {
    CubaturePointSet set = cubature_points(prior.mean, cholesky(prior.cov));
    set.propagated.reserve(set.points.size());
    for (const Vector& p : set.points) set.propagated.push_back(model.f(p));

    Vector mean(model.n);
    for (std::size_t k = 0; k < set.propagated.size(); ++k)
        mean += set.propagated[k] * set.weights[k];

    Matrix cov = model.W;
    for (std::size_t k = 0; k < set.propagated.size(); ++k)
        add_outer(cov, set.weights[k], set.propagated[k] - mean);
    symmetrize(cov);

    FilterState out;
    out.mean = std::move(mean);
    out.cov = std::move(cov);
    return out;
}

FilterState ckf_update(const FilterState& predicted, const StateSpaceModel& model,
                       const Vector& z) {
    const std::size_t n = model.n;
    const std::size_t m = model.m;
    CubaturePointSet set = cubature_points(predicted.mean, cholesky(predicted.cov));
    set.propagated.reserve(set.points.size());
    for (const Vector& p : set.points) set.propagated.push_back(model.h(p));

    Vector z_hat(m);
    for (std::size_t k = 0; k < set.propagated.size(); ++k)
        z_hat += set.propagated[k] * set.weights[k];

    Matrix p_zz = model.V;
    Matrix p_xz(n, m);
    for (std::size_t k = 0; k < set.propagated.size(); ++k) {
        const Vector g_dev = set.propagated[k] - z_hat;
        const Vector x_dev = set.points[k] - predicted.mean;
        add_outer(p_zz, set.weights[k], g_dev);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < m; ++c)
                p_xz(r, c) += set.weights[k] * x_dev[r] * g_dev[c];
    }
    symmetrize(p_zz);

    // K = P_xz P_zz⁻¹ realized as a factored solve
    const Matrix gain = spd_solve(p_zz, p_xz.transpose()).transpose();

    Vector mean = predicted.mean;
    const Vector innovation = z - z_hat;
    matvec_accum(gain, innovation, 1.0, mean);

    Matrix cov = predicted.cov - gain * p_zz * gain.transpose();
    repair_covariance(cov);

    FilterState out;
    out.mean = std::move(mean);
    out.cov = std::move(cov);
    out.predicted_meas = std::move(z_hat);
    out.gain = gain;
    out.innovation_cov = std::move(p_zz);
    out.cross_cov = std::move(p_xz);
    return out;
}

FilterState kf_step(const FilterState& prior, const Matrix& F, const Matrix& H, const Matrix& W,
                    const Matrix& V, const Vector& z) {
    const Vector x_pred = F * prior.mean;
    Matrix p_pred = F * prior.cov * F.transpose() + W;
    symmetrize(p_pred);

    Matrix s = H * p_pred * H.transpose() + V;
    symmetrize(s);
    const Matrix pht = p_pred * H.transpose();
    const Matrix gain = spd_solve(s, pht.transpose()).transpose();

    Vector mean = x_pred;
    matvec_accum(gain, z - H * x_pred, 1.0, mean);
    Matrix cov = (Matrix::identity(p_pred.rows()) - gain * H) * p_pred;
    symmetrize(cov);

    FilterState out;
    out.mean = std::move(mean);
    out.cov = std::move(cov);
    out.gain = gain;
    out.innovation_cov = std::move(s);
    return out;
}

std::vector<FilterState> run_ckf(const StateSpaceModel& model,
                                 const std::vector<Vector>& measurements, const Vector& x0,
                                 const Matrix& P0) {
    if (measurements.empty()) throw std::invalid_argument("run_ckf: no measurements");
    std::vector<FilterState> out;
    out.reserve(measurements.size());
    FilterState state;
    state.mean = x0;
    state.cov = P0;
    for (const Vector& z : measurements) {
        state = ckf_update(ckf_predict(state, model), model, z);
        out.push_back(state);
    }
    return out;
}

}  // namespace ckfnet
