#include "ckfnet/ckfnet.hpp"

#include <cmath>
#include <stdexcept>

#include "ckfnet/errors.hpp"
#include "ckfnet/linalg.hpp"

namespace ckfnet {

namespace {

constexpr double kDiagFloor = 1e-6;
constexpr double kJitter = 1e-9;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t tri_size(std::size_t n) { return n * (n + 1) / 2; }

Vector concat2(const Vector& a, const Vector& b) {
    Vector out(a.dim() + b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i];
    for (std::size_t i = 0; i < b.dim(); ++i) out[a.dim() + i] = b[i];
    return out;
}

Vector concat3(const Vector& a, const Vector& b, const Vector& c) {
    Vector out(a.dim() + b.dim() + c.dim());
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) out[k++] = a[i];
    for (std::size_t i = 0; i < b.dim(); ++i) out[k++] = b[i];
    for (std::size_t i = 0; i < c.dim(); ++i) out[k++] = c[i];
    return out;
}

/// dv += dy ⊙ (1 − t²): reverse of the componentwise tanh with outputs t.
void squash_backward_accum(const double* t, const Vector& dy, Vector& dv) {
    for (std::size_t i = 0; i < dv.dim(); ++i) dv[i] += dy[i] * (1.0 - t[i] * t[i]);
}

/// Gradient through head_to_spd_factor: sigmoid on the diagonal, pass-through
/// elsewhere.
Vector spd_head_backward(const Vector& raw, const Matrix& l_bar, std::size_t n) {
    Vector out(tri_size(n));
    std::size_t idx = 0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            out[idx] = (r == c) ? l_bar(r, c) * sigmoid(raw[idx]) : l_bar(r, c);
            ++idx;
        }
    return out;
}

Vector softmax_backward(const Vector& w, const Vector& dw) {
    double dot = 0.0;
    for (std::size_t i = 0; i < w.dim(); ++i) dot += w[i] * dw[i];
    Vector out(w.dim());
    for (std::size_t i = 0; i < w.dim(); ++i) out[i] = w[i] * (dw[i] - dot);
    return out;
}

double quad_form(const Matrix& p, const Vector& x) {
    double s = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const double* row = p.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < p.cols(); ++c) acc += row[c] * x[c];
        s += x[r] * acc;
    }
    return s;
}

// The fixed 1e-9 jitter guarantees factorability at trained-filter scales. A
// diverging untrained filter can reach magnitudes where an absolute jitter
// drowns in roundoff; escalate relative to the trace until the factorization
// holds so the prediction stays total.
SpdFactor factor_predicted_covariance(Matrix p) {
    try {
        return cholesky(p);
    } catch (const NotPositiveDefinite&) {
    }
    const std::size_t n = p.rows();
    double bump = 1e-12 * (1.0 + std::fabs(p.trace()) / static_cast<double>(n));
    for (int attempt = 0; attempt < 50; ++attempt) {
        for (std::size_t i = 0; i < n; ++i) p(i, i) += bump;
        try {
            return cholesky(p);
        } catch (const NotPositiveDefinite&) {
        }
        bump *= 10.0;
    }
    return cholesky(p);
}

}  // namespace

CkfNetParams CkfNetParams::zeros(std::size_t n, std::size_t m, std::size_t hidden_dim) {
    CkfNetParams p;
    p.n = n;
    p.m = m;
    p.hidden_dim = hidden_dim;
    p.gru_S = GruCellParams::zeros(2 * n, hidden_dim);
    p.gru_w = GruCellParams::zeros(2 * n, hidden_dim);
    p.gru_fuse = GruCellParams::zeros(2 * hidden_dim, hidden_dim);
    p.gru_Pxz = GruCellParams::zeros(2 * m + hidden_dim, hidden_dim);
    p.gru_Pzz = GruCellParams::zeros(2 * m + hidden_dim, hidden_dim);
    p.head_S = LinearHeadParams::zeros(tri_size(n), hidden_dim);
    p.head_w = LinearHeadParams::zeros(2 * n, hidden_dim);
    p.head_Q = LinearHeadParams::zeros(tri_size(n), hidden_dim);
    p.head_Pxz = LinearHeadParams::zeros(n * m, hidden_dim);
    p.head_Pzz = LinearHeadParams::zeros(tri_size(m), hidden_dim);
    return p;
}

CkfNetParams CkfNetParams::init(std::size_t n, std::size_t m, std::size_t hidden_dim,
                                std::uint64_t seed) {
    CkfNetParams p = zeros(n, m, hidden_dim);
    RngStream rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    init_gru(p.gru_S, k, rng);
    init_gru(p.gru_w, k, rng);
    init_gru(p.gru_fuse, k, rng);
    init_gru(p.gru_Pxz, k, rng);
    init_gru(p.gru_Pzz, k, rng);
    init_linear(p.head_S, k, rng);
    init_linear(p.head_w, k, rng);
    init_linear(p.head_Q, k, rng);
    init_linear(p.head_Pxz, k, rng);
    init_linear(p.head_Pzz, k, rng);
    return p;
}

ParamTape make_tape(CkfNetParams& params, CkfNetParams& grads) {
    ParamTape tape;
    auto add_gru = [&](const std::string& prefix, GruCellParams& p, GruCellParams& g) {
        tape.add(prefix + ".W_z", p.W_z, g.W_z);
        tape.add(prefix + ".W_r", p.W_r, g.W_r);
        tape.add(prefix + ".W_h", p.W_h, g.W_h);
        tape.add(prefix + ".U_z", p.U_z, g.U_z);
        tape.add(prefix + ".U_r", p.U_r, g.U_r);
        tape.add(prefix + ".U_h", p.U_h, g.U_h);
        tape.add(prefix + ".b_z", p.b_z, g.b_z);
        tape.add(prefix + ".b_r", p.b_r, g.b_r);
        tape.add(prefix + ".b_h", p.b_h, g.b_h);
    };
    auto add_head = [&](const std::string& prefix, LinearHeadParams& p, LinearHeadParams& g) {
        tape.add(prefix + ".W", p.W, g.W);
        tape.add(prefix + ".b", p.b, g.b);
    };
    add_gru("gru_S", params.gru_S, grads.gru_S);
    add_gru("gru_w", params.gru_w, grads.gru_w);
    add_gru("gru_fuse", params.gru_fuse, grads.gru_fuse);
    add_gru("gru_Pxz", params.gru_Pxz, grads.gru_Pxz);
    add_gru("gru_Pzz", params.gru_Pzz, grads.gru_Pzz);
    add_head("head_S", params.head_S, grads.head_S);
    add_head("head_w", params.head_w, grads.head_w);
    add_head("head_Q", params.head_Q, grads.head_Q);
    add_head("head_Pxz", params.head_Pxz, grads.head_Pxz);
    add_head("head_Pzz", params.head_Pzz, grads.head_Pzz);
    return tape;
}

CkfNetState init_ckfnet_state(const CkfNetParams& params, const Vector& x0) {
    if (x0.dim() != params.n) throw std::invalid_argument("init_ckfnet_state: x0 dimension");
    CkfNetState s;
    s.x_post = x0;
    s.x_prior_prev = x0;
    s.x_post_prev2 = x0;
    s.z_prev = Vector(params.m);
    s.has_measurement = false;
    s.h_S = Vector(params.hidden_dim);
    s.h_w = Vector(params.hidden_dim);
    s.h_fuse = Vector(params.hidden_dim);
    s.h_Pxz = Vector(params.hidden_dim);
    s.h_Pzz = Vector(params.hidden_dim);
    return s;
}

SpdFactor head_to_spd_factor(const Vector& raw, std::size_t n) {
    if (raw.dim() != tri_size(n))
        throw std::invalid_argument("head_to_spd_factor: need n(n+1)/2 entries");
    Matrix l(n, n);
    std::size_t idx = 0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            l(r, c) = (r == c) ? softplus(raw[idx]) + kDiagFloor : raw[idx];
            ++idx;
        }
    return SpdFactor(std::move(l));
}

Vector head_to_weights(const Vector& logits) {
    double mx = logits[0];
    for (std::size_t i = 1; i < logits.dim(); ++i) mx = std::max(mx, logits[i]);
    Vector w(logits.dim());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.dim(); ++i) {
        w[i] = std::exp(logits[i] - mx);
        sum += w[i];
    }
    for (std::size_t i = 0; i < w.dim(); ++i) w[i] /= sum;
    return w;
}

Vector feature_squash(const Vector& v) {
    Vector out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] = std::tanh(v[i]);
    return out;
}

CkfNetPrediction ckfnet_predict(CkfNetState& state, const CkfNetParams& params,
                                const StateSpaceModel& model, CkfNetStepCache* cache) {
    const std::size_t n = params.n;
    const double scale = std::sqrt(static_cast<double>(n));

    // F3/F4: prediction-vs-update and step-to-step posterior deviations of the
    // previous completed step; both zero at the first step by initialization
    const Vector f3_raw = state.x_post - state.x_prior_prev;
    const Vector f4_raw = state.x_post - state.x_post_prev2;
    Vector u_pred = concat2(feature_squash(f3_raw), feature_squash(f4_raw));

    Vector h_s_new = gru_forward(params.gru_S, u_pred, state.h_S, cache ? &cache->g_S : nullptr);
    Vector raw_s = linear_forward(params.head_S, h_s_new);
    SpdFactor s_spread = head_to_spd_factor(raw_s, n);

    Vector h_w_new = gru_forward(params.gru_w, u_pred, state.h_w, cache ? &cache->g_w : nullptr);
    Vector raw_w = linear_forward(params.head_w, h_w_new);
    Vector weights = head_to_weights(raw_w);

    // cubature points around the previous posterior with the learned spread
    std::vector<Vector> chi;
    chi.reserve(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = state.x_post;
        for (std::size_t r = 0; r < n; ++r) p[r] += scale * s_spread.lower()(r, k);
        chi.push_back(std::move(p));
    }
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = state.x_post;
        for (std::size_t r = 0; r < n; ++r) p[r] -= scale * s_spread.lower()(r, k);
        chi.push_back(std::move(p));
    }
    std::vector<Vector> xi;
    xi.reserve(2 * n);
    for (const Vector& p : chi) xi.push_back(model.f(p));

    Vector x_prior(n);
    for (std::size_t k = 0; k < xi.size(); ++k) x_prior += xi[k] * weights[k];

    Vector u_fuse = concat2(h_s_new, h_w_new);
    Vector h_fuse_new =
        gru_forward(params.gru_fuse, u_fuse, state.h_fuse, cache ? &cache->g_fuse : nullptr);
    Vector raw_q = linear_forward(params.head_Q, h_fuse_new);
    SpdFactor l_w = head_to_spd_factor(raw_q, n);

    Matrix p_pred = l_w.product();
    for (std::size_t k = 0; k < xi.size(); ++k) add_outer(p_pred, weights[k], xi[k] - x_prior);
    for (std::size_t i = 0; i < n; ++i) p_pred(i, i) += kJitter;
    SpdFactor s_pred = factor_predicted_covariance(std::move(p_pred));

    if (cache) {
        cache->x_post_prev = state.x_post;
        cache->x_prior_prev = state.x_prior_prev;
        cache->x_post_prev2 = state.x_post_prev2;
        cache->h_S_new = h_s_new;
        cache->h_w_new = h_w_new;
        cache->h_fuse_new = h_fuse_new;
        cache->raw_S = std::move(raw_s);
        cache->s_spread = s_spread.lower();
        cache->raw_w = std::move(raw_w);
        cache->weights = weights;
        cache->chi = chi;
        cache->xi = xi;
        cache->x_prior = x_prior;
        cache->raw_Q = std::move(raw_q);
        cache->l_w = l_w.lower();
        cache->s_pred = s_pred.lower();
    }

    state.h_S = std::move(h_s_new);
    state.h_w = std::move(h_w_new);
    state.h_fuse = std::move(h_fuse_new);

    return CkfNetPrediction(std::move(x_prior), std::move(s_pred), std::move(weights));
}

Vector ckfnet_update(CkfNetState& state, const CkfNetPrediction& pred,
                     const CkfNetParams& params, const StateSpaceModel& model, const Vector& z,
                     CkfNetStepCache* cache) {
    const std::size_t n = params.n;
    const std::size_t m = params.m;
    const double scale = std::sqrt(static_cast<double>(n));

    if (!state.has_measurement) {
        state.z_prev = z;  // F2 degenerates to zero at the first step
        state.has_measurement = true;
    }

    // update-phase points from the predicted factor
    std::vector<Vector> chi_u;
    chi_u.reserve(2 * n);
    const Matrix& sp = pred.s_pred.lower();
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = pred.x_prior;
        for (std::size_t r = 0; r < n; ++r) p[r] += scale * sp(r, k);
        chi_u.push_back(std::move(p));
    }
    for (std::size_t k = 0; k < n; ++k) {
        Vector p = pred.x_prior;
        for (std::size_t r = 0; r < n; ++r) p[r] -= scale * sp(r, k);
        chi_u.push_back(std::move(p));
    }
    std::vector<Vector> g_img;
    g_img.reserve(2 * n);
    for (const Vector& p : chi_u) g_img.push_back(model.h(p));

    Vector z_hat(m);
    for (std::size_t k = 0; k < g_img.size(); ++k) z_hat += g_img[k] * pred.weights[k];

    Vector innov = z - z_hat;
    const Vector f2_raw = z - state.z_prev;
    Vector u_upd = concat3(feature_squash(innov), feature_squash(f2_raw), state.h_fuse);

    Vector h_pxz_new =
        gru_forward(params.gru_Pxz, u_upd, state.h_Pxz, cache ? &cache->g_Pxz : nullptr);
    Vector raw_pxz = linear_forward(params.head_Pxz, h_pxz_new);
    Matrix p_xz(n, m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) p_xz(r, c) = raw_pxz[r * m + c];

    Vector h_pzz_new =
        gru_forward(params.gru_Pzz, u_upd, state.h_Pzz, cache ? &cache->g_Pzz : nullptr);
    Vector raw_pzz = linear_forward(params.head_Pzz, h_pzz_new);
    SpdFactor l_zz = head_to_spd_factor(raw_pzz, m);

    // K = P_xz P_zz⁻¹ through the already-factored P_zz: row r of K solves
    // (L L^T) k_r = (row r of P_xz)
    Matrix gain(n, m);
    Vector row(m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) row[c] = p_xz(r, c);
        Vector sol = solve_lower_transpose(l_zz.lower(), solve_lower(l_zz.lower(), row));
        for (std::size_t c = 0; c < m; ++c) gain(r, c) = sol[c];
    }

    Vector x_post = pred.x_prior;
    matvec_accum(gain, innov, 1.0, x_post);

    if (cache) {
        cache->chi_u = chi_u;
        cache->g_img = g_img;
        cache->z_hat = std::move(z_hat);
        cache->innov = innov;
        cache->h_Pxz_new = h_pxz_new;
        cache->h_Pzz_new = h_pzz_new;
        cache->raw_Pxz = std::move(raw_pxz);
        cache->p_xz = p_xz;
        cache->raw_Pzz = std::move(raw_pzz);
        cache->l_zz = l_zz.lower();
        cache->gain = gain;
        cache->x_post = x_post;
    }

    state.x_post_prev2 = std::move(state.x_post);
    state.x_prior_prev = pred.x_prior;
    state.x_post = x_post;
    state.z_prev = z;
    state.h_Pxz = std::move(h_pxz_new);
    state.h_Pzz = std::move(h_pzz_new);
    return x_post;
}

std::vector<Vector> ckfnet_run(const CkfNetParams& params, const StateSpaceModel& model,
                               const std::vector<Vector>& measurements, const Vector& x0) {
    if (measurements.empty()) throw std::invalid_argument("ckfnet_run: no measurements");
    CkfNetState state = init_ckfnet_state(params, x0);
    std::vector<Vector> out;
    out.reserve(measurements.size());
    for (const Vector& z : measurements) {
        CkfNetPrediction pred = ckfnet_predict(state, params, model, nullptr);
        out.push_back(ckfnet_update(state, pred, params, model, z, nullptr));
    }
    return out;
}

double ckfnet_data_loss(const CkfNetParams& params, const StateSpaceModel& model,
                        const std::vector<Vector>& measurements,
                        const std::vector<Vector>& truths, const Vector& x0) {
    const std::vector<Vector> estimates = ckfnet_run(params, model, measurements, x0);
    double loss = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const Vector err = estimates[i] - truths[i];
        loss += err.dot(err);
    }
    return loss / static_cast<double>(estimates.size());
}

namespace {

/// Gradients w.r.t. the recurrent state entering a step.
struct BackState {
    Vector gx_post, gx_prior_prev, gx_post_prev2;
    Vector gh_S, gh_w, gh_fuse, gh_Pxz, gh_Pzz;

    BackState(std::size_t n, std::size_t hd)
        : gx_post(n),
          gx_prior_prev(n),
          gx_post_prev2(n),
          gh_S(hd),
          gh_w(hd),
          gh_fuse(hd),
          gh_Pxz(hd),
          gh_Pzz(hd) {}
};

void backward_step(const CkfNetParams& params, const StateSpaceModel& model,
                   const CkfNetStepCache& c, const Vector& dloss_dxpost, BackState& bs,
                   CkfNetParams& grads) {
    const std::size_t n = params.n;
    const std::size_t m = params.m;
    const std::size_t hd = params.hidden_dim;
    const double scale = std::sqrt(static_cast<double>(n));

    // gradients w.r.t. this step's outputs, carried in from the next step
    Vector gx_post = std::move(bs.gx_post);
    gx_post += dloss_dxpost;
    Vector gx_prior = std::move(bs.gx_prior_prev);
    Vector gx_center = std::move(bs.gx_post_prev2);  // entry x_post, keeps accumulating
    Vector gh_s_new = std::move(bs.gh_S);
    Vector gh_w_new = std::move(bs.gh_w);
    Vector gh_fuse_new = std::move(bs.gh_fuse);
    Vector gh_pxz_new = std::move(bs.gh_Pxz);
    Vector gh_pzz_new = std::move(bs.gh_Pzz);

    // the moved-from slots become this step's entry-state accumulators
    bs.gh_S = Vector(hd);
    bs.gh_w = Vector(hd);
    bs.gh_fuse = Vector(hd);
    bs.gh_Pxz = Vector(hd);
    bs.gh_Pzz = Vector(hd);

    // x_post = x_prior + K innov
    gx_prior += gx_post;
    Matrix k_bar(n, m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t cc = 0; cc < m; ++cc) k_bar(r, cc) = gx_post[r] * c.innov[cc];
    Vector ginnov(m);
    matvec_transpose_accum(c.gain, gx_post, 1.0, ginnov);

    // K rows came from SPD solves against P_zz = L_zz L_zzᵀ
    Matrix p_xz_bar(n, m);
    {
        Vector row(m);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t cc = 0; cc < m; ++cc) row[cc] = k_bar(r, cc);
            Vector sol = solve_lower_transpose(c.l_zz, solve_lower(c.l_zz, row));
            for (std::size_t cc = 0; cc < m; ++cc) p_xz_bar(r, cc) = sol[cc];
        }
    }
    Matrix b_bar = c.gain.transpose() * p_xz_bar;
    b_bar *= -1.0;
    Matrix l_zz_bar = (b_bar + b_bar.transpose()) * c.l_zz;

    // innovation-covariance branch
    Vector raw_pzz_bar = spd_head_backward(c.raw_Pzz, l_zz_bar, m);
    linear_backward(params.head_Pzz, c.h_Pzz_new, raw_pzz_bar, grads.head_Pzz, gh_pzz_new);
    Vector gu_upd(2 * m + hd);
    gru_backward(params.gru_Pzz, c.g_Pzz, gh_pzz_new, grads.gru_Pzz, gu_upd, bs.gh_Pzz);

    // cross-covariance branch
    Vector raw_pxz_bar(n * m);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t cc = 0; cc < m; ++cc) raw_pxz_bar[r * m + cc] = p_xz_bar(r, cc);
    linear_backward(params.head_Pxz, c.h_Pxz_new, raw_pxz_bar, grads.head_Pxz, gh_pxz_new);
    gru_backward(params.gru_Pxz, c.g_Pxz, gh_pxz_new, grads.gru_Pxz, gu_upd, bs.gh_Pxz);

    // split u_upd = [F1, F2, h_fuse]; F2 is pure measurement data
    Vector gf1(m);
    for (std::size_t i = 0; i < m; ++i) gf1[i] = gu_upd[i];
    for (std::size_t i = 0; i < hd; ++i) gh_fuse_new[i] += gu_upd[2 * m + i];
    squash_backward_accum(c.g_Pxz.x.data(), gf1, ginnov);  // F1 = tanh(innov)

    // z_hat = Σ ω_k h(χ_k); innov = z − z_hat
    Vector gz_hat(m);
    for (std::size_t i = 0; i < m; ++i) gz_hat[i] = -ginnov[i];
    Vector gw(2 * n);
    Matrix s_pred_bar(n, n);
    for (std::size_t k = 0; k < 2 * n; ++k) {
        gw[k] += c.g_img[k].dot(gz_hat);
        const Matrix jh = model.h_jacobian(c.chi_u[k]);
        Vector gchi_u(n);
        matvec_transpose_accum(jh, gz_hat, c.weights[k], gchi_u);
        gx_prior += gchi_u;
        const std::size_t col = k < n ? k : k - n;
        const double sgn = k < n ? scale : -scale;
        for (std::size_t r = 0; r < n; ++r) s_pred_bar(r, col) += sgn * gchi_u[r];
    }

    // S_pred = chol(P_pred + jitter)
    const Matrix p_pred_bar = cholesky_reverse(c.s_pred, s_pred_bar);
    const Matrix p_sym = p_pred_bar + p_pred_bar.transpose();

    // P_pred = Σ ω ξ̄ ξ̄ᵀ + L_W L_Wᵀ
    const Matrix l_w_bar = p_sym * c.l_w;
    std::vector<Vector> gxi(2 * n, Vector(n));
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const Vector dev = c.xi[k] - c.x_prior;
        gw[k] += quad_form(p_pred_bar, dev);
        Vector gdev = p_sym * dev;
        gdev *= c.weights[k];
        gxi[k] += gdev;
        gx_prior -= gdev;
    }

    // learned process-noise head reads the fusion state
    Vector raw_q_bar = spd_head_backward(c.raw_Q, l_w_bar, n);
    linear_backward(params.head_Q, c.h_fuse_new, raw_q_bar, grads.head_Q, gh_fuse_new);
    Vector gu_fuse(2 * hd);
    gru_backward(params.gru_fuse, c.g_fuse, gh_fuse_new, grads.gru_fuse, gu_fuse, bs.gh_fuse);
    for (std::size_t i = 0; i < hd; ++i) {
        gh_s_new[i] += gu_fuse[i];
        gh_w_new[i] += gu_fuse[hd + i];
    }

    // x_prior = Σ ω_k ξ_k (gx_prior is complete at this point)
    for (std::size_t k = 0; k < 2 * n; ++k) {
        gw[k] += c.xi[k].dot(gx_prior);
        for (std::size_t i = 0; i < n; ++i) gxi[k][i] += c.weights[k] * gx_prior[i];
    }

    // ξ = f(χ); χ = x_post_prev ± √n (spread column)
    Matrix s_spread_bar(n, n);
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const Matrix jf = model.f_jacobian(c.chi[k]);
        Vector gchi(n);
        matvec_transpose_accum(jf, gxi[k], 1.0, gchi);
        gx_center += gchi;
        const std::size_t col = k < n ? k : k - n;
        const double sgn = k < n ? scale : -scale;
        for (std::size_t r = 0; r < n; ++r) s_spread_bar(r, col) += sgn * gchi[r];
    }

    // weights branch (softmax over the head logits)
    Vector raw_w_bar = softmax_backward(c.weights, gw);
    linear_backward(params.head_w, c.h_w_new, raw_w_bar, grads.head_w, gh_w_new);
    Vector gu_pred(2 * n);
    gru_backward(params.gru_w, c.g_w, gh_w_new, grads.gru_w, gu_pred, bs.gh_w);

    // spread branch
    Vector raw_s_bar = spd_head_backward(c.raw_S, s_spread_bar, n);
    linear_backward(params.head_S, c.h_S_new, raw_s_bar, grads.head_S, gh_s_new);
    gru_backward(params.gru_S, c.g_S, gh_s_new, grads.gru_S, gu_pred, bs.gh_S);

    // split u_pred = [tanh(F3), tanh(F4)] and push through the squashing
    Vector gf3(n), gf4(n);
    for (std::size_t i = 0; i < n; ++i) {
        gf3[i] = gu_pred[i];
        gf4[i] = gu_pred[n + i];
    }
    Vector gf3_raw(n), gf4_raw(n);
    squash_backward_accum(c.g_S.x.data(), gf3, gf3_raw);
    squash_backward_accum(c.g_S.x.data() + n, gf4, gf4_raw);

    // F3 = x_post_prev − x_prior_prev, F4 = x_post_prev − x_post_prev2
    gx_center += gf3_raw;
    gx_center += gf4_raw;

    bs.gx_post = std::move(gx_center);
    bs.gx_prior_prev = std::move(gf3_raw *= -1.0);
    bs.gx_post_prev2 = std::move(gf4_raw *= -1.0);
}

}  // namespace

double ckfnet_bptt(const CkfNetParams& params, const StateSpaceModel& model,
                   const std::vector<Vector>& measurements, const std::vector<Vector>& truths,
                   const Vector& x0, CkfNetParams& grads, BpttWorkspace& ws) {
    if (measurements.size() != truths.size())
        throw std::invalid_argument("ckfnet_bptt: measurement/truth length mismatch");
    const std::size_t T = measurements.size();
    if (T == 0) throw std::invalid_argument("ckfnet_bptt: empty trajectory");
    ws.steps.resize(T);

    CkfNetState state = init_ckfnet_state(params, x0);
    double loss = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        CkfNetPrediction pred = ckfnet_predict(state, params, model, &ws.steps[i]);
        const Vector post = ckfnet_update(state, pred, params, model, measurements[i], &ws.steps[i]);
        const Vector err = post - truths[i];
        loss += err.dot(err);
    }
    loss /= static_cast<double>(T);

    BackState bs(params.n, params.hidden_dim);
    const double w = 2.0 / static_cast<double>(T);
    for (std::size_t ii = T; ii-- > 0;) {
        Vector dl = ws.steps[ii].x_post - truths[ii];
        dl *= w;
        backward_step(params, model, ws.steps[ii], dl, bs, grads);
    }
    return loss;
}

}  // namespace ckfnet
