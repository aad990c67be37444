#include "ckfnet/gru.hpp"

#include <cmath>

namespace ckfnet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Matrix& m, double k, RngStream& rng) {
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rng.next_uniform_in(-k, k);
}

}  // namespace

GruCellParams GruCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    GruCellParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.W_z = Matrix(hidden_dim, input_dim);
    p.W_r = Matrix(hidden_dim, input_dim);
    p.W_h = Matrix(hidden_dim, input_dim);
    p.U_z = Matrix(hidden_dim, hidden_dim);
    p.U_r = Matrix(hidden_dim, hidden_dim);
    p.U_h = Matrix(hidden_dim, hidden_dim);
    p.b_z = Vector(hidden_dim);
    p.b_r = Vector(hidden_dim);
    p.b_h = Vector(hidden_dim);
    return p;
}

Vector gru_forward(const GruCellParams& p, const Vector& x, const Vector& h_prev,
                   GruCache* cache) {
    const std::size_t hd = p.hidden_dim;

    Vector z = p.b_z;
    matvec_accum(p.W_z, x, 1.0, z);
    matvec_accum(p.U_z, h_prev, 1.0, z);
    for (std::size_t i = 0; i < hd; ++i) z[i] = sigmoid(z[i]);

    Vector r = p.b_r;
    matvec_accum(p.W_r, x, 1.0, r);
    matvec_accum(p.U_r, h_prev, 1.0, r);
    for (std::size_t i = 0; i < hd; ++i) r[i] = sigmoid(r[i]);

    Vector rh(hd);
    for (std::size_t i = 0; i < hd; ++i) rh[i] = r[i] * h_prev[i];

    Vector h_tilde = p.b_h;
    matvec_accum(p.W_h, x, 1.0, h_tilde);
    matvec_accum(p.U_h, rh, 1.0, h_tilde);
    for (std::size_t i = 0; i < hd; ++i) h_tilde[i] = std::tanh(h_tilde[i]);

    Vector h_new(hd);
    for (std::size_t i = 0; i < hd; ++i)
        h_new[i] = (1.0 - z[i]) * h_prev[i] + z[i] * h_tilde[i];

    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->h_tilde = std::move(h_tilde);
        cache->rh = std::move(rh);
    }
    return h_new;
}

void gru_backward(const GruCellParams& p, const GruCache& cache, const Vector& dh_new,
                  GruCellParams& grads, Vector& dx, Vector& dh_prev) {
    const std::size_t hd = p.hidden_dim;
    const Vector& z = cache.z;
    const Vector& r = cache.r;
    const Vector& ht = cache.h_tilde;

    Vector da_h(hd);  // gradient at the tanh pre-activation
    Vector dz(hd);
    for (std::size_t i = 0; i < hd; ++i) {
        da_h[i] = dh_new[i] * z[i] * (1.0 - ht[i] * ht[i]);
        dz[i] = dh_new[i] * (ht[i] - cache.h_prev[i]);
        dh_prev[i] += dh_new[i] * (1.0 - z[i]);
    }

    // candidate path
    for (std::size_t i = 0; i < hd; ++i) {
        const double g = da_h[i];
        if (g != 0.0) {
            double* wrow = grads.W_h.row(i);
            const double* xd = cache.x.data();
            for (std::size_t c = 0; c < p.input_dim; ++c) wrow[c] += g * xd[c];
            double* urow = grads.U_h.row(i);
            const double* rhd = cache.rh.data();
            for (std::size_t c = 0; c < hd; ++c) urow[c] += g * rhd[c];
        }
        grads.b_h[i] += g;
    }
    matvec_transpose_accum(p.W_h, da_h, 1.0, dx);
    Vector drh(hd);
    matvec_transpose_accum(p.U_h, da_h, 1.0, drh);
    Vector dr(hd);
    for (std::size_t i = 0; i < hd; ++i) {
        dr[i] = drh[i] * cache.h_prev[i];
        dh_prev[i] += drh[i] * r[i];
    }

    // update gate
    Vector da_z(hd);
    for (std::size_t i = 0; i < hd; ++i) da_z[i] = dz[i] * z[i] * (1.0 - z[i]);
    for (std::size_t i = 0; i < hd; ++i) {
        const double g = da_z[i];
        if (g != 0.0) {
            double* wrow = grads.W_z.row(i);
            const double* xd = cache.x.data();
            for (std::size_t c = 0; c < p.input_dim; ++c) wrow[c] += g * xd[c];
            double* urow = grads.U_z.row(i);
            const double* hp = cache.h_prev.data();
            for (std::size_t c = 0; c < hd; ++c) urow[c] += g * hp[c];
        }
        grads.b_z[i] += g;
    }
    matvec_transpose_accum(p.W_z, da_z, 1.0, dx);
    matvec_transpose_accum(p.U_z, da_z, 1.0, dh_prev);

    // reset gate
    Vector da_r(hd);
    for (std::size_t i = 0; i < hd; ++i) da_r[i] = dr[i] * r[i] * (1.0 - r[i]);
    for (std::size_t i = 0; i < hd; ++i) {
        const double g = da_r[i];
        if (g != 0.0) {
            double* wrow = grads.W_r.row(i);
            const double* xd = cache.x.data();
            for (std::size_t c = 0; c < p.input_dim; ++c) wrow[c] += g * xd[c];
            double* urow = grads.U_r.row(i);
            const double* hp = cache.h_prev.data();
            for (std::size_t c = 0; c < hd; ++c) urow[c] += g * hp[c];
        }
        grads.b_r[i] += g;
    }
    matvec_transpose_accum(p.W_r, da_r, 1.0, dx);
    matvec_transpose_accum(p.U_r, da_r, 1.0, dh_prev);
}

LinearHeadParams LinearHeadParams::zeros(std::size_t out_dim, std::size_t in_dim) {
    LinearHeadParams p;
    p.W = Matrix(out_dim, in_dim);
    p.b = Vector(out_dim);
    return p;
}

Vector linear_forward(const LinearHeadParams& p, const Vector& x) {
    Vector y = p.b;
    matvec_accum(p.W, x, 1.0, y);
    return y;
}

void linear_backward(const LinearHeadParams& p, const Vector& x, const Vector& dy,
                     LinearHeadParams& grads, Vector& dx) {
    for (std::size_t r = 0; r < p.W.rows(); ++r) {
        const double g = dy[r];
        grads.b[r] += g;
        if (g == 0.0) continue;
        double* wrow = grads.W.row(r);
        const double* xd = x.data();
        for (std::size_t c = 0; c < p.W.cols(); ++c) wrow[c] += g * xd[c];
    }
    matvec_transpose_accum(p.W, dy, 1.0, dx);
}

void init_gru(GruCellParams& p, double k, RngStream& rng) {
    fill_uniform(p.W_z, k, rng);
    fill_uniform(p.W_r, k, rng);
    fill_uniform(p.W_h, k, rng);
    fill_uniform(p.U_z, k, rng);
    fill_uniform(p.U_r, k, rng);
    fill_uniform(p.U_h, k, rng);
    p.b_z.fill(0.0);
    p.b_r.fill(0.0);
    p.b_h.fill(0.0);
}

void init_linear(LinearHeadParams& p, double k, RngStream& rng) {
    fill_uniform(p.W, k, rng);
    p.b.fill(0.0);
}

}  // namespace ckfnet
