#include "styleprof/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace styleprof::nn {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void init_uniform(MSpan values, double bound, Rng& rng) {
    for (double& v : values) v = rng.uniform(-bound, bound);
}

void dense_forward(CSpan W, CSpan b, CSpan x, MSpan y) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < y.size(); ++o) y[o] = b[o] + dot(W.data() + o * in, x.data(), in);
}

void dense_backward(CSpan W, CSpan x, CSpan dy, MSpan dW, MSpan db, MSpan dx) {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < dy.size(); ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        db[o] += g;
        axpy(g, x.data(), dW.data() + o * in, in);
        if (!dx.empty()) axpy(g, W.data() + o * in, dx.data(), in);
    }
}

void relu_forward(CSpan x, MSpan y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(CSpan y, CSpan dy, MSpan dx) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] > 0.0) dx[i] += dy[i];
    }
}

void dropout_mask(double rate, Rng& rng, MSpan mask) {
    if (rate <= 0.0) {
        std::fill(mask.begin(), mask.end(), 1.0);
        return;
    }
    const double keep = 1.0 / (1.0 - rate);
    for (double& m : mask) m = rng.uniform01() < rate ? 0.0 : keep;
}

void layer_norm_forward(CSpan gamma, CSpan beta, CSpan x, MSpan y, LayerNormCache& cache) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    cache.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.xhat.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        cache.xhat[i] = (x[i] - mean) * cache.inv_std;
        y[i] = gamma[i] * cache.xhat[i] + beta[i];
    }
}

void layer_norm_backward(CSpan gamma, const LayerNormCache& cache, CSpan dy, MSpan dgamma,
                         MSpan dbeta, MSpan dx) {
    const std::size_t n = dy.size();
    double sum_d = 0.0, sum_dx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dgamma[i] += dy[i] * cache.xhat[i];
        dbeta[i] += dy[i];
        const double d = dy[i] * gamma[i];
        sum_d += d;
        sum_dx += d * cache.xhat[i];
    }
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = dy[i] * gamma[i];
        dx[i] += cache.inv_std / nn * (nn * d - sum_d - cache.xhat[i] * sum_dx);
    }
}

std::array<double, 2> softmax2(double z0, double z1) {
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const double s = e0 + e1;
    return {e0 / s, e1 / s};
}

void softmax(CSpan z, MSpan p) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        s += p[i];
    }
    for (double& v : p) v /= s;
}

double softmax_ce(CSpan z, std::size_t label, MSpan p, MSpan dz) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double log_s = std::log(s);
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m - log_s);
        dz[i] = p[i] - (i == label ? 1.0 : 0.0);
    }
    return -(z[label] - m - log_s);
}

void embedding_forward(CSpan table, std::size_t dim, std::span<const std::int32_t> ids, MSpan rows) {
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const auto* src = table.data() + static_cast<std::size_t>(ids[t]) * dim;
        std::copy(src, src + dim, rows.data() + t * dim);
    }
}

void embedding_backward(std::size_t dim, std::span<const std::int32_t> ids, CSpan drows,
                        MSpan dtable, std::int32_t skip_id) {
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] == skip_id) continue;
        axpy(1.0, drows.data() + t * dim, dtable.data() + static_cast<std::size_t>(ids[t]) * dim,
             dim);
    }
}

void conv_pool_forward(CSpan W, CSpan b, std::size_t filters, std::size_t kernel, std::size_t dim,
                       CSpan x, std::size_t len, std::size_t padded_len, MSpan out,
                       ConvPoolCache& cache) {
    cache.argmax.assign(filters, -1);
    cache.pooled_pre.assign(filters, -std::numeric_limits<double>::infinity());
    const std::size_t row = kernel * dim;
    const std::size_t last_start = padded_len - kernel;  // padded_len >= kernel
    const std::size_t real_windows = std::min(len, last_start + 1);
    const bool has_pad_window = len <= last_start;
    for (std::size_t f = 0; f < filters; ++f) {
        const double* w = W.data() + f * row;
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t arg = -1;
        for (std::size_t s = 0; s < real_windows; ++s) {
            const std::size_t width = std::min(kernel, len - s) * dim;
            const double v = b[f] + dot(w, x.data() + s * dim, width);
            if (v > best) {
                best = v;
                arg = static_cast<std::int64_t>(s);
            }
        }
        if (has_pad_window && b[f] > best) {
            best = b[f];
            arg = -1;
        }
        cache.argmax[f] = arg;
        cache.pooled_pre[f] = best;
        out[f] = best > 0.0 ? best : 0.0;
    }
}

void conv_pool_backward(CSpan W, std::size_t filters, std::size_t kernel, std::size_t dim, CSpan x,
                        std::size_t len, const ConvPoolCache& cache, CSpan dout, MSpan dW, MSpan db,
                        MSpan dx) {
    const std::size_t row = kernel * dim;
    for (std::size_t f = 0; f < filters; ++f) {
        if (!(cache.pooled_pre[f] > 0.0)) continue;
        const double g = dout[f];
        db[f] += g;
        if (cache.argmax[f] < 0) continue;
        const auto s = static_cast<std::size_t>(cache.argmax[f]);
        const std::size_t width = std::min(kernel, len - s) * dim;
        axpy(g, x.data() + s * dim, dW.data() + f * row, width);
        if (!dx.empty()) axpy(g, W.data() + f * row, dx.data() + s * dim, width);
    }
}

void lstm_forward(CSpan Wx, CSpan Wh, CSpan b, std::size_t hidden, std::size_t input, CSpan xs,
                  std::size_t steps, bool reverse, MSpan hs, LstmCache& cache) {
    const std::size_t H = hidden, G = 4 * hidden;
    cache.steps = steps;
    cache.gates.assign(steps * G, 0.0);
    cache.c.assign(steps * H, 0.0);
    cache.h.assign(steps * H, 0.0);
    cache.tanh_c.assign(steps * H, 0.0);
    Vec a(G);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t t = reverse ? steps - 1 - s : s;
        const double* x = xs.data() + t * input;
        const double* h_prev = s > 0 ? cache.h.data() + (s - 1) * H : nullptr;
        const double* c_prev = s > 0 ? cache.c.data() + (s - 1) * H : nullptr;
        for (std::size_t r = 0; r < G; ++r) {
            double v = b[r] + dot(Wx.data() + r * input, x, input);
            if (h_prev) v += dot(Wh.data() + r * H, h_prev, H);
            a[r] = v;
        }
        double* gate = cache.gates.data() + s * G;
        for (std::size_t k = 0; k < H; ++k) {
            gate[k] = sigmoid(a[k]);
            gate[H + k] = sigmoid(a[H + k]);
            gate[2 * H + k] = std::tanh(a[2 * H + k]);
            gate[3 * H + k] = sigmoid(a[3 * H + k]);
        }
        double* c = cache.c.data() + s * H;
        double* h = cache.h.data() + s * H;
        double* tc = cache.tanh_c.data() + s * H;
        for (std::size_t k = 0; k < H; ++k) {
            c[k] = gate[k] * gate[2 * H + k] + (c_prev ? gate[H + k] * c_prev[k] : 0.0);
            tc[k] = std::tanh(c[k]);
            h[k] = gate[3 * H + k] * tc[k];
        }
        std::copy(h, h + H, hs.data() + t * H);
    }
}

void lstm_backward(CSpan Wx, CSpan Wh, std::size_t hidden, std::size_t input, CSpan xs,
                   bool reverse, const LstmCache& cache, CSpan dhs, MSpan dWx, MSpan dWh, MSpan db,
                   MSpan dxs) {
    const std::size_t H = hidden, G = 4 * hidden, steps = cache.steps;
    Vec dh_next(H, 0.0), dc_next(H, 0.0), da(G);
    for (std::size_t s = steps; s-- > 0;) {
        const std::size_t t = reverse ? steps - 1 - s : s;
        const double* gate = cache.gates.data() + s * G;
        const double* tc = cache.tanh_c.data() + s * H;
        const double* c_prev = s > 0 ? cache.c.data() + (s - 1) * H : nullptr;
        const double* h_prev = s > 0 ? cache.h.data() + (s - 1) * H : nullptr;
        for (std::size_t k = 0; k < H; ++k) {
            const double i = gate[k], f = gate[H + k], g = gate[2 * H + k], o = gate[3 * H + k];
            const double dh = dhs[t * H + k] + dh_next[k];
            const double dc = dh * o * (1.0 - tc[k] * tc[k]) + dc_next[k];
            da[k] = dc * g * i * (1.0 - i);
            da[H + k] = c_prev ? dc * c_prev[k] * f * (1.0 - f) : 0.0;
            da[2 * H + k] = dc * i * (1.0 - g * g);
            da[3 * H + k] = dh * tc[k] * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        const double* x = xs.data() + t * input;
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t r = 0; r < G; ++r) {
            const double g = da[r];
            if (g == 0.0) continue;
            db[r] += g;
            axpy(g, x, dWx.data() + r * input, input);
            if (!dxs.empty()) axpy(g, Wx.data() + r * input, dxs.data() + t * input, input);
            if (h_prev) {
                axpy(g, h_prev, dWh.data() + r * H, H);
                axpy(g, Wh.data() + r * H, dh_next.data(), H);
            }
        }
    }
}

void attention_forward(CSpan W, CSpan b, CSpan ctx, std::size_t att_dim, std::size_t dim, CSpan hs,
                       std::size_t steps, MSpan out, AttentionCache& cache) {
    cache.u.assign(steps * att_dim, 0.0);
    cache.alpha.assign(steps, 0.0);
    Vec scores(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        double* u = cache.u.data() + t * att_dim;
        dense_forward(W, b, hs.subspan(t * dim, dim), MSpan(u, att_dim));
        for (std::size_t a = 0; a < att_dim; ++a) u[a] = std::tanh(u[a]);
        scores[t] = dot(u, ctx.data(), att_dim);
    }
    softmax(scores, cache.alpha);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < steps; ++t) axpy(cache.alpha[t], hs.data() + t * dim, out.data(), dim);
}

void attention_backward(CSpan W, CSpan ctx, std::size_t att_dim, std::size_t dim, CSpan hs,
                        std::size_t steps, const AttentionCache& cache, CSpan dout, MSpan dW,
                        MSpan db, MSpan dctx, MSpan dhs) {
    Vec dalpha(steps);
    double weighted = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        dalpha[t] = dot(dout.data(), hs.data() + t * dim, dim);
        weighted += cache.alpha[t] * dalpha[t];
        axpy(cache.alpha[t], dout.data(), dhs.data() + t * dim, dim);
    }
    Vec dpre(att_dim);
    for (std::size_t t = 0; t < steps; ++t) {
        const double ds = cache.alpha[t] * (dalpha[t] - weighted);
        const double* u = cache.u.data() + t * att_dim;
        axpy(ds, u, dctx.data(), att_dim);
        for (std::size_t a = 0; a < att_dim; ++a) dpre[a] = ds * ctx[a] * (1.0 - u[a] * u[a]);
        dense_backward(W, hs.subspan(t * dim, dim), dpre, dW, db, dhs.subspan(t * dim, dim));
    }
}

}  // namespace styleprof::nn
