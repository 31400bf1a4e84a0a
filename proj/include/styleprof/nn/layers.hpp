#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "styleprof/random.hpp"

// Differentiable building blocks. Every forward has a matching backward that
// accumulates into both the parameter gradients and the input gradient, so
// callers zero their buffers. Matrices are row-major; W is [out, in].

namespace styleprof::nn {

using Vec = std::vector<double>;
using CSpan = std::span<const double>;
using MSpan = std::span<double>;

void init_uniform(MSpan values, double bound, Rng& rng);

// --- dense --------------------------------------------------------------------

void dense_forward(CSpan W, CSpan b, CSpan x, MSpan y);
void dense_backward(CSpan W, CSpan x, CSpan dy, MSpan dW, MSpan db, MSpan dx);

// --- elementwise --------------------------------------------------------------

void relu_forward(CSpan x, MSpan y);
void relu_backward(CSpan y, CSpan dy, MSpan dx);

/// Inverted dropout: kept units are scaled by 1/(1-rate). mask holds the
/// per-unit multiplier (0 or 1/(1-rate)).
void dropout_mask(double rate, Rng& rng, MSpan mask);

// --- layer norm ---------------------------------------------------------------

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
    Vec xhat;
    double inv_std = 0.0;
};

void layer_norm_forward(CSpan gamma, CSpan beta, CSpan x, MSpan y, LayerNormCache& cache);
void layer_norm_backward(CSpan gamma, const LayerNormCache& cache, CSpan dy, MSpan dgamma,
                         MSpan dbeta, MSpan dx);

// --- softmax / cross-entropy --------------------------------------------------------

std::array<double, 2> softmax2(double z0, double z1);
void softmax(CSpan z, MSpan p);
/// Returns -log p[label]; dz = p - onehot(label).
double softmax_ce(CSpan z, std::size_t label, MSpan p, MSpan dz);

// --- embedding ------------------------------------------------------------------

/// rows[t] = table[ids[t]], each of width dim.
void embedding_forward(CSpan table, std::size_t dim, std::span<const std::int32_t> ids, MSpan rows);
/// dtable[ids[t]] += drows[t]; rows listed in `skip_id` get no gradient.
void embedding_backward(std::size_t dim, std::span<const std::int32_t> ids, CSpan drows,
                        MSpan dtable, std::int32_t skip_id = -1);

// --- 1-d convolution with global max pooling ------------------------------------------

/// Valid convolution over `len` real positions of a sequence padded with zero
/// vectors up to `padded_len`. Windows lying entirely in padding reduce to the
/// bias. out[f] = relu(max over windows of (W[f] . window + b[f])).
struct ConvPoolCache {
    std::vector<std::int64_t> argmax;  // window start per filter, -1 = all-padding window
    Vec pooled_pre;                    // pre-activation max per filter
};

void conv_pool_forward(CSpan W, CSpan b, std::size_t filters, std::size_t kernel, std::size_t dim,
                       CSpan x, std::size_t len, std::size_t padded_len, MSpan out,
                       ConvPoolCache& cache);
void conv_pool_backward(CSpan W, std::size_t filters, std::size_t kernel, std::size_t dim, CSpan x,
                        std::size_t len, const ConvPoolCache& cache, CSpan dout, MSpan dW, MSpan db,
                        MSpan dx);

// --- LSTM ----------------------------------------------------------------------------

/// Gate order in Wx [4H, E], Wh [4H, H], b [4H]: input, forget, cell, output.
struct LstmCache {
    std::size_t steps = 0;
    Vec gates;  // T x 4H post-activation
    Vec c;      // T x H
    Vec h;      // T x H (in processing order)
    Vec tanh_c;
};

/// xs is T x E in reading order; hs receives T x H in reading order. When
/// `reverse` is set the cell runs from the last position to the first.
void lstm_forward(CSpan Wx, CSpan Wh, CSpan b, std::size_t hidden, std::size_t input, CSpan xs,
                  std::size_t steps, bool reverse, MSpan hs, LstmCache& cache);
void lstm_backward(CSpan Wx, CSpan Wh, std::size_t hidden, std::size_t input, CSpan xs,
                   bool reverse, const LstmCache& cache, CSpan dhs, MSpan dWx, MSpan dWh, MSpan db,
                   MSpan dxs);

// --- attention pooling --------------------------------------------------------------------

/// u_t = tanh(W h_t + b), s_t = u_t . ctx, alpha = softmax(s), out = sum alpha_t h_t.
struct AttentionCache {
    Vec u;      // T x A
    Vec alpha;  // T
};

void attention_forward(CSpan W, CSpan b, CSpan ctx, std::size_t att_dim, std::size_t dim, CSpan hs,
                       std::size_t steps, MSpan out, AttentionCache& cache);
void attention_backward(CSpan W, CSpan ctx, std::size_t att_dim, std::size_t dim, CSpan hs,
                        std::size_t steps, const AttentionCache& cache, CSpan dout, MSpan dW,
                        MSpan db, MSpan dctx, MSpan dhs);

}  // namespace styleprof::nn
