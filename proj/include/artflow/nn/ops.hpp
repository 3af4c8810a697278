// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "artflow/nn/autograd.hpp"

// Differentiable operators. Images are NCHW, vectors are (batch, dim) and
// scalar results have shape {1}. All operators are instantiated for float
// (training) and double (gradient verification).
namespace artflow::nn {

// Elementwise arithmetic; operands must have identical shapes.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T s);
template <typename T> Var<T> add_scalar(const Var<T>& a, T s);

/// x[B, D] + row[1, D] broadcast over the batch.
template <typename T> Var<T> add_row(const Var<T>& x, const Var<T>& row);

template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> leaky_relu(const Var<T>& a, T slope);
template <typename T> Var<T> tanh(const Var<T>& a);
template <typename T> Var<T> exp(const Var<T>& a);

// Reductions to shape {1}.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);
/// mean |a - b|
template <typename T> Var<T> l1_loss(const Var<T>& a, const Var<T>& b);
/// mean max(0, 1 - a)
template <typename T> Var<T> hinge_real(const Var<T>& a);
/// mean max(0, 1 + a)
template <typename T> Var<T> hinge_fake(const Var<T>& a);
/// Batch mean of 0.5 * sum_j (mu_j^2 + exp(logvar_j) - logvar_j - 1).
template <typename T> Var<T> kl_divergence(const Var<T>& mu, const Var<T>& logvar);

// Shape manipulation.
template <typename T> Var<T> slice_cols(const Var<T>& x, int start, int len);
template <typename T> Var<T> concat_channels(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> reshape(const Var<T>& x, std::vector<int> shape);

// Network layers.
/// Zero-padded 2-D convolution. `bias` may be undefined.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad);
/// x[B, in] * weight[out, in]^T + bias[out]
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);
template <typename T> Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5));
/// Instance-normalizes x[B, C, H, W] then applies per-channel scale and bias
/// read from params[B or 1, P] at columns [offset, offset + C) and
/// [offset + C, offset + 2C).
template <typename T>
Var<T> adain(const Var<T>& x, const Var<T>& params, int offset, T eps = T(1e-5));
template <typename T> Var<T> upsample_nearest2x(const Var<T>& x);
template <typename T> Var<T> avg_pool2x(const Var<T>& x);
/// x[B, C, H, W] -> [B, C]
template <typename T> Var<T> global_avg_pool(const Var<T>& x);

}  // namespace artflow::nn
