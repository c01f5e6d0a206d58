#ifndef SNOWFUSE_NN_OPS_HPP
#define SNOWFUSE_NN_OPS_HPP

#include <span>
#include <vector>

#include "snowfuse/nn/tensor.hpp"

namespace snowfuse::nn {

/**
 * Cross-correlation of input [C_in,H,W] with weight [C_out,C_in,k,k] (k odd),
 * zero padding. Output size is floor((H + 2p - k) / stride) + 1. Each output
 * element accumulates its terms in (c_in, kh, kw) order, starting from 0.
 */
Tensor conv2d(const Tensor& input, const Tensor& weight, std::size_t stride = 1, std::size_t padding = 0);

/// Per-channel convolution: weight [C,1,k,k] applied to input [C,H,W].
Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, std::size_t stride = 1, std::size_t padding = 0);

/// Adds bias [C] to every pixel of channel c of input [C,H,W].
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);

/// weight [G,F] * input [F] + bias [G].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& t);

/// [C,H,W] -> [C], spatial mean per channel.
Tensor global_avg_pool(const Tensor& t);

/// Flattens and joins the inputs in order; output is 1-D.
Tensor concat(const std::vector<Tensor>& parts);

/// mean((pred - target)^2) as a [1] tensor.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// sum_i weights[i] * t[i] as a [1] tensor; `weights` is a constant.
Tensor weighted_sum(const Tensor& t, std::span<const double> weights);

/// Gate order in the stacked weights: input, forget, candidate, output.
struct LstmWeights {
  Tensor w_ih;  // [4H, F]
  Tensor w_hh;  // [4H, H]
  Tensor bias;  // [4H]
};

/**
 * Runs the LSTM recurrence over inputs [T,F] from state (h0, c0) and
 * returns the final hidden state [H]. Backward is through time.
 */
Tensor lstm_sequence(const Tensor& inputs, const LstmWeights& weights, const Tensor& h0, const Tensor& c0);

}  // namespace snowfuse::nn

#endif  // SNOWFUSE_NN_OPS_HPP
