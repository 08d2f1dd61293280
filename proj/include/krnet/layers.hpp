#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "krnet/tensor.hpp"

namespace krnet {

enum class ParamKind { ConvWeight, ConvBias, BnGamma, BnBeta, PreluAlpha };

// A learnable array paired with its gradient accumulator and optimizer
// momentum buffer. The three arrays are always shape-identical. `id` is the
// parameter's ordinal in the network's deterministic topological ordering,
// assigned by build_network.
struct Param {
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> momentum;
    ParamKind kind = ParamKind::ConvWeight;
    int id = -1;
    std::string name;

    Param() = default;
    Param(std::size_t count, ParamKind kind_) : value(count), grad(count), momentum(count), kind(kind_) {}

    std::size_t size() const { return value.size(); }
    void zero_grad();
};

// Same-shape 2-D convolution: stride 1, zero padding (f-1)/2, so spatial
// dimensions are always preserved. Weights are (n_out, c_in, f, f) flat.
//
// A layer with `transposed` set is applied through conv2d_transpose_forward,
// which maps n_out input channels to c_in output channels (the adjoint
// direction); its bias therefore has c_in entries instead of n_out.
struct ConvLayer {
    int f = 1;
    int n_out = 1;
    int c_in = 1;
    int padding = 0;  // always (f-1)/2
    bool transposed = false;
    Param weights;
    Param bias;

    ConvLayer() = default;
    ConvLayer(int f_, int n_out_, int c_in_, bool transposed_ = false);

    std::size_t weight_index(int o, int c, int i, int j) const {
        return ((static_cast<std::size_t>(o) * static_cast<std::size_t>(c_in) +
                 static_cast<std::size_t>(c)) *
                    static_cast<std::size_t>(f) +
                static_cast<std::size_t>(i)) *
                   static_cast<std::size_t>(f) +
               static_cast<std::size_t>(j);
    }
};

enum class BnMode { Train, Infer };

// Per-channel batch normalization. Train mode standardizes over (n, h, w) with
// the biased variance and updates the running statistics as
// running <- (1 - momentum) * running + momentum * batch. Infer mode is a
// deterministic per-channel affine map built from the running statistics.
struct BatchNorm {
    int channels = 1;
    double eps = 1e-5;
    double momentum = 0.1;  // running-stat update rate, in (0, 1]
    BnMode mode = BnMode::Train;
    Param gamma;
    Param beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    BatchNorm() = default;
    explicit BatchNorm(int channels_, double eps_ = 1e-5, double momentum_ = 0.1);
};

// Batch statistics a training-mode forward computed; the backward pass needs
// them.
struct BatchNormCache {
    std::vector<double> inv_std;  // 1 / sqrt(var + eps), per channel
    Tensor4 x_hat;
    bool valid = false;
};

// Parametric ReLU with one negative-slope coefficient per channel. The
// subgradient at exactly zero takes the x >= 0 branch (slope 1).
struct PRelu {
    int channels = 1;
    Param alpha;

    PRelu() = default;
    explicit PRelu(int channels_, double init = 0.25);
};

struct ConvGrads {
    Tensor4 input;
    std::vector<double> weights;
    std::vector<double> bias;
};

struct BnGrads {
    Tensor4 input;
    std::vector<double> gamma;
    std::vector<double> beta;
};

struct PReluGrads {
    Tensor4 input;
    std::vector<double> alpha;
};

// out[b,o,y,x] = bias[o] + sum_{c,i,j} w[o,c,i,j] * padded_in[b,c,y+i,x+j].
Tensor4 conv2d_forward(const Tensor4& input, const ConvLayer& layer);

// Exact partial derivatives of sum(grad_out . forward) w.r.t. input, weights
// and bias.
ConvGrads conv2d_backward(const Tensor4& input, const ConvLayer& layer, const Tensor4& grad_out);

// The adjoint of conv2d_forward under shared weights (channel roles swapped):
// correlation with the spatially flipped, channel-transposed kernel. Maps
// n_out input channels to c_in output channels; bias must have c_in entries.
Tensor4 conv2d_transpose_forward(const Tensor4& input, const ConvLayer& layer);

ConvGrads conv2d_transpose_backward(const Tensor4& input, const ConvLayer& layer,
                                    const Tensor4& grad_out);

// Train mode standardizes with batch statistics (and fills `cache` when given);
// Infer mode uses the running statistics only.
Tensor4 batchnorm_forward(const Tensor4& input, BatchNorm& bn, BatchNormCache* cache = nullptr);

BnGrads batchnorm_backward(const Tensor4& grad_out, const BatchNorm& bn,
                           const BatchNormCache& cache);

Tensor4 prelu_forward(const Tensor4& input, const PRelu& p);

PReluGrads prelu_backward(const Tensor4& input, const PRelu& p, const Tensor4& grad_out);

// Element-wise sum; backward passes grad_out through to both operands
// unchanged. Shapes must match exactly.
Tensor4 eltwise_add(const Tensor4& a, const Tensor4& b);

}  // namespace krnet
