#include "krnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krnet/error.hpp"
#include "krnet/parallel.hpp"

namespace krnet {

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

namespace {

std::size_t conv_weight_count(int f, int n_out, int c_in) {
    if (f < 1 || f % 2 == 0)
        throw ConfigError("conv kernel size must be odd and positive, got " + std::to_string(f));
    if (n_out < 1 || c_in < 1)
        throw ConfigError("conv channel counts must be positive, got n_out=" +
                          std::to_string(n_out) + " c_in=" + std::to_string(c_in));
    return static_cast<std::size_t>(f) * static_cast<std::size_t>(f) *
           static_cast<std::size_t>(n_out) * static_cast<std::size_t>(c_in);
}

void require_channels(const Tensor4& t, int expected, const char* what) {
    if (t.c != expected)
        throw ConfigError(std::string(what) + ": input has " + std::to_string(t.c) +
                          " channels, layer expects " + std::to_string(expected));
}

}  // namespace

ConvLayer::ConvLayer(int f_, int n_out_, int c_in_, bool transposed_)
    : f(f_),
      n_out(n_out_),
      c_in(c_in_),
      padding((f_ - 1) / 2),
      transposed(transposed_),
      weights(conv_weight_count(f_, n_out_, c_in_), ParamKind::ConvWeight),
      bias(static_cast<std::size_t>(transposed_ ? c_in_ : n_out_), ParamKind::ConvBias) {}

BatchNorm::BatchNorm(int channels_, double eps_, double momentum_)
    : channels(channels_),
      eps(eps_),
      momentum(momentum_),
      gamma(static_cast<std::size_t>(channels_), ParamKind::BnGamma),
      beta(static_cast<std::size_t>(channels_), ParamKind::BnBeta),
      running_mean(static_cast<std::size_t>(channels_), 0.0),
      running_var(static_cast<std::size_t>(channels_), 1.0) {
    if (channels_ < 1) throw ConfigError("batch norm channel count must be positive");
    if (eps_ <= 0.0) throw ConfigError("batch norm eps must be positive");
    if (momentum_ <= 0.0 || momentum_ > 1.0)
        throw ConfigError("batch norm momentum must be in (0, 1]");
    std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
}

PRelu::PRelu(int channels_, double init)
    : channels(channels_), alpha(static_cast<std::size_t>(channels_), ParamKind::PreluAlpha) {
    if (channels_ < 1) throw ConfigError("prelu channel count must be positive");
    std::fill(alpha.value.begin(), alpha.value.end(), init);
}

Tensor4 conv2d_forward(const Tensor4& input, const ConvLayer& layer) {
    if (layer.transposed)
        throw ConfigError("conv2d_forward: layer is transposed, use conv2d_transpose_forward");
    require_channels(input, layer.c_in, "conv2d_forward");
    Tensor4 out(input.n, layer.n_out, input.h, input.w);
    const int f = layer.f, pad = layer.padding, height = input.h, width = input.w;
    const int c_in = layer.c_in;
    const std::size_t n_out = static_cast<std::size_t>(layer.n_out);
    const double* wv = layer.weights.value.data();
    const double* bv = layer.bias.value.data();
    // One (batch, output-channel) plane per index; writes are disjoint and the
    // per-element summation order is fixed.
    parallel_for(static_cast<std::size_t>(input.n) * n_out, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int b = static_cast<int>(t / n_out);
            const int o = static_cast<int>(t % n_out);
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    double acc = bv[o];
                    for (int c = 0; c < c_in; ++c) {
                        for (int i = 0; i < f; ++i) {
                            const int yy = y + i - pad;
                            if (yy < 0 || yy >= height) continue;
                            for (int j = 0; j < f; ++j) {
                                const int xx = x + j - pad;
                                if (xx < 0 || xx >= width) continue;
                                acc += wv[layer.weight_index(o, c, i, j)] * input.at(b, c, yy, xx);
                            }
                        }
                    }
                    out.at(b, o, y, x) = acc;
                }
            }
        }
    });
    return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const ConvLayer& layer, const Tensor4& grad_out) {
    if (layer.transposed)
        throw ConfigError("conv2d_backward: layer is transposed, use conv2d_transpose_backward");
    require_channels(input, layer.c_in, "conv2d_backward");
    const Tensor4 expected(input.n, layer.n_out, input.h, input.w);
    require_same_shape(grad_out, expected, "conv2d_backward grad_out");

    ConvGrads g;
    g.input = Tensor4::zeros_like(input);
    g.weights.assign(layer.weights.size(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);

    const int f = layer.f, pad = layer.padding, height = input.h, width = input.w;
    const int c_in = layer.c_in, n_out = layer.n_out, batches = input.n;
    const double* wv = layer.weights.value.data();

    parallel_for(static_cast<std::size_t>(batches) * c_in, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int b = static_cast<int>(t / static_cast<std::size_t>(c_in));
            const int c = static_cast<int>(t % static_cast<std::size_t>(c_in));
            for (int yy = 0; yy < height; ++yy) {
                for (int xx = 0; xx < width; ++xx) {
                    double acc = 0.0;
                    for (int o = 0; o < n_out; ++o) {
                        for (int i = 0; i < f; ++i) {
                            const int y = yy - i + pad;
                            if (y < 0 || y >= height) continue;
                            for (int j = 0; j < f; ++j) {
                                const int x = xx - j + pad;
                                if (x < 0 || x >= width) continue;
                                acc += grad_out.at(b, o, y, x) * wv[layer.weight_index(o, c, i, j)];
                            }
                        }
                    }
                    g.input.at(b, c, yy, xx) = acc;
                }
            }
        }
    });

    parallel_for(static_cast<std::size_t>(n_out), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int o = static_cast<int>(t);
            double bias_acc = 0.0;
            for (int b = 0; b < batches; ++b)
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x) bias_acc += grad_out.at(b, o, y, x);
            g.bias[static_cast<std::size_t>(o)] = bias_acc;
            for (int c = 0; c < c_in; ++c) {
                for (int i = 0; i < f; ++i) {
                    for (int j = 0; j < f; ++j) {
                        double acc = 0.0;
                        for (int b = 0; b < batches; ++b) {
                            for (int y = 0; y < height; ++y) {
                                const int yy = y + i - pad;
                                if (yy < 0 || yy >= height) continue;
                                for (int x = 0; x < width; ++x) {
                                    const int xx = x + j - pad;
                                    if (xx < 0 || xx >= width) continue;
                                    acc += grad_out.at(b, o, y, x) * input.at(b, c, yy, xx);
                                }
                            }
                        }
                        g.weights[layer.weight_index(o, c, i, j)] = acc;
                    }
                }
            }
        }
    });
    return g;
}

Tensor4 conv2d_transpose_forward(const Tensor4& input, const ConvLayer& layer) {
    if (!layer.transposed)
        throw ConfigError("conv2d_transpose_forward: layer is not transposed");
    require_channels(input, layer.n_out, "conv2d_transpose_forward");
    // Adjoint of conv2d_forward: correlate with the spatially flipped,
    // channel-transposed kernel, mapping n_out channels back to c_in.
    Tensor4 out(input.n, layer.c_in, input.h, input.w);
    const int f = layer.f, pad = layer.padding, height = input.h, width = input.w;
    const int n_out = layer.n_out;
    const std::size_t c_in = static_cast<std::size_t>(layer.c_in);
    const double* wv = layer.weights.value.data();
    const double* bv = layer.bias.value.data();
    parallel_for(static_cast<std::size_t>(input.n) * c_in, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int b = static_cast<int>(t / c_in);
            const int c = static_cast<int>(t % c_in);
            for (int yy = 0; yy < height; ++yy) {
                for (int xx = 0; xx < width; ++xx) {
                    double acc = bv[c];
                    for (int o = 0; o < n_out; ++o) {
                        for (int i = 0; i < f; ++i) {
                            const int y = yy - i + pad;
                            if (y < 0 || y >= height) continue;
                            for (int j = 0; j < f; ++j) {
                                const int x = xx - j + pad;
                                if (x < 0 || x >= width) continue;
                                acc += wv[layer.weight_index(o, c, i, j)] * input.at(b, o, y, x);
                            }
                        }
                    }
                    out.at(b, c, yy, xx) = acc;
                }
            }
        }
    });
    return out;
}

ConvGrads conv2d_transpose_backward(const Tensor4& input, const ConvLayer& layer,
                                    const Tensor4& grad_out) {
    if (!layer.transposed)
        throw ConfigError("conv2d_transpose_backward: layer is not transposed");
    require_channels(input, layer.n_out, "conv2d_transpose_backward");
    const Tensor4 expected(input.n, layer.c_in, input.h, input.w);
    require_same_shape(grad_out, expected, "conv2d_transpose_backward grad_out");

    ConvGrads g;
    g.input = Tensor4::zeros_like(input);
    g.weights.assign(layer.weights.size(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);

    const int f = layer.f, pad = layer.padding, height = input.h, width = input.w;
    const int c_in = layer.c_in, n_out = layer.n_out, batches = input.n;
    const double* wv = layer.weights.value.data();

    // Gradient w.r.t. input is the forward correlation of grad_out (bias 0).
    parallel_for(static_cast<std::size_t>(batches) * n_out, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int b = static_cast<int>(t / static_cast<std::size_t>(n_out));
            const int o = static_cast<int>(t % static_cast<std::size_t>(n_out));
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    double acc = 0.0;
                    for (int c = 0; c < c_in; ++c) {
                        for (int i = 0; i < f; ++i) {
                            const int yy = y + i - pad;
                            if (yy < 0 || yy >= height) continue;
                            for (int j = 0; j < f; ++j) {
                                const int xx = x + j - pad;
                                if (xx < 0 || xx >= width) continue;
                                acc += wv[layer.weight_index(o, c, i, j)] * grad_out.at(b, c, yy, xx);
                            }
                        }
                    }
                    g.input.at(b, o, y, x) = acc;
                }
            }
        }
    });

    parallel_for(static_cast<std::size_t>(n_out), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int o = static_cast<int>(t);
            for (int c = 0; c < c_in; ++c) {
                for (int i = 0; i < f; ++i) {
                    for (int j = 0; j < f; ++j) {
                        double acc = 0.0;
                        for (int b = 0; b < batches; ++b) {
                            for (int yy = 0; yy < height; ++yy) {
                                const int y = yy - i + pad;
                                if (y < 0 || y >= height) continue;
                                for (int xx = 0; xx < width; ++xx) {
                                    const int x = xx - j + pad;
                                    if (x < 0 || x >= width) continue;
                                    acc += grad_out.at(b, c, yy, xx) * input.at(b, o, y, x);
                                }
                            }
                        }
                        g.weights[layer.weight_index(o, c, i, j)] = acc;
                    }
                }
            }
        }
    });

    parallel_for(static_cast<std::size_t>(c_in), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int c = static_cast<int>(t);
            double acc = 0.0;
            for (int b = 0; b < batches; ++b)
                for (int yy = 0; yy < height; ++yy)
                    for (int xx = 0; xx < width; ++xx) acc += grad_out.at(b, c, yy, xx);
            g.bias[static_cast<std::size_t>(c)] = acc;
        }
    });
    return g;
}

Tensor4 batchnorm_forward(const Tensor4& input, BatchNorm& bn, BatchNormCache* cache) {
    require_channels(input, bn.channels, "batchnorm_forward");
    Tensor4 out = Tensor4::zeros_like(input);
    const int height = input.h, width = input.w, batches = input.n;
    const std::size_t per_channel =
        static_cast<std::size_t>(batches) * static_cast<std::size_t>(height) *
        static_cast<std::size_t>(width);

    if (bn.mode == BnMode::Train) {
        if (per_channel < 2)
            throw ConfigError("batchnorm_forward: training mode needs at least 2 elements per "
                              "channel, got " + std::to_string(per_channel));
        if (cache != nullptr) {
            cache->inv_std.assign(static_cast<std::size_t>(bn.channels), 0.0);
            cache->x_hat = Tensor4::zeros_like(input);
            cache->valid = true;
        }
        parallel_for(static_cast<std::size_t>(bn.channels), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t t = lo; t < hi; ++t) {
                const int c = static_cast<int>(t);
                double mean = 0.0;
                for (int b = 0; b < batches; ++b)
                    for (int y = 0; y < height; ++y)
                        for (int x = 0; x < width; ++x) mean += input.at(b, c, y, x);
                mean /= static_cast<double>(per_channel);
                double var = 0.0;
                for (int b = 0; b < batches; ++b)
                    for (int y = 0; y < height; ++y)
                        for (int x = 0; x < width; ++x) {
                            const double d = input.at(b, c, y, x) - mean;
                            var += d * d;
                        }
                var /= static_cast<double>(per_channel);  // biased variance
                const double inv_std = 1.0 / std::sqrt(var + bn.eps);
                const double gamma = bn.gamma.value[t];
                const double beta = bn.beta.value[t];
                for (int b = 0; b < batches; ++b)
                    for (int y = 0; y < height; ++y)
                        for (int x = 0; x < width; ++x) {
                            const double x_hat = (input.at(b, c, y, x) - mean) * inv_std;
                            if (cache != nullptr) cache->x_hat.at(b, c, y, x) = x_hat;
                            out.at(b, c, y, x) = gamma * x_hat + beta;
                        }
                if (cache != nullptr) cache->inv_std[t] = inv_std;
                bn.running_mean[t] = (1.0 - bn.momentum) * bn.running_mean[t] + bn.momentum * mean;
                bn.running_var[t] = (1.0 - bn.momentum) * bn.running_var[t] + bn.momentum * var;
            }
        });
    } else {
        if (cache != nullptr) cache->valid = false;
        parallel_for(static_cast<std::size_t>(bn.channels), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t t = lo; t < hi; ++t) {
                const int c = static_cast<int>(t);
                const double inv_std = 1.0 / std::sqrt(bn.running_var[t] + bn.eps);
                const double scale = bn.gamma.value[t] * inv_std;
                const double shift = bn.beta.value[t] - scale * bn.running_mean[t];
                for (int b = 0; b < batches; ++b)
                    for (int y = 0; y < height; ++y)
                        for (int x = 0; x < width; ++x)
                            out.at(b, c, y, x) = scale * input.at(b, c, y, x) + shift;
            }
        });
    }
    return out;
}

BnGrads batchnorm_backward(const Tensor4& grad_out, const BatchNorm& bn,
                           const BatchNormCache& cache) {
    if (!cache.valid)
        throw StateError("batchnorm_backward: requires the cache of a training-mode forward");
    require_channels(grad_out, bn.channels, "batchnorm_backward");
    require_same_shape(grad_out, cache.x_hat, "batchnorm_backward grad_out");

    BnGrads g;
    g.input = Tensor4::zeros_like(grad_out);
    g.gamma.assign(static_cast<std::size_t>(bn.channels), 0.0);
    g.beta.assign(static_cast<std::size_t>(bn.channels), 0.0);

    const int height = grad_out.h, width = grad_out.w, batches = grad_out.n;
    const double count = static_cast<double>(static_cast<std::size_t>(batches) *
                                             static_cast<std::size_t>(height) *
                                             static_cast<std::size_t>(width));

    parallel_for(static_cast<std::size_t>(bn.channels), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const int c = static_cast<int>(t);
            double sum_dy = 0.0;
            double sum_dy_xhat = 0.0;
            for (int b = 0; b < batches; ++b)
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x) {
                        const double dy = grad_out.at(b, c, y, x);
                        sum_dy += dy;
                        sum_dy_xhat += dy * cache.x_hat.at(b, c, y, x);
                    }
            g.beta[t] = sum_dy;
            g.gamma[t] = sum_dy_xhat;
            const double mean_dy = sum_dy / count;
            const double mean_dy_xhat = sum_dy_xhat / count;
            const double scale = bn.gamma.value[t] * cache.inv_std[t];
            for (int b = 0; b < batches; ++b)
                for (int y = 0; y < height; ++y)
                    for (int x = 0; x < width; ++x) {
                        const double dy = grad_out.at(b, c, y, x);
                        const double x_hat = cache.x_hat.at(b, c, y, x);
                        g.input.at(b, c, y, x) =
                            scale * (dy - mean_dy - x_hat * mean_dy_xhat);
                    }
        }
    });
    return g;
}

Tensor4 prelu_forward(const Tensor4& input, const PRelu& p) {
    require_channels(input, p.channels, "prelu_forward");
    Tensor4 out = Tensor4::zeros_like(input);
    const std::size_t plane =
        static_cast<std::size_t>(input.h) * static_cast<std::size_t>(input.w);
    parallel_for(static_cast<std::size_t>(input.n) * static_cast<std::size_t>(input.c),
                 [&](std::size_t lo, std::size_t hi) {
                     for (std::size_t t = lo; t < hi; ++t) {
                         const std::size_t c = t % static_cast<std::size_t>(input.c);
                         const double alpha = p.alpha.value[c];
                         const std::size_t base = t * plane;
                         for (std::size_t i = 0; i < plane; ++i) {
                             const double x = input.v[base + i];
                             out.v[base + i] = x >= 0.0 ? x : alpha * x;
                         }
                     }
                 });
    return out;
}

PReluGrads prelu_backward(const Tensor4& input, const PRelu& p, const Tensor4& grad_out) {
    require_channels(input, p.channels, "prelu_backward");
    require_same_shape(grad_out, input, "prelu_backward grad_out");
    PReluGrads g;
    g.input = Tensor4::zeros_like(input);
    g.alpha.assign(static_cast<std::size_t>(p.channels), 0.0);
    const std::size_t plane =
        static_cast<std::size_t>(input.h) * static_cast<std::size_t>(input.w);
    const std::size_t channels = static_cast<std::size_t>(input.c);
    // Partitioned by channel so the per-alpha accumulation order stays fixed.
    parallel_for(channels, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t c = lo; c < hi; ++c) {
            const double alpha = p.alpha.value[c];
            double alpha_grad = 0.0;
            for (int b = 0; b < input.n; ++b) {
                const std::size_t base =
                    (static_cast<std::size_t>(b) * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double x = input.v[base + i];
                    const double dy = grad_out.v[base + i];
                    if (x >= 0.0) {
                        g.input.v[base + i] = dy;  // slope-1 branch, including x == 0
                    } else {
                        g.input.v[base + i] = alpha * dy;
                        alpha_grad += dy * x;
                    }
                }
            }
            g.alpha[c] = alpha_grad;
        }
    });
    return g;
}

Tensor4 eltwise_add(const Tensor4& a, const Tensor4& b) {
    require_same_shape(a, b, "eltwise_add");
    Tensor4 out = Tensor4::zeros_like(a);
    parallel_for(a.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out.v[i] = a.v[i] + b.v[i];
    });
    return out;
}

}  // namespace krnet
