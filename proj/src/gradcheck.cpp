#include "krnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "krnet/error.hpp"
#include "krnet/layers.hpp"

namespace krnet {
namespace {

// Step sizes trade truncation error against rounding noise. The whole-network
// objective is a large sum, so it gets a smaller step to keep the chance of a
// finite difference straddling a PReLU kink negligible.
constexpr double kLayerStep = 1e-6;
constexpr double kNetworkStep = 1e-7;

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({std::abs(analytic), std::abs(numeric), 1e-2});
}

void fill_uniform(std::vector<double>& values, Rng& rng, double lo, double hi) {
    for (auto& v : values) v = rng.uniform(lo, hi);
}

double weighted_sum(const Tensor4& weight, const Tensor4& out) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.v.size(); ++i) s += weight.v[i] * out.v[i];
    return s;
}

std::vector<std::size_t> all_indices(std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
}

// Evenly strided ~1% sample (at least one entry) with a random phase.
std::vector<std::size_t> sampled_indices(std::size_t count, Rng& rng) {
    const std::size_t samples = std::max<std::size_t>(1, count / 100);
    const std::size_t stride = count / samples;
    const std::size_t phase = rng.uniform_int(stride);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples; ++i) idx.push_back(phase + i * stride);
    return idx;
}

class Collector {
  public:
    Collector(GradCheckResult& result, double tolerance, std::string inject)
        : result_(result), tolerance_(tolerance), inject_(std::move(inject)) {}

    // Central-difference check of analytic[i] against d(eval())/d(slot[i]) for
    // every sampled index. `slot` is restored after each probe.
    void check(const std::string& cls, const std::string& param, std::vector<double>& slot,
               const std::vector<double>& analytic, const std::vector<std::size_t>& indices,
               double step, const std::function<double()>& eval) {
        GradCheckEntry* entry = find_or_add(cls, param);
        for (const std::size_t i : indices) {
            double a = analytic[i];
            if (!injected_ && cls == inject_) {
                a += std::max(0.1, 0.2 * std::abs(a));
                injected_ = true;
            }
            const double saved = slot[i];
            slot[i] = saved + step;
            const double up = eval();
            slot[i] = saved - step;
            const double down = eval();
            slot[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            entry->max_rel_err = std::max(entry->max_rel_err, relative_error(a, numeric));
            ++entry->checked;
        }
        entry->pass = entry->max_rel_err <= tolerance_;
    }

    void start_round() { injected_ = false; }

  private:
    GradCheckEntry* find_or_add(const std::string& cls, const std::string& param) {
        for (auto& e : result_.entries)
            if (e.cls == cls && e.param == param) return &e;
        result_.entries.push_back({cls, param, 0.0, 0, false});
        return &result_.entries.back();
    }

    GradCheckResult& result_;
    double tolerance_;
    std::string inject_;
    bool injected_ = false;
};

void check_conv(Collector& col, Rng& rng) {
    Tensor4 input(1, 2, 5, 5);
    fill_uniform(input.v, rng, -1.0, 1.0);
    ConvLayer layer(3, 3, 2);
    fill_uniform(layer.weights.value, rng, -1.0, 1.0);
    fill_uniform(layer.bias.value, rng, -0.5, 0.5);
    Tensor4 weight(1, 3, 5, 5);
    fill_uniform(weight.v, rng, -1.0, 1.0);

    const ConvGrads grads = conv2d_backward(input, layer, weight);
    const auto eval = [&] { return weighted_sum(weight, conv2d_forward(input, layer)); };
    col.check("conv", "input", input.v, grads.input.v, all_indices(input.v.size()), kLayerStep,
              eval);
    col.check("conv", "weights", layer.weights.value, grads.weights,
              all_indices(layer.weights.size()), kLayerStep, eval);
    col.check("conv", "bias", layer.bias.value, grads.bias, all_indices(layer.bias.size()),
              kLayerStep, eval);
}

void check_conv_transpose(Collector& col, Rng& rng) {
    // Maps 3 input channels to 2 output channels through a (3, 2, 3, 3) kernel.
    ConvLayer layer(3, 3, 2, /*transposed=*/true);
    fill_uniform(layer.weights.value, rng, -1.0, 1.0);
    fill_uniform(layer.bias.value, rng, -0.5, 0.5);
    Tensor4 input(1, 3, 5, 5);
    fill_uniform(input.v, rng, -1.0, 1.0);
    Tensor4 weight(1, 2, 5, 5);
    fill_uniform(weight.v, rng, -1.0, 1.0);

    const ConvGrads grads = conv2d_transpose_backward(input, layer, weight);
    const auto eval = [&] {
        return weighted_sum(weight, conv2d_transpose_forward(input, layer));
    };
    col.check("conv_transpose", "input", input.v, grads.input.v, all_indices(input.v.size()),
              kLayerStep, eval);
    col.check("conv_transpose", "weights", layer.weights.value, grads.weights,
              all_indices(layer.weights.size()), kLayerStep, eval);
    col.check("conv_transpose", "bias", layer.bias.value, grads.bias,
              all_indices(layer.bias.size()), kLayerStep, eval);
}

void check_batchnorm(Collector& col, Rng& rng) {
    Tensor4 input(2, 3, 4, 4);
    fill_uniform(input.v, rng, -1.0, 1.0);
    BatchNorm bn(3);
    fill_uniform(bn.gamma.value, rng, 0.5, 1.5);
    fill_uniform(bn.beta.value, rng, -0.5, 0.5);
    Tensor4 weight(2, 3, 4, 4);
    fill_uniform(weight.v, rng, -1.0, 1.0);

    BatchNormCache cache;
    {
        BatchNorm fresh = bn;  // keep the reference running stats untouched
        batchnorm_forward(input, fresh, &cache);
    }
    const BnGrads grads = batchnorm_backward(weight, bn, cache);
    // Training-mode forwards update running statistics, so every probe runs on
    // a throwaway copy.
    const auto eval = [&] {
        BatchNorm fresh = bn;
        return weighted_sum(weight, batchnorm_forward(input, fresh, nullptr));
    };
    col.check("batchnorm", "input", input.v, grads.input.v, all_indices(input.v.size()),
              kLayerStep, eval);
    col.check("batchnorm", "gamma", bn.gamma.value, grads.gamma, all_indices(bn.gamma.size()),
              kLayerStep, eval);
    col.check("batchnorm", "beta", bn.beta.value, grads.beta, all_indices(bn.beta.size()),
              kLayerStep, eval);
}

void check_prelu(Collector& col, Rng& rng) {
    Tensor4 input(2, 3, 4, 4);
    fill_uniform(input.v, rng, -1.0, 1.0);
    // Keep every value at least 0.1 from the kink so the finite difference
    // never straddles it.
    for (auto& v : input.v) v += (v >= 0.0 ? 0.1 : -0.1);
    PRelu p(3);
    fill_uniform(p.alpha.value, rng, 0.1, 0.4);
    Tensor4 weight(2, 3, 4, 4);
    fill_uniform(weight.v, rng, -1.0, 1.0);

    const PReluGrads grads = prelu_backward(input, p, weight);
    const auto eval = [&] { return weighted_sum(weight, prelu_forward(input, p)); };
    col.check("prelu", "input", input.v, grads.input.v, all_indices(input.v.size()), kLayerStep,
              eval);
    col.check("prelu", "alpha", p.alpha.value, grads.alpha, all_indices(p.alpha.size()),
              kLayerStep, eval);
}

void check_eltwise_add(Collector& col, Rng& rng) {
    Tensor4 a(2, 3, 4, 4);
    Tensor4 b(2, 3, 4, 4);
    fill_uniform(a.v, rng, -1.0, 1.0);
    fill_uniform(b.v, rng, -1.0, 1.0);
    Tensor4 weight(2, 3, 4, 4);
    fill_uniform(weight.v, rng, -1.0, 1.0);

    // The backward contract: grad_out passes through to both operands.
    const auto eval = [&] { return weighted_sum(weight, eltwise_add(a, b)); };
    col.check("eltwise_add", "a", a.v, weight.v, all_indices(a.v.size()), kLayerStep, eval);
    col.check("eltwise_add", "b", b.v, weight.v, all_indices(b.v.size()), kLayerStep, eval);
}

void check_network(Collector& col, const NetworkConfig& cfg, Rng& rng) {
    Network net = build_network(cfg, rng.next_u64());
    if (net.param_count() >= 100000)
        throw ConfigError("gradcheck: configuration has " + std::to_string(net.param_count()) +
                          " parameters; the finite-difference check is limited to 100000");
    net.set_mode(BnMode::Train);

    Tensor4 input(2, cfg.in_channels, 12, 12);
    fill_uniform(input.v, rng, 0.05, 0.95);

    // Objective: S = mean(out^2), so dS/d(out) = 2 out / count. The mean keeps
    // the objective O(1), which keeps finite-difference cancellation noise well
    // under tolerance even for parameters whose true gradient is zero (conv
    // biases ahead of batch norm).
    Tensor4 out = network_forward(net, input, /*record_trace=*/true);
    const double count = static_cast<double>(out.v.size());
    Tensor4 grad_out = out;
    for (auto& v : grad_out.v) v *= 2.0 / count;
    net.zero_grads();
    network_backward(net, grad_out);

    const auto eval = [&] {
        const Tensor4 probe = network_forward(net, input, /*record_trace=*/false);
        double s = 0.0;
        for (const double v : probe.v) s += v * v;
        return s / count;
    };
    for (Param* p : net.param_list())
        col.check("network", p->name, p->value, p->grad, sampled_indices(p->size(), rng),
                  kNetworkStep, eval);
}

}  // namespace

GradCheckResult run_gradcheck(const NetworkConfig& net_cfg, const GradCheckOptions& opts) {
    net_cfg.validate();
    if (opts.tolerance <= 0.0) throw ConfigError("gradcheck: tolerance must be positive");
    if (opts.rounds < 1) throw ConfigError("gradcheck: rounds must be at least 1");
    static const char* kClasses[] = {"conv", "conv_transpose", "batchnorm",
                                     "prelu", "eltwise_add", "network"};
    if (!opts.inject_error.empty() &&
        std::find(std::begin(kClasses), std::end(kClasses), opts.inject_error) ==
            std::end(kClasses))
        throw ConfigError("gradcheck: unknown class \"" + opts.inject_error +
                          "\" for error injection");

    GradCheckResult result;
    Collector col(result, opts.tolerance, opts.inject_error);
    for (int round = 0; round < opts.rounds; ++round) {
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(round)));
        col.start_round();
        check_conv(col, rng);
        check_conv_transpose(col, rng);
        check_batchnorm(col, rng);
        check_prelu(col, rng);
        check_eltwise_add(col, rng);
        check_network(col, net_cfg, rng);
    }
    result.all_pass = true;
    for (const auto& e : result.entries) {
        result.worst_rel_err = std::max(result.worst_rel_err, e.max_rel_err);
        if (!e.pass) result.all_pass = false;
    }
    return result;
}

}  // namespace krnet
