#include "krnet/network.hpp"

#include <string>
#include <utility>

#include "krnet/error.hpp"
#include "krnet/optim.hpp"

namespace krnet {

const char* to_string(KrBlockVariant v) {
    switch (v) {
        case KrBlockVariant::KR7_3: return "kr7_3";
        case KrBlockVariant::KR3_3: return "kr3_3";
        case KrBlockVariant::KR7_7: return "kr7_7";
    }
    throw ConfigError("unknown block variant");
}

KrBlockVariant variant_from_string(const std::string& s) {
    if (s == "kr7_3") return KrBlockVariant::KR7_3;
    if (s == "kr3_3") return KrBlockVariant::KR3_3;
    if (s == "kr7_7") return KrBlockVariant::KR7_7;
    throw ConfigError("variant: expected one of kr7_3, kr3_3, kr7_7, got \"" + s + "\"");
}

int large_kernel(KrBlockVariant v) { return v == KrBlockVariant::KR3_3 ? 3 : 7; }
int small_kernel(KrBlockVariant v) { return v == KrBlockVariant::KR7_7 ? 7 : 3; }

CompositeUnit::CompositeUnit(int f, int n_out, int c_in)
    : conv(f, n_out, c_in), bn(n_out), act(n_out) {}

void NetworkConfig::validate() const {
    if (in_channels != 1 && in_channels != 3)
        throw ConfigError("in_channels: must be 1 or 3, got " + std::to_string(in_channels));
    if (extract_kernel != 1 && extract_kernel != 3 && extract_kernel != 7)
        throw ConfigError("extract_kernel: must be 1, 3 or 7, got " +
                          std::to_string(extract_kernel));
    if (extract_filters < 1)
        throw ConfigError("extract_filters: must be positive");
    if (shrink_channels < 1)
        throw ConfigError("shrink_channels: must be positive");
    if (block_channels_reduced < 1)
        throw ConfigError("block_channels_reduced: must be positive");
    if (num_blocks < 1)
        throw ConfigError("num_blocks: must be at least 1, got " + std::to_string(num_blocks));
    if (recon_filters < 1)
        throw ConfigError("recon_filters: must be positive");
    if (!mini) {
        // Dense extraction floor for full-size configs.
        if (extract_kernel < 7)
            throw ConfigError("extract_kernel: must be at least 7 unless mini is set, got " +
                              std::to_string(extract_kernel));
        if (extract_filters < 128)
            throw ConfigError("extract_filters: must be at least 128 unless mini is set, got " +
                              std::to_string(extract_filters));
    }
}

NetworkConfig mini_config(int in_channels) {
    NetworkConfig cfg;
    cfg.in_channels = in_channels;
    cfg.extract_filters = 16;
    cfg.extract_kernel = 3;
    cfg.shrink_channels = 8;
    cfg.block_channels_reduced = 8;
    cfg.num_blocks = 1;
    cfg.variant = KrBlockVariant::KR7_3;
    cfg.recon_filters = 16;
    cfg.mini = true;
    return cfg;
}

namespace {

void collect_unit(std::vector<Param*>& out, CompositeUnit& u) {
    out.push_back(&u.conv.weights);
    out.push_back(&u.conv.bias);
    out.push_back(&u.bn.gamma);
    out.push_back(&u.bn.beta);
    out.push_back(&u.act.alpha);
}

}  // namespace

std::vector<Param*> Network::param_list() {
    std::vector<Param*> params;
    collect_unit(params, extract1);
    collect_unit(params, extract2);
    collect_unit(params, shrink);
    for (auto& block : blocks) {
        collect_unit(params, block.reduce);
        collect_unit(params, block.large);
        collect_unit(params, block.small);
        collect_unit(params, block.expand);
    }
    collect_unit(params, expand_stage);
    collect_unit(params, recon_conv);
    params.push_back(&recon_deconv.weights);
    params.push_back(&recon_deconv.bias);
    return params;
}

std::vector<const Param*> Network::param_list() const {
    auto mutable_list = const_cast<Network*>(this)->param_list();
    return std::vector<const Param*>(mutable_list.begin(), mutable_list.end());
}

std::size_t Network::param_count() const {
    std::size_t count = 0;
    for (const Param* p : param_list()) count += p->size();
    return count;
}

BnMode Network::mode() const { return extract1.bn.mode; }

void Network::set_mode(BnMode m) {
    extract1.bn.mode = m;
    extract2.bn.mode = m;
    shrink.bn.mode = m;
    for (auto& block : blocks) {
        block.reduce.bn.mode = m;
        block.large.bn.mode = m;
        block.small.bn.mode = m;
        block.expand.bn.mode = m;
    }
    expand_stage.bn.mode = m;
    recon_conv.bn.mode = m;
}

void Network::zero_grads() {
    for (Param* p : param_list()) p->zero_grad();
}

namespace {

void init_conv(ConvLayer& layer, Rng& rng) {
    // Fan-in counts the inputs feeding one output unit; for the transposed
    // direction that is n_out * f * f.
    const std::size_t fan_in = static_cast<std::size_t>(layer.f) *
                               static_cast<std::size_t>(layer.f) *
                               static_cast<std::size_t>(layer.transposed ? layer.n_out
                                                                         : layer.c_in);
    layer.weights.value = he_init(fan_in, layer.weights.size(), rng);
}

void init_unit(CompositeUnit& u, Rng& rng) { init_conv(u.conv, rng); }

}  // namespace

Network build_network(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Network net;
    net.config = config;

    const int ch = config.in_channels;
    const int ef = config.extract_filters;
    const int ek = config.extract_kernel;
    const int sc = config.shrink_channels;
    const int cr = config.block_channels_reduced;
    const int kl = large_kernel(config.variant);
    const int ks = small_kernel(config.variant);

    net.extract1 = CompositeUnit(ek, ef, ch);
    net.extract2 = CompositeUnit(ek, ef, ef);
    net.shrink = CompositeUnit(1, sc, ef);
    net.blocks.reserve(static_cast<std::size_t>(config.num_blocks));
    for (int k = 0; k < config.num_blocks; ++k) {
        KrBlock block;
        block.reduce = CompositeUnit(1, cr, sc);
        block.large = CompositeUnit(kl, cr, cr);
        block.small = CompositeUnit(ks, cr, cr);
        block.expand = CompositeUnit(1, sc, cr);
        net.blocks.push_back(std::move(block));
    }
    net.expand_stage = CompositeUnit(1, config.recon_filters, sc);
    net.recon_conv = CompositeUnit(3, config.recon_filters, config.recon_filters);
    net.recon_deconv = ConvLayer(3, config.recon_filters, ch, /*transposed=*/true);

    Rng rng(seed);
    init_unit(net.extract1, rng);
    init_unit(net.extract2, rng);
    init_unit(net.shrink, rng);
    for (auto& block : net.blocks) {
        init_unit(block.reduce, rng);
        init_unit(block.large, rng);
        init_unit(block.small, rng);
        init_unit(block.expand, rng);
    }
    init_unit(net.expand_stage, rng);
    init_unit(net.recon_conv, rng);
    init_conv(net.recon_deconv, rng);

    const auto params = net.param_list();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->id = static_cast<int>(i);

    std::vector<std::string> unit_names = {"extract1", "extract2", "shrink"};
    for (int k = 0; k < config.num_blocks; ++k) {
        const std::string prefix = "block" + std::to_string(k) + ".";
        unit_names.push_back(prefix + "reduce");
        unit_names.push_back(prefix + "large");
        unit_names.push_back(prefix + "small");
        unit_names.push_back(prefix + "expand");
    }
    unit_names.push_back("expand_stage");
    unit_names.push_back("recon_conv");
    static const char* kUnitFields[] = {".conv.weights", ".conv.bias", ".bn.gamma", ".bn.beta",
                                        ".act.alpha"};
    std::size_t i = 0;
    for (const auto& unit : unit_names)
        for (const char* field : kUnitFields) params[i++]->name = unit + field;
    params[i++]->name = "recon_deconv.weights";
    params[i++]->name = "recon_deconv.bias";
    return net;
}

namespace {

Tensor4 unit_forward(CompositeUnit& u, const Tensor4& input, UnitCache* cache) {
    if (cache != nullptr) cache->conv_in = input;
    Tensor4 conv_out = conv2d_forward(input, u.conv);
    Tensor4 bn_out = batchnorm_forward(conv_out, u.bn, cache != nullptr ? &cache->bn : nullptr);
    if (cache != nullptr) cache->act_in = bn_out;
    return prelu_forward(bn_out, u.act);
}

void accumulate(std::vector<double>& into, const std::vector<double>& delta) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += delta[i];
}

Tensor4 unit_backward(CompositeUnit& u, const UnitCache& cache, const Tensor4& grad_out) {
    PReluGrads pg = prelu_backward(cache.act_in, u.act, grad_out);
    accumulate(u.act.alpha.grad, pg.alpha);
    BnGrads bg = batchnorm_backward(pg.input, u.bn, cache.bn);
    accumulate(u.bn.gamma.grad, bg.gamma);
    accumulate(u.bn.beta.grad, bg.beta);
    ConvGrads cg = conv2d_backward(cache.conv_in, u.conv, bg.input);
    accumulate(u.conv.weights.grad, cg.weights);
    accumulate(u.conv.bias.grad, cg.bias);
    return std::move(cg.input);
}

Tensor4 kr_block_backward(KrBlock& block, const BlockCache& cache, const Tensor4& grad_out) {
    Tensor4 grad_blended = unit_backward(block.expand, cache.expand, grad_out);
    // blended = large_out + small_out, small consumed large_out too.
    Tensor4 grad_small_in = unit_backward(block.small, cache.small, grad_blended);
    Tensor4 grad_large_out = eltwise_add(grad_blended, grad_small_in);
    Tensor4 grad_large_in = unit_backward(block.large, cache.large, grad_large_out);
    return unit_backward(block.reduce, cache.reduce, grad_large_in);
}

}  // namespace

Tensor4 kr_block_forward(KrBlock& block, const Tensor4& input, BlockCache* cache) {
    Tensor4 reduced = unit_forward(block.reduce, input, cache != nullptr ? &cache->reduce : nullptr);
    Tensor4 large_out = unit_forward(block.large, reduced, cache != nullptr ? &cache->large : nullptr);
    Tensor4 small_out = unit_forward(block.small, large_out, cache != nullptr ? &cache->small : nullptr);
    Tensor4 blended = eltwise_add(large_out, small_out);
    return unit_forward(block.expand, blended, cache != nullptr ? &cache->expand : nullptr);
}

Tensor4 network_forward(Network& net, const Tensor4& y, bool record_trace) {
    if (y.c != net.config.in_channels)
        throw ConfigError("network_forward: input has " + std::to_string(y.c) +
                          " channels, network expects " + std::to_string(net.config.in_channels));
    const bool tracing = record_trace && net.mode() == BnMode::Train;
    net.trace.reset();
    NetworkTrace trace;
    if (tracing) trace.blocks.resize(net.blocks.size());

    Tensor4 features = unit_forward(net.extract1, y, tracing ? &trace.extract1 : nullptr);
    features = unit_forward(net.extract2, features, tracing ? &trace.extract2 : nullptr);
    Tensor4 b = unit_forward(net.shrink, features, tracing ? &trace.shrink : nullptr);
    for (std::size_t k = 0; k < net.blocks.size(); ++k) {
        Tensor4 block_out =
            kr_block_forward(net.blocks[k], b, tracing ? &trace.blocks[k] : nullptr);
        b = eltwise_add(block_out, b);
    }
    Tensor4 expanded = unit_forward(net.expand_stage, b, tracing ? &trace.expand_stage : nullptr);
    Tensor4 recon = unit_forward(net.recon_conv, expanded, tracing ? &trace.recon_conv : nullptr);
    if (tracing) trace.deconv_in = recon;
    Tensor4 correction = conv2d_transpose_forward(recon, net.recon_deconv);
    Tensor4 out = eltwise_add(correction, y);
    if (tracing) {
        trace.out_n = out.n;
        trace.out_h = out.h;
        trace.out_w = out.w;
        net.trace = std::move(trace);
    }
    return out;
}

void network_backward(Network& net, const Tensor4& grad_out) {
    if (!net.trace.has_value())
        throw StateError("network_backward: no recorded training-mode forward trace");
    const NetworkTrace& trace = *net.trace;
    if (grad_out.n != trace.out_n || grad_out.c != net.config.in_channels ||
        grad_out.h != trace.out_h || grad_out.w != trace.out_w)
        throw ShapeError("network_backward: grad_out does not match the traced output shape");

    ConvGrads dg = conv2d_transpose_backward(trace.deconv_in, net.recon_deconv, grad_out);
    accumulate(net.recon_deconv.weights.grad, dg.weights);
    accumulate(net.recon_deconv.bias.grad, dg.bias);
    Tensor4 g = std::move(dg.input);

    g = unit_backward(net.recon_conv, trace.recon_conv, g);
    g = unit_backward(net.expand_stage, trace.expand_stage, g);
    for (std::size_t k = net.blocks.size(); k-- > 0;) {
        Tensor4 through_block = kr_block_backward(net.blocks[k], trace.blocks[k], g);
        g = eltwise_add(through_block, g);  // b_k = block(b_{k-1}) + b_{k-1}
    }
    g = unit_backward(net.shrink, trace.shrink, g);
    g = unit_backward(net.extract2, trace.extract2, g);
    unit_backward(net.extract1, trace.extract1, g);
    // The input-to-end shortcut's gradient flows to the input, not to any
    // parameter, so it ends here.
}

int receptive_field(const NetworkConfig& config) {
    int growth = 2 * (config.extract_kernel - 1);  // two extraction layers
    growth += config.num_blocks *
              ((large_kernel(config.variant) - 1) + (small_kernel(config.variant) - 1));
    growth += 2 + 2;  // recon conv and deconv, both 3x3; 1x1 stages add nothing
    return 1 + growth;
}

}  // namespace krnet
