#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krnet/layers.hpp"
#include "krnet/rng.hpp"

namespace krnet {

// Kernel pairings inside a KR-block. KR7_3 (large 7x7, small 3x3) is the
// working configuration; the other two exist for ablation runs only.
enum class KrBlockVariant { KR7_3, KR3_3, KR7_7 };

const char* to_string(KrBlockVariant v);
KrBlockVariant variant_from_string(const std::string& s);
int large_kernel(KrBlockVariant v);
int small_kernel(KrBlockVariant v);

// Conv -> BN -> PReLU, applied strictly in that order.
struct CompositeUnit {
    ConvLayer conv;
    BatchNorm bn;
    PRelu act;

    CompositeUnit() = default;
    CompositeUnit(int f, int n_out, int c_in);
};

// 1x1 reduce -> large -> small -> (large-out + small-out) -> 1x1 expand.
// Input and output channel counts are equal (C), so inter-block skip sums are
// well-formed; reduce and expand are the only channel-changing units.
struct KrBlock {
    CompositeUnit reduce;
    CompositeUnit large;
    CompositeUnit small;
    CompositeUnit expand;
};

struct NetworkConfig {
    int in_channels = 1;  // 1 (gray) or 3 (RGB)
    int extract_filters = 128;
    int extract_kernel = 7;
    int shrink_channels = 64;
    int block_channels_reduced = 64;
    int num_blocks = 4;
    KrBlockVariant variant = KrBlockVariant::KR7_3;
    int recon_filters = 128;
    // Permits extract_kernel < 7 and extract_filters < 128 for desk-scale
    // configurations; full-size configs keep the dense-extraction floor.
    bool mini = false;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// The default desk-scale configuration used by tests and gradient checking.
NetworkConfig mini_config(int in_channels = 1);

struct UnitCache {
    Tensor4 conv_in;
    Tensor4 act_in;  // BN output
    BatchNormCache bn;
};

struct BlockCache {
    UnitCache reduce, large, small, expand;
};

// Activations recorded by a training-mode forward pass, consumed by
// network_backward. Persists until the next forward, so repeated backward
// calls accumulate.
struct NetworkTrace {
    UnitCache extract1, extract2, shrink;
    std::vector<BlockCache> blocks;
    UnitCache expand_stage, recon_conv;
    Tensor4 deconv_in;
    int out_n = 0, out_h = 0, out_w = 0;
};

struct Network {
    NetworkConfig config;
    CompositeUnit extract1, extract2, shrink;
    std::vector<KrBlock> blocks;
    CompositeUnit expand_stage, recon_conv;
    ConvLayer recon_deconv;  // transposed; no BN/PReLU after it

    std::optional<NetworkTrace> trace;

    // Learnable parameters in deterministic topological order (matches the
    // ids assigned by build_network). Recomputed on each call so the network
    // keeps plain value semantics.
    std::vector<Param*> param_list();
    std::vector<const Param*> param_list() const;
    std::size_t param_count() const;

    BnMode mode() const;
    void set_mode(BnMode m);
    void zero_grads();
};

// Builds a network with He-initialized conv weights, BN gamma=1 / beta=0 and
// PReLU alpha=0.25. Identical (config, seed) gives a bit-identical network.
Network build_network(const NetworkConfig& config, std::uint64_t seed);

// r = reduce(input); L = large(r); S = small(L); out = expand(L + S).
// The large and small units run in series; the blend is a pixel-wise sum.
Tensor4 kr_block_forward(KrBlock& block, const Tensor4& input, BlockCache* cache = nullptr);

// x_hat = recon_deconv(recon_conv(expand_stage(b_K))) + y, with
// b_0 = shrink(extract2(extract1(y))) and b_k = block_k(b_{k-1}) + b_{k-1}.
// Records the backward trace when `record_trace` is set and the network is in
// Train mode. Output shape equals input shape.
Tensor4 network_forward(Network& net, const Tensor4& y, bool record_trace = true);

// Accumulates exact gradients of sum(grad_out . output) into every Param.grad,
// including through the residual skips and the input-to-end shortcut. Requires
// the trace of a previous training-mode forward.
void network_backward(Network& net, const Tensor4& grad_out);

// 1 + sum over the serial layer path of (kernel - 1), stride-1 composition.
int receptive_field(const NetworkConfig& config);

}  // namespace krnet
