#include "krnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "krnet/error.hpp"

namespace krnet {

namespace {

constexpr char kMagic[4] = {'K', 'R', 'N', '1'};

void append_u32(std::vector<unsigned char>& out, std::uint32_t value) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

void append_u64(std::vector<unsigned char>& out, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

void append_f64(std::vector<unsigned char>& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    append_u64(out, bits);
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;

    void need(std::size_t count) const {
        if (bytes.size() - pos < count)
            throw TruncatedError("checkpoint: file ends before the expected payload");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t value = 0;
        for (int i = 0; i < 4; ++i)
            value |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return value;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t value = 0;
        for (int i = 0; i < 8; ++i)
            value |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return value;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double value;
        std::memcpy(&value, &bits, sizeof(value));
        return value;
    }
    unsigned char u8() {
        need(1);
        return bytes[pos++];
    }
};

// Batch-norm layers in the same deterministic order as the parameter list.
std::vector<BatchNorm*> collect_batchnorms(Network& net) {
    std::vector<BatchNorm*> bns;
    const auto add = [&bns](CompositeUnit& u) { bns.push_back(&u.bn); };
    add(net.extract1);
    add(net.extract2);
    add(net.shrink);
    for (auto& block : net.blocks) {
        add(block.reduce);
        add(block.large);
        add(block.small);
        add(block.expand);
    }
    add(net.expand_stage);
    add(net.recon_conv);
    return bns;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net, const TrainingState& state) {
    nlohmann::json wrapper;
    wrapper["config"] = nlohmann::json::parse(run_config_to_json(state.config));
    wrapper["epoch"] = state.epoch;
    const std::string config_text = wrapper.dump();

    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    append_u32(out, kCheckpointVersion);
    append_u64(out, config_text.size());
    out.insert(out.end(), config_text.begin(), config_text.end());

    Network& mutable_net = const_cast<Network&>(net);  // read-only traversal
    const auto params = mutable_net.param_list();
    for (const Param* p : params)
        for (double v : p->value) append_f64(out, v);
    for (const Param* p : params)
        for (double v : p->momentum) append_f64(out, v);
    for (const BatchNorm* bn : collect_batchnorms(mutable_net)) {
        for (double v : bn->running_mean) append_f64(out, v);
        for (double v : bn->running_var) append_f64(out, v);
    }
    for (std::uint64_t word : state.train_rng.s) append_u64(out, word);
    append_u64(out, state.train_rng.counter);
    out.push_back(state.train_rng.has_cached ? 1 : 0);
    append_f64(out, state.train_rng.cached);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw CheckpointError(path + ": cannot open for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw CheckpointError(path + ": write failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw CheckpointError(path + ": cannot open");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                     std::istreambuf_iterator<char>());
    if (file.bad()) throw CheckpointError(path + ": read failed");

    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagicError(path + ": bad magic, not a checkpoint file");
    Reader reader{bytes, 4};
    const std::uint32_t version = reader.u32();
    if (version != kCheckpointVersion)
        throw VersionError(path + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t config_len = reader.u64();
    reader.need(config_len);
    const std::string config_text(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos),
                                  bytes.begin() +
                                      static_cast<std::ptrdiff_t>(reader.pos + config_len));
    reader.pos += config_len;

    nlohmann::json wrapper;
    try {
        wrapper = nlohmann::json::parse(config_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path + ": embedded config is not valid JSON: " + e.what());
    }
    if (!wrapper.is_object() || !wrapper.contains("config") || !wrapper.contains("epoch") ||
        !wrapper["epoch"].is_number_integer())
        throw CheckpointError(path + ": embedded config is missing required fields");

    LoadedCheckpoint loaded;
    try {
        loaded.state.config = parse_run_config(wrapper["config"].dump());
    } catch (const ConfigError& e) {
        throw CheckpointError(path + ": embedded config rejected: " + e.what());
    }
    loaded.state.epoch = wrapper["epoch"].get<int>();

    loaded.net = build_network(loaded.state.config.network, loaded.state.config.train.seed);
    const auto params = loaded.net.param_list();
    for (Param* p : params)
        for (double& v : p->value) v = reader.f64();
    for (Param* p : params)
        for (double& v : p->momentum) v = reader.f64();
    for (BatchNorm* bn : collect_batchnorms(loaded.net)) {
        for (double& v : bn->running_mean) v = reader.f64();
        for (double& v : bn->running_var) v = reader.f64();
    }
    for (std::uint64_t& word : loaded.state.train_rng.s) word = reader.u64();
    loaded.state.train_rng.counter = reader.u64();
    loaded.state.train_rng.has_cached = reader.u8() != 0;
    loaded.state.train_rng.cached = reader.f64();

    if (reader.pos != bytes.size())
        throw CheckpointError(path + ": trailing bytes after the checkpoint payload");
    return loaded;
}

}  // namespace krnet
