#include "model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "rng.hpp"
#include <json.hpp>

namespace khop {

using nlohmann::json;

void ModelConfig::validate() const {
    require(n_layers >= 1, ErrorCode::config, "model.layers must be >= 1");
    require(n_heads >= 1, ErrorCode::config, "model.heads must be >= 1");
    require(d_model >= 2, ErrorCode::config, "model.d_model must be >= 2");
    require(d_model % n_heads == 0, ErrorCode::config,
            "model.d_model must be divisible by model.heads");
    require(head_dim() % 2 == 0, ErrorCode::config,
            "model.head_dim must be even for rotary embeddings");
    require(vocab_size >= 2, ErrorCode::config, "model.vocab_size must be >= 2");
    require(context_length >= 2, ErrorCode::config, "model.context_length must be >= 2");
    require(rope_base > 1.0f, ErrorCode::config, "model.rope_base must be > 1");
    require(init_std > 0.0f, ErrorCode::config, "model.init_std must be > 0");
    require(dropout_rate == 0.0f, ErrorCode::config,
            "model.dropout_rate must be 0 (dropout is not supported)");
}

ModelParams ModelParams::shaped(const ModelConfig& c) {
    ModelParams p;
    const int d = c.d_model;
    const int m = c.mlp_dim();
    p.wte = Mat::Zero(c.vocab_size, d);
    p.layers.resize(c.n_layers);
    for (auto& L : p.layers) {
        L.ln1_g = Vec::Zero(d);
        L.ln1_b = Vec::Zero(d);
        L.wq = Mat::Zero(d, d);
        L.wk = Mat::Zero(d, d);
        L.wv = Mat::Zero(d, d);
        L.wo = Mat::Zero(d, d);
        L.bq = Vec::Zero(d);
        L.bk = Vec::Zero(d);
        L.bv = Vec::Zero(d);
        L.bo = Vec::Zero(d);
        L.ln2_g = Vec::Zero(d);
        L.ln2_b = Vec::Zero(d);
        L.w1 = Mat::Zero(d, m);
        L.b1 = Vec::Zero(m);
        L.w2 = Mat::Zero(m, d);
        L.b2 = Vec::Zero(d);
    }
    p.lnf_g = Vec::Zero(d);
    p.lnf_b = Vec::Zero(d);
    return p;
}

void ModelParams::set_zero() {
    for_each([](const std::string&, auto& t, bool) { t.setZero(); });
}

std::int64_t ModelParams::count() const {
    std::int64_t n = 0;
    for_each([&n](const std::string&, const auto& t, bool) { n += t.size(); });
    return n;
}

ModelState init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelState state;
    state.config = config;
    state.params = ModelParams::shaped(config);
    Rng rng = Rng(seed).stream("init");
    // Residual projections start tighter, scaled by 1/sqrt(2L) as in GPT-2.
    const float resid_scale = 1.0f / std::sqrt(2.0f * static_cast<float>(config.n_layers));
    state.params.for_each([&](const std::string& name, auto& t, bool) {
        const bool is_gain = name.ends_with("ln1_g") || name.ends_with("ln2_g") ||
                             name.ends_with("lnf_g");
        const bool is_weight = t.cols() > 1 || name == "wte";
        const bool is_resid_proj = name.ends_with(".wo") || name.ends_with(".w2");
        if (is_gain) {
            t.setOnes();
        } else if (is_weight) {
            const float std = config.init_std * (is_resid_proj ? resid_scale : 1.0f);
            float* d = t.data();
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                d[i] = static_cast<float>(rng.normal(0.0, std));
            }
        } else {
            t.setZero();
        }
    });
    return state;
}

std::uint64_t params_checksum(const ModelParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    p.for_each([&h](const std::string& name, const auto& t, bool) {
        h = fnv1a64(name.data(), name.size(), h);
        h = fnv1a64(t.data(), sizeof(float) * t.size(), h);
    });
    return h;
}

namespace {

constexpr char kMagic[8] = {'K', 'H', 'O', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

struct ByteSink {
    std::string bytes;

    void raw(const void* p, std::size_t n) {
        bytes.append(static_cast<const char*>(p), n);
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
};

struct ByteSource {
    const std::string& bytes;
    std::size_t pos = 0;

    void raw(void* p, std::size_t n) {
        require(pos + n <= bytes.size(), ErrorCode::io, "checkpoint: truncated file");
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        raw(&v, 8);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        require(pos + n <= bytes.size(), ErrorCode::io, "checkpoint: truncated string");
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

void write_tensors(ByteSink& sink, const ModelParams& p, const std::string& prefix) {
    p.for_each([&](const std::string& name, const auto& t, bool) {
        sink.str(prefix + name);
        sink.u32(static_cast<std::uint32_t>(t.rows()));
        sink.u32(static_cast<std::uint32_t>(t.cols()));
        sink.raw(t.data(), sizeof(float) * t.size());
    });
}

void read_tensors(ByteSource& src, ModelParams& p, const std::string& prefix) {
    p.for_each([&](const std::string& name, auto& t, bool) {
        const std::string got = src.str();
        require(got == prefix + name, ErrorCode::io,
                "checkpoint: tensor order mismatch, expected " + prefix + name + " got " + got);
        const auto rows = src.u32();
        const auto cols = src.u32();
        require(rows == static_cast<std::uint32_t>(t.rows()) &&
                    cols == static_cast<std::uint32_t>(t.cols()),
                ErrorCode::io, "checkpoint: shape mismatch for " + got);
        src.raw(t.data(), sizeof(float) * t.size());
    });
}

json config_to_json(const ModelConfig& c) {
    return json{{"layers", c.n_layers},
                {"heads", c.n_heads},
                {"d_model", c.d_model},
                {"d_mlp", c.d_mlp},
                {"vocab_size", c.vocab_size},
                {"context_length", c.context_length},
                {"rope_base", c.rope_base},
                {"init_std", c.init_std},
                {"dropout_rate", c.dropout_rate}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.n_layers = j.at("layers").get<int>();
    c.n_heads = j.at("heads").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.d_mlp = j.at("d_mlp").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.context_length = j.at("context_length").get<int>();
    c.rope_base = j.at("rope_base").get<float>();
    c.init_std = j.at("init_std").get<float>();
    c.dropout_rate = j.at("dropout_rate").get<float>();
    return c;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const ModelParams* adam_m, const ModelParams* adam_v,
                     const std::string& extra_json) {
    ByteSink sink;
    sink.u32(kVersion);
    json header;
    header["config"] = config_to_json(state.config);
    header["step"] = state.step;
    header["has_optimizer"] = adam_m != nullptr;
    header["extra"] = json::parse(extra_json);
    sink.str(header.dump());
    write_tensors(sink, state.params, "");
    if (adam_m) {
        require(adam_v != nullptr, ErrorCode::invalid_argument,
                "save_checkpoint: need both moment tensors");
        write_tensors(sink, *adam_m, "adam_m.");
        write_tensors(sink, *adam_v, "adam_v.");
    }
    const std::uint64_t checksum = fnv1a64(sink.bytes.data(), sink.bytes.size());

    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "save_checkpoint: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    out.write(sink.bytes.data(), static_cast<std::streamsize>(sink.bytes.size()));
    out.write(reinterpret_cast<const char*>(&checksum), 8);
    require(out.good(), ErrorCode::io, "save_checkpoint: write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "load_checkpoint: cannot open " + path.string());
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(all.size() > sizeof(kMagic) + 8, ErrorCode::io, "load_checkpoint: file too small");
    require(std::memcmp(all.data(), kMagic, sizeof(kMagic)) == 0, ErrorCode::io,
            "load_checkpoint: bad magic");

    std::uint64_t stored = 0;
    std::memcpy(&stored, all.data() + all.size() - 8, 8);
    const std::string payload = all.substr(sizeof(kMagic), all.size() - sizeof(kMagic) - 8);
    require(fnv1a64(payload.data(), payload.size()) == stored, ErrorCode::io,
            "load_checkpoint: checksum mismatch");

    ByteSource src{payload};
    const auto version = src.u32();
    require(version == kVersion, ErrorCode::io, "load_checkpoint: unsupported version");
    const json header = json::parse(src.str());

    LoadedCheckpoint ck;
    ck.state.config = config_from_json(header.at("config"));
    ck.state.config.validate();
    ck.state.step = header.at("step").get<std::uint64_t>();
    ck.extra_json = header.at("extra").dump();
    ck.state.params = ModelParams::shaped(ck.state.config);
    read_tensors(src, ck.state.params, "");
    ck.has_optimizer = header.at("has_optimizer").get<bool>();
    if (ck.has_optimizer) {
        ck.adam_m = ModelParams::shaped(ck.state.config);
        ck.adam_v = ModelParams::shaped(ck.state.config);
        read_tensors(src, ck.adam_m, "adam_m.");
        read_tensors(src, ck.adam_v, "adam_v.");
    }
    require(src.pos == payload.size(), ErrorCode::io, "load_checkpoint: trailing bytes");
    return ck;
}

} // namespace khop
