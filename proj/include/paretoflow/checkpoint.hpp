#pragma once

// Self-describing network checkpoint: a JSON header (layer sizes, activation,
// time-embedding mode, seed, free-form training config) followed by the flat
// parameter block as little-endian 64-bit floats. Round-trips bit-exactly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paretoflow/nn.hpp"

namespace paretoflow {

using Json = nlohmann::json;

enum class TimeEmbeddingMode { scalar_append, sinusoidal };

inline std::string to_string(TimeEmbeddingMode m) {
    return m == TimeEmbeddingMode::scalar_append ? "scalar-append" : "sinusoidal";
}

inline TimeEmbeddingMode time_embedding_from_string(const std::string& s) {
    if (s == "scalar-append") return TimeEmbeddingMode::scalar_append;
    if (s == "sinusoidal") return TimeEmbeddingMode::sinusoidal;
    throw std::invalid_argument("unknown time embedding mode: " + s);
}

struct TimeEmbedding {
    TimeEmbeddingMode mode = TimeEmbeddingMode::scalar_append;
    int dim = 0;  // sinusoidal width; must be even. 0 for scalar-append.

    int width() const { return mode == TimeEmbeddingMode::scalar_append ? 1 : dim; }

    Eigen::RowVectorXd embed(double t) const {
        if (mode == TimeEmbeddingMode::scalar_append) {
            Eigen::RowVectorXd e(1);
            e(0) = t;
            return e;
        }
        if (dim <= 0 || dim % 2 != 0)
            throw std::invalid_argument("sinusoidal embedding dim must be a positive even number");
        Eigen::RowVectorXd e(dim);
        const int half = dim / 2;
        for (int k = 0; k < half; ++k) {
            const double freq = std::pow(10000.0, -static_cast<double>(k) / half);
            e(2 * k) = std::sin(t * freq * 2.0 * M_PI);
            e(2 * k + 1) = std::cos(t * freq * 2.0 * M_PI);
        }
        return e;
    }
};

namespace detail {
inline constexpr char kCheckpointMagic[8] = {'P', 'F', 'C', 'K', 'P', 'T', '0', '1'};
}

struct Checkpoint {
    DenseNetwork net;
    TimeEmbedding embedding;   // meaningful for flow checkpoints
    Json meta;                 // training config, seed, anything the producer records
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    Json header;
    header["layer_sizes"] = ckpt.net.layer_sizes;
    header["activation"] = to_string(ckpt.net.activation);
    header["rng_seed"] = ckpt.net.rng_seed;
    header["time_embedding"] = {{"mode", to_string(ckpt.embedding.mode)},
                                {"dim", ckpt.embedding.dim}};
    header["meta"] = ckpt.meta;
    header["param_count"] = ckpt.net.parameter_count();
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(detail::kCheckpointMagic, 8);
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (int l = 0; l < ckpt.net.num_layers(); ++l) {
        const Matrix& w = ckpt.net.weights[l];
        out.write(reinterpret_cast<const char*>(w.data()),
                  static_cast<std::streamsize>(sizeof(double) * w.size()));
        const Vector& b = ckpt.net.biases[l];
        out.write(reinterpret_cast<const char*>(b.data()),
                  static_cast<std::streamsize>(sizeof(double) * b.size()));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    Json header = Json::parse(hs);

    Checkpoint ckpt;
    ckpt.net.layer_sizes = header.at("layer_sizes").get<std::vector<int>>();
    ckpt.net.activation = activation_from_string(header.at("activation").get<std::string>());
    ckpt.net.rng_seed = header.at("rng_seed").get<std::uint64_t>();
    ckpt.embedding.mode =
        time_embedding_from_string(header.at("time_embedding").at("mode").get<std::string>());
    ckpt.embedding.dim = header.at("time_embedding").at("dim").get<int>();
    ckpt.meta = header.value("meta", Json::object());

    for (std::size_t l = 0; l + 1 < ckpt.net.layer_sizes.size(); ++l) {
        const int in_dim = ckpt.net.layer_sizes[l];
        const int out_dim = ckpt.net.layer_sizes[l + 1];
        Matrix w(out_dim, in_dim);
        in.read(reinterpret_cast<char*>(w.data()),
                static_cast<std::streamsize>(sizeof(double) * w.size()));
        Vector b(out_dim);
        in.read(reinterpret_cast<char*>(b.data()),
                static_cast<std::streamsize>(sizeof(double) * b.size()));
        ckpt.net.weights.push_back(std::move(w));
        ckpt.net.biases.push_back(std::move(b));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace paretoflow
