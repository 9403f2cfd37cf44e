#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ecgra/error.hpp"
#include "ecgra/model.hpp"

namespace ecgra {

// Checkpoint layout (text header, then raw payload):
//   ECGRA_CKPT v1
//   config_begin
//   <model config, key=value per line>
//   config_end
//   tensors <count>
//   <name> <rank> <dim...>          (one line per tensor, save order)
//   data
//   <float32 little-endian values, concatenated in header order>
// Parameters are stored as float32 regardless of the in-memory scalar type,
// so float models round-trip bit-exactly.

inline constexpr const char* kCheckpointMagic = "ECGRA_CKPT v1";

namespace detail {

struct TensorHeader {
    std::string name;
    std::vector<std::size_t> dims;

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return n;
    }
};

} // namespace detail

template <typename T>
inline void save_checkpoint(EcgResNet<T>& model, const std::filesystem::path& path) {
    static_assert(sizeof(float) == 4);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());

    out << kCheckpointMagic << '\n';
    out << "config_begin\n" << model.config().to_text() << "config_end\n";

    auto params = model.parameters();
    out << "tensors " << params.size() << '\n';
    for (const auto& p : params) {
        out << p.name << ' ' << p.value->rank();
        for (std::size_t d : p.value->shape) out << ' ' << d;
        out << '\n';
    }
    out << "data\n";
    for (const auto& p : params) {
        std::vector<float> buf(p.value->numel());
        for (std::size_t i = 0; i < buf.size(); ++i)
            buf[i] = static_cast<float>(p.value->data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed for checkpoint " + path.string());
}

template <typename T>
inline EcgResNet<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) {
        if (line.rfind("ECGRA_CKPT", 0) == 0)
            throw DataError(path.string() + ": unsupported checkpoint version '" + line + "'");
        throw DataError(path.string() + ": not a checkpoint file");
    }
    if (!std::getline(in, line) || line != "config_begin")
        throw DataError(path.string() + ": missing config block");
    std::ostringstream cfg_text;
    while (std::getline(in, line) && line != "config_end") cfg_text << line << '\n';
    if (line != "config_end") throw DataError(path.string() + ": unterminated config block");

    const ModelConfig cfg = ModelConfig::from_text(cfg_text.str());
    EcgResNet<T> model(cfg);
    auto params = model.parameters();

    if (!std::getline(in, line) || line.rfind("tensors ", 0) != 0)
        throw DataError(path.string() + ": missing tensor table");
    const std::size_t count = std::stoul(line.substr(8));
    if (count != params.size())
        throw DataError(path.string() + ": tensor count " + std::to_string(count) +
                        " does not match model (" + std::to_string(params.size()) + ")");

    std::vector<detail::TensorHeader> headers(count);
    for (auto& h : headers) {
        if (!std::getline(in, line)) throw DataError(path.string() + ": truncated tensor table");
        std::istringstream ls(line);
        std::size_t rank = 0;
        if (!(ls >> h.name >> rank))
            throw DataError(path.string() + ": malformed tensor line '" + line + "'");
        h.dims.resize(rank);
        for (auto& d : h.dims)
            if (!(ls >> d)) throw DataError(path.string() + ": malformed tensor line '" + line + "'");
    }
    if (!std::getline(in, line) || line != "data")
        throw DataError(path.string() + ": missing data marker");

    for (std::size_t i = 0; i < count; ++i) {
        const auto& h = headers[i];
        auto& p = params[i];
        if (h.name != p.name)
            throw DataError(path.string() + ": tensor '" + h.name + "' where model expects '" +
                            p.name + "'");
        if (h.dims != p.value->shape)
            throw DataError(path.string() + ": shape mismatch for '" + h.name + "'");
        std::vector<float> buf(h.numel());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
            throw DataError(path.string() + ": truncated data for tensor '" + h.name + "'");
        for (std::size_t j = 0; j < buf.size(); ++j)
            p.value->data[j] = static_cast<T>(buf[j]);
    }
    return model;
}

} // namespace ecgra
