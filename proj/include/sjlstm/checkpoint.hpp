#pragma once

// Checkpoint layout (all integers little-endian):
//   "SJLSTM01"
//   u32 tensor_count
//   per tensor: u32 name_len, name bytes, u32 rank, rank x u64 dims
//   per tensor, same order: row-major f32 values

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sjlstm/model.hpp"

namespace sjlstm {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'J', 'L', 'S', 'T', 'M', '0', '1'};

namespace detail {

template <class U>
void write_le(std::ostream& out, U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U read_le(std::istream& in) {
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
        throw CheckpointError("checkpoint truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    U value;
    std::memcpy(&value, bytes, sizeof(U));
    return value;
}

struct ManifestEntry {
    std::string name;
    std::vector<std::uint64_t> shape;

    std::uint64_t count() const {
        std::uint64_t n = 1;
        for (auto d : shape) {
            n *= d;
        }
        return n;
    }
};

}  // namespace detail

template <class T>
void save_checkpoint(const ModelParams<T>& params, std::ostream& out) {
    std::vector<detail::ManifestEntry> manifest;
    std::vector<std::span<const T>> values;
    params.for_each_tensor([&](std::string_view name, const std::vector<std::size_t>& shape, std::span<const T> v) {
        manifest.push_back({std::string(name), std::vector<std::uint64_t>(shape.begin(), shape.end())});
        values.push_back(v);
    });
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(manifest.size()));
    for (const auto& e : manifest) {
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) {
            detail::write_le<std::uint64_t>(out, d);
        }
    }
    for (const auto& v : values) {
        for (T x : v) {
            detail::write_le<float>(out, static_cast<float>(x));
        }
    }
    if (!out) {
        throw CheckpointError("failed writing checkpoint");
    }
}

template <class T>
ModelParams<T> load_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw CheckpointError("not a checkpoint (bad magic)");
    }
    const auto count = detail::read_le<std::uint32_t>(in);
    if (count > 1024) {
        throw CheckpointError("implausible tensor count in checkpoint");
    }
    std::vector<detail::ManifestEntry> manifest(count);
    for (auto& e : manifest) {
        const auto len = detail::read_le<std::uint32_t>(in);
        if (len > 4096) {
            throw CheckpointError("implausible tensor name length in checkpoint");
        }
        e.name.resize(len);
        if (!in.read(e.name.data(), len)) {
            throw CheckpointError("checkpoint truncated");
        }
        const auto rank = detail::read_le<std::uint32_t>(in);
        if (rank > 8) {
            throw CheckpointError("implausible tensor rank in checkpoint");
        }
        e.shape.resize(rank);
        for (auto& d : e.shape) {
            d = detail::read_le<std::uint64_t>(in);
        }
    }

    auto shape_of = [&](std::string_view name) -> const std::vector<std::uint64_t>& {
        for (const auto& e : manifest) {
            if (e.name == name) {
                return e.shape;
            }
        }
        throw CheckpointError("checkpoint lacks tensor " + std::string(name));
    };
    const auto& emb = shape_of("embedding");
    const auto& cls = shape_of("classifier.out.weight");
    const auto& trunk = shape_of("skip_agent.trunk.weight");
    if (emb.size() != 2 || cls.size() != 2 || trunk.size() != 2) {
        throw CheckpointError("checkpoint tensors have unexpected rank");
    }
    ModelDims dims;
    dims.vocab_size = emb[0];
    dims.embed_dim = emb[1];
    dims.classes = cls[0];
    dims.cell_dim = cls[1];
    dims.trunk_width = trunk[0];
    ModelParams<T> params(dims);

    std::size_t k = 0;
    params.for_each_tensor([&](std::string_view name, const std::vector<std::size_t>& shape, std::span<T> v) {
        if (k >= manifest.size() || manifest[k].name != name ||
            manifest[k].shape != std::vector<std::uint64_t>(shape.begin(), shape.end())) {
            throw CheckpointError("checkpoint tensor " + std::string(name) + " missing or misshapen");
        }
        ++k;
        (void)v;
    });
    if (k != manifest.size()) {
        throw CheckpointError("checkpoint has unexpected extra tensors");
    }
    params.for_each_tensor([&](std::string_view, const std::vector<std::size_t>&, std::span<T> v) {
        for (auto& x : v) {
            x = static_cast<T>(detail::read_le<float>(in));
        }
    });
    return params;
}

template <class T>
void save_checkpoint(const ModelParams<T>& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError("cannot write checkpoint: " + path);
    }
    save_checkpoint(params, out);
}

template <class T>
ModelParams<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint: " + path);
    }
    return load_checkpoint<T>(in);
}

}  // namespace sjlstm
