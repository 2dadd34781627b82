#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>

#include "bidpo/io.hpp"
#include "bidpo/net/params.hpp"

namespace bidpo {

// Binary checkpoint layout (little-endian host order):
//   "BIDPOCKP" | u32 version | u8 dtype bytes | u8 trainable | u8 activation | u8 output parameterization
//   i32 grid, channels, time_dim, hidden, depth, caption_dim | u32 layer count
//   per layer: u32 rows, u32 cols, W (column-major), b
//   u32 crc32 of everything above
inline constexpr char kCheckpointMagic[8] = {'B', 'I', 'D', 'P', 'O', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {
template <class T>
void put(std::string& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& b) : buf_(b) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > buf_.size()) throw FormatError(FormatError::Kind::malformed_record, "checkpoint truncated");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void read(void* dst, std::size_t n) {
        if (pos_ + n > buf_.size()) throw FormatError(FormatError::Kind::malformed_record, "checkpoint truncated");
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }

private:
    const std::string& buf_;
    std::size_t pos_ = 0;
};
}  // namespace detail

template <class S>
std::string serialize_checkpoint(const DenoiserParams<S>& p) {
    static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>);
    p.check_shapes();
    std::string buf(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<std::uint32_t>(buf, kCheckpointVersion);
    detail::put<std::uint8_t>(buf, sizeof(S));
    detail::put<std::uint8_t>(buf, p.trainable ? 1 : 0);
    detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(p.config.activation));
    detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(p.config.output));
    for (int v : {p.config.image.grid, p.config.image.channels, p.config.time_dim, p.config.hidden, p.config.depth,
                  kCaptionEncodingDim})
        detail::put<std::int32_t>(buf, v);
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
        detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(l.W.rows()));
        detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(l.W.cols()));
        buf.append(reinterpret_cast<const char*>(l.W.data()), static_cast<std::size_t>(l.W.size()) * sizeof(S));
        buf.append(reinterpret_cast<const char*>(l.b.data()), static_cast<std::size_t>(l.b.size()) * sizeof(S));
    }
    detail::put<std::uint32_t>(buf, crc32_of(buf));
    return buf;
}

/// Dtype stored in a checkpoint blob (4 = f32, 8 = f64).
inline int checkpoint_dtype_bytes(const std::string& buf) {
    if (buf.size() < 13 || std::memcmp(buf.data(), kCheckpointMagic, 8) != 0)
        throw FormatError(FormatError::Kind::malformed_record, "not a checkpoint");
    return static_cast<unsigned char>(buf[12]);
}

template <class S>
DenoiserParams<S> deserialize_checkpoint(const std::string& buf) {
    if (buf.size() < sizeof(kCheckpointMagic) + 8 || std::memcmp(buf.data(), kCheckpointMagic, 8) != 0)
        throw FormatError(FormatError::Kind::malformed_record, "not a checkpoint (bad magic)");
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    if (crc32_of(buf.substr(0, buf.size() - 4)) != stored_crc)
        throw FormatError(FormatError::Kind::checksum_failure, "checkpoint checksum mismatch");
    detail::Reader in(buf);
    char magic[8];
    in.read(magic, 8);
    if (auto v = in.get<std::uint32_t>(); v != kCheckpointVersion)
        throw FormatError(FormatError::Kind::version_mismatch, "checkpoint version " + std::to_string(v));
    if (in.get<std::uint8_t>() != sizeof(S))
        throw FormatError(FormatError::Kind::version_mismatch, "checkpoint dtype differs from requested");
    DenoiserParams<S> p;
    p.trainable = in.get<std::uint8_t>() != 0;
    auto act = in.get<std::uint8_t>();
    auto out = in.get<std::uint8_t>();
    if (act > 1 || out > 2) throw FormatError(FormatError::Kind::malformed_record, "checkpoint: unknown net option");
    p.config.activation = static_cast<Activation>(act);
    p.config.output = static_cast<Parameterization>(out);
    p.config.image.grid = in.get<std::int32_t>();
    p.config.image.channels = in.get<std::int32_t>();
    p.config.time_dim = in.get<std::int32_t>();
    p.config.hidden = in.get<std::int32_t>();
    p.config.depth = in.get<std::int32_t>();
    if (in.get<std::int32_t>() != kCaptionEncodingDim)
        throw FormatError(FormatError::Kind::version_mismatch, "checkpoint caption encoding size differs");
    auto n = in.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        auto rows = in.get<std::uint32_t>();
        auto cols = in.get<std::uint32_t>();
        DenseLayer<S> l{Matrix<S>(rows, cols), Vector<S>(rows)};
        in.read(l.W.data(), static_cast<std::size_t>(rows) * cols * sizeof(S));
        in.read(l.b.data(), static_cast<std::size_t>(rows) * sizeof(S));
        p.layers.push_back(std::move(l));
    }
    p.check_shapes();
    return p;
}

template <class S>
void save_checkpoint(const DenoiserParams<S>& p, const std::filesystem::path& path) {
    atomic_write(path, serialize_checkpoint(p));
}

template <class S>
DenoiserParams<S> load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint<S>(read_file(path));
}

/// Checksum identifying a parameter set: crc32 of its serialized form with
/// the trainable flag cleared, so a frozen copy matches its source.
template <class S>
std::uint32_t params_checksum(const DenoiserParams<S>& p) {
    auto buf = serialize_checkpoint(p);
    buf[13] = 0;
    buf.resize(buf.size() - sizeof(std::uint32_t));
    return crc32_of(buf);
}

}  // namespace bidpo
