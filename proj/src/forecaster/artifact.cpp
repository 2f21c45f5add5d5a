#include <bit>
#include <cmath>
#include <cstring>

#include "hsa/forecaster.hpp"

namespace hsa::forecaster {

namespace {

constexpr std::uint8_t kMagic[4] = {'H', 'S', 'A', 'M'};
constexpr std::uint32_t kHeaderTag = 0x20524448;  // "HDR "
constexpr std::uint32_t kParamsTag = 0x204d5250;  // "PRM "
constexpr std::size_t kHeaderLength = 6 * 8 + 8 + 1 + 8 + 8 + 8;
constexpr std::size_t kChecksumOffsetInHeader = kHeaderLength - 8;

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32() {
        auto b = need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        auto b = need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::span<const std::uint8_t> need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw FormatError("truncated model artifact");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> header_bytes(const ModelArtifact& a, std::uint64_t checksum) {
    Writer w;
    const auto& c = a.config();
    w.u64(c.input_dim);
    w.u64(c.sequence_length);
    w.u64(c.lstm_units);
    w.u64(c.dense_units);
    w.u64(c.output_units);
    w.u64(c.seed);
    w.u64(a.version);
    w.u8(a.trained_on_window.has_value() ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(a.trained_on_window.value_or(-1)));
    w.u64(a.params.size());
    w.u64(checksum);
    return std::move(w.bytes());
}

std::vector<std::uint8_t> param_bytes(const ModelParams& p) {
    Writer w;
    for (double x : p.values()) w.f64(x);
    return std::move(w.bytes());
}

std::uint64_t content_checksum(std::span<const std::uint8_t> header_without_checksum, std::span<const std::uint8_t> params) {
    return fnv1a64(params, fnv1a64(header_without_checksum));
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelArtifact make_artifact(ModelParams params, std::uint64_t version, std::optional<std::int64_t> trained_on_window) {
    ModelArtifact a{std::move(params), version, trained_on_window, 0};
    const auto header = header_bytes(a, 0);
    a.checksum = content_checksum(std::span(header).first(kChecksumOffsetInHeader), param_bytes(a.params));
    return a;
}

void verify_checksum(const ModelArtifact& artifact) {
    const auto header = header_bytes(artifact, 0);
    const auto expected = content_checksum(std::span(header).first(kChecksumOffsetInHeader), param_bytes(artifact.params));
    if (expected != artifact.checksum) throw ChecksumError("model artifact checksum mismatch");
}

std::vector<std::uint8_t> serialize(const ModelArtifact& artifact) {
    for (double x : artifact.params.values()) {
        if (!std::isfinite(x)) throw ForecasterError("refusing to serialize non-finite parameters");
    }
    const auto header = header_bytes(artifact, artifact.checksum);
    const auto params = param_bytes(artifact.params);
    Writer w;
    w.raw(kMagic);
    w.u32(kArtifactFormatVersion);
    w.u32(kHeaderTag);
    w.u64(header.size());
    w.raw(header);
    w.u32(kParamsTag);
    w.u64(params.size());
    w.raw(params);
    return std::move(w.bytes());
}

ModelArtifact deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (std::memcmp(r.need(4).data(), kMagic, 4) != 0) throw FormatError("not a model artifact (bad magic)");
    const auto format = r.u32();
    if (format != kArtifactFormatVersion) {
        throw FormatError("unsupported artifact format version " + std::to_string(format));
    }
    if (r.u32() != kHeaderTag) throw FormatError("missing header section");
    const auto header_len = r.u64();
    if (header_len != kHeaderLength) throw FormatError("unexpected header length");
    const auto header = r.need(kHeaderLength);
    if (r.u32() != kParamsTag) throw FormatError("missing parameter section");
    const auto params_len = r.u64();
    const auto params = r.need(params_len);
    if (r.remaining() != 0) throw FormatError("trailing bytes after artifact");

    Reader h(header);
    NetworkConfig cfg;
    cfg.input_dim = h.u64();
    cfg.sequence_length = h.u64();
    cfg.lstm_units = h.u64();
    cfg.dense_units = h.u64();
    cfg.output_units = h.u64();
    cfg.seed = h.u64();
    const auto version = h.u64();
    const bool has_window = h.u8() != 0;
    const auto window = static_cast<std::int64_t>(h.u64());
    const auto count = h.u64();
    const auto checksum = h.u64();

    if (content_checksum(header.first(kChecksumOffsetInHeader), params) != checksum) {
        throw ChecksumError("model artifact checksum mismatch");
    }
    if (params_len != count * 8) throw FormatError("parameter section length does not match count");
    try {
        cfg.validate();
        if (parameter_count(cfg) != count) throw FormatError("parameter count does not match config");
    } catch (const FormatError&) {
        throw;
    } catch (const ForecasterError& e) {
        throw FormatError(e.what());
    }
    Reader pr(params);
    std::vector<double> values(count);
    for (auto& x : values) x = pr.f64();

    ModelArtifact a{ModelParams(cfg, std::move(values)), version, std::nullopt, checksum};
    if (has_window) a.trained_on_window = window;
    return a;
}

}  // namespace hsa::forecaster
