#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hsa::detail {

/// Little-endian payload writer.
class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void str(const std::string& s) {
        u64(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

/// Bounds-checked reader; throws Error when the payload runs short.
template <class Error>
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::span<const std::uint8_t> need(std::size_t n) {
        if (n > in_.size() - pos_) throw Error("payload truncated");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return need(1)[0]; }
    std::uint64_t u64() {
        const auto b = need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u64();
        const auto b = need(n);
        return {b.begin(), b.end()};
    }
    std::span<const std::uint8_t> rest() { return need(in_.size() - pos_); }
    [[nodiscard]] bool done() const noexcept { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace hsa::detail
