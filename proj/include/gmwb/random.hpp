// Counter-based normal variates.
//
// Every draw is a pure function of (key, counter), so a path can be generated
// by any thread in any order and still reproduce bit for bit.
#pragma once

#include <array>
#include <cstdint>

namespace gmwb {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// SplitMix64 finalizer, used to turn (seed, stream) into a Philox key.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Maps two 32-bit words to a double in the open interval (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile, Wichura's AS241 (PPND16); relative accuracy
/// about 1e-16 over (0, 1).
double normal_quantile(double p) noexcept;

/// Fills out[0..32) with the standard normals of Philox blocks
/// [first_block, first_block + 16) for one path: block b yields draws 2b and
/// 2b+1 from counter (b, path).
void philox_normal_batch(Philox4x32::Key key, std::uint64_t path, std::uint64_t first_block, double* out) noexcept;

/// Sequential standard normals for one (key, path) stream. Draw i comes from
/// Philox counter (i / 2, path), half i % 2, so any draw is addressable
/// without generating its predecessors.
class NormalStream {
public:
    static constexpr int kBatch = 32;

    NormalStream(Philox4x32::Key key, std::uint64_t path, std::uint64_t first_draw = 0) noexcept
        : key_(key), path_(path), batch_(first_draw / kBatch), pos_(static_cast<int>(first_draw % kBatch)) {
        refill();
    }

    double next() noexcept {
        if (pos_ == kBatch) {
            ++batch_;
            refill();
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    void refill() noexcept { philox_normal_batch(key_, path_, batch_ * (kBatch / 2), buf_); }

    Philox4x32::Key key_;
    std::uint64_t path_;
    std::uint64_t batch_;
    int pos_;
    double buf_[kBatch];
};

} // namespace gmwb
