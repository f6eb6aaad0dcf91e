#include "gmwb/random.hpp"

#include <cmath>
#include <cstddef>

#ifdef __AVX2__
#include <immintrin.h>
#endif

namespace gmwb {

namespace {

inline double central_quantile(double q) noexcept {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
            45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
         133.14166789178437745) * r + 3.387132872796366608;
    const double den =
        ((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
            21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
         42.313330701600911252) * r + 1.0;
    return q * num / den;
}

} // namespace

double normal_quantile(double p) noexcept {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) return central_quantile(q);

    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            ((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
             4.6303378461565452959) * r + 1.42343711074968357734;
        const double den =
            ((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
             2.05319162663775882187) * r + 1.0;
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
             5.4637849111641143699) * r + 6.6579046435011037772;
        const double den =
            ((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
             0.59983220655588793769) * r + 1.0;
        val = num / den;
    }
    return q < 0.0 ? -val : val;
}

namespace {

constexpr int kLanes = NormalStream::kBatch / 2;

#ifdef __AVX2__
// Eight counters per register, two registers in flight to hide multiply
// latency. Word w of block i lands in words[(i / 8) * 32 + w * 8 + i % 8].
struct Lanes {
    __m256i c0, c1, c2, c3;
};

inline __m256i mul_hi_lo(__m256i c, __m256i m, __m256i& lo) {
    const __m256i even = _mm256_mul_epu32(c, m);
    const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(c, 32), m);
    lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
    return _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
}

inline void philox_round(Lanes& v, __m256i k0, __m256i k1, __m256i m0, __m256i m1) {
    __m256i lo0, lo1;
    const __m256i hi0 = mul_hi_lo(v.c0, m0, lo0);
    const __m256i hi1 = mul_hi_lo(v.c2, m1, lo1);
    v.c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, v.c1), k0);
    v.c1 = lo1;
    v.c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, v.c3), k1);
    v.c3 = lo0;
}

void philox_blocks(Philox4x32::Key key, std::uint64_t path, std::uint64_t first_block, std::uint32_t* words) {
    Lanes v[2];
    for (int g = 0; g < 2; ++g) {
        alignas(32) std::uint32_t lo[8], hi[8];
        for (int i = 0; i < 8; ++i) {
            const std::uint64_t block = first_block + static_cast<std::uint64_t>(8 * g + i);
            lo[i] = static_cast<std::uint32_t>(block);
            hi[i] = static_cast<std::uint32_t>(block >> 32);
        }
        v[g].c0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo));
        v[g].c1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi));
        v[g].c2 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(path)));
        v[g].c3 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(path >> 32)));
    }
    const __m256i m0 = _mm256_set1_epi64x(0xD2511F53u);
    const __m256i m1 = _mm256_set1_epi64x(0xCD9E8D57u);
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        const __m256i rk0 = _mm256_set1_epi32(static_cast<int>(k0));
        const __m256i rk1 = _mm256_set1_epi32(static_cast<int>(k1));
        philox_round(v[0], rk0, rk1, m0, m1);
        philox_round(v[1], rk0, rk1, m0, m1);
    }
    for (int g = 0; g < 2; ++g) {
        auto* out = reinterpret_cast<__m256i*>(words + 32 * g);
        _mm256_storeu_si256(out, v[g].c0);
        _mm256_storeu_si256(out + 1, v[g].c1);
        _mm256_storeu_si256(out + 2, v[g].c2);
        _mm256_storeu_si256(out + 3, v[g].c3);
    }
}
#else
void philox_blocks(Philox4x32::Key key, std::uint64_t path, std::uint64_t first_block, std::uint32_t* words) {
    for (int i = 0; i < kLanes; ++i) {
        const std::uint64_t block = first_block + static_cast<std::uint64_t>(i);
        const auto out = Philox4x32::generate({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                               static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
                                              key);
        for (int w = 0; w < 4; ++w) words[(i / 8) * 32 + w * 8 + i % 8] = out[w];
    }
}
#endif

} // namespace

void philox_normal_batch(Philox4x32::Key key, std::uint64_t path, std::uint64_t first_block, double* out) noexcept {
    constexpr int lanes = kLanes;
    std::uint32_t words[4 * kLanes];
    philox_blocks(key, path, first_block, words);
    auto word = [&](int i, int w) { return words[(i / 8) * 32 + w * 8 + i % 8]; };
    double u[2 * lanes];
    for (int i = 0; i < lanes; ++i) {
        u[2 * i] = to_open_unit(word(i, 0), word(i, 1));
        u[2 * i + 1] = to_open_unit(word(i, 2), word(i, 3));
    }
    for (int i = 0; i < 2 * lanes; ++i) out[i] = central_quantile(u[i] - 0.5);
    int tails[2 * lanes];
    int num_tails = 0;
    for (int i = 0; i < 2 * lanes; ++i) {
        tails[num_tails] = i;
        num_tails += std::fabs(u[i] - 0.5) > 0.425;
    }
    for (int t = 0; t < num_tails; ++t) out[tails[t]] = normal_quantile(u[tails[t]]);
}

} // namespace gmwb
