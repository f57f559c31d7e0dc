#include "sdsim/kernels.hpp"

// AVX2 kernels, built with -mavx2 for this translation unit only. Dispatch
// checks CPU support at runtime, so the rest of the binary stays baseline.
//
// Layout: one resample per lane, four resamples per block. Each lane adds
// its terms in the same index order as the scalar reference and signs are
// applied by XOR-ing the IEEE sign bit (exact negation), so lane results
// are bit-identical to the scalar kernel. Leftover resamples fall through
// to scalar code.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>

namespace sdsim::kernels {

namespace {

constexpr std::size_t kLanes = 4;

inline double scalar_signflip_sum(const double* d, std::size_t n, const std::uint64_t* words) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = (words[i >> 6] >> (i & 63)) & 1u;
        acc += bit ? -d[i] : d[i];
    }
    return acc;
}

inline double scalar_gather_sum(const double* vals, std::size_t n, const std::uint32_t* row) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += vals[row[k]];
    }
    return acc;
}

// Signed sums for resamples r .. r+3 given their sign words (one __m256i per
// 64-bit word column).
inline __m256i load_word_column(const std::uint64_t* words, std::size_t stride, std::size_t r,
                                std::size_t w) {
    if (stride == 1) {
        return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words + r));
    }
    return _mm256_set_epi64x(static_cast<long long>(words[(r + 3) * stride + w]),
                             static_cast<long long>(words[(r + 2) * stride + w]),
                             static_cast<long long>(words[(r + 1) * stride + w]),
                             static_cast<long long>(words[r * stride + w]));
}

inline __m256d signflip_block_sum(const double* d, std::size_t n, const __m256i* word_cols) {
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i sign_bit = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ull));
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n; ++i) {
        const __m256i bits =
            _mm256_and_si256(_mm256_srli_epi64(word_cols[i >> 6], static_cast<int>(i & 63)), one);
        const __m256i neg = _mm256_and_si256(_mm256_cmpeq_epi64(bits, one), sign_bit);
        const __m256d term = _mm256_xor_pd(_mm256_set1_pd(d[i]), _mm256_castsi256_pd(neg));
        acc = _mm256_add_pd(acc, term);
    }
    return acc;
}

inline int count_exceed(__m256d sums, __m256d threshold) {
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
    const __m256d mag = _mm256_and_pd(sums, abs_mask);
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(mag, threshold, _CMP_GE_OQ));
    return __builtin_popcount(static_cast<unsigned>(mask));
}

constexpr std::size_t kMaxWordCols = 64;  // supports n up to 4096 pairs

std::uint64_t signflip_exceed_count(const double* d, std::size_t n, const std::uint64_t* words,
                                    std::size_t stride, std::size_t n_resamples, double threshold) {
    std::uint64_t count = 0;
    const __m256d thr = _mm256_set1_pd(threshold);
    std::size_t r = 0;
    if (stride <= kMaxWordCols) {
        __m256i cols[kMaxWordCols];
        for (; r + kLanes <= n_resamples; r += kLanes) {
            for (std::size_t w = 0; w < stride; ++w) cols[w] = load_word_column(words, stride, r, w);
            count += static_cast<std::uint64_t>(count_exceed(signflip_block_sum(d, n, cols), thr));
        }
    }
    for (; r < n_resamples; ++r) {
        count += std::fabs(scalar_signflip_sum(d, n, words + r * stride)) >= threshold;
    }
    return count;
}

std::uint64_t signflip_exceed_range(const double* d, std::size_t n, std::uint64_t first_mask,
                                    std::uint64_t n_masks, double threshold) {
    std::uint64_t count = 0;
    const __m256d thr = _mm256_set1_pd(threshold);
    const __m256i lane_off = _mm256_set_epi64x(3, 2, 1, 0);
    std::uint64_t r = 0;
    for (; r + kLanes <= n_masks; r += kLanes) {
        __m256i col = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(first_mask + r)),
                                       lane_off);
        count += static_cast<std::uint64_t>(count_exceed(signflip_block_sum(d, n, &col), thr));
    }
    for (; r < n_masks; ++r) {
        const std::uint64_t mask = first_mask + r;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (mask >> i) & 1u ? -d[i] : d[i];
        count += std::fabs(acc) >= threshold;
    }
    return count;
}

inline __m256d gather_block_sum(const double* vals, std::size_t n, const std::uint32_t* idx,
                                std::size_t r) {
    const __m128i row_off = _mm_set_epi32(static_cast<int>(3 * n), static_cast<int>(2 * n),
                                          static_cast<int>(n), 0);
    const int* base = reinterpret_cast<const int*>(idx + r * n);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n; ++k) {
        const __m128i lane_idx = _mm_i32gather_epi32(base + k, row_off, 4);
        acc = _mm256_add_pd(acc, _mm256_i32gather_pd(vals, lane_idx, 8));
    }
    return acc;
}

std::uint64_t resample_exceed_count(const double* vals, std::size_t n, const std::uint32_t* idx,
                                    std::size_t n_resamples, double threshold) {
    std::uint64_t count = 0;
    const __m256d thr = _mm256_set1_pd(threshold);
    std::size_t r = 0;
    if (n <= 0x3FFFFFFF) {
        for (; r + kLanes <= n_resamples; r += kLanes) {
            count += static_cast<std::uint64_t>(count_exceed(gather_block_sum(vals, n, idx, r), thr));
        }
    }
    for (; r < n_resamples; ++r) {
        count += std::fabs(scalar_gather_sum(vals, n, idx + r * n)) >= threshold;
    }
    return count;
}

void signflip_sums(const double* d, std::size_t n, const std::uint64_t* words, std::size_t stride,
                   std::size_t n_resamples, double* out) {
    std::size_t r = 0;
    if (stride <= kMaxWordCols) {
        __m256i cols[kMaxWordCols];
        for (; r + kLanes <= n_resamples; r += kLanes) {
            for (std::size_t w = 0; w < stride; ++w) cols[w] = load_word_column(words, stride, r, w);
            _mm256_storeu_pd(out + r, signflip_block_sum(d, n, cols));
        }
    }
    for (; r < n_resamples; ++r) {
        out[r] = scalar_signflip_sum(d, n, words + r * stride);
    }
}

void resample_sums(const double* vals, std::size_t n, const std::uint32_t* idx,
                   std::size_t n_resamples, double* out) {
    std::size_t r = 0;
    if (n <= 0x3FFFFFFF) {
        for (; r + kLanes <= n_resamples; r += kLanes) {
            _mm256_storeu_pd(out + r, gather_block_sum(vals, n, idx, r));
        }
    }
    for (; r < n_resamples; ++r) {
        out[r] = scalar_gather_sum(vals, n, idx + r * n);
    }
}

}  // namespace

const Kernel* avx2_kernel() {
    if (!__builtin_cpu_supports("avx2")) return nullptr;
    static const Kernel k{
        "avx2",
        &signflip_exceed_count,
        &signflip_exceed_range,
        &resample_exceed_count,
        &signflip_sums,
        &resample_sums,
    };
    return &k;
}

}  // namespace sdsim::kernels

#else  // non-x86 builds: no AVX2 variant

namespace sdsim::kernels {

const Kernel* avx2_kernel() { return nullptr; }

}  // namespace sdsim::kernels

#endif
