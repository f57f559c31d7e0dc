#include "sdsim/kernels.hpp"

#include <cmath>

// Scalar reference kernels. These define the semantics the SIMD variants
// must reproduce bit-for-bit: per resample, terms are accumulated in index
// order, signs are applied by exact negation, and a resample counts when
// |sum| >= threshold.

namespace sdsim::kernels {

namespace scalar_detail {

inline double signflip_sum(const double* d, std::size_t n, const std::uint64_t* words) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = (words[i >> 6] >> (i & 63)) & 1u;
        acc += bit ? -d[i] : d[i];
    }
    return acc;
}

inline double mask_sum(const double* d, std::size_t n, std::uint64_t mask) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += (mask >> i) & 1u ? -d[i] : d[i];
    }
    return acc;
}

inline double gather_sum(const double* vals, std::size_t n, const std::uint32_t* row) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += vals[row[k]];
    }
    return acc;
}

std::uint64_t signflip_exceed_count(const double* d, std::size_t n, const std::uint64_t* words,
                                    std::size_t stride, std::size_t n_resamples, double threshold) {
    std::uint64_t count = 0;
    for (std::size_t r = 0; r < n_resamples; ++r) {
        count += std::fabs(signflip_sum(d, n, words + r * stride)) >= threshold;
    }
    return count;
}

std::uint64_t signflip_exceed_range(const double* d, std::size_t n, std::uint64_t first_mask,
                                    std::uint64_t n_masks, double threshold) {
    std::uint64_t count = 0;
    for (std::uint64_t r = 0; r < n_masks; ++r) {
        count += std::fabs(mask_sum(d, n, first_mask + r)) >= threshold;
    }
    return count;
}

std::uint64_t resample_exceed_count(const double* vals, std::size_t n, const std::uint32_t* idx,
                                    std::size_t n_resamples, double threshold) {
    std::uint64_t count = 0;
    for (std::size_t r = 0; r < n_resamples; ++r) {
        count += std::fabs(gather_sum(vals, n, idx + r * n)) >= threshold;
    }
    return count;
}

void signflip_sums(const double* d, std::size_t n, const std::uint64_t* words, std::size_t stride,
                   std::size_t n_resamples, double* out) {
    for (std::size_t r = 0; r < n_resamples; ++r) {
        out[r] = signflip_sum(d, n, words + r * stride);
    }
}

void resample_sums(const double* vals, std::size_t n, const std::uint32_t* idx,
                   std::size_t n_resamples, double* out) {
    for (std::size_t r = 0; r < n_resamples; ++r) {
        out[r] = gather_sum(vals, n, idx + r * n);
    }
}

}  // namespace scalar_detail

const Kernel& scalar_kernel() {
    static const Kernel k{
        "scalar",
        &scalar_detail::signflip_exceed_count,
        &scalar_detail::signflip_exceed_range,
        &scalar_detail::resample_exceed_count,
        &scalar_detail::signflip_sums,
        &scalar_detail::resample_sums,
    };
    return k;
}

}  // namespace sdsim::kernels
