#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sdsim::kernels {

// Resampling inner loops behind the permutation and bootstrap tests.
//
// Both count how many resampled statistics reach the observed one. Sums are
// accumulated per resample in index order with plain mul/add (no FMA), so
// every variant produces bit-identical results for identical inputs; the
// AVX2 kernels vectorize across resamples, one resample per lane, keeping
// each lane's accumulation order equal to the scalar reference.
struct Kernel {
    const char* name;

    // Count resamples r in [0, n_resamples) with |sum_i s_i * d[i]| >= threshold,
    // where s_i = -1 if bit (i & 63) of words[r * stride + (i >> 6)] is set, else +1.
    std::uint64_t (*signflip_exceed_count)(const double* d, std::size_t n,
                                           const std::uint64_t* words, std::size_t stride,
                                           std::size_t n_resamples, double threshold);

    // Same statistic with the sign word of resample r equal to first_mask + r.
    // Enumerating first_mask = 0, n_masks = 2^n walks every sign assignment
    // exactly once (requires n <= 63).
    std::uint64_t (*signflip_exceed_range)(const double* d, std::size_t n,
                                           std::uint64_t first_mask, std::uint64_t n_masks,
                                           double threshold);

    // Count resamples r with |sum_k vals[idx[r * n + k]]| >= threshold.
    std::uint64_t (*resample_exceed_count)(const double* vals, std::size_t n,
                                           const std::uint32_t* idx, std::size_t n_resamples,
                                           double threshold);

    // Equivalence-test entry points: write each resample's signed sum.
    void (*signflip_sums)(const double* d, std::size_t n, const std::uint64_t* words,
                          std::size_t stride, std::size_t n_resamples, double* out);
    void (*resample_sums)(const double* vals, std::size_t n, const std::uint32_t* idx,
                          std::size_t n_resamples, double* out);
};

enum class KernelKind { scalar, avx2 };

const Kernel& scalar_kernel();

// AVX2 variant, or nullptr when not compiled in or not supported by this CPU.
const Kernel* avx2_kernel();

// Kernel used by the significance tests: best available unless overridden.
const Kernel& active_kernel();

// Override the dispatch (CLI flag / tests). Throws std::runtime_error if the
// requested kernel is unavailable.
void force_kernel(KernelKind kind);
void reset_kernel();

std::vector<std::string> available_kernels();

}  // namespace sdsim::kernels
