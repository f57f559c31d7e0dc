#include "sdsim/stattests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sdsim/kernels.hpp"
#include "sdsim/mathfn.hpp"

namespace sdsim {

namespace {

constexpr std::size_t kExactThreshold = 20;  // automatic-mode enumeration cutoff
constexpr std::size_t kExactLimit = 25;      // hard cap for forced exact mode
constexpr std::size_t kChunk = 8192;         // resamples generated per batch

// Sequential sum; the resampling kernels accumulate in the same order, so
// the identity sign vector reproduces this value bit-for-bit.
double ordered_sum(std::span<const double> d) {
    double s = 0.0;
    for (double v : d) s += v;
    return s;
}

struct RankedDiffs {
    std::vector<double> ranks;  // average ranks of |d| over the non-zero entries
    std::vector<bool> positive;
    double w_plus = 0.0;
    double tie_correction = 0.0;  // sum of (t^3 - t) over tie groups
};

RankedDiffs rank_absolute_differences(std::span<const double> d) {
    RankedDiffs out;
    std::vector<double> magnitude;
    for (double v : d) {
        if (v == 0.0) continue;
        magnitude.push_back(std::fabs(v));
        out.positive.push_back(v > 0.0);
    }
    const std::size_t n = magnitude.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return magnitude[a] < magnitude[b]; });

    out.ranks.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && magnitude[order[j + 1]] == magnitude[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        const auto tie = static_cast<double>(j - i + 1);
        out.tie_correction += tie * tie * tie - tie;
        for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg_rank;
        i = j + 1;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (out.positive[k]) out.w_plus += out.ranks[k];
    }
    return out;
}

// Exact signed-rank distribution by convolution over doubled ranks (doubling
// makes average ranks integral). counts[s] = number of sign assignments with
// doubled W+ equal to s; total mass is 2^n.
double wilcoxon_exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    std::size_t total = 0;
    std::vector<std::size_t> doubled(n);
    for (std::size_t i = 0; i < n; ++i) {
        doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
        total += doubled[i];
    }
    std::vector<std::uint64_t> counts(total + 1, 0);
    counts[0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = total; s >= doubled[i]; --s) {
            counts[s] += counts[s - doubled[i]];
        }
    }
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w_plus));
    std::uint64_t lower = 0, upper = 0;
    for (std::size_t s = 0; s <= total; ++s) {
        if (s <= w2) lower += counts[s];
        if (s >= w2) upper += counts[s];
    }
    const double tail = std::ldexp(static_cast<double>(std::min(lower, upper)),
                                   -static_cast<int>(n));
    return std::min(1.0, 2.0 * tail);
}

std::size_t effective_resamples(const ResampleConfig& cfg) {
    if (cfg.n_resamples < 1) throw std::invalid_argument("n_resamples must be >= 1");
    return cfg.n_resamples;
}

bool use_exact(const ResampleConfig& cfg, std::size_t n) {
    switch (cfg.mode) {
        case ResampleMode::automatic:
            return n <= kExactThreshold;
        case ResampleMode::exact:
            if (n > kExactLimit) {
                throw std::invalid_argument("exact enumeration limited to n <= 25");
            }
            return true;
        case ResampleMode::monte_carlo:
            return false;
    }
    return false;
}

}  // namespace

const char* to_string(TestName name) {
    switch (name) {
        case TestName::ttest: return "ttest";
        case TestName::wilcoxon: return "wilcoxon";
        case TestName::sign: return "sign";
        case TestName::permutation: return "permutation";
        case TestName::bootstrap: return "bootstrap";
    }
    return "?";
}

TestOutcome t_test_paired(std::span<const double> d) {
    if (d.size() < 2) throw std::invalid_argument("t test needs at least 2 pairs");
    const auto n = static_cast<double>(d.size());
    const double mean = ordered_sum(d) / n;
    double ssd = 0.0;
    for (double v : d) ssd += (v - mean) * (v - mean);
    const double var = ssd / (n - 1.0);

    TestOutcome out;
    out.test = TestName::ttest;
    out.n_effective = d.size();
    if (var == 0.0) {
        if (mean == 0.0) {
            out.statistic = 0.0;
            out.p_value = 1.0;
            return out;
        }
        out.failure = TestFailure::degenerate_variance;
        out.note = "zero variance with non-zero mean difference";
        out.statistic = std::numeric_limits<double>::quiet_NaN();
        out.p_value = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.statistic = mean / std::sqrt(var / n);
    out.p_value = student_t_two_sided_p(out.statistic, n - 1.0);
    return out;
}

TestOutcome wilcoxon_signed_rank(std::span<const double> d) {
    if (d.empty()) throw std::invalid_argument("wilcoxon needs at least 1 pair");
    const RankedDiffs r = rank_absolute_differences(d);
    const std::size_t n = r.ranks.size();

    TestOutcome out;
    out.test = TestName::wilcoxon;
    out.n_effective = n;
    if (n == 0) {
        out.statistic = 0.0;
        out.p_value = 1.0;  // all differences zero
        return out;
    }
    out.statistic = r.w_plus;
    if (n <= kExactThreshold) {
        out.p_value = wilcoxon_exact_two_sided_p(r.ranks, r.w_plus);
        return out;
    }
    const auto nn = static_cast<double>(n);
    const double expected = nn * (nn + 1.0) / 4.0;
    const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - r.tie_correction / 48.0;
    if (variance <= 0.0) {
        out.p_value = 1.0;
        return out;
    }
    const double z = std::max(0.0, (std::fabs(r.w_plus - expected) - 0.5) / std::sqrt(variance));
    out.p_value = normal_two_sided_p(z);
    return out;
}

TestOutcome sign_test(std::span<const double> d) {
    if (d.empty()) throw std::invalid_argument("sign test needs at least 1 pair");
    std::uint64_t pos = 0, neg = 0;
    for (double v : d) {
        if (v > 0.0) ++pos;
        else if (v < 0.0) ++neg;
    }
    TestOutcome out;
    out.test = TestName::sign;
    out.n_effective = pos + neg;
    out.statistic = static_cast<double>(pos);
    if (out.n_effective == 0) {
        out.p_value = 1.0;
        return out;
    }
    out.p_value = std::min(1.0, 2.0 * binom_half_lower_tail(pos + neg, std::min(pos, neg)));
    return out;
}

TestOutcome permutation_test(std::span<const double> d, const ResampleConfig& cfg) {
    if (d.empty()) throw std::invalid_argument("permutation test needs at least 1 pair");
    const std::size_t n = d.size();
    const auto& kernel = kernels::active_kernel();
    const double sum = ordered_sum(d);
    const double mean = sum / static_cast<double>(n);
    // Comparisons run on n * statistic (the signed sum), which orders
    // identically to the mean. With the t statistic selected, |t*| >= |t| is
    // equivalent to |sum*| >= |sum| because the sign flips leave sum d^2
    // unchanged and |t| is increasing in |sum|; the counts are shared.
    const double threshold = std::fabs(sum);

    TestOutcome out;
    out.test = TestName::permutation;
    out.n_effective = n;
    out.statistic = mean;
    if (cfg.statistic == ResampleStatistic::t_stat && n >= 2) {
        const TestOutcome t = t_test_paired(d);
        if (t.failure == TestFailure::none) out.statistic = t.statistic;  // reported only
    }

    if (use_exact(cfg, n)) {
        const std::uint64_t n_masks = 1ull << n;
        const std::uint64_t count =
            kernel.signflip_exceed_range(d.data(), n, 0, n_masks, threshold);
        out.p_value = static_cast<double>(count) / static_cast<double>(n_masks);
        return out;
    }

    const std::size_t n_resamples = effective_resamples(cfg);
    const std::size_t stride = (n + 63) / 64;
    RngStream rng = cfg.rng;
    std::vector<std::uint64_t> words(std::min(kChunk, n_resamples) * stride);
    std::uint64_t count = 0;
    std::size_t remaining = n_resamples;
    while (remaining > 0) {
        const std::size_t batch = std::min(kChunk, remaining);
        for (std::size_t i = 0; i < batch * stride; ++i) words[i] = rng.next_u64();
        count += kernel.signflip_exceed_count(d.data(), n, words.data(), stride, batch, threshold);
        remaining -= batch;
    }
    out.p_value = static_cast<double>(1 + count) / static_cast<double>(n_resamples + 1);
    return out;
}

namespace {

// Studentized bootstrap exceedance count (t-statistic variant); scalar only.
std::uint64_t bootstrap_t_exceed(std::span<const double> centered, const std::uint32_t* idx,
                                 std::size_t n_resamples, double t_obs) {
    const std::size_t n = centered.size();
    const auto nn = static_cast<double>(n);
    std::uint64_t count = 0;
    for (std::size_t r = 0; r < n_resamples; ++r) {
        const std::uint32_t* row = idx + r * n;
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += centered[row[k]];
        const double mean = sum / nn;
        double ssd = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double dev = centered[row[k]] - mean;
            ssd += dev * dev;
        }
        if (ssd == 0.0) {
            count += mean == 0.0 && t_obs == 0.0;
            continue;
        }
        const double t = mean / std::sqrt(ssd / (nn - 1.0) / nn);
        count += std::fabs(t) >= std::fabs(t_obs);
    }
    return count;
}

}  // namespace

TestOutcome bootstrap_test(std::span<const double> d, const ResampleConfig& cfg) {
    if (d.empty()) throw std::invalid_argument("bootstrap test needs at least 1 pair");
    const std::size_t n = d.size();
    const std::size_t n_resamples = effective_resamples(cfg);
    const auto& kernel = kernels::active_kernel();
    const double mean = ordered_sum(d) / static_cast<double>(n);

    // Shift to the null: resample from the centered differences.
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = d[i] - mean;

    TestOutcome out;
    out.test = TestName::bootstrap;
    out.n_effective = n;
    out.statistic = mean;

    const bool studentized = cfg.statistic == ResampleStatistic::t_stat && n >= 2;
    double t_obs = 0.0;
    if (studentized) {
        const TestOutcome t = t_test_paired(d);
        if (t.failure != TestFailure::none) {
            out.failure = t.failure;
            out.note = t.note;
            out.p_value = std::numeric_limits<double>::quiet_NaN();
            return out;
        }
        t_obs = t.statistic;
        out.statistic = t_obs;
    }
    // Threshold on the resample sum: n * |mean| orders identically to the
    // resample-mean comparison.
    const double threshold = static_cast<double>(n) * std::fabs(mean);

    RngStream rng = cfg.rng;
    std::vector<std::uint32_t> idx(std::min(kChunk, n_resamples) * n);
    std::uint64_t count = 0;
    std::size_t remaining = n_resamples;
    while (remaining > 0) {
        const std::size_t batch = std::min(kChunk, remaining);
        for (std::size_t i = 0; i < batch * n; ++i) {
            idx[i] = rng.next_below(static_cast<std::uint32_t>(n));
        }
        if (studentized) {
            count += bootstrap_t_exceed(centered, idx.data(), batch, t_obs);
        } else {
            count += kernel.resample_exceed_count(centered.data(), n, idx.data(), batch, threshold);
        }
        remaining -= batch;
    }
    out.p_value = static_cast<double>(1 + count) / static_cast<double>(n_resamples + 1);
    return out;
}

std::array<TestOutcome, 5> run_all_tests(std::span<const double> d, double alpha,
                                         const ResampleConfig& cfg) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");

    std::array<TestOutcome, 5> outcomes;
    auto guarded = [&](TestName name, auto&& fn) {
        TestOutcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out.test = name;
            out.failure = TestFailure::failed;
            out.note = e.what();
            out.p_value = std::numeric_limits<double>::quiet_NaN();
        }
        out.rejected = out.reject(alpha);
        return out;
    };

    ResampleConfig perm_cfg = cfg;
    perm_cfg.rng = cfg.rng.derive(1);
    ResampleConfig boot_cfg = cfg;
    boot_cfg.rng = cfg.rng.derive(2);

    outcomes[0] = guarded(TestName::ttest, [&] { return t_test_paired(d); });
    outcomes[1] = guarded(TestName::wilcoxon, [&] { return wilcoxon_signed_rank(d); });
    outcomes[2] = guarded(TestName::sign, [&] { return sign_test(d); });
    outcomes[3] = guarded(TestName::permutation, [&] { return permutation_test(d, perm_cfg); });
    outcomes[4] = guarded(TestName::bootstrap, [&] { return bootstrap_test(d, boot_cfg); });
    return outcomes;
}

}  // namespace sdsim
