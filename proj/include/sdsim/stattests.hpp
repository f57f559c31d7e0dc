#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "sdsim/error.hpp"
#include "sdsim/rng.hpp"

namespace sdsim {

enum class TestName : std::uint8_t { ttest, wilcoxon, sign, permutation, bootstrap };

constexpr std::array<TestName, 5> kAllTests{TestName::ttest, TestName::wilcoxon, TestName::sign,
                                            TestName::permutation, TestName::bootstrap};

const char* to_string(TestName name);

enum class TestFailure : std::uint8_t {
    none,
    degenerate_variance,  // zero variance with non-zero mean difference
    failed,               // test-level error captured by run_all_tests
};

struct TestOutcome {
    TestName test = TestName::ttest;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_effective = 0;
    TestFailure failure = TestFailure::none;
    bool rejected = false;  // p_value <= alpha, filled by run_all_tests
    std::string note;       // diagnostic for failure != none

    [[nodiscard]] bool reject(double alpha) const {
        return failure == TestFailure::none && p_value <= alpha;
    }
};

enum class ResampleMode : std::uint8_t {
    automatic,    // exact enumeration when n <= 20, Monte Carlo otherwise
    monte_carlo,  // always Monte Carlo
    exact,        // always enumerate (n <= 25 enforced)
};

// Difference of means is the default resampling statistic; the t statistic
// is available for sensitivity analysis.
enum class ResampleStatistic : std::uint8_t { mean_diff, t_stat };

struct ResampleConfig {
    std::size_t n_resamples = 100000;
    RngStream rng{0};
    ResampleMode mode = ResampleMode::automatic;
    ResampleStatistic statistic = ResampleStatistic::mean_diff;
};

// Paired two-sided Student t test on the differences: t = mean / (s / sqrt(n))
// with the sample (1/(n-1)) standard deviation, p from the regularized
// incomplete beta. All-zero input gives p = 1; zero variance with non-zero
// mean reports degenerate_variance.
TestOutcome t_test_paired(std::span<const double> d);

// Two-sided Wilcoxon signed-rank test. Zeros are dropped, ties receive
// average ranks. Exact two-sided p over all 2^n sign assignments when
// n_effective <= 20, otherwise normal approximation with tie-corrected
// variance and continuity correction. Statistic is W+.
TestOutcome wilcoxon_signed_rank(std::span<const double> d);

// Two-sided exact sign test: zeros dropped, p = min(1, 2 * binomial lower
// tail at min(#pos, #neg)). Statistic is the number of positive differences.
TestOutcome sign_test(std::span<const double> d);

// Paired permutation (sign-flip) test on the difference of means. Exact
// enumeration of all 2^n sign vectors when n <= 20 (p = count / 2^n),
// otherwise Monte Carlo with the add-one estimator (1 + exceedances) /
// (n_resamples + 1).
TestOutcome permutation_test(std::span<const double> d, const ResampleConfig& cfg);

// One-sample bootstrap shift test: resample the centered differences with
// replacement, p = (1 + #{|resample mean| >= |mean|}) / (n_resamples + 1).
TestOutcome bootstrap_test(std::span<const double> d, const ResampleConfig& cfg);

// All five tests in enum order with rejection flags at `alpha`. The two
// resampling tests get independent sub-streams (cfg.rng.derive(1) and
// derive(2)). Per-test errors are captured in the outcome, not thrown.
std::array<TestOutcome, 5> run_all_tests(std::span<const double> d, double alpha,
                                         const ResampleConfig& cfg);

}  // namespace sdsim
