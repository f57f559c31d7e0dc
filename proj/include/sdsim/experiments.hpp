#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdsim/sdmodel.hpp"
#include "sdsim/stattests.hpp"

namespace sdsim {

struct ExperimentConfig {
    std::size_t n_samples_per_list = 1000;
    std::size_t n_repetitions = 1000;
    std::size_t n_resamples = 100000;
    std::vector<double> alpha_grid;        // significance levels for type-I reports
    std::vector<double> h_grid;            // relevant-mean increases; must start at 0
    std::vector<std::size_t> query_sizes;  // query-set sizes per trial
    std::uint64_t master_seed = 1;
    double power_alpha = 0.05;     // level at which power curves count rejections
    std::size_t validity_reps = 50;  // simulations per model for the MAP curve
    std::size_t n_threads = 1;       // 0 = hardware concurrency

    // Paper-scale defaults: 1000 repetitions, 100k resamples, alpha 0.01..0.25
    // step 0.01, h 0..0.30 step 0.005, query sizes 10..50.
    static ExperimentConfig paper_profile();
    // Same grids except 200 repetitions, 10k resamples and h step 0.05.
    static ExperimentConfig desk_profile();

    void check() const;  // throws std::invalid_argument on bad grids
};

// Per-cell rejection tally, broken down by system so both normalizations of
// the two-level average are reachable.
struct RejectionCounts {
    std::vector<std::uint64_t> rejections_by_system;
    std::vector<std::uint64_t> errors_by_system;  // trials where the test failed

    [[nodiscard]] std::uint64_t total_rejections() const {
        std::uint64_t t = 0;
        for (auto v : rejections_by_system) t += v;
        return t;
    }
    [[nodiscard]] std::uint64_t total_errors() const {
        std::uint64_t t = 0;
        for (auto v : errors_by_system) t += v;
        return t;
    }
};

// Rejection-rate estimates per (test, alpha, query-set size) with H0 true.
struct Type1Report {
    std::vector<std::string> systems;
    std::vector<double> alphas;
    std::vector<std::size_t> query_sizes;
    std::uint64_t n_repetitions = 0;
    std::vector<RejectionCounts> cells;  // [test][alpha][size] row-major

    [[nodiscard]] std::size_t cell_index(std::size_t test_idx, std::size_t alpha_idx,
                                         std::size_t size_idx) const {
        return (test_idx * alphas.size() + alpha_idx) * query_sizes.size() + size_idx;
    }
    [[nodiscard]] std::uint64_t n_trials() const { return systems.size() * n_repetitions; }
    [[nodiscard]] double rejection_rate(std::size_t test_idx, std::size_t alpha_idx,
                                        std::size_t size_idx) const {
        return static_cast<double>(cells[cell_index(test_idx, alpha_idx, size_idx)]
                                       .total_rejections()) /
               static_cast<double>(n_trials());
    }
    [[nodiscard]] double monte_carlo_stderr(std::size_t test_idx, std::size_t alpha_idx,
                                            std::size_t size_idx) const;
};

// Rejection probabilities per (test, h, query-set size) at level power_alpha.
struct PowerCurve {
    std::vector<std::string> systems;
    std::vector<double> hs;
    std::vector<std::size_t> query_sizes;
    std::uint64_t n_repetitions = 0;
    double alpha = 0.05;
    std::vector<RejectionCounts> cells;  // [test][h][size] row-major
    // (system, query) pairs whose relevant location is <= 0, where the
    // multiplicative increase degrades the relevant component instead.
    std::vector<std::pair<std::string, std::string>> mu1_warnings;

    [[nodiscard]] std::size_t cell_index(std::size_t test_idx, std::size_t h_idx,
                                         std::size_t size_idx) const {
        return (test_idx * hs.size() + h_idx) * query_sizes.size() + size_idx;
    }
    [[nodiscard]] std::uint64_t n_trials() const { return systems.size() * n_repetitions; }
    [[nodiscard]] double p_reject(std::size_t test_idx, std::size_t h_idx,
                                  std::size_t size_idx) const {
        return static_cast<double>(cells[cell_index(test_idx, h_idx, size_idx)]
                                       .total_rejections()) /
               static_cast<double>(n_trials());
    }
};

struct ValidityPoint {
    double h = 0.0;
    double mean_ap = 0.0;
};

struct DeltaApRecord {
    std::string system;
    std::string query;
    std::size_t rep = 0;
    double delta_ap_pct = 0.0;
    bool base_zero = false;  // sentinel: baseline AP was 0, percentage undefined
};

// H0-true experiment: per system and repetition, two independent lists are
// sampled per query from the same mixture, their APs paired and all five
// tests run; rejections are tallied per (test, alpha, query-set size).
Type1Report type1_experiment(const ModelSet& models, const ExperimentConfig& cfg);

// H0-false experiment: list A from the fitted mixture, list B from the
// mixture with relevant.mu scaled by (1 + h), per h in cfg.h_grid.
PowerCurve power_experiment(const ModelSet& models, const ExperimentConfig& cfg);

// Mean AP across systems, queries and cfg.validity_reps simulations of lists
// sampled from the h-scaled mixtures, per h. Uses common random numbers
// across h so the curve is smooth in the scaling alone.
std::vector<ValidityPoint> validity_map_curve(const ModelSet& models,
                                              const ExperimentConfig& cfg);

// Per (system, query, rep): percentage AP change between one list from the
// h-scaled mixture and one from the base mixture, on independent draws.
std::vector<DeltaApRecord> delta_ap_distribution(const ModelSet& models, double h,
                                                 std::size_t n_reps,
                                                 const ExperimentConfig& cfg);

// --- CSV serialization -------------------------------------------------

struct CsvMeta {
    std::string collection = "synthetic";
    std::string profile = "desk";
    std::uint64_t seed = 0;
    std::string config_digest;
};

// FNV-1a digest of the canonical config serialization (goes in CSV headers).
std::string config_digest(const ExperimentConfig& cfg);

std::string type1_csv(const Type1Report& report, const CsvMeta& meta);
std::string power_csv(const PowerCurve& curve, const CsvMeta& meta);
std::string validity_csv(const std::vector<ValidityPoint>& points, const CsvMeta& meta);
std::string delta_ap_csv(const std::vector<DeltaApRecord>& records, const CsvMeta& meta);

}  // namespace sdsim
