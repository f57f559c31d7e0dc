#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdsim/error.hpp"
#include "sdsim/rng.hpp"
#include "sdsim/sdmodel.hpp"

namespace sdsim {

struct MissingModelError : Error {
    explicit MissingModelError(const std::string& query)
        : Error("no model for query " + query), query_id(query) {}
    std::string query_id;
};

struct SubsetTooLargeError : Error {
    SubsetTooLargeError() : Error("requested subset exceeds the query set") {}
};

struct RankedItem {
    double score = 0.0;
    std::uint8_t label = 0;  // 1 when drawn from the relevant component
};

// Scores non-increasing; equal scores place label-0 items first.
struct SyntheticRanking {
    std::vector<RankedItem> items;
};

// Draw n scored, labeled samples from the mixture: with probability lambda
// the score comes from the relevant component (label 1), otherwise from the
// non-relevant one (label 0). Sorted by score descending.
SyntheticRanking sample_ranking(const LogNormalMixture& m, std::size_t n_samples, RngStream& rng);

// AP = (1/R) * sum over relevant ranks k of (relevant in top k) / k, with R
// the number of label-1 items; 0 when R = 0.
double average_precision(const SyntheticRanking& r);

// Two aligned per-query AP vectors for one comparison.
struct PairedApSeries {
    std::vector<std::string> query_ids;
    std::vector<double> ap_a;
    std::vector<double> ap_b;

    [[nodiscard]] std::vector<double> differences() const {
        std::vector<double> d(ap_a.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = ap_a[i] - ap_b[i];
        return d;
    }
};

// For each query, sample one ranking from each model family on independent
// sub-streams (derived as 2*query_index for A and 2*query_index + 1 for B)
// and evaluate both with AP. Throws MissingModelError.
PairedApSeries paired_series(const std::map<std::string, LogNormalMixture>& models_a,
                             const std::map<std::string, LogNormalMixture>& models_b,
                             const std::vector<std::string>& query_ids, std::size_t n_samples,
                             const RngStream& rng);

// Uniform random n-subset of {0, ..., n_total-1} without replacement,
// returned in ascending order (stable by original position).
std::vector<std::size_t> subsample_indices(std::size_t n_total, std::size_t n, RngStream& rng);

// Same, over explicit ids.
std::vector<std::string> subsample_queries(const std::vector<std::string>& query_ids,
                                           std::size_t n, RngStream& rng);

}  // namespace sdsim
