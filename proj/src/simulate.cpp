#include "sdsim/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace sdsim {

SyntheticRanking sample_ranking(const LogNormalMixture& m, std::size_t n_samples, RngStream& rng) {
    SyntheticRanking r;
    r.items.resize(n_samples);
    for (auto& item : r.items) {
        const bool from_relevant = rng.next_unit() < m.lambda;
        const LogNormal& component = from_relevant ? m.relevant : m.nonrelevant;
        item.score = std::exp(component.mu + component.sigma * rng.next_normal());
        item.label = from_relevant ? 1 : 0;
    }
    // Descending by score; ties pessimistically rank non-relevant first.
    std::sort(r.items.begin(), r.items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.label < b.label;
    });
    return r;
}

double average_precision(const SyntheticRanking& r) {
    std::size_t total_relevant = 0;
    for (const auto& item : r.items) total_relevant += item.label;
    if (total_relevant == 0) return 0.0;

    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < r.items.size(); ++k) {
        if (r.items[k].label) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

PairedApSeries paired_series(const std::map<std::string, LogNormalMixture>& models_a,
                             const std::map<std::string, LogNormalMixture>& models_b,
                             const std::vector<std::string>& query_ids, std::size_t n_samples,
                             const RngStream& rng) {
    PairedApSeries series;
    series.query_ids = query_ids;
    series.ap_a.reserve(query_ids.size());
    series.ap_b.reserve(query_ids.size());
    for (std::size_t qi = 0; qi < query_ids.size(); ++qi) {
        const auto& qid = query_ids[qi];
        auto a = models_a.find(qid);
        auto b = models_b.find(qid);
        if (a == models_a.end() || b == models_b.end()) throw MissingModelError(qid);
        RngStream rng_a = rng.derive(2 * qi);
        RngStream rng_b = rng.derive(2 * qi + 1);
        series.ap_a.push_back(average_precision(sample_ranking(a->second, n_samples, rng_a)));
        series.ap_b.push_back(average_precision(sample_ranking(b->second, n_samples, rng_b)));
    }
    return series;
}

std::vector<std::size_t> subsample_indices(std::size_t n_total, std::size_t n, RngStream& rng) {
    if (n > n_total) throw SubsetTooLargeError();
    // Partial Fisher-Yates over the index vector, then restore order.
    std::vector<std::size_t> pool(n_total);
    for (std::size_t i = 0; i < n_total; ++i) pool[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.next_below(static_cast<std::uint32_t>(n_total - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<std::string> subsample_queries(const std::vector<std::string>& query_ids,
                                           std::size_t n, RngStream& rng) {
    const auto idx = subsample_indices(query_ids.size(), n, rng);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i : idx) out.push_back(query_ids[i]);
    return out;
}

}  // namespace sdsim
