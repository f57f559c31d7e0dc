#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdsim/error.hpp"

namespace sdsim::trec {

struct MalformedLineError : Error {
    MalformedLineError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

struct EmptyRunError : Error {
    EmptyRunError() : Error("run contains no entries") {}
};

struct NoRelevantRetrievedError : Error {
    explicit NoRelevantRetrievedError(const std::string& query)
        : Error("query " + query + ": no judged-relevant document retrieved"), query_id(query) {}
    std::string query_id;
};

struct RunEntry {
    std::string doc_id;
    int rank = 0;
    double score = 0.0;
    bool operator==(const RunEntry&) const = default;
};

struct QueryRun {
    std::string query_id;
    std::vector<RunEntry> entries;
    bool operator==(const QueryRun&) const = default;
};

// One system's run: entries grouped by query, queries sorted by id.
struct RunFile {
    std::string system_tag;
    std::vector<QueryRun> queries;
    bool operator==(const RunFile&) const = default;
};

// Relevance judgments. Lookup distinguishes judged-non-relevant (0) from
// unjudged (nullopt); graded judgments collapse to binary at parse time.
class Judgments {
  public:
    void set(const std::string& query_id, const std::string& doc_id, int relevance) {
        by_query_[query_id][doc_id] = relevance > 0 ? 1 : 0;
    }
    [[nodiscard]] std::optional<int> lookup(const std::string& query_id,
                                            const std::string& doc_id) const {
        auto q = by_query_.find(query_id);
        if (q == by_query_.end()) return std::nullopt;
        auto d = q->second.find(doc_id);
        if (d == q->second.end()) return std::nullopt;
        return d->second;
    }
    [[nodiscard]] std::size_t size() const {
        std::size_t total = 0;
        for (const auto& [q, docs] : by_query_) total += docs.size();
        return total;
    }

  private:
    std::unordered_map<std::string, std::unordered_map<std::string, int>> by_query_;
};

// Per-query partition of a run's retrieved scores by judgment. Unjudged
// documents count as non-relevant, per pooling practice.
struct QueryScoreSet {
    std::string query_id;
    std::vector<double> relevant_scores;
    std::vector<double> nonrelevant_scores;
    [[nodiscard]] std::size_t n_retrieved() const {
        return relevant_scores.size() + nonrelevant_scores.size();
    }
};

struct Exclusion {
    std::string system_tag;
    std::string reason;
};

struct FilterResult {
    std::vector<RunFile> kept;
    std::vector<Exclusion> excluded;
};

// Parse standard 6-column run lines (query, iteration, doc, rank, score, tag).
// Lines must share one system tag; duplicate documents within a query are
// rejected. Throws MalformedLineError / EmptyRunError.
RunFile parse_run(std::string_view text);

// Parse standard 4-column qrels lines (query, iteration, doc, relevance).
Judgments parse_qrels(std::string_view text);

// Sort each query's entries by score descending (stable), keep the top k and
// reassign ranks 1..m.
RunFile normalize_run(RunFile run, std::size_t top_k);

// If any score in the run is <= 0, replace every score s by s - min + epsilon.
// One constant per run; within-query ordering is unchanged.
RunFile shift_scores(RunFile run, double epsilon);

// Keep systems where every query clears the document and judged-relevant
// minima and carries at least two distinct score values.
FilterResult filter_systems(std::vector<RunFile> runs, const Judgments& judgments,
                            std::size_t min_docs_per_query, std::size_t min_relevant_per_query);

// Partition each query's retrieved scores into relevant / non-relevant.
// Expects a shifted, normalized run. Throws NoRelevantRetrievedError.
std::vector<QueryScoreSet> build_query_score_sets(const RunFile& run, const Judgments& judgments);

// Inverse of parse_run for normalized runs (shortest round-trip scores).
std::string serialize_run(const RunFile& run);

// `system_tag<TAB>reason` lines.
std::string format_exclusion_log(const std::vector<Exclusion>& exclusions);

}  // namespace sdsim::trec
