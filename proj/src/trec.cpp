#include "sdsim/trec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_set>

namespace sdsim::trec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view line =
            end == std::string_view::npos ? text.substr(pos) : text.substr(pos, end - pos);
        ++line_no;
        fn(line_no, line);
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
}

}  // namespace

RunFile parse_run(std::string_view text) {
    RunFile run;
    std::map<std::string, QueryRun> by_query;
    std::unordered_set<std::string> seen_docs;  // query '\t' doc

    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto fields = split_fields(line);
        if (fields.empty()) return;
        if (fields.size() != 6) {
            throw MalformedLineError(line_no, "expected 6 columns, got " +
                                                  std::to_string(fields.size()));
        }
        RunEntry entry;
        if (!parse_int(fields[3], entry.rank)) {
            throw MalformedLineError(line_no, "non-numeric rank '" + std::string(fields[3]) + "'");
        }
        if (!parse_double(fields[4], entry.score) || !std::isfinite(entry.score)) {
            throw MalformedLineError(line_no, "non-numeric score '" + std::string(fields[4]) + "'");
        }
        entry.doc_id = std::string(fields[2]);
        const std::string query_id(fields[0]);
        const std::string tag(fields[5]);
        if (run.system_tag.empty()) {
            run.system_tag = tag;
        } else if (run.system_tag != tag) {
            throw MalformedLineError(line_no, "system tag '" + tag + "' differs from '" +
                                                  run.system_tag + "'");
        }
        if (!seen_docs.insert(query_id + '\t' + entry.doc_id).second) {
            throw MalformedLineError(line_no, "duplicate document '" + entry.doc_id +
                                                  "' for query " + query_id);
        }
        auto& qr = by_query[query_id];
        qr.query_id = query_id;
        qr.entries.push_back(std::move(entry));
    });

    for (auto& [id, qr] : by_query) run.queries.push_back(std::move(qr));
    if (run.queries.empty()) throw EmptyRunError();
    return run;
}

Judgments parse_qrels(std::string_view text) {
    Judgments judgments;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto fields = split_fields(line);
        if (fields.empty()) return;
        if (fields.size() != 4) {
            throw MalformedLineError(line_no, "expected 4 columns, got " +
                                                  std::to_string(fields.size()));
        }
        int relevance = 0;
        if (!parse_int(fields[3], relevance)) {
            throw MalformedLineError(line_no,
                                     "non-numeric relevance '" + std::string(fields[3]) + "'");
        }
        judgments.set(std::string(fields[0]), std::string(fields[2]), relevance);
    });
    return judgments;
}

RunFile normalize_run(RunFile run, std::size_t top_k) {
    for (auto& qr : run.queries) {
        std::stable_sort(qr.entries.begin(), qr.entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.score > b.score; });
        if (qr.entries.size() > top_k) qr.entries.resize(top_k);
        for (std::size_t i = 0; i < qr.entries.size(); ++i) {
            qr.entries[i].rank = static_cast<int>(i + 1);
        }
    }
    return run;
}

RunFile shift_scores(RunFile run, double epsilon) {
    double min_score = std::numeric_limits<double>::infinity();
    for (const auto& qr : run.queries) {
        for (const auto& e : qr.entries) min_score = std::min(min_score, e.score);
    }
    if (!(min_score <= 0.0)) return run;
    const double offset = -min_score + epsilon;
    for (auto& qr : run.queries) {
        for (auto& e : qr.entries) e.score += offset;
    }
    return run;
}

FilterResult filter_systems(std::vector<RunFile> runs, const Judgments& judgments,
                            std::size_t min_docs_per_query, std::size_t min_relevant_per_query) {
    FilterResult result;
    for (auto& run : runs) {
        std::string reason;
        for (const auto& qr : run.queries) {
            if (qr.entries.size() < min_docs_per_query) {
                reason = "too_few_docs query=" + qr.query_id + " n=" +
                         std::to_string(qr.entries.size()) + " min=" +
                         std::to_string(min_docs_per_query);
                break;
            }
            std::set<double> distinct;
            for (const auto& e : qr.entries) {
                distinct.insert(e.score);
                if (distinct.size() > 1) break;
            }
            if (distinct.size() < 2) {
                reason = "no_scores query=" + qr.query_id;
                break;
            }
            std::size_t n_relevant = 0;
            for (const auto& e : qr.entries) {
                if (judgments.lookup(qr.query_id, e.doc_id).value_or(0) == 1) ++n_relevant;
            }
            if (n_relevant < min_relevant_per_query) {
                reason = "too_few_relevant query=" + qr.query_id + " n=" +
                         std::to_string(n_relevant) + " min=" +
                         std::to_string(min_relevant_per_query);
                break;
            }
        }
        if (reason.empty()) {
            result.kept.push_back(std::move(run));
        } else {
            result.excluded.push_back({run.system_tag, reason});
        }
    }
    return result;
}

std::vector<QueryScoreSet> build_query_score_sets(const RunFile& run, const Judgments& judgments) {
    std::vector<QueryScoreSet> sets;
    sets.reserve(run.queries.size());
    for (const auto& qr : run.queries) {
        QueryScoreSet qss;
        qss.query_id = qr.query_id;
        for (const auto& e : qr.entries) {
            if (judgments.lookup(qr.query_id, e.doc_id).value_or(0) == 1) {
                qss.relevant_scores.push_back(e.score);
            } else {
                qss.nonrelevant_scores.push_back(e.score);
            }
        }
        if (qss.relevant_scores.empty()) throw NoRelevantRetrievedError(qr.query_id);
        sets.push_back(std::move(qss));
    }
    return sets;
}

std::string serialize_run(const RunFile& run) {
    std::string out;
    char buf[64];
    for (const auto& qr : run.queries) {
        for (const auto& e : qr.entries) {
            out += qr.query_id;
            out += " Q0 ";
            out += e.doc_id;
            out += ' ';
            out += std::to_string(e.rank);
            out += ' ';
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), e.score);
            out.append(buf, ptr);
            out += ' ';
            out += run.system_tag;
            out += '\n';
        }
    }
    return out;
}

std::string format_exclusion_log(const std::vector<Exclusion>& exclusions) {
    std::string out;
    for (const auto& ex : exclusions) {
        out += ex.system_tag;
        out += '\t';
        out += ex.reason;
        out += '\n';
    }
    return out;
}

}  // namespace sdsim::trec
