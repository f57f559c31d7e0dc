#include "sdsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "sdsim/simulate.hpp"

namespace sdsim {

namespace {

// Stream-derivation path tags; changing any value changes every result.
namespace stream_tag {
constexpr std::uint64_t type1 = 101;
constexpr std::uint64_t power = 102;
constexpr std::uint64_t validity = 103;
constexpr std::uint64_t delta_ap = 104;
constexpr std::uint64_t sample = 11;
constexpr std::uint64_t subset = 12;
constexpr std::uint64_t tests = 13;
constexpr std::uint64_t base_list = 14;
constexpr std::uint64_t scaled_list = 15;
}  // namespace stream_tag

void parallel_for(std::size_t n_tasks, std::size_t n_threads,
                  const std::function<void(std::size_t)>& body) {
    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, std::max<std::size_t>(1, n_tasks));
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) body(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
            if (t >= n_tasks) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct SystemView {
    const SystemModels* models = nullptr;
    std::vector<std::string> query_ids;
    std::map<std::string, LogNormalMixture> mixtures;
};

std::vector<SystemView> make_views(const ModelSet& models) {
    if (models.empty()) throw std::invalid_argument("empty model set");
    std::vector<SystemView> views;
    views.reserve(models.size());
    for (const auto& sys : models) {
        SystemView v;
        v.models = &sys;
        for (const auto& qm : sys.queries) {
            v.query_ids.push_back(qm.query_id);
            v.mixtures.emplace(qm.query_id, qm.mixture);
        }
        views.push_back(std::move(v));
    }
    return views;
}

void require_sizes_fit(const std::vector<SystemView>& views,
                       const std::vector<std::size_t>& sizes) {
    const std::size_t max_size = *std::max_element(sizes.begin(), sizes.end());
    for (const auto& v : views) {
        if (v.query_ids.size() < max_size) {
            throw std::invalid_argument("system " + v.models->system_tag + " has " +
                                        std::to_string(v.query_ids.size()) +
                                        " queries, need >= " + std::to_string(max_size));
        }
    }
}

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1])) {
            throw std::invalid_argument(std::string(name) + " grid must be strictly increasing");
        }
    }
}

// Run the five tests on each query-size subset of one trial's differences
// and deliver the outcomes.
template <typename Consumer>
void tests_over_sizes(const std::vector<double>& diffs, const std::vector<std::size_t>& sizes,
                      const RngStream& trial_rng, double alpha, std::size_t n_resamples,
                      Consumer&& consume) {
    std::vector<double> subset_diffs;
    for (std::size_t size_idx = 0; size_idx < sizes.size(); ++size_idx) {
        const std::size_t size = sizes[size_idx];
        RngStream subset_rng = trial_rng.derive(stream_tag::subset).derive(size_idx);
        subset_diffs.clear();
        if (size == diffs.size()) {
            subset_diffs = diffs;
        } else {
            for (std::size_t i : subsample_indices(diffs.size(), size, subset_rng)) {
                subset_diffs.push_back(diffs[i]);
            }
        }
        ResampleConfig rcfg;
        rcfg.n_resamples = n_resamples;
        rcfg.rng = trial_rng.derive(stream_tag::tests).derive(size_idx);
        const auto outcomes = run_all_tests(subset_diffs, alpha, rcfg);
        consume(size_idx, outcomes);
    }
}

void append_double(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

std::string csv_header(const CsvMeta& meta) {
    return "# profile=" + meta.profile + " seed=" + std::to_string(meta.seed) +
           " config=" + meta.config_digest + "\n";
}

}  // namespace

ExperimentConfig ExperimentConfig::paper_profile() {
    ExperimentConfig cfg;
    cfg.n_samples_per_list = 1000;
    cfg.n_repetitions = 1000;
    cfg.n_resamples = 100000;
    for (int i = 1; i <= 25; ++i) cfg.alpha_grid.push_back(i / 100.0);
    for (int j = 0; j <= 60; ++j) cfg.h_grid.push_back(j / 200.0);
    cfg.query_sizes = {10, 20, 30, 40, 50};
    cfg.validity_reps = 50;
    return cfg;
}

ExperimentConfig ExperimentConfig::desk_profile() {
    ExperimentConfig cfg = paper_profile();
    cfg.n_repetitions = 200;
    cfg.n_resamples = 10000;
    cfg.h_grid.clear();
    for (int j = 0; j <= 6; ++j) cfg.h_grid.push_back(j / 20.0);
    return cfg;
}

void ExperimentConfig::check() const {
    if (n_samples_per_list < 1) throw std::invalid_argument("n_samples_per_list must be >= 1");
    if (n_repetitions < 1) throw std::invalid_argument("n_repetitions must be >= 1");
    if (n_resamples < 1) throw std::invalid_argument("n_resamples must be >= 1");
    check_grid(alpha_grid, "alpha");
    for (double a : alpha_grid) {
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha values must be in (0, 1)");
    }
    check_grid(h_grid, "h");
    if (h_grid.front() != 0.0) throw std::invalid_argument("h grid must start at 0");
    if (query_sizes.empty()) throw std::invalid_argument("query_sizes is empty");
    for (std::size_t i = 0; i + 1 < query_sizes.size(); ++i) {
        if (!(query_sizes[i] < query_sizes[i + 1])) {
            throw std::invalid_argument("query_sizes must be strictly increasing");
        }
    }
    if (query_sizes.front() < 1) throw std::invalid_argument("query sizes must be >= 1");
    if (!(power_alpha > 0.0 && power_alpha < 1.0)) {
        throw std::invalid_argument("power_alpha must be in (0, 1)");
    }
    if (validity_reps < 1) throw std::invalid_argument("validity_reps must be >= 1");
}

double Type1Report::monte_carlo_stderr(std::size_t test_idx, std::size_t alpha_idx,
                                       std::size_t size_idx) const {
    const double p = rejection_rate(test_idx, alpha_idx, size_idx);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_trials()));
}

Type1Report type1_experiment(const ModelSet& models, const ExperimentConfig& cfg) {
    cfg.check();
    const auto views = make_views(models);
    require_sizes_fit(views, cfg.query_sizes);

    Type1Report report;
    for (const auto& v : views) report.systems.push_back(v.models->system_tag);
    report.alphas = cfg.alpha_grid;
    report.query_sizes = cfg.query_sizes;
    report.n_repetitions = cfg.n_repetitions;
    report.cells.assign(kAllTests.size() * cfg.alpha_grid.size() * cfg.query_sizes.size(),
                        RejectionCounts{std::vector<std::uint64_t>(views.size(), 0),
                                        std::vector<std::uint64_t>(views.size(), 0)});

    const RngStream root = RngStream(cfg.master_seed).derive(stream_tag::type1);
    const std::size_t n_tasks = views.size() * cfg.n_repetitions;
    std::mutex tally_mutex;

    parallel_for(n_tasks, cfg.n_threads, [&](std::size_t task) {
        const std::size_t sys_idx = task / cfg.n_repetitions;
        const std::size_t rep = task % cfg.n_repetitions;
        const SystemView& view = views[sys_idx];
        const RngStream trial_rng = root.derive(sys_idx).derive(rep);

        // Two lists per query from the same mixture: H0 true by construction.
        const PairedApSeries series =
            paired_series(view.mixtures, view.mixtures, view.query_ids, cfg.n_samples_per_list,
                          trial_rng.derive(stream_tag::sample));
        const std::vector<double> diffs = series.differences();

        // Rejection flags for this trial, folded into the shared tally once.
        std::vector<std::uint8_t> reject_flags(report.cells.size(), 0);
        std::vector<std::uint8_t> error_flags(report.cells.size(), 0);
        tests_over_sizes(diffs, cfg.query_sizes, trial_rng, cfg.alpha_grid.front(),
                         cfg.n_resamples, [&](std::size_t size_idx, const auto& outcomes) {
                             for (std::size_t t = 0; t < outcomes.size(); ++t) {
                                 for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
                                     const std::size_t cell = report.cell_index(t, a, size_idx);
                                     reject_flags[cell] = outcomes[t].reject(cfg.alpha_grid[a]);
                                     error_flags[cell] =
                                         outcomes[t].failure != TestFailure::none;
                                 }
                             }
                         });

        std::lock_guard lock(tally_mutex);
        for (std::size_t cell = 0; cell < report.cells.size(); ++cell) {
            report.cells[cell].rejections_by_system[sys_idx] += reject_flags[cell];
            report.cells[cell].errors_by_system[sys_idx] += error_flags[cell];
        }
    });
    return report;
}

PowerCurve power_experiment(const ModelSet& models, const ExperimentConfig& cfg) {
    cfg.check();
    const auto views = make_views(models);
    require_sizes_fit(views, cfg.query_sizes);

    PowerCurve curve;
    for (const auto& v : views) curve.systems.push_back(v.models->system_tag);
    curve.hs = cfg.h_grid;
    curve.query_sizes = cfg.query_sizes;
    curve.n_repetitions = cfg.n_repetitions;
    curve.alpha = cfg.power_alpha;
    curve.cells.assign(kAllTests.size() * cfg.h_grid.size() * cfg.query_sizes.size(),
                       RejectionCounts{std::vector<std::uint64_t>(views.size(), 0),
                                       std::vector<std::uint64_t>(views.size(), 0)});

    // Scaled model tables per (system, h); diagnostics surface once per pair.
    std::vector<std::vector<std::map<std::string, LogNormalMixture>>> scaled(views.size());
    for (std::size_t s = 0; s < views.size(); ++s) {
        scaled[s].resize(cfg.h_grid.size());
        for (std::size_t h_idx = 0; h_idx < cfg.h_grid.size(); ++h_idx) {
            for (const auto& [qid, mix] : views[s].mixtures) {
                const ScaledMixture sm = scale_mu1(mix, cfg.h_grid[h_idx]);
                scaled[s][h_idx].emplace(qid, sm.mixture);
                if (sm.mu1_nonpositive && h_idx == 0) {
                    curve.mu1_warnings.emplace_back(views[s].models->system_tag, qid);
                }
            }
        }
    }

    const RngStream root = RngStream(cfg.master_seed).derive(stream_tag::power);
    const std::size_t n_tasks = views.size() * cfg.h_grid.size() * cfg.n_repetitions;
    std::mutex tally_mutex;

    parallel_for(n_tasks, cfg.n_threads, [&](std::size_t task) {
        const std::size_t sys_idx = task / (cfg.h_grid.size() * cfg.n_repetitions);
        const std::size_t rest = task % (cfg.h_grid.size() * cfg.n_repetitions);
        const std::size_t h_idx = rest / cfg.n_repetitions;
        const std::size_t rep = rest % cfg.n_repetitions;
        const SystemView& view = views[sys_idx];
        const RngStream trial_rng = root.derive(sys_idx).derive(h_idx).derive(rep);

        const PairedApSeries series =
            paired_series(view.mixtures, scaled[sys_idx][h_idx], view.query_ids,
                          cfg.n_samples_per_list, trial_rng.derive(stream_tag::sample));
        const std::vector<double> diffs = series.differences();

        std::vector<std::uint8_t> reject_flags(kAllTests.size() * cfg.query_sizes.size(), 0);
        std::vector<std::uint8_t> error_flags(reject_flags.size(), 0);
        tests_over_sizes(diffs, cfg.query_sizes, trial_rng, cfg.power_alpha, cfg.n_resamples,
                         [&](std::size_t size_idx, const auto& outcomes) {
                             for (std::size_t t = 0; t < outcomes.size(); ++t) {
                                 const std::size_t flat = t * cfg.query_sizes.size() + size_idx;
                                 reject_flags[flat] = outcomes[t].rejected;
                                 error_flags[flat] = outcomes[t].failure != TestFailure::none;
                             }
                         });

        std::lock_guard lock(tally_mutex);
        for (std::size_t t = 0; t < kAllTests.size(); ++t) {
            for (std::size_t size_idx = 0; size_idx < cfg.query_sizes.size(); ++size_idx) {
                const std::size_t flat = t * cfg.query_sizes.size() + size_idx;
                auto& cell = curve.cells[curve.cell_index(t, h_idx, size_idx)];
                cell.rejections_by_system[sys_idx] += reject_flags[flat];
                cell.errors_by_system[sys_idx] += error_flags[flat];
            }
        }
    });
    return curve;
}

std::vector<ValidityPoint> validity_map_curve(const ModelSet& models,
                                              const ExperimentConfig& cfg) {
    cfg.check();
    const auto views = make_views(models);

    std::size_t n_models = 0;
    for (const auto& v : views) n_models += v.query_ids.size();
    const std::size_t reps = cfg.validity_reps;
    const std::size_t n_tasks = n_models * reps;

    // (system, query) pairs flattened in model order.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n_models);
    for (std::size_t s = 0; s < views.size(); ++s) {
        for (std::size_t q = 0; q < views[s].query_ids.size(); ++q) pairs.emplace_back(s, q);
    }

    const RngStream root = RngStream(cfg.master_seed).derive(stream_tag::validity);
    // ap[task][h]; reduced sequentially afterwards for deterministic sums.
    std::vector<double> ap(n_tasks * cfg.h_grid.size(), 0.0);

    parallel_for(n_tasks, cfg.n_threads, [&](std::size_t task) {
        const auto [sys_idx, q_idx] = pairs[task / reps];
        const std::size_t rep = task % reps;
        const SystemView& view = views[sys_idx];
        const LogNormalMixture& mix = view.mixtures.at(view.query_ids[q_idx]);
        const RngStream base = root.derive(sys_idx).derive(q_idx).derive(rep);
        for (std::size_t h_idx = 0; h_idx < cfg.h_grid.size(); ++h_idx) {
            // Same stream for every h: common random numbers isolate the
            // effect of the scaling.
            RngStream rng = base;
            SyntheticRanking ranking = sample_ranking(scale_mu1(mix, cfg.h_grid[h_idx]).mixture,
                                                      cfg.n_samples_per_list, rng);
            ap[task * cfg.h_grid.size() + h_idx] = average_precision(ranking);
        }
    });

    std::vector<ValidityPoint> points(cfg.h_grid.size());
    for (std::size_t h_idx = 0; h_idx < cfg.h_grid.size(); ++h_idx) {
        double sum = 0.0;
        for (std::size_t task = 0; task < n_tasks; ++task) {
            sum += ap[task * cfg.h_grid.size() + h_idx];
        }
        points[h_idx] = {cfg.h_grid[h_idx], sum / static_cast<double>(n_tasks)};
    }
    return points;
}

std::vector<DeltaApRecord> delta_ap_distribution(const ModelSet& models, double h,
                                                 std::size_t n_reps,
                                                 const ExperimentConfig& cfg) {
    if (!(h >= 0.0)) throw std::invalid_argument("h must be >= 0");
    if (n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    const auto views = make_views(models);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t s = 0; s < views.size(); ++s) {
        for (std::size_t q = 0; q < views[s].query_ids.size(); ++q) pairs.emplace_back(s, q);
    }
    const std::size_t n_tasks = pairs.size() * n_reps;
    std::vector<DeltaApRecord> records(n_tasks);

    const RngStream root = RngStream(cfg.master_seed).derive(stream_tag::delta_ap);
    parallel_for(n_tasks, cfg.n_threads, [&](std::size_t task) {
        const auto [sys_idx, q_idx] = pairs[task / n_reps];
        const std::size_t rep = task % n_reps;
        const SystemView& view = views[sys_idx];
        const std::string& qid = view.query_ids[q_idx];
        const LogNormalMixture& mix = view.mixtures.at(qid);
        const RngStream trial = root.derive(sys_idx).derive(q_idx).derive(rep);

        RngStream rng_base = trial.derive(stream_tag::base_list);
        RngStream rng_scaled = trial.derive(stream_tag::scaled_list);
        const double ap_base =
            average_precision(sample_ranking(mix, cfg.n_samples_per_list, rng_base));
        const double ap_scaled = average_precision(
            sample_ranking(scale_mu1(mix, h).mixture, cfg.n_samples_per_list, rng_scaled));

        DeltaApRecord& rec = records[task];
        rec.system = view.models->system_tag;
        rec.query = qid;
        rec.rep = rep;
        if (ap_base == 0.0) {
            rec.base_zero = true;
            rec.delta_ap_pct = 0.0;
        } else {
            rec.delta_ap_pct = 100.0 * (ap_scaled - ap_base) / ap_base;
        }
    });
    return records;
}

std::string config_digest(const ExperimentConfig& cfg) {
    std::string canon;
    canon += "samples=" + std::to_string(cfg.n_samples_per_list);
    canon += ";reps=" + std::to_string(cfg.n_repetitions);
    canon += ";resamples=" + std::to_string(cfg.n_resamples);
    canon += ";alpha=";
    for (double a : cfg.alpha_grid) {
        append_double(canon, a);
        canon += ',';
    }
    canon += ";h=";
    for (double h : cfg.h_grid) {
        append_double(canon, h);
        canon += ',';
    }
    canon += ";sizes=";
    for (std::size_t s : cfg.query_sizes) canon += std::to_string(s) + ",";
    canon += ";seed=" + std::to_string(cfg.master_seed);
    canon += ";palpha=";
    append_double(canon, cfg.power_alpha);
    canon += ";vreps=" + std::to_string(cfg.validity_reps);

    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string type1_csv(const Type1Report& report, const CsvMeta& meta) {
    std::string out = csv_header(meta);
    out += "collection,test,alpha,n_queries,rejection_rate,n_trials,stderr\n";
    for (std::size_t t = 0; t < kAllTests.size(); ++t) {
        for (std::size_t a = 0; a < report.alphas.size(); ++a) {
            for (std::size_t s = 0; s < report.query_sizes.size(); ++s) {
                out += meta.collection;
                out += ',';
                out += to_string(kAllTests[t]);
                out += ',';
                append_double(out, report.alphas[a]);
                out += ',';
                out += std::to_string(report.query_sizes[s]);
                out += ',';
                append_double(out, report.rejection_rate(t, a, s));
                out += ',';
                out += std::to_string(report.n_trials());
                out += ',';
                append_double(out, report.monte_carlo_stderr(t, a, s));
                out += '\n';
            }
        }
    }
    return out;
}

std::string power_csv(const PowerCurve& curve, const CsvMeta& meta) {
    std::string out = csv_header(meta);
    out += "collection,test,h,n_queries,p_reject,n_trials\n";
    for (std::size_t t = 0; t < kAllTests.size(); ++t) {
        for (std::size_t h = 0; h < curve.hs.size(); ++h) {
            for (std::size_t s = 0; s < curve.query_sizes.size(); ++s) {
                out += meta.collection;
                out += ',';
                out += to_string(kAllTests[t]);
                out += ',';
                append_double(out, curve.hs[h]);
                out += ',';
                out += std::to_string(curve.query_sizes[s]);
                out += ',';
                append_double(out, curve.p_reject(t, h, s));
                out += ',';
                out += std::to_string(curve.n_trials());
                out += '\n';
            }
        }
    }
    return out;
}

std::string validity_csv(const std::vector<ValidityPoint>& points, const CsvMeta& meta) {
    std::string out = csv_header(meta);
    out += "h,mean_ap\n";
    for (const auto& p : points) {
        append_double(out, p.h);
        out += ',';
        append_double(out, p.mean_ap);
        out += '\n';
    }
    return out;
}

std::string delta_ap_csv(const std::vector<DeltaApRecord>& records, const CsvMeta& meta) {
    std::string out = csv_header(meta);
    out += "system,query,rep,delta_ap_pct,base_zero_flag\n";
    for (const auto& r : records) {
        out += r.system;
        out += ',';
        out += r.query;
        out += ',';
        out += std::to_string(r.rep);
        out += ',';
        if (!r.base_zero) append_double(out, r.delta_ap_pct);
        out += ',';
        out += r.base_zero ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace sdsim
