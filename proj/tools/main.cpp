// sdsim: model TREC runs as two-component log-normal score-distribution
// mixtures, generate synthetic labeled rankings, and measure type-I error
// and power of five paired significance tests on the simulated results.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdsim/experiments.hpp"
#include "sdsim/kernels.hpp"
#include "sdsim/sdmodel.hpp"
#include "sdsim/simulate.hpp"
#include "sdsim/stattests.hpp"
#include "sdsim/trec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNumericalError = 2;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string load_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
}

// Grid syntax: either comma-separated values or start:step:stop.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> values;
    if (text.find(':') != std::string::npos) {
        double start = 0, step = 0, stop = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(text);
        if (!(ss >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || step <= 0) {
            throw InputError("bad grid '" + text + "' (want v1,v2,... or start:step:stop)");
        }
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5));
        for (std::size_t i = 0; i <= count; ++i) values.push_back(start + step * i);
        return values;
    }
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    if (values.empty()) throw InputError("empty grid '" + text + "'");
    return values;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> values;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(static_cast<std::size_t>(std::stoul(item)));
    }
    if (values.empty()) throw InputError("empty list '" + text + "'");
    return values;
}

struct Manifest {
    std::string collection = "synthetic";
    std::vector<std::string> runs;
    std::string qrels;
    std::string out = ".";
    std::string profile = "desk";
    std::optional<std::uint64_t> seed;
    json overrides;
};

Manifest load_manifest(const fs::path& path) {
    Manifest m;
    json j;
    try {
        j = json::parse(load_file(path));
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    m.collection = j.value("collection", m.collection);
    if (j.contains("runs")) m.runs = j["runs"].get<std::vector<std::string>>();
    m.qrels = j.value("qrels", m.qrels);
    m.out = j.value("out", m.out);
    m.profile = j.value("profile", m.profile);
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("overrides")) m.overrides = j["overrides"];
    for (const auto& r : m.runs) {
        if (!fs::exists(r)) throw InputError("run file does not exist: " + r);
    }
    if (!m.qrels.empty() && !fs::exists(m.qrels)) {
        throw InputError("qrels file does not exist: " + m.qrels);
    }
    return m;
}

// Options shared by the experiment subcommands.
struct ExperimentOpts {
    std::string manifest_path;
    std::string models_path;
    std::string synthetic_path;
    std::string out_dir = ".";
    std::string collection;
    std::string profile = "desk";
    std::string kernel = "auto";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> resamples;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> threads;
    std::string queries_list;
    std::string alpha_grid;
    std::string h_grid;

    void add_to(CLI::App& cmd, bool with_grids) {
        cmd.add_option("--manifest", manifest_path, "JSON manifest (runs+qrels; fits models first)");
        cmd.add_option("--models", models_path, "fitted model file (system,query,lambda,...)");
        cmd.add_option("--synthetic", synthetic_path,
                       "synthetic ground-truth spec (lambda mu1 sigma1 mu0 sigma0 per query)");
        cmd.add_option("--out", out_dir, "output directory");
        cmd.add_option("--collection", collection, "collection label for CSV rows");
        cmd.add_option("--profile", profile, "paper or desk")
            ->check(CLI::IsMember({"paper", "desk"}));
        cmd.add_option("--seed", seed, "master seed (random if omitted)");
        cmd.add_option("--reps", reps, "repetitions per system");
        cmd.add_option("--resamples", resamples, "Monte Carlo resamples per test");
        cmd.add_option("--samples", samples, "samples per synthetic list");
        cmd.add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd.add_option("--queries", queries_list, "query-set sizes, e.g. 10,20,30,40,50");
        cmd.add_option("--kernel", kernel, "resampling kernel: auto, scalar or avx2")
            ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
        if (with_grids) {
            cmd.add_option("--alpha-grid", alpha_grid, "alpha grid (list or start:step:stop)");
            cmd.add_option("--h-grid", h_grid, "h grid (list or start:step:stop; must start at 0)");
        }
    }
};

struct FitSettings {
    std::size_t top_k = 1000;
    std::size_t min_docs = 10;
    std::size_t min_rel = 5;
    double epsilon = 1e-3;
};

struct FitOutput {
    sdsim::ModelSet models;
    std::vector<sdsim::trec::Exclusion> exclusions;
    std::size_t parsed = 0;
    std::size_t fit_failures = 0;
};

FitOutput fit_models(const std::vector<std::string>& run_paths, const std::string& qrels_path,
                     const FitSettings& settings) {
    if (run_paths.empty()) throw InputError("no run files given");
    if (qrels_path.empty()) throw InputError("no qrels file given");

    sdsim::trec::Judgments judgments;
    try {
        judgments = sdsim::trec::parse_qrels(load_file(qrels_path));
    } catch (const sdsim::Error& e) {
        throw InputError(qrels_path + ": " + e.what());
    }

    std::vector<sdsim::trec::RunFile> runs;
    for (const auto& path : run_paths) {
        try {
            runs.push_back(
                sdsim::trec::normalize_run(sdsim::trec::parse_run(load_file(path)), settings.top_k));
        } catch (const sdsim::Error& e) {
            throw InputError(path + ": " + e.what());
        }
    }

    FitOutput out;
    out.parsed = runs.size();
    auto filtered =
        sdsim::trec::filter_systems(std::move(runs), judgments, settings.min_docs, settings.min_rel);
    out.exclusions = std::move(filtered.excluded);

    for (auto& run : filtered.kept) {
        run = sdsim::trec::shift_scores(std::move(run), settings.epsilon);
        sdsim::SystemModels sys;
        sys.system_tag = run.system_tag;
        try {
            for (const auto& qss : sdsim::trec::build_query_score_sets(run, judgments)) {
                sys.queries.push_back({qss.query_id, sdsim::fit_mixture(qss)});
            }
        } catch (const sdsim::Error& e) {
            ++out.fit_failures;
            out.exclusions.push_back({run.system_tag, std::string("fit_failure ") + e.what()});
            continue;
        }
        out.models.push_back(std::move(sys));
    }
    std::sort(out.models.begin(), out.models.end(),
              [](const auto& a, const auto& b) { return a.system_tag < b.system_tag; });
    return out;
}

struct ResolvedExperiment {
    sdsim::ModelSet models;
    sdsim::ExperimentConfig config;
    sdsim::CsvMeta meta;
    fs::path out_dir;
};

std::uint64_t pick_seed(const std::optional<std::uint64_t>& flag_seed,
                        const std::optional<std::uint64_t>& manifest_seed) {
    if (flag_seed) return *flag_seed;
    if (manifest_seed) return *manifest_seed;
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed: " << seed << " (chosen from system entropy)\n";
    return seed;
}

void apply_overrides(sdsim::ExperimentConfig& cfg, const json& o) {
    if (o.is_null()) return;
    if (o.contains("reps")) cfg.n_repetitions = o["reps"].get<std::size_t>();
    if (o.contains("resamples")) cfg.n_resamples = o["resamples"].get<std::size_t>();
    if (o.contains("samples")) cfg.n_samples_per_list = o["samples"].get<std::size_t>();
    if (o.contains("alpha_grid")) cfg.alpha_grid = o["alpha_grid"].get<std::vector<double>>();
    if (o.contains("h_grid")) cfg.h_grid = o["h_grid"].get<std::vector<double>>();
    if (o.contains("query_sizes")) {
        cfg.query_sizes = o["query_sizes"].get<std::vector<std::size_t>>();
    }
    if (o.contains("power_alpha")) cfg.power_alpha = o["power_alpha"].get<double>();
    if (o.contains("validity_reps")) cfg.validity_reps = o["validity_reps"].get<std::size_t>();
    if (o.contains("threads")) cfg.n_threads = o["threads"].get<std::size_t>();
}

ResolvedExperiment resolve_experiment(ExperimentOpts& opts) {
    ResolvedExperiment r;
    std::optional<std::uint64_t> manifest_seed;
    std::string profile = opts.profile;
    json overrides;

    const int sources = !opts.manifest_path.empty() + !opts.models_path.empty() +
                        !opts.synthetic_path.empty();
    if (sources != 1) {
        throw InputError("give exactly one of --manifest, --models or --synthetic");
    }

    if (!opts.manifest_path.empty()) {
        Manifest m = load_manifest(opts.manifest_path);
        profile = m.profile;
        manifest_seed = m.seed;
        overrides = m.overrides;
        r.out_dir = m.out;
        r.meta.collection = m.collection;
        FitOutput fit = fit_models(m.runs, m.qrels, FitSettings{});
        if (fit.models.empty()) throw InputError("no systems survived fitting");
        r.models = std::move(fit.models);
    } else if (!opts.models_path.empty()) {
        r.models = sdsim::read_models(load_file(opts.models_path));
        r.meta.collection = "models";
        r.out_dir = opts.out_dir;
    } else {
        r.models = sdsim::parse_synthetic_spec(load_file(opts.synthetic_path));
        r.meta.collection = "synthetic";
        r.out_dir = opts.out_dir;
    }
    if (r.models.empty()) throw InputError("model set is empty");
    if (!opts.collection.empty()) r.meta.collection = opts.collection;
    if (!opts.out_dir.empty() && opts.out_dir != ".") r.out_dir = opts.out_dir;

    r.config = profile == "paper" ? sdsim::ExperimentConfig::paper_profile()
                                  : sdsim::ExperimentConfig::desk_profile();
    apply_overrides(r.config, overrides);
    if (opts.reps) r.config.n_repetitions = *opts.reps;
    if (opts.resamples) r.config.n_resamples = *opts.resamples;
    if (opts.samples) r.config.n_samples_per_list = *opts.samples;
    if (opts.threads) r.config.n_threads = *opts.threads;
    if (!opts.queries_list.empty()) r.config.query_sizes = parse_size_list(opts.queries_list);
    if (!opts.alpha_grid.empty()) r.config.alpha_grid = parse_grid(opts.alpha_grid);
    if (!opts.h_grid.empty()) r.config.h_grid = parse_grid(opts.h_grid);
    r.config.master_seed = pick_seed(opts.seed, manifest_seed);

    r.meta.profile = profile;
    r.meta.seed = r.config.master_seed;
    r.meta.config_digest = sdsim::config_digest(r.config);

    if (opts.kernel == "scalar") sdsim::kernels::force_kernel(sdsim::kernels::KernelKind::scalar);
    if (opts.kernel == "avx2") sdsim::kernels::force_kernel(sdsim::kernels::KernelKind::avx2);

    try {
        r.config.check();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return r;
}

int cmd_fit(const Manifest& manifest, const FitSettings& settings) {
    FitOutput fit = fit_models(manifest.runs, manifest.qrels, settings);
    const fs::path out_dir = manifest.out;
    write_file(out_dir / "models.csv", sdsim::write_models(fit.models));
    write_file(out_dir / "exclusions.log", sdsim::trec::format_exclusion_log(fit.exclusions));

    std::size_t n_models = 0;
    for (const auto& sys : fit.models) n_models += sys.queries.size();
    std::cout << "systems parsed:   " << fit.parsed << "\n"
              << "systems retained: " << fit.models.size() << "\n"
              << "systems dropped:  " << fit.exclusions.size() << "\n"
              << "fit failures:     " << fit.fit_failures << "\n"
              << "models written:   " << n_models << " -> " << (out_dir / "models.csv").string()
              << "\n";
    if (fit.models.empty()) {
        std::cerr << "error: no systems survived filtering/fitting\n";
        return kExitInputError;
    }
    return kExitOk;
}

int cmd_type1(ExperimentOpts& opts) {
    ResolvedExperiment r = resolve_experiment(opts);
    const sdsim::Type1Report report = sdsim::type1_experiment(r.models, r.config);
    write_file(r.out_dir / "type1.csv", sdsim::type1_csv(report, r.meta));

    // Echo the summary at the alpha closest to 0.05.
    std::size_t a_idx = 0;
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
        if (std::fabs(report.alphas[a] - 0.05) < std::fabs(report.alphas[a_idx] - 0.05)) a_idx = a;
    }
    std::cout << "type-I rejection rates at alpha=" << report.alphas[a_idx] << " ("
              << report.n_trials() << " trials per cell)\n";
    std::cout << "test         ";
    for (auto s : report.query_sizes) std::cout << "\tq=" << s;
    std::cout << "\n";
    for (std::size_t t = 0; t < sdsim::kAllTests.size(); ++t) {
        std::cout << sdsim::to_string(sdsim::kAllTests[t]);
        for (std::size_t pad = std::string(sdsim::to_string(sdsim::kAllTests[t])).size();
             pad < 13; ++pad) {
            std::cout << ' ';
        }
        for (std::size_t s = 0; s < report.query_sizes.size(); ++s) {
            std::cout << '\t' << report.rejection_rate(t, a_idx, s);
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << (r.out_dir / "type1.csv").string() << "\n";
    return kExitOk;
}

int cmd_power(ExperimentOpts& opts, double alpha) {
    ResolvedExperiment r = resolve_experiment(opts);
    r.config.power_alpha = alpha;
    const sdsim::PowerCurve curve = sdsim::power_experiment(r.models, r.config);
    write_file(r.out_dir / "power.csv", sdsim::power_csv(curve, r.meta));

    for (const auto& [sys, query] : curve.mu1_warnings) {
        std::cerr << "warning: relevant-component location <= 0 for system " << sys << " query "
                  << query << "; scaling by (1+h) degrades it\n";
    }
    std::cout << "power at alpha=" << curve.alpha << ", largest query size\n";
    const std::size_t s_idx = curve.query_sizes.size() - 1;
    std::cout << "test         ";
    for (double h : curve.hs) std::cout << "\th=" << h;
    std::cout << "\n";
    for (std::size_t t = 0; t < sdsim::kAllTests.size(); ++t) {
        std::cout << sdsim::to_string(sdsim::kAllTests[t]);
        for (std::size_t pad = std::string(sdsim::to_string(sdsim::kAllTests[t])).size();
             pad < 13; ++pad) {
            std::cout << ' ';
        }
        for (std::size_t h = 0; h < curve.hs.size(); ++h) {
            std::cout << '\t' << curve.p_reject(t, h, s_idx);
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << (r.out_dir / "power.csv").string() << "\n";
    return kExitOk;
}

int cmd_validity(ExperimentOpts& opts, double delta_h, std::size_t delta_reps) {
    ResolvedExperiment r = resolve_experiment(opts);
    const auto points = sdsim::validity_map_curve(r.models, r.config);
    const auto records = sdsim::delta_ap_distribution(r.models, delta_h, delta_reps, r.config);
    write_file(r.out_dir / "validity_map.csv", sdsim::validity_csv(points, r.meta));
    write_file(r.out_dir / "delta_ap.csv", sdsim::delta_ap_csv(records, r.meta));

    std::cout << "mean AP by h:";
    for (const auto& p : points) std::cout << "  " << p.h << ":" << p.mean_ap;
    std::cout << "\nwrote " << (r.out_dir / "validity_map.csv").string() << " and "
              << (r.out_dir / "delta_ap.csv").string() << " (" << records.size() << " rows)\n";
    return kExitOk;
}

int cmd_test(const std::string& ap_path, double alpha, std::size_t resamples,
             std::optional<std::uint64_t> seed, const std::string& kernel) {
    if (kernel == "scalar") sdsim::kernels::force_kernel(sdsim::kernels::KernelKind::scalar);
    if (kernel == "avx2") sdsim::kernels::force_kernel(sdsim::kernels::KernelKind::avx2);

    const std::string text = load_file(ap_path);
    std::vector<double> diffs;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        for (char& c : line) {
            if (c == ',' || c == '\t') c = ' ';
        }
        std::istringstream ls(line);
        double a = 0.0, b = 0.0;
        std::string first;
        if (!(ls >> first)) continue;
        if (first[0] == '#') continue;
        try {
            a = std::stod(first);
        } catch (...) {
            throw InputError(ap_path + " line " + std::to_string(line_no) + ": bad value");
        }
        if (!(ls >> b)) {
            throw InputError(ap_path + " line " + std::to_string(line_no) +
                             ": expected two AP columns");
        }
        if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) {
            throw InputError(ap_path + " line " + std::to_string(line_no) +
                             ": AP values must be in [0, 1]");
        }
        diffs.push_back(a - b);
    }
    if (diffs.size() < 2) throw InputError(ap_path + ": need at least 2 rows of paired APs");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must be in (0, 1)");

    sdsim::ResampleConfig cfg;
    cfg.n_resamples = resamples;
    cfg.rng = sdsim::RngStream(pick_seed(seed, std::nullopt));
    const auto outcomes = sdsim::run_all_tests(diffs, alpha, cfg);

    std::cout << "n=" << diffs.size() << " alpha=" << alpha << "\n";
    std::cout << "test\tstatistic\tp_value\treject\n";
    for (const auto& out : outcomes) {
        std::cout << sdsim::to_string(out.test) << '\t' << out.statistic << '\t' << out.p_value
                  << '\t' << (out.rejected ? "yes" : "no");
        if (out.failure != sdsim::TestFailure::none) std::cout << "\t(" << out.note << ")";
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"score-distribution simulation of paired significance tests"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "fit log-normal mixtures from TREC runs and qrels");
    std::string fit_manifest_path;
    Manifest fit_manifest;
    FitSettings fit_settings;
    std::vector<std::string> fit_runs;
    fit->add_option("--manifest", fit_manifest_path, "JSON manifest");
    fit->add_option("--runs", fit_runs, "run files (6-column TREC format)");
    fit->add_option("--qrels", fit_manifest.qrels, "qrels file (4-column)");
    fit->add_option("--collection", fit_manifest.collection, "collection label");
    fit->add_option("--out", fit_manifest.out, "output directory");
    fit->add_option("--topk", fit_settings.top_k, "entries kept per query");
    fit->add_option("--min-docs", fit_settings.min_docs, "minimum scored docs per query");
    fit->add_option("--min-rel", fit_settings.min_rel, "minimum judged-relevant docs per query");
    fit->add_option("--epsilon", fit_settings.epsilon, "shift constant for non-positive scores");

    // experiments
    ExperimentOpts type1_opts, power_opts, validity_opts;
    auto* type1 = app.add_subcommand("type1", "estimate type-I error rates (H0 true)");
    type1_opts.add_to(*type1, true);
    auto* power = app.add_subcommand("power", "estimate power curves under mu1 scaling");
    power_opts.add_to(*power, true);
    double power_alpha = 0.05;
    power->add_option("--alpha", power_alpha, "significance level for rejections");
    auto* validity = app.add_subcommand("validity", "MAP-vs-h curve and delta-AP distribution");
    validity_opts.add_to(*validity, false);
    double delta_h = 0.05;
    std::size_t delta_reps = 100;
    validity->add_option("--delta-h", delta_h, "mu1 increase for the delta-AP distribution");
    validity->add_option("--delta-reps", delta_reps, "simulations per (system, query) pair");

    // one-shot test
    auto* test = app.add_subcommand("test", "run the five paired tests on a two-column AP file");
    std::string ap_path;
    double test_alpha = 0.05;
    std::size_t test_resamples = 100000;
    std::optional<std::uint64_t> test_seed;
    std::string test_kernel = "auto";
    test->add_option("ap_file", ap_path, "file with per-query `ap_a ap_b` rows")->required();
    test->add_option("--alpha", test_alpha, "significance level");
    test->add_option("--resamples", test_resamples, "Monte Carlo resamples");
    test->add_option("--seed", test_seed, "seed for the resampling tests");
    test->add_option("--kernel", test_kernel, "auto, scalar or avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) {
            if (!fit_manifest_path.empty()) {
                fit_manifest = load_manifest(fit_manifest_path);
            } else {
                fit_manifest.runs = fit_runs;
                for (const auto& rf : fit_manifest.runs) {
                    if (!fs::exists(rf)) throw InputError("run file does not exist: " + rf);
                }
                if (!fit_manifest.qrels.empty() && !fs::exists(fit_manifest.qrels)) {
                    throw InputError("qrels file does not exist: " + fit_manifest.qrels);
                }
            }
            return cmd_fit(fit_manifest, fit_settings);
        }
        if (type1->parsed()) return cmd_type1(type1_opts);
        if (power->parsed()) return cmd_power(power_opts, power_alpha);
        if (validity->parsed()) return cmd_validity(validity_opts, delta_h, delta_reps);
        if (test->parsed()) {
            return cmd_test(ap_path, test_alpha, test_resamples, test_seed, test_kernel);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const sdsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
    return kExitOk;
}
