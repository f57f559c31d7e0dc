#include "sdsim/sdmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace sdsim {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056;  // ln sqrt(2 pi)

double to_double_or_throw(std::string_view s, std::size_t line_no, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw trec::MalformedLineError(line_no, std::string("bad ") + what + " '" + std::string(s) +
                                                    "'");
    }
    return v;
}

void append_double(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

struct LogMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double ssd = 0.0;  // sum of squared deviations of ln s around the mean
    double sum_log = 0.0;
};

LogMoments log_moments(std::span<const double> scores) {
    if (scores.size() < 2) throw TooFewSamplesError();
    LogMoments m;
    m.n = scores.size();
    bool all_equal = true;
    for (double s : scores) {
        if (!(s > 0.0)) throw DomainError("score must be > 0 for a log-normal fit");
        if (s != scores.front()) all_equal = false;
        m.sum_log += std::log(s);
    }
    if (all_equal) throw DegenerateDataError();
    m.mean = m.sum_log / static_cast<double>(m.n);
    for (double s : scores) {
        const double d = std::log(s) - m.mean;
        m.ssd += d * d;
    }
    return m;
}

}  // namespace

void validate(const LogNormal& ln) {
    if (!(ln.sigma > 0.0) || !std::isfinite(ln.sigma) || !std::isfinite(ln.mu)) {
        throw DomainError("log-normal requires finite mu and sigma > 0");
    }
}

void validate(const LogNormalMixture& m) {
    if (!(m.lambda >= 0.0 && m.lambda <= 1.0)) {
        throw DomainError("mixture weight must be in [0, 1]");
    }
    validate(m.relevant);
    validate(m.nonrelevant);
}

double lognormal_logpdf(double s, const LogNormal& ln) {
    if (!(s > 0.0)) throw DomainError("log-normal density is defined only for s > 0");
    const double z = (std::log(s) - ln.mu) / ln.sigma;
    return -std::log(s) - std::log(ln.sigma) - kLogSqrt2Pi - 0.5 * z * z;
}

double mixture_logpdf(double s, const LogNormalMixture& m) {
    if (m.lambda == 0.0) return lognormal_logpdf(s, m.nonrelevant);
    if (m.lambda == 1.0) return lognormal_logpdf(s, m.relevant);
    const double a = std::log(m.lambda) + lognormal_logpdf(s, m.relevant);
    const double b = std::log1p(-m.lambda) + lognormal_logpdf(s, m.nonrelevant);
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

ScaledMixture scale_mu1(const LogNormalMixture& m, double h) {
    ScaledMixture out{m, m.relevant.mu <= 0.0};
    out.mixture.relevant.mu = m.relevant.mu * (1.0 + h);
    return out;
}

LogNormal lognormal_mle_closed_form(std::span<const double> scores) {
    const LogMoments m = log_moments(scores);
    return {m.mean, std::sqrt(m.ssd / static_cast<double>(m.n))};
}

LogNormal fit_lognormal_mle(std::span<const double> scores, const SimplexConfig& cfg) {
    const LogMoments m = log_moments(scores);
    const double n = static_cast<double>(m.n);

    // Negative log-likelihood over (mu, ln sigma); the sufficient statistics
    // make each evaluation O(1) without changing the objective.
    auto nll = [&](const std::vector<double>& p) {
        const double mu = p[0];
        const double log_sigma = p[1];
        const double dev = m.mean - mu;
        return m.sum_log + n * log_sigma + n * kLogSqrt2Pi +
               (m.ssd + n * dev * dev) / (2.0 * std::exp(2.0 * log_sigma));
    };

    const LogNormal analytic = lognormal_mle_closed_form(scores);
    const SimplexResult r = nelder_mead(nll, {analytic.mu, std::log(analytic.sigma)}, cfg);
    const LogNormal fitted{r.x_min[0], std::exp(r.x_min[1])};

    if (std::fabs(fitted.mu - analytic.mu) > 1e-3 ||
        std::fabs(fitted.sigma - analytic.sigma) > 1e-3) {
        throw Error("simplex fit diverged from the analytic maximum-likelihood estimate");
    }
    return fitted;
}

LogNormalMixture fit_mixture(const trec::QueryScoreSet& qss, const SimplexConfig& cfg) {
    if (qss.n_retrieved() == 0) throw TooFewSamplesError();
    LogNormalMixture m;
    m.lambda = static_cast<double>(qss.relevant_scores.size()) /
               static_cast<double>(qss.n_retrieved());
    try {
        m.relevant = fit_lognormal_mle(qss.relevant_scores, cfg);
    } catch (const Error& e) {
        throw FitError("relevant", e.what());
    }
    try {
        m.nonrelevant = fit_lognormal_mle(qss.nonrelevant_scores, cfg);
    } catch (const Error& e) {
        throw FitError("nonrelevant", e.what());
    }
    return m;
}

std::string write_models(const ModelSet& models) {
    std::string out = "# system,query,lambda,mu1,sigma1,mu0,sigma0\n";
    for (const auto& sys : models) {
        for (const auto& qm : sys.queries) {
            out += sys.system_tag;
            out += ',';
            out += qm.query_id;
            out += ',';
            append_double(out, qm.mixture.lambda);
            out += ',';
            append_double(out, qm.mixture.relevant.mu);
            out += ',';
            append_double(out, qm.mixture.relevant.sigma);
            out += ',';
            append_double(out, qm.mixture.nonrelevant.mu);
            out += ',';
            append_double(out, qm.mixture.nonrelevant.sigma);
            out += '\n';
        }
    }
    return out;
}

namespace {

std::vector<std::string_view> split_on(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t end = line.find(sep, pos);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, end - pos));
        pos = end + 1;
    }
}

bool skip_line(std::string_view line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

template <typename Fn>
void for_each_data_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view line =
            end == std::string_view::npos ? text.substr(pos) : text.substr(pos, end - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!skip_line(line)) fn(line_no, line);
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
}

}  // namespace

ModelSet read_models(std::string_view text) {
    std::map<std::string, std::map<std::string, LogNormalMixture>> table;
    for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto fields = split_on(line, ',');
        if (fields.size() != 7) {
            throw trec::MalformedLineError(line_no, "expected 7 comma-separated fields, got " +
                                                        std::to_string(fields.size()));
        }
        LogNormalMixture m;
        m.lambda = to_double_or_throw(fields[2], line_no, "lambda");
        m.relevant.mu = to_double_or_throw(fields[3], line_no, "mu1");
        m.relevant.sigma = to_double_or_throw(fields[4], line_no, "sigma1");
        m.nonrelevant.mu = to_double_or_throw(fields[5], line_no, "mu0");
        m.nonrelevant.sigma = to_double_or_throw(fields[6], line_no, "sigma0");
        try {
            validate(m);
        } catch (const Error& e) {
            throw trec::MalformedLineError(line_no, e.what());
        }
        table[std::string(fields[0])][std::string(fields[1])] = m;
    });

    ModelSet models;
    for (auto& [tag, queries] : table) {
        SystemModels sys;
        sys.system_tag = tag;
        for (auto& [qid, mix] : queries) sys.queries.push_back({qid, mix});
        models.push_back(std::move(sys));
    }
    return models;
}

ModelSet parse_synthetic_spec(std::string_view text) {
    SystemModels sys;
    sys.system_tag = "synthetic";
    for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        std::vector<std::string_view> fields;
        for (std::string_view f : split_on(line, ' ')) {
            for (std::string_view g : split_on(f, '\t')) {
                if (!g.empty()) fields.push_back(g);
            }
        }
        if (fields.empty()) return;
        if (fields.size() != 5) {
            throw trec::MalformedLineError(
                line_no, "expected 5 fields (lambda mu1 sigma1 mu0 sigma0), got " +
                             std::to_string(fields.size()));
        }
        LogNormalMixture m;
        m.lambda = to_double_or_throw(fields[0], line_no, "lambda");
        m.relevant.mu = to_double_or_throw(fields[1], line_no, "mu1");
        m.relevant.sigma = to_double_or_throw(fields[2], line_no, "sigma1");
        m.nonrelevant.mu = to_double_or_throw(fields[3], line_no, "mu0");
        m.nonrelevant.sigma = to_double_or_throw(fields[4], line_no, "sigma0");
        try {
            validate(m);
        } catch (const Error& e) {
            throw trec::MalformedLineError(line_no, e.what());
        }
        char qid[16];
        std::snprintf(qid, sizeof(qid), "q%04zu", sys.queries.size() + 1);
        sys.queries.push_back({qid, m});
    });
    if (sys.queries.empty()) throw trec::MalformedLineError(0, "synthetic spec has no models");
    return {std::move(sys)};
}

}  // namespace sdsim
