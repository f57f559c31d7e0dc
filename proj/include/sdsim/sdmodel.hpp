#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdsim/error.hpp"
#include "sdsim/nelder_mead.hpp"
#include "sdsim/trec.hpp"

namespace sdsim {

struct DomainError : Error {
    using Error::Error;
};
struct TooFewSamplesError : Error {
    TooFewSamplesError() : Error("need at least 2 samples") {}
};
struct DegenerateDataError : Error {
    DegenerateDataError() : Error("all samples are equal; log-scale variance is zero") {}
};
struct FitError : Error {
    FitError(std::string comp, const std::string& what)
        : Error(comp + " component: " + what), component(std::move(comp)) {}
    std::string component;
};

struct LogNormal {
    double mu = 0.0;     // location on the log scale
    double sigma = 1.0;  // scale on the log scale, > 0
    bool operator==(const LogNormal&) const = default;
};

// Two-component score-distribution model for one (system, query) pair:
// scores of relevant documents come from `relevant` with probability
// `lambda`, otherwise from `nonrelevant`.
struct LogNormalMixture {
    double lambda = 0.0;  // proportion of relevant documents, in [0, 1]
    LogNormal relevant;
    LogNormal nonrelevant;
    bool operator==(const LogNormalMixture&) const = default;
};

void validate(const LogNormal& ln);
void validate(const LogNormalMixture& m);

// log f(s) = -ln(s sigma sqrt(2 pi)) - (ln s - mu)^2 / (2 sigma^2), s > 0.
double lognormal_logpdf(double s, const LogNormal& ln);

// Log of lambda * pdf_rel(s) + (1 - lambda) * pdf_nonrel(s) via log-sum-exp.
double mixture_logpdf(double s, const LogNormalMixture& m);

struct ScaledMixture {
    LogNormalMixture mixture;
    // Set when the relevant location was <= 0, where multiplying by (1 + h)
    // lowers the relevant component instead of raising it. The scaling is
    // still applied literally.
    bool mu1_nonpositive = false;
};

// Copy of m with relevant.mu multiplied by (1 + h); everything else unchanged.
ScaledMixture scale_mu1(const LogNormalMixture& m, double h);

// Analytic maximum-likelihood estimate: mu = mean of ln s, sigma = population
// (1/n) standard deviation of ln s.
LogNormal lognormal_mle_closed_form(std::span<const double> scores);

// Maximum-likelihood fit by direct simplex search on the log-likelihood,
// started from the analytic estimate. The result is cross-checked against
// the closed form and must agree within 1e-3 in both parameters.
LogNormal fit_lognormal_mle(std::span<const double> scores, const SimplexConfig& cfg = {});

// lambda = |relevant| / n_retrieved; both components fitted by
// fit_lognormal_mle. Fitting failures are rethrown as FitError tagged with
// the component ("relevant" / "nonrelevant").
LogNormalMixture fit_mixture(const trec::QueryScoreSet& qss, const SimplexConfig& cfg = {});

// --- model persistence -----------------------------------------------------

struct QueryModel {
    std::string query_id;
    LogNormalMixture mixture;
};

struct SystemModels {
    std::string system_tag;
    std::vector<QueryModel> queries;  // sorted by query_id
};

// All fitted models, sorted by system tag.
using ModelSet = std::vector<SystemModels>;

// One `system,query,lambda,mu1,sigma1,mu0,sigma0` row per model, shortest
// round-trip formatting (mu1/sigma1 = relevant component).
std::string write_models(const ModelSet& models);

// Inverse of write_models; `#` comment lines and blank lines are skipped.
ModelSet read_models(std::string_view text);

// Synthetic ground-truth models: one `lambda mu1 sigma1 mu0 sigma0` line per
// query, whitespace-delimited, `#` comments allowed. Queries are named q0001,
// q0002, ... in file order under one system tagged "synthetic".
ModelSet parse_synthetic_spec(std::string_view text);

}  // namespace sdsim
