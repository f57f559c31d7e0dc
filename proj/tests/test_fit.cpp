#include <cmath>
#include <vector>

#include "doctest.h"
#include "sdsim/rng.hpp"
#include "sdsim/sdmodel.hpp"

using namespace sdsim;

namespace {

std::vector<double> draw_lognormal(double mu, double sigma, std::size_t n, RngStream& rng) {
    std::vector<double> scores(n);
    for (auto& s : scores) s = std::exp(mu + sigma * rng.next_normal());
    return scores;
}

}  // namespace

TEST_CASE("closed-form MLE on a two-point sample") {
    const std::vector<double> scores{std::exp(1.0), std::exp(3.0)};
    const LogNormal ln = lognormal_mle_closed_form(scores);
    CHECK(ln.mu == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ln.sigma == doctest::Approx(1.0).epsilon(1e-12));

    const LogNormal fitted = fit_lognormal_mle(scores);
    CHECK(fitted.mu == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(fitted.sigma == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("simplex fit matches the closed form across random samples") {
    RngStream rng(404);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 10 + rng.next_below(3000);
        const double mu = -1.0 + 3.0 * rng.next_unit();
        const double sigma = 0.1 + 1.5 * rng.next_unit();
        const auto scores = draw_lognormal(mu, sigma, n, rng);

        const LogNormal analytic = lognormal_mle_closed_form(scores);
        const LogNormal fitted = fit_lognormal_mle(scores);
        CHECK(std::fabs(fitted.mu - analytic.mu) <= 1e-3);
        CHECK(std::fabs(fitted.sigma - analytic.sigma) <= 1e-3);
    }
}

TEST_CASE("parameter recovery from a large sample") {
    RngStream rng(777);
    const auto scores = draw_lognormal(0.5, 0.3, 10000, rng);
    const LogNormal fitted = fit_lognormal_mle(scores);
    CHECK(std::fabs(fitted.mu - 0.5) < 0.02);
    CHECK(std::fabs(fitted.sigma - 0.3) < 0.02);
}

TEST_CASE("degenerate and undersized inputs") {
    CHECK_THROWS_AS(fit_lognormal_mle(std::vector<double>{2.0, 2.0, 2.0}), DegenerateDataError);
    CHECK_THROWS_AS(fit_lognormal_mle(std::vector<double>{2.0}), TooFewSamplesError);
    CHECK_THROWS_AS(fit_lognormal_mle(std::vector<double>{}), TooFewSamplesError);
    CHECK_THROWS_AS(fit_lognormal_mle(std::vector<double>{1.0, -1.0}), DomainError);
    CHECK_THROWS_AS(lognormal_mle_closed_form(std::vector<double>{1.0, 0.0}), DomainError);
}

TEST_CASE("fit_mixture sets lambda to the relevant proportion") {
    RngStream rng(31);
    trec::QueryScoreSet qss;
    qss.query_id = "q1";
    qss.relevant_scores = draw_lognormal(1.2, 0.4, 50, rng);
    qss.nonrelevant_scores = draw_lognormal(0.8, 0.4, 950, rng);
    const LogNormalMixture m = fit_mixture(qss);
    CHECK(m.lambda == doctest::Approx(0.05).epsilon(1e-12));
    const LogNormal ref_rel = lognormal_mle_closed_form(qss.relevant_scores);
    CHECK(m.relevant.mu == doctest::Approx(ref_rel.mu).epsilon(1e-3));
    CHECK(m.nonrelevant.sigma > 0.0);
}

TEST_CASE("fit_mixture tags the failing component") {
    trec::QueryScoreSet qss;
    qss.query_id = "q1";
    qss.relevant_scores = {2.0, 2.0, 2.0};
    qss.nonrelevant_scores = {1.0, 2.0, 3.0};
    try {
        fit_mixture(qss);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.component == "relevant");
    }

    std::swap(qss.relevant_scores, qss.nonrelevant_scores);
    try {
        fit_mixture(qss);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.component == "nonrelevant");
    }
}

TEST_CASE("model file round-trips losslessly") {
    RngStream rng(220);
    ModelSet models;
    for (int s = 0; s < 2; ++s) {
        SystemModels sys;
        sys.system_tag = "sys" + std::to_string(s);
        for (int q = 0; q < 3; ++q) {
            const LogNormalMixture m{rng.next_unit(),
                                     {rng.next_normal(), 0.1 + rng.next_unit()},
                                     {rng.next_normal(), 0.1 + rng.next_unit()}};
            sys.queries.push_back({"q" + std::to_string(q), m});
        }
        models.push_back(std::move(sys));
    }
    const std::string text = write_models(models);
    const ModelSet parsed = read_models(text);
    REQUIRE(parsed.size() == models.size());
    for (std::size_t s = 0; s < models.size(); ++s) {
        CHECK(parsed[s].system_tag == models[s].system_tag);
        REQUIRE(parsed[s].queries.size() == models[s].queries.size());
        for (std::size_t q = 0; q < models[s].queries.size(); ++q) {
            CHECK(parsed[s].queries[q].query_id == models[s].queries[q].query_id);
            CHECK(parsed[s].queries[q].mixture == models[s].queries[q].mixture);  // bit-exact
        }
    }
}

TEST_CASE("read_models validates rows") {
    CHECK_THROWS_AS(read_models("a,b,c\n"), trec::MalformedLineError);
    CHECK_THROWS_AS(read_models("s,q,0.5,1.0,0.0,1.0,1.0\n"), trec::MalformedLineError);  // sigma=0
    CHECK_THROWS_AS(read_models("s,q,1.5,1.0,1.0,1.0,1.0\n"), trec::MalformedLineError);  // lambda
    CHECK_THROWS_AS(read_models("s,q,0.5,x,1.0,1.0,1.0\n"), trec::MalformedLineError);
    const ModelSet ok = read_models("# comment\n\ns,q,0.5,1.0,1.0,1.0,1.0\n");
    REQUIRE(ok.size() == 1);
}

TEST_CASE("synthetic spec parsing") {
    const ModelSet models = parse_synthetic_spec(
        "# lambda mu1 sigma1 mu0 sigma0\n"
        "0.05 1.2 0.4 0.8 0.4\n"
        "0.10\t1.0\t0.5\t0.5\t0.3\n");
    REQUIRE(models.size() == 1);
    CHECK(models[0].system_tag == "synthetic");
    REQUIRE(models[0].queries.size() == 2);
    CHECK(models[0].queries[0].query_id == "q0001");
    CHECK(models[0].queries[0].mixture.lambda == 0.05);
    CHECK(models[0].queries[1].mixture.nonrelevant.sigma == 0.3);
    CHECK_THROWS_AS(parse_synthetic_spec(""), trec::MalformedLineError);
    CHECK_THROWS_AS(parse_synthetic_spec("0.5 1.0 0.4\n"), trec::MalformedLineError);
}
