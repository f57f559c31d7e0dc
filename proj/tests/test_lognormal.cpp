#include <cmath>

#include "doctest.h"
#include "sdsim/rng.hpp"
#include "sdsim/sdmodel.hpp"

using namespace sdsim;

TEST_CASE("lognormal_logpdf reference values") {
    // ln s = mu cancels the quadratic term: -ln
    // (s sigma sqrt(2pi)) = -ln sqrt(2pi)
    CHECK(lognormal_logpdf(1.0, {0.0, 1.0}) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    CHECK(lognormal_logpdf(std::exp(1.0), {1.0, 1.0}) ==
          doctest::Approx(-1.9189385332046727).epsilon(1e-12));
    CHECK_THROWS_AS(lognormal_logpdf(0.0, {0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(lognormal_logpdf(-1.0, {0.0, 1.0}), DomainError);
}

TEST_CASE("mixture_logpdf degenerate weights and equal components") {
    const LogNormal l1{1.2, 0.4};
    const LogNormal l0{0.8, 0.3};
    for (double s : {0.5, 1.0, 2.0, 7.5}) {
        CHECK(mixture_logpdf(s, {1.0, l1, l0}) == lognormal_logpdf(s, l1));
        CHECK(mixture_logpdf(s, {0.0, l1, l0}) == lognormal_logpdf(s, l0));
        CHECK(mixture_logpdf(s, {0.5, l1, l1}) ==
              doctest::Approx(lognormal_logpdf(s, l1)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mixture_logpdf(0.0, {0.5, l1, l0}), DomainError);
}

TEST_CASE("mixture_logpdf equals the naive mix where it is stable") {
    RngStream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const LogNormalMixture m{rng.next_unit(),
                                 {rng.next_normal(), 0.2 + rng.next_unit()},
                                 {rng.next_normal(), 0.2 + rng.next_unit()}};
        const double s = 0.1 + 5.0 * rng.next_unit();
        const double naive = std::log(
            m.lambda * std::exp(lognormal_logpdf(s, m.relevant)) +
            (1.0 - m.lambda) * std::exp(lognormal_logpdf(s, m.nonrelevant)));
        CHECK(mixture_logpdf(s, m) == doctest::Approx(naive).epsilon(1e-10));
    }
}

TEST_CASE("mixture density integrates to one") {
    RngStream rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const LogNormalMixture m{rng.next_unit(),
                                 {0.5 + rng.next_normal() * 0.5, 0.2 + 0.6 * rng.next_unit()},
                                 {rng.next_normal() * 0.5, 0.2 + 0.6 * rng.next_unit()}};
        // Integrate exp(mixture_logpdf) over s in (0, S_max) by substituting
        // t = ln s; the integrand becomes a mixture of normals over 8-sigma
        // support.
        const double lo = std::min(m.relevant.mu - 8.0 * m.relevant.sigma,
                                   m.nonrelevant.mu - 8.0 * m.nonrelevant.sigma);
        const double hi = std::max(m.relevant.mu + 8.0 * m.relevant.sigma,
                                   m.nonrelevant.mu + 8.0 * m.nonrelevant.sigma);
        const int n = 4000;  // Simpson needs even n
        const double step = (hi - lo) / n;
        double integral = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double t = lo + i * step;
            const double f = std::exp(mixture_logpdf(std::exp(t), m) + t);
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            integral += w * f;
        }
        integral *= step / 3.0;
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("scale_mu1 multiplies only the relevant location") {
    const LogNormalMixture m{0.05, {2.0, 0.4}, {0.8, 0.3}};

    const ScaledMixture identity = scale_mu1(m, 0.0);
    CHECK(identity.mixture == m);
    CHECK(!identity.mu1_nonpositive);

    const ScaledMixture scaled = scale_mu1(m, 0.05);
    CHECK(scaled.mixture.relevant.mu == doctest::Approx(2.1).epsilon(1e-12));
    CHECK(scaled.mixture.relevant.sigma == m.relevant.sigma);
    CHECK(scaled.mixture.nonrelevant == m.nonrelevant);
    CHECK(scaled.mixture.lambda == m.lambda);
    CHECK(!scaled.mu1_nonpositive);

    // Literal application with the diagnostic flag for mu <= 0.
    const LogNormalMixture neg{0.05, {-1.0, 0.4}, {0.8, 0.3}};
    const ScaledMixture flagged = scale_mu1(neg, 0.1);
    CHECK(flagged.mixture.relevant.mu == doctest::Approx(-1.1).epsilon(1e-12));
    CHECK(flagged.mu1_nonpositive);

    // Determinism: repeated application gives identical values.
    CHECK(scale_mu1(m, 0.05).mixture == scaled.mixture);
}

TEST_CASE("validate rejects bad parameters") {
    CHECK_THROWS_AS(validate(LogNormal{0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(validate(LogNormal{0.0, -1.0}), DomainError);
    CHECK_THROWS_AS(validate(LogNormalMixture{-0.1, {0, 1}, {0, 1}}), DomainError);
    CHECK_THROWS_AS(validate(LogNormalMixture{1.1, {0, 1}, {0, 1}}), DomainError);
    CHECK_NOTHROW(validate(LogNormalMixture{0.5, {0, 1}, {0, 1}}));
}
