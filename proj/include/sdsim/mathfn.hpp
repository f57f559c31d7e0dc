#pragma once

#include <cstdint>

namespace sdsim {

// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
// Continued-fraction evaluation (modified Lentz), accurate to ~1e-14.
double ibeta_regularized(double a, double b, double x);

// Two-sided Student-t p-value for statistic t with df degrees of freedom:
// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

// Two-sided standard-normal p-value P(|Z| >= |z|).
double normal_two_sided_p(double z);

// Lower tail P(X <= k) of Binomial(n, 1/2). Exact integer summation of
// binomial coefficients for n <= 62, incomplete-beta identity above that.
double binom_half_lower_tail(std::uint64_t n, std::uint64_t k);

}  // namespace sdsim
