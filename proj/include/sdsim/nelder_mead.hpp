#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sdsim/error.hpp"

namespace sdsim {

struct NonFiniteObjectiveError : Error {
    NonFiniteObjectiveError() : Error("objective is non-finite at the initial simplex") {}
};

struct SimplexConfig {
    std::size_t max_iterations = 500;
    double tolerance = 1e-8;   // convergence threshold on the simplex objective spread
    double initial_step = 0.1;  // absolute offset used to build the initial simplex
};

struct SimplexResult {
    std::vector<double> x_min;
    double f_min = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Downhill simplex minimization with the standard reflection / expansion /
// contraction / shrink coefficients (1, 2, 0.5, 0.5). Stops when the spread
// |f_worst - f_best| falls below cfg.tolerance or after max_iterations.
// Non-finite objective values seen after initialization are treated as +inf
// so the simplex retreats from them.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& x0, const SimplexConfig& cfg = {});

}  // namespace sdsim
