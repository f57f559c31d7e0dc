#include "sdsim/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdsim {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

double guarded(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

namespace {

SimplexResult nelder_mead_phase(const std::function<double(const std::vector<double>&)>& objective,
                                const std::vector<double>& x0, const SimplexConfig& cfg) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> simplex(dim + 1, x0);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += cfg.initial_step;

    std::vector<double> fval(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
        fval[i] = objective(simplex[i]);
        if (!std::isfinite(fval[i])) throw NonFiniteObjectiveError();
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), candidate(dim);

    SimplexResult result;
    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];

        result.iterations = iter;
        if (std::fabs(fval[worst] - fval[best]) <= cfg.tolerance) {
            result.converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto point_at = [&](double coeff) {
            for (std::size_t j = 0; j < dim; ++j) {
                candidate[j] = centroid[j] + coeff * (centroid[j] - simplex[worst][j]);
            }
            return guarded(objective(candidate));
        };

        const double f_reflect = point_at(kReflect);
        if (f_reflect < fval[best]) {
            const std::vector<double> reflected = candidate;
            const double f_expand = point_at(kExpand);
            if (f_expand < f_reflect) {
                simplex[worst] = candidate;
                fval[worst] = f_expand;
            } else {
                simplex[worst] = reflected;
                fval[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < fval[second_worst]) {
            simplex[worst] = candidate;
            fval[worst] = f_reflect;
            continue;
        }
        const bool outside = f_reflect < fval[worst];
        const double f_contract = point_at(outside ? kContract : -kContract);
        if (f_contract < std::min(f_reflect, fval[worst])) {
            simplex[worst] = candidate;
            fval[worst] = f_contract;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j) {
                simplex[i][j] = simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
            }
            fval[i] = guarded(objective(simplex[i]));
        }
    }

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(fval.begin(), fval.end()) - fval.begin());
    result.x_min = simplex[best];
    result.f_min = fval[best];
    return result;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& x0, const SimplexConfig& cfg) {
    if (x0.empty()) throw std::invalid_argument("nelder_mead: empty initial point");
    if (cfg.max_iterations < 1) throw std::invalid_argument("nelder_mead: max_iterations < 1");

    // A small objective spread can also mean the simplex straddles a minimum
    // symmetrically; one restart from the found point breaks such stalls.
    SimplexResult first = nelder_mead_phase(objective, x0, cfg);
    if (!first.converged) return first;
    SimplexResult second = nelder_mead_phase(objective, first.x_min, cfg);
    second.iterations += first.iterations;
    if (second.f_min <= first.f_min) return second;
    first.iterations = second.iterations;
    return first;
}

}  // namespace sdsim
