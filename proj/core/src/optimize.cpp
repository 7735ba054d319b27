#include "abf/optimize.hpp"

#include "abf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace abf {

namespace {

double safe_eval(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                 std::size_t& count) {
    ++count;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || options.steps.size() != n) {
        throw DomainError("nelder_mead: start and steps must be non-empty and of equal size");
    }

    std::size_t evals = 0;
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += options.steps[i];
    }
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = safe_eval(objective, simplex[i], evals);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    bool converged = false;

    auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) {
            out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
        }
    };

    while (evals < options.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = simplex[i][k] - simplex[best][k];
                d2 += d * d;
            }
            diameter = std::max(diameter, std::sqrt(d2));
        }
        if (diameter < options.diameter_tolerance && std::isfinite(values[best])) {
            converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                centroid[k] += simplex[i][k] / static_cast<double>(n);
            }
        }

        point(-1.0, simplex[worst], trial);
        const double reflected = safe_eval(objective, trial, evals);
        if (reflected < values[best]) {
            point(-2.0, simplex[worst], trial2);
            const double expanded = safe_eval(objective, trial2, evals);
            if (expanded < reflected) {
                simplex[worst] = trial2;
                values[worst] = expanded;
            } else {
                simplex[worst] = trial;
                values[worst] = reflected;
            }
            continue;
        }
        if (reflected < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = reflected;
            continue;
        }
        const bool outside = reflected < values[worst];
        point(outside ? -0.5 : 0.5, simplex[worst], trial2);
        const double contracted = safe_eval(objective, trial2, evals);
        if (contracted < (outside ? reflected : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = contracted;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            values[i] = safe_eval(objective, simplex[i], evals);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best_index = static_cast<std::size_t>(best_it - values.begin());
    return {simplex[best_index], *best_it, converged, evals};
}

}  // namespace abf
