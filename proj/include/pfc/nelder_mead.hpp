#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace pfc {

struct NelderMeadOptions {
    double f_tolerance = 1e-8;      // absolute spread of values across the simplex
    double x_tolerance = 1e-6;      // relative spread of coordinates across the simplex
    std::size_t max_iterations = 10000;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool converged = false;
};

/// Derivative-free downhill simplex minimization (reflection, expansion,
/// contraction, shrink with the standard 1, 2, 1/2, 1/2 coefficients).
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start,
                                    const NelderMeadOptions& opts = {}) {
    const std::size_t d = start.size();
    std::vector<std::vector<double>> pts(d + 1, start);
    for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += opts.initial_step;
    std::vector<double> vals(d + 1);
    for (std::size_t i = 0; i <= d; ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(d + 1);
    NelderMeadResult res;
    for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::size_t best = order[0], worst = order[d], second_worst = order[d - 1];

        double f_spread = vals[worst] - vals[best];
        double x_spread = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double lo = pts[best][i], hi = lo;
            for (std::size_t k = 0; k <= d; ++k) {
                lo = std::min(lo, pts[k][i]);
                hi = std::max(hi, pts[k][i]);
            }
            double scale = std::max(1.0, std::abs(pts[best][i]));
            x_spread = std::max(x_spread, (hi - lo) / scale);
        }
        if (std::isfinite(vals[best]) && f_spread < opts.f_tolerance &&
            x_spread < opts.x_tolerance) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(d, 0.0);
        for (std::size_t k = 0; k <= d; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < d; ++i) centroid[i] += pts[k][i];
        }
        for (double& c : centroid) c /= double(d);

        auto blend = [&](double t) {
            std::vector<double> p(d);
            for (std::size_t i = 0; i < d; ++i)
                p[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
            return p;
        };

        auto reflected = blend(-1.0);
        double fr = f(reflected);
        if (fr < vals[best]) {
            auto expanded = blend(-2.0);
            double fe = f(expanded);
            if (fe < fr) {
                pts[worst] = std::move(expanded);
                vals[worst] = fe;
            } else {
                pts[worst] = std::move(reflected);
                vals[worst] = fr;
            }
        } else if (fr < vals[second_worst]) {
            pts[worst] = std::move(reflected);
            vals[worst] = fr;
        } else {
            bool outside = fr < vals[worst];
            auto contracted = blend(outside ? -0.5 : 0.5);
            double fc = f(contracted);
            if (fc < std::min(fr, vals[worst])) {
                pts[worst] = std::move(contracted);
                vals[worst] = fc;
            } else {
                for (std::size_t k = 0; k <= d; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < d; ++i)
                        pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
                    vals[k] = f(pts[k]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k <= d; ++k)
        if (vals[k] < vals[best]) best = k;
    res.x = pts[best];
    res.value = vals[best];
    return res;
}

} // namespace pfc
