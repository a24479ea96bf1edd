#pragma once

#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <span>
#include <vector>

#include "pfc/errors.hpp"
#include "pfc/jump_detector.hpp"
#include "pfc/nelder_mead.hpp"

namespace pfc {

/// Jump arrival times and sizes for one maturity slice.
struct JumpSample {
    std::vector<double> arrival_times; // strictly increasing, day units, in (0, horizon]
    std::vector<double> sizes;         // positive, one per detected jump
    double horizon = 0.0;

    [[nodiscard]] std::size_t count() const { return arrival_times.size(); }
};

/// Counting-process parameters with exponential excitation kernel.
struct HawkesParams {
    double lambda0 = 0.0; // baseline intensity, events/day
    double alpha = 0.0;   // excitation amplitude
    double beta = 0.0;    // decay rate, 1/day
    double delta = 0.0;   // mark rate, 1/EUR; 0 when unused
    bool degenerate = false; // set when the fit fell back to the Poisson point

    /// Non-explosiveness condition beta - alpha/delta > 0 for the marked
    /// variant; diagnostic only, never enforced.
    [[nodiscard]] bool stable() const {
        return delta > 0.0 && beta - alpha / delta > 0.0;
    }
};

struct DriftVolEstimates {
    double mean_reversion = 0.0; // 1/day
    double volatility = 0.0;     // per sqrt(day) in the sqrt(V) normalization
    double jump_rate = 0.0;      // 1/EUR
};

/// Builds the point-process sample from detected jumps: arrival time of
/// increment index t is t+1 in date steps; the horizon is the last
/// arrival (the inter-time telescoping convention).
inline JumpSample make_jump_sample(const VerticalSection& section, const JumpSet& jumps) {
    JumpSample s;
    for (std::size_t t : jumps.all_indices()) {
        s.arrival_times.push_back(double(t + 1));
        s.sizes.push_back(section.values[t + 1] - section.values[t]);
    }
    if (!s.arrival_times.empty()) s.horizon = s.arrival_times.back();
    return s;
}

/// MLE of the exponential jump-size rate: L / sum of sizes.
inline double estimate_delta(std::span<const double> sizes) {
    if (sizes.empty()) throw InsufficientDataError("estimate_delta requires at least one size");
    double sum = 0.0;
    for (double z : sizes) {
        if (!(z > 0.0)) throw ValidationError("jump sizes must be positive");
        sum += z;
    }
    return double(sizes.size()) / sum;
}

/// Discretized mean-reversion estimate on the deseasonalized section with
/// jump increments removed: averages 1 - X(t+1)/X(t) over the retained
/// consecutive pairs.
inline double estimate_mean_reversion(const VerticalSection& section, const JumpSet& jumps) {
    const auto& x = section.values;
    if (x.size() < 2) throw InsufficientDataError("mean reversion needs >= 2 observations");
    std::vector<bool> is_jump(x.size() - 1, false);
    for (std::size_t t : jumps.all_indices())
        if (t < is_jump.size()) is_jump[t] = true;
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t + 1 < x.size(); ++t) {
        if (is_jump[t]) continue;
        if (x[t] == 0.0) throw std::domain_error("zero denominator in mean-reversion ratio");
        sum += 1.0 - x[t + 1] / x[t];
        ++used;
    }
    if (used < 2) throw InsufficientDataError("mean reversion needs >= 2 retained pairs");
    return sum / double(used);
}

/// The detector's second-iteration sigma.
inline double estimate_sigma(const JumpSet& jumps) {
    if (jumps.sigmas.size() < 2)
        throw InsufficientDataError("sigma estimate requires two detector iterations");
    return jumps.sigmas[1];
}

/// Constant Poisson intensity: jump count over the summed inter-times,
/// which telescopes to N / tau_N.
inline double estimate_poisson(const JumpSample& sample) {
    if (sample.arrival_times.empty())
        throw InsufficientDataError("estimate_poisson requires at least one arrival");
    return double(sample.count()) / sample.arrival_times.back();
}

/// Branching proportionality: jump count over the cumulative
/// deseasonalized forward prices.
inline double estimate_branching_gamma(const JumpSample& sample,
                                       const VerticalSection& deseasonalized_section) {
    if (sample.arrival_times.empty())
        throw InsufficientDataError("estimate_branching_gamma requires at least one arrival");
    double cum = 0.0;
    for (double v : deseasonalized_section.values) cum += v;
    if (!(cum > 0.0)) throw std::domain_error("non-positive cumulative section");
    return double(sample.count()) / cum;
}

/// Log-likelihood of the unmarked exponential-kernel counting process
/// with intensity lambda0 + alpha * sum of exp(-beta (t - tau_j)):
///
///   -lambda0 tau_N + sum (alpha/beta)(exp(-beta (tau_N - tau_i)) - 1)
///                  + sum log(lambda0 + alpha A(i)),
///
/// with A(1) = 0 and A(i) = exp(-beta (tau_i - tau_{i-1})) (1 + A(i-1)).
/// Invalid parameter points and non-positive log arguments return
/// -infinity rather than throwing, so optimizers can reject them.
inline double hawkes_loglik(const HawkesParams& p, const JumpSample& sample) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    if (!(p.lambda0 > 0.0) || !(p.beta > 0.0) || p.alpha < 0.0) return neg_inf;
    const auto& tau = sample.arrival_times;
    if (tau.empty()) return neg_inf;
    const double tau_n = tau.back();

    double ll = -p.lambda0 * tau_n;
    double a_i = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (i > 0) a_i = std::exp(-p.beta * (tau[i] - tau[i - 1])) * (1.0 + a_i);
        ll += (p.alpha / p.beta) * (std::exp(-p.beta * (tau_n - tau[i])) - 1.0);
        double rate = p.lambda0 + p.alpha * a_i;
        if (!(rate > 0.0)) return neg_inf;
        ll += std::log(rate);
    }
    return std::isfinite(ll) ? ll : neg_inf;
}

struct HawkesFitOptions {
    std::size_t min_starts = 8;
    NelderMeadOptions simplex{};
    bool parallel_starts = true;
};

struct HawkesFit {
    HawkesParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    double poisson_loglik = -std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;
};

/// Maximum-likelihood fit of (lambda0, alpha, beta) by multi-start
/// downhill simplex over the log-parameters. Starting points are
/// log-spaced around the Poisson rate: branching ratios from near zero
/// to near one with the baseline scaled to keep the implied stationary
/// rate at the Poisson estimate, crossed with slow/fast decay scales.
/// The best start wins; ties break to the lowest start index. If no
/// start improves on the Poisson likelihood the fit falls back to the
/// Poisson-degenerate point with `degenerate` set.
inline HawkesFit fit_hawkes(const JumpSample& sample, const HawkesFitOptions& opts = {}) {
    if (sample.count() < 5) throw InsufficientDataError("fit_hawkes requires at least 5 events");
    const double rate_p = estimate_poisson(sample);
    const double mean_gap = sample.arrival_times.back() / double(sample.count());

    HawkesFit fit;
    fit.poisson_loglik =
        -rate_p * sample.arrival_times.back() + double(sample.count()) * std::log(rate_p);

    std::vector<std::vector<double>> starts;
    const double ratios[] = {0.05, 0.30, 0.60, 0.90};
    const double decays[] = {0.5 / mean_gap, 2.0 / mean_gap};
    for (double r : ratios) {
        for (double beta : decays) {
            double lambda0 = rate_p * (1.0 - r);
            double alpha = r * beta;
            starts.push_back({std::log(lambda0), std::log(alpha), std::log(beta)});
        }
    }
    while (starts.size() < opts.min_starts)
        starts.push_back({std::log(rate_p), std::log(0.01 * rate_p), std::log(1.0 / mean_gap)});

    auto objective = [&sample](const std::vector<double>& q) {
        HawkesParams p;
        p.lambda0 = std::exp(q[0]);
        p.alpha = std::exp(q[1]);
        p.beta = std::exp(q[2]);
        return -hawkes_loglik(p, sample);
    };

    auto run_start = [&](std::size_t k) { return nelder_mead(objective, starts[k], opts.simplex); };

    std::vector<NelderMeadResult> results(starts.size());
    if (opts.parallel_starts) {
        std::vector<std::future<NelderMeadResult>> futs;
        futs.reserve(starts.size());
        for (std::size_t k = 0; k < starts.size(); ++k)
            futs.push_back(std::async(std::launch::async, run_start, k));
        for (std::size_t k = 0; k < starts.size(); ++k) results[k] = futs[k].get();
    } else {
        for (std::size_t k = 0; k < starts.size(); ++k) results[k] = run_start(k);
    }

    double best_ll = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < results.size(); ++k) {
        double ll = -results[k].value;
        if (ll > best_ll) {
            best_ll = ll;
            best_k = k;
        }
    }

    if (!(best_ll >= fit.poisson_loglik)) {
        fit.params.lambda0 = rate_p;
        fit.params.alpha = 0.0;
        fit.params.beta = 1.0 / mean_gap;
        fit.params.degenerate = true;
        fit.loglik = fit.poisson_loglik;
        fit.best_start = best_k;
        return fit;
    }

    fit.params.lambda0 = std::exp(results[best_k].x[0]);
    fit.params.alpha = std::exp(results[best_k].x[1]);
    fit.params.beta = std::exp(results[best_k].x[2]);
    fit.loglik = best_ll;
    fit.best_start = best_k;
    return fit;
}

} // namespace pfc
