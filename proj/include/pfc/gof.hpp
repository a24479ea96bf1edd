#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pfc/errors.hpp"
#include "pfc/estimation.hpp"
#include "pfc/jump_detector.hpp"

namespace pfc {

enum class ModelKind { poisson, hawkes, branching };

inline const char* to_string(ModelKind m) {
    switch (m) {
        case ModelKind::poisson: return "poisson";
        case ModelKind::hawkes: return "hawkes";
        case ModelKind::branching: return "branching";
    }
    return "?";
}

struct KSResult {
    double statistic = 0.0;
    std::size_t n = 0;
    double p_value = 0.0;
    ModelKind model = ModelKind::poisson;

    [[nodiscard]] bool reject(double level = 0.05) const { return p_value < level; }
};

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a
/// theoretical CDF: max over i of max(i/n - F(x_i), F(x_i) - (i-1)/n).
inline double ks_statistic(std::span<const double> sorted_sample,
                           const std::function<double(double)>& cdf) {
    const std::size_t n = sorted_sample.size();
    if (n == 0) throw InsufficientDataError("ks_statistic requires a non-empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && sorted_sample[i] < sorted_sample[i - 1])
            throw ValidationError("ks_statistic requires a sorted sample");
        double f = cdf(sorted_sample[i]);
        d = std::max(d, double(i + 1) / double(n) - f);
        d = std::max(d, f - double(i) / double(n));
    }
    return d;
}

/// Asymptotic two-sided p-value 1 - K(sqrt(n) D) with the Kolmogorov
/// series K(x) = 1 - 2 sum_k (-1)^{k-1} exp(-2 k^2 x^2), truncated once
/// terms drop below 1e-12.
inline double ks_pvalue(double d_stat, std::size_t n) {
    double x = std::sqrt(double(n)) * d_stat;
    if (x <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (std::size_t k = 1; k <= 100000; ++k) {
        double term = std::exp(-2.0 * double(k) * double(k) * x * x);
        sum += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    double p = 2.0 * sum;
    return std::clamp(p, 0.0, 1.0);
}

/// KS test of the inter-arrival times against Exp(rate).
inline KSResult test_poisson(const JumpSample& sample, double rate) {
    if (sample.count() < 2) throw InsufficientDataError("test_poisson requires >= 2 arrivals");
    if (!(rate > 0.0)) throw ValidationError("rate must be positive");
    std::vector<double> gaps;
    gaps.reserve(sample.count());
    double prev = 0.0;
    for (double t : sample.arrival_times) {
        gaps.push_back(t - prev);
        prev = t;
    }
    std::sort(gaps.begin(), gaps.end());
    KSResult res;
    res.model = ModelKind::poisson;
    res.n = gaps.size();
    res.statistic =
        ks_statistic(gaps, [rate](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * x); });
    res.p_value = ks_pvalue(res.statistic, res.n);
    return res;
}

/// Time-rescaled durations theta_i = integral of the fitted intensity
/// over (tau_{i-1}, tau_i], in closed form via the same exponential
/// carry S(i) = sum_{j<=i} exp(-beta (tau_i - tau_j)):
///
///   theta_i = lambda0 (tau_i - tau_{i-1})
///           + (alpha/beta) S(i-1) (1 - exp(-beta (tau_i - tau_{i-1}))).
inline std::vector<double> hawkes_compensator(const HawkesParams& p, const JumpSample& sample) {
    if (!(p.lambda0 > 0.0) || !(p.beta > 0.0) || p.alpha < 0.0)
        throw ValidationError("invalid intensity parameters");
    const auto& tau = sample.arrival_times;
    std::vector<double> theta;
    theta.reserve(tau.size());
    double carry = 0.0; // S(i-1)
    double prev = 0.0;
    for (double t : tau) {
        double gap = t - prev;
        double decay = std::exp(-p.beta * gap);
        theta.push_back(p.lambda0 * gap + (p.alpha / p.beta) * carry * (1.0 - decay));
        carry = 1.0 + decay * carry;
        prev = t;
    }
    return theta;
}

/// KS test of the time-rescaled durations against Exp(1).
inline KSResult test_hawkes(const HawkesParams& p, const JumpSample& sample) {
    if (sample.count() < 2) throw InsufficientDataError("test_hawkes requires >= 2 arrivals");
    auto theta = hawkes_compensator(p, sample);
    std::sort(theta.begin(), theta.end());
    KSResult res;
    res.model = ModelKind::hawkes;
    res.n = theta.size();
    res.statistic =
        ks_statistic(theta, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); });
    res.p_value = ks_pvalue(res.statistic, res.n);
    return res;
}

/// Normalized cumulative integral of a positive daily section, used as
/// the arrival-time CDF of a state-proportional inhomogeneous Poisson
/// process. The proportionality constant cancels in the normalization.
/// Integration is trapezoidal on the daily grid with exact integrals of
/// the linear interpolant between grid points.
class BranchingCdf {
public:
    BranchingCdf(std::span<const double> section, double horizon) : horizon_(horizon) {
        if (section.size() < 2) throw InsufficientDataError("section too short");
        if (!(horizon > 0.0) || horizon > double(section.size() - 1))
            throw ValidationError("horizon outside the section domain");
        for (double v : section)
            if (!(v > 0.0)) throw std::domain_error("section must be positive");
        values_.assign(section.begin(), section.end());
        cumulative_.resize(values_.size(), 0.0);
        for (std::size_t k = 1; k < values_.size(); ++k)
            cumulative_[k] = cumulative_[k - 1] + 0.5 * (values_[k - 1] + values_[k]);
        total_ = raw(horizon_);
        if (!(total_ > 0.0)) throw std::domain_error("non-positive total integral");
    }

    [[nodiscard]] double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= horizon_) return 1.0;
        return raw(t) / total_;
    }

    [[nodiscard]] double horizon() const { return horizon_; }

private:
    [[nodiscard]] double raw(double t) const {
        auto k = std::size_t(std::floor(t));
        if (k >= values_.size() - 1) return cumulative_.back();
        double frac = t - double(k);
        double slope = values_[k + 1] - values_[k];
        return cumulative_[k] + values_[k] * frac + 0.5 * slope * frac * frac;
    }

    std::vector<double> values_;
    std::vector<double> cumulative_;
    double horizon_;
    double total_ = 0.0;
};

inline double branching_cdf(const VerticalSection& section, double t, double horizon) {
    return BranchingCdf(section.values, horizon)(t);
}

/// KS test of the jump arrival times against the section-driven CDF.
inline KSResult test_branching(const VerticalSection& section, const JumpSample& sample) {
    if (sample.count() < 2) throw InsufficientDataError("test_branching requires >= 2 arrivals");
    BranchingCdf cdf(section.values, sample.horizon);
    KSResult res;
    res.model = ModelKind::branching;
    res.n = sample.count();
    res.statistic = ks_statistic(sample.arrival_times, [&cdf](double t) { return cdf(t); });
    res.p_value = ks_pvalue(res.statistic, res.n);
    return res;
}

} // namespace pfc
