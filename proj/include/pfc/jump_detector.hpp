#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pfc/curve.hpp"
#include "pfc/errors.hpp"

namespace pfc {

/// Fixed-maturity slice of the forward surface: V_t = f(t, T) over the
/// observation dates t, in date order.
struct VerticalSection {
    double maturity = 0.0; // day offset T
    std::vector<double> values;
    std::vector<Date> dates;          // one per value
    std::vector<Date> excluded_dates; // curves whose domain does not cover T
    bool deseasonalized = false;
};

/// Output of the iterative 3-sigma detector. Index t refers to the
/// increment values[t] -> values[t+1] (0-based, t in [0, n-2]).
struct JumpSet {
    std::vector<std::vector<std::size_t>> iteration_indices; // M_1, M_2, ...
    std::vector<double> sigmas;                              // sigma_1, sigma_2, ...

    [[nodiscard]] std::vector<std::size_t> all_indices() const {
        std::vector<std::size_t> out;
        for (const auto& it : iteration_indices) out.insert(out.end(), it.begin(), it.end());
        std::sort(out.begin(), out.end());
        return out;
    }
    [[nodiscard]] std::size_t total_count() const {
        std::size_t c = 0;
        for (const auto& it : iteration_indices) c += it.size();
        return c;
    }
};

/// Samples every curve at maturity T, skipping (and reporting) dates
/// whose curve does not cover T. With `deseasonalized` the constant
/// seasonality level at offset T is removed, leaving the adjustment.
inline VerticalSection vertical_section(std::span<const ForwardCurve> curves, double maturity,
                                        bool deseasonalized = false) {
    VerticalSection sec;
    sec.maturity = maturity;
    sec.deseasonalized = deseasonalized;
    for (const auto& c : curves) {
        if (maturity < c.domain_begin() || maturity > c.domain_end()) {
            sec.excluded_dates.push_back(c.spline.obs_date);
            continue;
        }
        double v = deseasonalized ? c.spline.value(maturity) : eval_forward(c, maturity);
        sec.values.push_back(v);
        sec.dates.push_back(c.spline.obs_date);
    }
    if (sec.values.size() < 3)
        throw InsufficientDataError("vertical section needs at least 3 usable dates");
    return sec;
}

/// Iterative one-sided 3-sigma jump detection on a positive series.
///
/// Iteration i estimates sigma_i^2 as the mean of (V_{t+1}-V_t)^2 / V_t
/// over the increments not yet flagged, with denominator n-2 at the first
/// iteration and n - sum(m_j) - 1 afterwards, then flags the remaining
/// increments whose normalized value (V_{t+1}-V_t)/sqrt(V_t) reaches
/// 3*sigma_i. Stops after `max_iterations` or when an iteration flags
/// nothing. Only positive increments are ever flagged.
inline JumpSet detect_jumps(std::span<const double> values, std::size_t max_iterations = 2,
                            double threshold_multiple = 3.0) {
    const std::size_t n = values.size();
    if (n < 3) throw InsufficientDataError("jump detection needs a series of length >= 3");
    for (double v : values)
        if (!(v > 0.0)) throw std::domain_error("jump detection requires positive values");

    const std::size_t n_inc = n - 1;
    std::vector<bool> flagged(n_inc, false);
    std::vector<double> sq(n_inc), norm(n_inc);
    for (std::size_t t = 0; t < n_inc; ++t) {
        double dv = values[t + 1] - values[t];
        sq[t] = dv * dv / values[t];
        norm[t] = dv / std::sqrt(values[t]);
    }

    JumpSet js;
    std::size_t removed = 0;
    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        double denom =
            double(n) - double(removed) - 1.0 - (iter == 1 ? 1.0 : 0.0);
        if (denom <= 0.0) break;
        double sum = 0.0;
        for (std::size_t t = 0; t < n_inc; ++t)
            if (!flagged[t]) sum += sq[t];
        double sigma = std::sqrt(sum / denom);
        js.sigmas.push_back(sigma);

        std::vector<std::size_t> hits;
        for (std::size_t t = 0; t < n_inc; ++t)
            if (!flagged[t] && norm[t] > 0.0 && norm[t] >= threshold_multiple * sigma)
                hits.push_back(t);
        for (std::size_t t : hits) flagged[t] = true;
        removed += hits.size();
        bool empty = hits.empty();
        js.iteration_indices.push_back(std::move(hits));
        if (empty) break;
    }
    return js;
}

inline JumpSet detect_jumps(const VerticalSection& section, std::size_t max_iterations = 2,
                            double threshold_multiple = 3.0) {
    return detect_jumps(std::span<const double>(section.values), max_iterations,
                        threshold_multiple);
}

/// Jump sizes V_{t+1} - V_t at the detected indices, ordered by index.
inline std::vector<double> jump_sizes(const VerticalSection& section, const JumpSet& jumps) {
    std::vector<double> sizes;
    for (std::size_t t : jumps.all_indices())
        sizes.push_back(section.values[t + 1] - section.values[t]);
    return sizes;
}

} // namespace pfc
