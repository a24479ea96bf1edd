#pragma once

#include <cmath>
#include <span>

#include "pfc/errors.hpp"
#include "pfc/market_data.hpp"

namespace pfc {

inline constexpr double kSeasonPeriodDays = 365.0;

/// Cosine seasonality amp * cos((u - phase) * 2*pi/365) in day offsets.
struct SeasonalityParams {
    double amp = 0.0;   // EUR/MWh
    double phase = 0.0; // normalized day offset
    double period = kSeasonPeriodDays;
};

[[nodiscard]] inline double seasonality_value(double u, const SeasonalityParams& p) {
    return p.amp * std::cos((u - p.phase) * 2.0 * M_PI / p.period);
}

/// Antiderivative of the seasonality function at day offset u.
[[nodiscard]] inline double seasonality_antiderivative(double u, const SeasonalityParams& p) {
    double w = 2.0 * M_PI / p.period;
    return p.amp / w * std::sin((u - p.phase) * w);
}

/// Average of the seasonality function over [lo, hi] (day offsets), closed form.
[[nodiscard]] inline double seasonality_average(double lo, double hi,
                                                const SeasonalityParams& p) {
    if (!(lo < hi)) throw ValidationError("seasonality_average requires lo < hi");
    return (seasonality_antiderivative(hi, p) - seasonality_antiderivative(lo, p)) / (hi - lo);
}

/// Fits the seasonality level and anchor from the full quote history:
/// amp is the minimum closing price over all contracts, phase is the
/// distance in days between Dec 31 of the last observation year and the
/// date where that minimum occurs, normalized by 252/365.
inline SeasonalityParams fit_seasonality(std::span<const FuturesQuote> quotes) {
    if (quotes.empty()) throw ValidationError("fit_seasonality requires at least one quote");
    const FuturesQuote* min_q = &quotes[0];
    Date last_obs = quotes[0].obs_date;
    for (const auto& q : quotes) {
        if (q.close < min_q->close) min_q = &q;
        if (q.obs_date > last_obs) last_obs = q.obs_date;
    }
    SeasonalityParams p;
    p.amp = min_q->close;
    double dist_days = double(days_between(min_q->obs_date, year_end(last_obs)));
    p.phase = dist_days * 252.0 / 365.0;
    return p;
}

} // namespace pfc
