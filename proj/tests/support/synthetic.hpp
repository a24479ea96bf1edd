#pragma once

// Synthetic market generator: a ground-truth forward surface with a
// seasonally shaped deterministic part and a mean-reverting stochastic
// level (optionally jump-driven), from which futures quotes are produced
// as exact delivery-window averages.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pfc/dates.hpp"
#include "pfc/dynamics.hpp"
#include "pfc/market_data.hpp"
#include "pfc/rng.hpp"

namespace synthetic {

struct SurfaceSpec {
    double base = 35.0;
    double season_amp = 6.0;
    double season_phase = 80.0;
    double shape_scale = 600.0; // e-folding of the level's maturity shape
    double level0 = 8.0;
    double mean_rev = 0.002;
    double noise = 0.0;     // per-day level noise
    bool with_jumps = false;
    double jump_lambda0 = 0.05;
    double jump_alpha = 0.04;
    double jump_beta = 0.08;
    double jump_delta = 0.12; // mark rate -> mean size 1/delta
    std::uint64_t seed = 1234;
};

struct Surface {
    SurfaceSpec spec;
    std::vector<pfc::Date> dates;
    std::vector<double> level;            // stochastic level per date
    std::vector<std::size_t> jump_dates;  // date indices where a jump landed

    [[nodiscard]] double value(std::size_t t, double u) const {
        const auto& s = spec;
        return s.base + s.season_amp * std::cos((u - s.season_phase) * 2.0 * M_PI / 365.0) +
               level[t] * std::exp(-u / s.shape_scale);
    }

    /// Exact average of value(t, .) over [lo, hi].
    [[nodiscard]] double window_average(std::size_t t, double lo, double hi) const {
        const auto& s = spec;
        double w = 2.0 * M_PI / 365.0;
        double seas = s.season_amp / w *
                      (std::sin((hi - s.season_phase) * w) - std::sin((lo - s.season_phase) * w));
        double shape = s.shape_scale * (std::exp(-lo / s.shape_scale) - std::exp(-hi / s.shape_scale));
        return s.base + (seas + level[t] * shape) / (hi - lo);
    }
};

inline std::vector<pfc::Date> weekday_range(pfc::Date start, std::size_t count) {
    std::vector<pfc::Date> out;
    pfc::Date d = start;
    while (out.size() < count) {
        std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d += std::chrono::days{1};
    }
    return out;
}

inline Surface make_surface(pfc::Date start, std::size_t n_dates, const SurfaceSpec& spec) {
    Surface s;
    s.spec = spec;
    s.dates = weekday_range(start, n_dates);
    s.level.resize(n_dates);
    pfc::Rng rng(spec.seed);

    std::vector<double> jumps(n_dates, 0.0);
    if (spec.with_jumps) {
        pfc::HawkesForwardParams hp;
        hp.lambda0 = spec.jump_lambda0;
        hp.alpha = spec.jump_alpha;
        hp.beta = spec.jump_beta;
        hp.delta = spec.jump_delta;
        hp.marked = false;
        auto events = pfc::simulate_hawkes(hp, double(n_dates), pfc::derive_seed(spec.seed, 7));
        for (const auto& e : events.events) {
            auto idx = std::size_t(std::ceil(e.time));
            if (idx >= 1 && idx < n_dates) {
                jumps[idx] += e.mark;
                s.jump_dates.push_back(idx);
            }
        }
    }

    double x = spec.level0;
    for (std::size_t t = 0; t < n_dates; ++t) {
        if (t > 0) {
            x = x * (1.0 - spec.mean_rev) + spec.noise * rng.normal() + jumps[t];
            if (x < 0.5) x = 0.5;
        }
        s.level[t] = x;
    }
    return s;
}

/// Quotes for one date: weekly, monthly and yearly c1..c4 (plus quarterly
/// when asked), each priced as the exact ground-truth window average.
inline std::vector<pfc::FuturesQuote> quotes_for_date(const Surface& s, std::size_t t,
                                                      bool with_quarterly = false) {
    std::vector<pfc::FuturesQuote> out;
    pfc::Date obs = s.dates[t];
    auto add = [&](pfc::Tenor tenor, const char* ticker) {
        pfc::Date start = pfc::first_period_start_after(obs, tenor);
        for (int slot = 0; slot < 4; ++slot) {
            pfc::Date end = pfc::period_end(start, tenor);
            double lo = double(pfc::days_between(obs, start));
            double hi = double(pfc::days_between(obs, end) + 1);
            pfc::FuturesQuote q;
            q.obs_date = obs;
            q.ticker = ticker;
            q.tenor = tenor;
            q.roll_slot = pfc::RollSlot(slot);
            q.delivery_start = start;
            q.delivery_end = end;
            q.close = s.window_average(t, lo, hi);
            out.push_back(q);
            start = pfc::next_period_start(start, tenor);
        }
    };
    add(pfc::Tenor::weekly, "F7B1");
    add(pfc::Tenor::monthly, "F7BM");
    if (with_quarterly) add(pfc::Tenor::quarterly, "F7BQ");
    add(pfc::Tenor::yearly, "F7BY");
    return out;
}

inline std::vector<pfc::FuturesQuote> all_quotes(const Surface& s, bool with_quarterly = false) {
    std::vector<pfc::FuturesQuote> out;
    for (std::size_t t = 0; t < s.dates.size(); ++t) {
        auto q = quotes_for_date(s, t, with_quarterly);
        out.insert(out.end(), q.begin(), q.end());
    }
    return out;
}

inline void write_quotes_csv(const std::string& path, std::span<const pfc::FuturesQuote> quotes) {
    std::ofstream out(path);
    out << pfc::kQuoteCsvHeader << '\n';
    char buf[64];
    for (const auto& q : quotes) {
        std::snprintf(buf, sizeof buf, "%.12g", q.close);
        out << pfc::to_string(q.obs_date) << ',' << q.ticker << ',' << pfc::to_string(q.tenor)
            << ',' << pfc::to_string(q.roll_slot) << ',' << pfc::to_string(q.delivery_start)
            << ',' << pfc::to_string(q.delivery_end) << ',' << buf << '\n';
    }
}

} // namespace synthetic
