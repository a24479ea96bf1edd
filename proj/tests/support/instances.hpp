#pragma once

// Random knot/contract instance generation for the smoothing program.
// Windows with exact-partition relationships (a parent quoted alongside
// children that tile it) make the price rows linearly dependent, so
// generated instances are rank-checked and redrawn when degenerate.

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

#include "pfc/curve_builder.hpp"
#include "pfc/market_data.hpp"

namespace testing_support {

struct Instance {
    pfc::KnotGrid grid;
    std::vector<pfc::ResolvedContract> contracts;
    pfc::SeasonalityParams seasonality;
};

inline Instance random_instance(std::mt19937_64& gen, std::size_t max_segments,
                                std::size_t max_contracts, bool with_seasonality = true) {
    std::uniform_int_distribution<int> m_d(1, int(max_contracts));
    std::uniform_int_distribution<int> lo_d(0, 700);
    std::uniform_int_distribution<int> len_d(5, 300);
    std::normal_distribution<double> noise(0.0, 0.5);

    for (;;) {
        int m = m_d(gen);
        std::vector<std::pair<double, double>> windows;
        for (int i = 0; i < m; ++i) {
            double lo = lo_d(gen);
            double hi = lo + len_d(gen);
            if (std::find(windows.begin(), windows.end(), std::make_pair(lo, hi)) !=
                windows.end()) {
                --i;
                continue;
            }
            windows.emplace_back(lo, hi);
        }
        auto grid = pfc::split_overlaps(std::span<const std::pair<double, double>>(windows));
        if (grid.segment_count() > max_segments) continue;

        Instance inst;
        inst.grid = grid;
        if (with_seasonality) {
            inst.seasonality.amp = 8.0;
            inst.seasonality.phase = 120.0;
        }
        for (auto& [lo, hi] : windows) {
            pfc::ResolvedContract c;
            c.begin_days = lo;
            c.end_days = hi;
            double mid = 0.5 * (lo + hi);
            c.price = 35.0 + 6.0 * std::cos(mid / 80.0) + 0.004 * mid + noise(gen);
            inst.contracts.push_back(c);
        }

        auto [A, b] = pfc::assemble_constraints(inst.grid, inst.contracts, inst.seasonality);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < A.rows()) continue; // price rows accidentally dependent
        return inst;
    }
}

} // namespace testing_support
