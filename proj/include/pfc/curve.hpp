#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pfc/dates.hpp"
#include "pfc/errors.hpp"
#include "pfc/seasonality.hpp"

namespace pfc {

/// Piecewise-quartic adjustment spline over a knot grid, with one
/// polynomial a*u^4 + b*u^3 + c*u^2 + d*u + e per segment in global day
/// offsets. Interior knots belong to the right segment's closed-left
/// interval [T_{j-1}, T_j); the last interval is closed. Continuity of
/// the polynomial and its first two derivatives at interior knots makes
/// that choice value-irrelevant.
struct SplineCurve {
    std::vector<double> knots;                 // day offsets T_0 < ... < T_n
    std::vector<std::array<double, 5>> coeffs; // per segment: u^4 .. u^0
    Date obs_date{};

    [[nodiscard]] double domain_begin() const { return knots.front(); }
    [[nodiscard]] double domain_end() const { return knots.back(); }

    [[nodiscard]] std::size_t segment_index(double u) const {
        if (u < knots.front() || u > knots.back())
            throw std::domain_error("offset outside the curve domain");
        // right-open intervals, last one closed
        std::size_t lo = 0, hi = knots.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (u < knots[mid])
                hi = mid;
            else
                lo = mid;
        }
        return lo;
    }

    [[nodiscard]] double value(double u) const {
        const auto& c = coeffs[segment_index(u)];
        return (((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4];
    }

    [[nodiscard]] double derivative(double u) const {
        const auto& c = coeffs[segment_index(u)];
        return ((4.0 * c[0] * u + 3.0 * c[1]) * u + 2.0 * c[2]) * u + c[3];
    }

    [[nodiscard]] double second_derivative(double u) const {
        const auto& c = coeffs[segment_index(u)];
        return (12.0 * c[0] * u + 6.0 * c[1]) * u + 2.0 * c[2];
    }

    /// Definite integral over [lo, hi] via the closed-form antiderivative
    /// per covered segment.
    [[nodiscard]] double integral(double lo, double hi) const {
        if (!(lo < hi)) throw std::domain_error("integral requires lo < hi");
        if (lo < knots.front() - 1e-9 || hi > knots.back() + 1e-9)
            throw std::domain_error("integration window outside the curve domain");
        auto anti = [](const std::array<double, 5>& c, double u) {
            return ((((c[0] / 5.0 * u + c[1] / 4.0) * u + c[2] / 3.0) * u + c[3] / 2.0) * u +
                    c[4]) *
                   u;
        };
        double total = 0.0;
        for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
            double a = std::max(lo, knots[j]);
            double b = std::min(hi, knots[j + 1]);
            if (a < b) total += anti(coeffs[j], b) - anti(coeffs[j], a);
        }
        return total;
    }
};

/// Forward curve f(u) = seasonality(u) + adjustment(u) for one observation date.
struct ForwardCurve {
    SeasonalityParams seasonality;
    SplineCurve spline;

    [[nodiscard]] double domain_begin() const { return spline.domain_begin(); }
    [[nodiscard]] double domain_end() const { return spline.domain_end(); }
};

[[nodiscard]] inline double eval_forward(const ForwardCurve& curve, double u) {
    return seasonality_value(u, curve.seasonality) + curve.spline.value(u);
}

/// Average of the forward curve over the delivery window [t1, t2]
/// (the futures price), using closed-form antiderivatives.
[[nodiscard]] inline double reprice_future(const ForwardCurve& curve, double t1, double t2) {
    if (!(t1 < t2)) throw std::domain_error("reprice_future requires t1 < t2");
    double seas = seasonality_antiderivative(t2, curve.seasonality) -
                  seasonality_antiderivative(t1, curve.seasonality);
    return (seas + curve.spline.integral(t1, t2)) / (t2 - t1);
}

/// Residual of the cascade consistency relation: price of the parent
/// window minus the delivery-length-weighted average of the children's
/// prices. Children must partition the parent window exactly.
[[nodiscard]] inline double cascade_residual(
    std::pair<std::pair<double, double>, double> parent,
    std::span<const std::pair<std::pair<double, double>, double>> children) {
    const auto& [pw, pprice] = parent;
    if (children.empty()) throw StructuralError("cascade requires at least one child");
    constexpr double tol = 1e-9;
    double cursor = pw.first;
    double weighted = 0.0;
    for (const auto& [cw, cprice] : children) {
        if (std::abs(cw.first - cursor) > tol)
            throw StructuralError("children do not partition the parent window");
        if (!(cw.first < cw.second)) throw StructuralError("child window has no length");
        weighted += (cw.second - cw.first) * cprice;
        cursor = cw.second;
    }
    if (std::abs(cursor - pw.second) > tol)
        throw StructuralError("children do not partition the parent window");
    return pprice - weighted / (pw.second - pw.first);
}

} // namespace pfc
