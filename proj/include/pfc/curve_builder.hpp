#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pfc/curve.hpp"
#include "pfc/errors.hpp"
#include "pfc/market_data.hpp"
#include "pfc/seasonality.hpp"

namespace pfc {

/// Equality-constrained quadratic program for one observation date:
/// minimize x' H x subject to A x = b over the stacked per-segment
/// quartic coefficients x = (a_1, b_1, c_1, d_1, e_1, ..., e_n).
///
/// The assembly is carried out in rescaled time (day offsets divided by
/// `time_unit_days`); the squared-second-derivative objective scales
/// uniformly under affine time changes, so the minimizing curve is the
/// same function of days for any choice of unit while the saddle-point
/// system stays well conditioned.
struct QPSystem {
    Eigen::MatrixXd H; // 5n x 5n, block diagonal, positive semidefinite
    Eigen::MatrixXd A; // (3n + m - 2) x 5n
    Eigen::VectorXd b;
    KnotGrid grid;                // day-offset knots and contract spans
    double time_unit_days = 1.0;  // internal unit used for H, A, b
    std::vector<double> scaled_knots;
};

struct CurveSolveOptions {
    /// Reciprocal-condition gate after equilibration. Consistent systems
    /// refine to tight residuals even when badly conditioned (grids with
    /// sliver segments, raw day-unit bases), so the default only rejects
    /// numerically hopeless factorizations; the residual check below is
    /// the operative guarantee either way.
    double min_rcond = 1e-18;
    int refinement_steps = 2;   // iterative refinement passes on the saddle system
    double residual_tol = 1e-8; // allowed ||Ax-b||_inf / (1 + ||b||_inf)
};

struct CurveSolution {
    SplineCurve spline;     // coefficients in day units
    double objective = 0.0; // integral of squared second derivative, day units
    double residual_inf = 0.0;
    double rcond = 0.0;
};

/// Block-diagonal objective matrix: x' H x equals the integral of the
/// squared second derivative of the piecewise quartic over the grid.
/// knots may be in any time unit.
inline Eigen::MatrixXd assemble_H(std::span<const double> knots) {
    if (knots.size() < 2) throw AssemblyError("assemble_H requires at least one segment");
    const std::size_t n = knots.size() - 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(5 * n, 5 * n);
    for (std::size_t j = 0; j < n; ++j) {
        double lo = knots[j], hi = knots[j + 1];
        double d1 = hi - lo;
        double d2 = hi * hi - lo * lo;
        double d3 = hi * hi * hi - lo * lo * lo;
        double d4 = hi * hi * hi * hi - lo * lo * lo * lo;
        double d5 = hi * hi * hi * hi * hi - lo * lo * lo * lo * lo;
        auto blk = H.block<3, 3>(5 * j, 5 * j);
        blk(0, 0) = 144.0 / 5.0 * d5;
        blk(0, 1) = blk(1, 0) = 18.0 * d4;
        blk(0, 2) = blk(2, 0) = 8.0 * d3;
        blk(1, 1) = 12.0 * d3;
        blk(1, 2) = blk(2, 1) = 6.0 * d2;
        blk(2, 2) = 4.0 * d1;
    }
    return H;
}

namespace detail {

/// A contract window expressed on the knot grid with its price
/// right-hand side already net of the seasonality average.
struct PricedSpan {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double rhs = 0.0;
};

inline void fill_value_row(Eigen::MatrixXd& A, Eigen::Index r, std::size_t seg, double u,
                           double sign) {
    double u2 = u * u;
    A(r, 5 * seg + 0) += sign * u2 * u2;
    A(r, 5 * seg + 1) += sign * u2 * u;
    A(r, 5 * seg + 2) += sign * u2;
    A(r, 5 * seg + 3) += sign * u;
    A(r, 5 * seg + 4) += sign;
}

inline void fill_derivative_row(Eigen::MatrixXd& A, Eigen::Index r, std::size_t seg, double u,
                                double sign) {
    double u2 = u * u;
    A(r, 5 * seg + 0) += sign * 4.0 * u2 * u;
    A(r, 5 * seg + 1) += sign * 3.0 * u2;
    A(r, 5 * seg + 2) += sign * 2.0 * u;
    A(r, 5 * seg + 3) += sign;
}

inline void fill_second_derivative_row(Eigen::MatrixXd& A, Eigen::Index r, std::size_t seg,
                                       double u, double sign) {
    A(r, 5 * seg + 0) += sign * 12.0 * u * u;
    A(r, 5 * seg + 1) += sign * 6.0 * u;
    A(r, 5 * seg + 2) += sign * 2.0;
}

/// Continuity (3 per interior knot), terminal flatness (1) and average
/// price rows (m): 3n + m - 2 rows in total.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_constraint_rows(
    std::span<const double> knots, std::span<const PricedSpan> spans) {
    const std::size_t n = knots.size() - 1;
    const std::size_t m = spans.size();
    const std::size_t rows = 3 * (n - 1) + 1 + m;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, 5 * n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);

    Eigen::Index r = 0;
    for (std::size_t k = 1; k < n; ++k) {
        double u = knots[k];
        fill_value_row(A, r, k, u, 1.0);
        fill_value_row(A, r, k - 1, u, -1.0);
        ++r;
        fill_derivative_row(A, r, k, u, 1.0);
        fill_derivative_row(A, r, k - 1, u, -1.0);
        ++r;
        fill_second_derivative_row(A, r, k, u, 1.0);
        fill_second_derivative_row(A, r, k - 1, u, -1.0);
        ++r;
    }
    fill_derivative_row(A, r, n - 1, knots[n], 1.0);
    ++r;
    for (const auto& s : spans) {
        if (s.lo >= s.hi || s.hi > n) throw AssemblyError("contract span outside the grid");
        double w = 1.0 / (knots[s.hi] - knots[s.lo]);
        for (std::size_t j = s.lo; j < s.hi; ++j) {
            double lo = knots[j], hi = knots[j + 1];
            double p2 = hi * hi - lo * lo;
            double p3 = hi * hi * hi - lo * lo * lo;
            double p4 = hi * hi * hi * hi - lo * lo * lo * lo;
            double p5 = hi * hi * hi * hi * hi - lo * lo * lo * lo * lo;
            A(r, 5 * j + 0) += w * p5 / 5.0;
            A(r, 5 * j + 1) += w * p4 / 4.0;
            A(r, 5 * j + 2) += w * p3 / 3.0;
            A(r, 5 * j + 3) += w * p2 / 2.0;
            A(r, 5 * j + 4) += w * (hi - lo);
        }
        b(r) = s.rhs;
        ++r;
    }
    return {std::move(A), std::move(b)};
}

} // namespace detail

/// Constraint matrix and right-hand side in the grid's own day units.
/// Price rows encode: average of the adjustment over the contract window
/// equals the closing price minus the seasonality average over the same
/// window (seasonality integrated in closed form).
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_constraints(
    const KnotGrid& grid, std::span<const ResolvedContract> contracts,
    const SeasonalityParams& seasonality) {
    if (grid.knots.size() < 2) throw AssemblyError("grid has no segments");
    constexpr double tol = 1e-9;
    std::vector<detail::PricedSpan> spans;
    spans.reserve(contracts.size());
    for (const auto& c : contracts) {
        auto lo_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), c.begin_days - tol);
        auto hi_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), c.end_days - tol);
        if (lo_it == grid.knots.end() || std::abs(*lo_it - c.begin_days) > tol ||
            hi_it == grid.knots.end() || std::abs(*hi_it - c.end_days) > tol)
            throw AssemblyError("contract window endpoint is not a knot");
        detail::PricedSpan s;
        s.lo = std::size_t(lo_it - grid.knots.begin());
        s.hi = std::size_t(hi_it - grid.knots.begin());
        s.rhs = c.price - seasonality_average(c.begin_days, c.end_days, seasonality);
        spans.push_back(s);
    }
    return detail::assemble_constraint_rows(grid.knots, spans);
}

/// Full system assembly in rescaled time. Averages are invariant under
/// the rescaling, so the right-hand side is identical to the day-unit
/// assembly; only the knot axis changes.
inline QPSystem assemble_qp(const KnotGrid& grid, std::span<const ResolvedContract> contracts,
                            const SeasonalityParams& seasonality,
                            double time_unit_days = 365.0) {
    if (time_unit_days <= 0.0) throw AssemblyError("time unit must be positive");
    QPSystem sys;
    sys.grid = grid;
    sys.time_unit_days = time_unit_days;
    sys.scaled_knots.reserve(grid.knots.size());
    for (double k : grid.knots) sys.scaled_knots.push_back(k / time_unit_days);

    // seasonality right-hand sides must be computed on the day axis
    constexpr double tol = 1e-9;
    std::vector<detail::PricedSpan> spans;
    spans.reserve(contracts.size());
    for (const auto& c : contracts) {
        auto lo_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), c.begin_days - tol);
        auto hi_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), c.end_days - tol);
        if (lo_it == grid.knots.end() || std::abs(*lo_it - c.begin_days) > tol ||
            hi_it == grid.knots.end() || std::abs(*hi_it - c.end_days) > tol)
            throw AssemblyError("contract window endpoint is not a knot");
        detail::PricedSpan s;
        s.lo = std::size_t(lo_it - grid.knots.begin());
        s.hi = std::size_t(hi_it - grid.knots.begin());
        s.rhs = c.price - seasonality_average(c.begin_days, c.end_days, seasonality);
        spans.push_back(s);
    }
    sys.H = assemble_H(sys.scaled_knots);
    auto [A, b] = detail::assemble_constraint_rows(sys.scaled_knots, spans);
    sys.A = std::move(A);
    sys.b = std::move(b);
    return sys;
}

/// Solves the saddle-point system [[2H, A'], [A, 0]] [x; lambda] = [0; b]
/// by LU factorization with iterative refinement, gates on the reciprocal
/// condition estimate and the constraint residual, and converts the
/// coefficients back to day units.
///
/// Grids mixing week-long and multi-year segments spread the entries of
/// H over many orders of magnitude, so the system is symmetrically
/// equilibrated (rows and columns scaled by the inverse square root of
/// the row infinity norm) before factorization; refinement corrections
/// are computed against the original system.
inline CurveSolution solve_curve(const QPSystem& sys, const CurveSolveOptions& opts = {}) {
    const Eigen::Index nx = sys.H.rows();
    const Eigen::Index nc = sys.A.rows();
    const Eigen::Index dim = nx + nc;

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
    K.topLeftCorner(nx, nx) = 2.0 * sys.H;
    K.topRightCorner(nx, nc) = sys.A.transpose();
    K.bottomLeftCorner(nc, nx) = sys.A;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs.tail(nc) = sys.b;

    Eigen::VectorXd d(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        double row_norm = K.row(i).cwiseAbs().maxCoeff();
        if (!(row_norm > 0.0))
            throw NumericalError("saddle-point system has an empty row", 0.0);
        d(i) = 1.0 / std::sqrt(row_norm);
    }
    Eigen::MatrixXd Ks = d.asDiagonal() * K * d.asDiagonal();

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Ks);
    double rc = lu.rcond();
    if (!(rc > opts.min_rcond))
        throw NumericalError("saddle-point system is singular or ill conditioned", rc);

    Eigen::VectorXd z = d.asDiagonal() * lu.solve(Eigen::VectorXd(d.asDiagonal() * rhs));
    for (int it = 0; it < opts.refinement_steps; ++it) {
        Eigen::VectorXd r = rhs - K * z;
        z += d.asDiagonal() * lu.solve(Eigen::VectorXd(d.asDiagonal() * r));
    }
    Eigen::VectorXd x = z.head(nx);

    double residual = (sys.A * x - sys.b).lpNorm<Eigen::Infinity>();
    double b_inf = sys.b.lpNorm<Eigen::Infinity>();
    if (!(residual <= opts.residual_tol * (1.0 + b_inf)))
        throw NumericalError("constraint residual too large after refinement", rc);

    CurveSolution sol;
    sol.rcond = rc;
    sol.residual_inf = residual;
    double s = sys.time_unit_days;
    sol.objective = x.dot(sys.H * x) / (s * s * s);

    sol.spline.knots = sys.grid.knots;
    sol.spline.coeffs.resize(std::size_t(nx / 5));
    for (std::size_t j = 0; j < sol.spline.coeffs.size(); ++j) {
        double s2 = s * s;
        sol.spline.coeffs[j] = {x(5 * j + 0) / (s2 * s2), x(5 * j + 1) / (s2 * s),
                                x(5 * j + 2) / s2, x(5 * j + 3) / s, x(5 * j + 4)};
    }
    return sol;
}

/// Splits price rows into an independent set and the redundant rest.
/// Quoted windows exactly tiled by other quoted windows reproduce the
/// cascade identity, which makes their price rows linear combinations of
/// the others and the saddle-point matrix singular. The structural rows
/// (continuity and flatness) seed an orthonormal basis; price rows are
/// accepted greedily while they increase the rank.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_redundant_price_rows(
    const Eigen::MatrixXd& A, Eigen::Index n_structural) {
    const double tol = 1e-10;
    std::vector<Eigen::VectorXd> basis;
    auto orthogonalize = [&basis](Eigen::VectorXd v) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) v -= q.dot(v) * q;
        return v;
    };
    for (Eigen::Index i = 0; i < n_structural; ++i) {
        Eigen::VectorXd v = orthogonalize(A.row(i).transpose());
        basis.push_back(v.normalized());
    }
    std::vector<std::size_t> kept, dropped;
    for (Eigen::Index i = n_structural; i < A.rows(); ++i) {
        Eigen::VectorXd row = A.row(i).transpose();
        Eigen::VectorXd v = orthogonalize(row);
        if (v.norm() > tol * row.norm()) {
            basis.push_back(v.normalized());
            kept.push_back(std::size_t(i - n_structural));
        } else {
            dropped.push_back(std::size_t(i - n_structural));
        }
    }
    return {std::move(kept), std::move(dropped)};
}

struct CurveBuildOptions {
    bool include_quarterly = false;
    double time_unit_days = 365.0;
    CurveSolveOptions solve;
    double redundant_price_tol = 1e-6; // relative repricing agreement for dropped quotes
};

struct CurveBuildResult {
    ForwardCurve curve;
    std::vector<ResolvedContract> contracts;         // the windows actually fitted
    std::vector<ResolvedContract> redundant_contracts; // dropped, verified by repricing
    double objective = 0.0;
    double residual_inf = 0.0;
    double rcond = 0.0;
    std::size_t n_segments = 0;
    std::size_t m_contracts = 0;
};

/// End-to-end fit for one observation date: resolve rolling windows,
/// split overlaps, assemble and solve the smoothing program.
inline CurveBuildResult build_curve(std::span<const FuturesQuote> quotes,
                                    const SeasonalityParams& seasonality,
                                    const CurveBuildOptions& opts = {}) {
    if (quotes.empty()) throw ValidationError("build_curve requires at least one quote");
    Date obs = quotes[0].obs_date;
    std::vector<FuturesQuote> usable;
    usable.reserve(quotes.size());
    for (const auto& q : quotes) {
        if (q.obs_date != obs) throw ValidationError("quotes span multiple observation dates");
        if (!opts.include_quarterly && q.tenor == Tenor::quarterly) continue;
        usable.push_back(q);
    }
    if (usable.empty()) throw ValidationError("no usable quotes after tenor filtering");

    auto contracts = resolve_rolling(usable, obs);
    auto grid = split_overlaps(std::span<const ResolvedContract>(contracts));
    auto sys = assemble_qp(grid, contracts, seasonality, opts.time_unit_days);

    Eigen::Index n_structural = sys.A.rows() - Eigen::Index(contracts.size());
    auto [kept_idx, dropped_idx] = split_redundant_price_rows(sys.A, n_structural);

    std::vector<ResolvedContract> fitted, redundant;
    for (std::size_t i : kept_idx) fitted.push_back(contracts[i]);
    for (std::size_t i : dropped_idx) redundant.push_back(contracts[i]);
    if (!dropped_idx.empty())
        sys = assemble_qp(grid, fitted, seasonality, opts.time_unit_days);

    auto sol = solve_curve(sys, opts.solve);

    CurveBuildResult res;
    res.curve.seasonality = seasonality;
    res.curve.spline = std::move(sol.spline);
    res.curve.spline.obs_date = obs;

    for (const auto& c : redundant) {
        double repriced = reprice_future(res.curve, c.begin_days, c.end_days);
        if (std::abs(repriced - c.price) > opts.redundant_price_tol * std::abs(c.price))
            throw ValidationError("redundant quote for " + std::string(to_string(c.tenor)) + " " +
                                  to_string(c.roll_slot) +
                                  " is inconsistent with the quotes spanning it");
    }

    res.contracts = std::move(fitted);
    res.redundant_contracts = std::move(redundant);
    res.objective = sol.objective;
    res.residual_inf = sol.residual_inf;
    res.rcond = sol.rcond;
    res.n_segments = grid.segment_count();
    res.m_contracts = res.contracts.size() + res.redundant_contracts.size();
    return res;
}

} // namespace pfc
