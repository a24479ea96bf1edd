#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pfc/dates.hpp"
#include "pfc/errors.hpp"

namespace pfc {

/// One observed futures closing price with its delivery window.
struct FuturesQuote {
    Date obs_date{};
    std::string ticker;
    Tenor tenor = Tenor::monthly;
    RollSlot roll_slot = RollSlot::c1;
    Date delivery_start{};
    Date delivery_end{}; // last delivery day, inclusive
    double close = 0.0;  // EUR/MWh
};

/// A delivery window resolved to day offsets from the observation date.
/// Offsets are half-open: [begin_days, end_days) where end_days is the
/// day after the last delivery day, so consecutive calendar periods are
/// exactly adjacent.
struct ResolvedContract {
    Tenor tenor = Tenor::monthly;
    RollSlot roll_slot = RollSlot::c1;
    Date delivery_start{};
    Date delivery_end{};
    double begin_days = 0.0;
    double end_days = 0.0;
    double price = 0.0;
};

/// Non-overlapping segment grid obtained by splitting overlapping
/// delivery windows at every window endpoint.
struct KnotGrid {
    std::vector<double> knots; // strictly increasing day offsets T_0 < ... < T_n
    /// Per input contract, the knot index pair (lo, hi) with
    /// knots[lo] == window begin and knots[hi] == window end.
    std::vector<std::pair<std::size_t, std::size_t>> contract_spans;

    [[nodiscard]] std::size_t segment_count() const {
        return knots.empty() ? 0 : knots.size() - 1;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_price(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("trailing characters in price '" + s + "'", line);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("bad price '" + s + "'", line);
    }
}

} // namespace detail

inline constexpr const char* kQuoteCsvHeader =
    "obs_date,ticker,tenor,roll_slot,delivery_start,delivery_end,close";

/// Parses one CSV data row. Malformed fields raise ParseError; invariant
/// violations (non-positive price, inverted delivery window, delivery
/// before observation) raise ValidationError. Both carry the line number.
inline FuturesQuote parse_quote_row(const std::string& line, std::size_t lineno) {
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 7)
        throw ParseError("expected 7 fields, got " + std::to_string(fields.size()), lineno);
    FuturesQuote q;
    q.obs_date = parse_date(fields[0], lineno);
    q.ticker = fields[1];
    q.tenor = parse_tenor(fields[2], lineno);
    q.roll_slot = parse_roll_slot(fields[3], lineno);
    q.delivery_start = parse_date(fields[4], lineno);
    q.delivery_end = parse_date(fields[5], lineno);
    q.close = detail::parse_price(fields[6], lineno);
    if (q.close <= 0.0) throw ValidationError("close must be positive", lineno);
    if (!(q.delivery_start < q.delivery_end))
        throw ValidationError("delivery_start must precede delivery_end", lineno);
    if (q.obs_date > q.delivery_start)
        throw ValidationError("obs_date must not be after delivery_start", lineno);
    return q;
}

/// Reads futures quotes from CSV. Header and column order are fixed:
/// `obs_date,ticker,tenor,roll_slot,delivery_start,delivery_end,close`.
/// Rows are returned in input order; the first bad row aborts the parse.
inline std::vector<FuturesQuote> parse_quotes(std::istream& in) {
    std::vector<FuturesQuote> quotes;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!saw_header) {
            if (line != kQuoteCsvHeader)
                throw ParseError("bad header, expected '" + std::string(kQuoteCsvHeader) + "'",
                                 lineno);
            saw_header = true;
            continue;
        }
        if (line.empty()) continue;
        quotes.push_back(parse_quote_row(line, lineno));
    }
    if (!saw_header) throw ParseError("empty input, missing header", 0);
    return quotes;
}

struct QuoteParseIssue {
    std::size_t line = 0;
    std::string message;
};

/// Fault-tolerant variant for batch runs: bad rows are collected as
/// issues instead of aborting, so the remaining dates still process.
inline std::vector<FuturesQuote> parse_quotes_lenient(std::istream& in,
                                                      std::vector<QuoteParseIssue>& issues) {
    std::vector<FuturesQuote> quotes;
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!saw_header) {
            if (line != kQuoteCsvHeader)
                throw ParseError("bad header, expected '" + std::string(kQuoteCsvHeader) + "'",
                                 lineno);
            saw_header = true;
            continue;
        }
        if (line.empty()) continue;
        try {
            quotes.push_back(parse_quote_row(line, lineno));
        } catch (const std::exception& e) {
            issues.push_back({lineno, e.what()});
        }
    }
    if (!saw_header) throw ParseError("empty input, missing header", 0);
    return quotes;
}

/// Maps each quote's roll slot to its absolute delivery window for the
/// given observation date: c1 is the first calendar period of the quote's
/// tenor starting strictly after obs_date, c2..c4 follow consecutively.
/// The quote's stated delivery dates are not consulted here; windows are
/// derived purely from the rolling convention.
inline std::vector<ResolvedContract> resolve_rolling(std::span<const FuturesQuote> quotes,
                                                     Date obs_date) {
    std::map<std::pair<int, int>, std::size_t> seen;
    std::vector<ResolvedContract> out;
    out.reserve(quotes.size());
    for (const auto& q : quotes) {
        if (q.obs_date != obs_date)
            throw ValidationError("quote observation date does not match the requested date");
        auto key = std::make_pair(int(q.tenor), int(q.roll_slot));
        if (++seen[key] > 1)
            throw AmbiguityError(std::string("duplicate quote for ") + to_string(q.tenor) + " " +
                                 to_string(q.roll_slot) + " on " + to_string(obs_date));
        Date start = first_period_start_after(obs_date, q.tenor);
        for (int hop = 0; hop < int(q.roll_slot); ++hop) start = next_period_start(start, q.tenor);
        Date end = period_end(start, q.tenor);
        ResolvedContract rc;
        rc.tenor = q.tenor;
        rc.roll_slot = q.roll_slot;
        rc.delivery_start = start;
        rc.delivery_end = end;
        rc.begin_days = double(days_between(obs_date, start));
        rc.end_days = double(days_between(obs_date, end) + 1);
        rc.price = q.close;
        out.push_back(rc);
    }
    std::sort(out.begin(), out.end(), [](const ResolvedContract& a, const ResolvedContract& b) {
        if (a.begin_days != b.begin_days) return a.begin_days < b.begin_days;
        return a.end_days < b.end_days;
    });
    return out;
}

/// Splits overlapping delivery windows into sub-periods: the knot list is
/// the sorted union of all window endpoints with duplicates removed, and
/// each input window is covered exactly by a run of consecutive segments.
inline KnotGrid split_overlaps(std::span<const std::pair<double, double>> windows) {
    if (windows.empty()) throw ValidationError("split_overlaps requires at least one window");
    std::vector<double> knots;
    knots.reserve(windows.size() * 2);
    for (const auto& [lo, hi] : windows) {
        if (!(lo < hi)) throw ValidationError("window must have positive length");
        knots.push_back(lo);
        knots.push_back(hi);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    KnotGrid grid;
    grid.knots = std::move(knots);
    grid.contract_spans.reserve(windows.size());
    for (const auto& [lo, hi] : windows) {
        auto lo_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), lo);
        auto hi_it = std::lower_bound(grid.knots.begin(), grid.knots.end(), hi);
        grid.contract_spans.emplace_back(std::size_t(lo_it - grid.knots.begin()),
                                         std::size_t(hi_it - grid.knots.begin()));
    }
    return grid;
}

inline KnotGrid split_overlaps(std::span<const ResolvedContract> contracts) {
    std::vector<std::pair<double, double>> windows;
    windows.reserve(contracts.size());
    for (const auto& c : contracts) windows.emplace_back(c.begin_days, c.end_days);
    return split_overlaps(std::span<const std::pair<double, double>>(windows));
}

} // namespace pfc
