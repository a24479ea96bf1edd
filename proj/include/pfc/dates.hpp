#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "pfc/errors.hpp"

namespace pfc {

using Date = std::chrono::sys_days;

enum class Tenor { weekly, monthly, quarterly, yearly };
enum class RollSlot { c1, c2, c3, c4 };

inline Date make_date(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw ValidationError("invalid calendar date");
    return sys_days{ymd};
}

/// Parses strict ISO-8601 `YYYY-MM-DD`.
inline Date parse_date(std::string_view s, std::size_t line = 0) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw ParseError("expected YYYY-MM-DD, got '" + std::string(s) + "'", line);
    auto digits = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9')
                throw ParseError("expected YYYY-MM-DD, got '" + std::string(s) + "'", line);
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    int y = digits(0, 4);
    unsigned m = static_cast<unsigned>(digits(5, 2));
    unsigned d = static_cast<unsigned>(digits(8, 2));
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(s) + "'", line);
    return sys_days{ymd};
}

inline std::string to_string(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

inline long days_between(Date from, Date to) { return (to - from).count(); }

inline int year_of(Date d) { return int(std::chrono::year_month_day{d}.year()); }

/// Dec 31 of the given date's year.
inline Date year_end(Date d) { return make_date(year_of(d), 12, 31); }

inline const char* to_string(Tenor t) {
    switch (t) {
        case Tenor::weekly: return "weekly";
        case Tenor::monthly: return "monthly";
        case Tenor::quarterly: return "quarterly";
        case Tenor::yearly: return "yearly";
    }
    return "?";
}

inline const char* to_string(RollSlot s) {
    switch (s) {
        case RollSlot::c1: return "c1";
        case RollSlot::c2: return "c2";
        case RollSlot::c3: return "c3";
        case RollSlot::c4: return "c4";
    }
    return "?";
}

inline Tenor parse_tenor(std::string_view s, std::size_t line = 0) {
    if (s == "weekly") return Tenor::weekly;
    if (s == "monthly") return Tenor::monthly;
    if (s == "quarterly") return Tenor::quarterly;
    if (s == "yearly") return Tenor::yearly;
    throw ParseError("unknown tenor '" + std::string(s) + "'", line);
}

inline RollSlot parse_roll_slot(std::string_view s, std::size_t line = 0) {
    if (s == "c1") return RollSlot::c1;
    if (s == "c2") return RollSlot::c2;
    if (s == "c3") return RollSlot::c3;
    if (s == "c4") return RollSlot::c4;
    throw ParseError("unknown roll slot '" + std::string(s) + "'", line);
}

/// First day of the delivery period of the given tenor starting strictly
/// after `obs`. Weeks start on Monday; months, quarters and years are
/// calendar-aligned.
inline Date first_period_start_after(Date obs, Tenor tenor) {
    using namespace std::chrono;
    year_month_day ymd{obs};
    switch (tenor) {
        case Tenor::weekly: {
            weekday wd{obs};
            unsigned delta = (weekday{Monday} - wd).count();
            if (delta == 0) delta = 7;
            return obs + days{delta};
        }
        case Tenor::monthly: {
            year_month ym{ymd.year(), ymd.month()};
            ym += months{1};
            return sys_days{ym / day{1}};
        }
        case Tenor::quarterly: {
            unsigned m = unsigned(ymd.month());
            unsigned qm = ((m - 1) / 3) * 3 + 1; // Jan, Apr, Jul, Oct
            year_month ym{ymd.year(), month{qm}};
            ym += months{3};
            return sys_days{ym / day{1}};
        }
        case Tenor::yearly:
            return sys_days{year{int(ymd.year()) + 1} / January / day{1}};
    }
    throw ValidationError("bad tenor");
}

/// Last (inclusive) delivery day of the period starting at `start`.
inline Date period_end(Date start, Tenor tenor) {
    using namespace std::chrono;
    year_month_day ymd{start};
    switch (tenor) {
        case Tenor::weekly: return start + days{6};
        case Tenor::monthly: {
            year_month ym{ymd.year(), ymd.month()};
            ym += months{1};
            return sys_days{ym / day{1}} - days{1};
        }
        case Tenor::quarterly: {
            year_month ym{ymd.year(), ymd.month()};
            ym += months{3};
            return sys_days{ym / day{1}} - days{1};
        }
        case Tenor::yearly: {
            return sys_days{(ymd.year() + years{1}) / January / day{1}} - days{1};
        }
    }
    throw ValidationError("bad tenor");
}

/// Start of the next delivery period of the same tenor.
inline Date next_period_start(Date start, Tenor tenor) {
    return period_end(start, tenor) + std::chrono::days{1};
}

} // namespace pfc
