#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "pfc/curve.hpp"
#include "pfc/dynamics.hpp"
#include "pfc/errors.hpp"
#include "pfc/estimation.hpp"
#include "pfc/gof.hpp"
#include "pfc/jump_detector.hpp"

namespace pfc {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string fmt_double(double v, const char* spec = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file " + path.string());
    return out;
}

/// One row per integer day offset covered by the curve:
/// `u_days,forward,seasonality,adjustment`.
inline void write_curve_csv(const fs::path& path, const ForwardCurve& curve) {
    auto out = open_output(path);
    out << "u_days,forward,seasonality,adjustment\n";
    long lo = long(std::ceil(curve.domain_begin() - 1e-9));
    long hi = long(std::floor(curve.domain_end() + 1e-9));
    for (long u = lo; u <= hi; ++u) {
        double du = double(u);
        double seas = seasonality_value(du, curve.seasonality);
        double adj = curve.spline.value(du);
        out << u << ',' << fmt_double(seas + adj) << ',' << fmt_double(seas) << ','
            << fmt_double(adj) << '\n';
    }
}

struct CurveIndexRow {
    Date obs_date{};
    std::string file;
    double t0 = 0.0;
    double tn = 0.0;
    std::size_t n_segments = 0;
    std::size_t m_contracts = 0;
    double objective = 0.0;
    double residual_inf = 0.0;
};

inline void write_curve_index(const fs::path& path, std::span<const CurveIndexRow> rows) {
    auto out = open_output(path);
    out << "obs_date,file,T0,Tn,n_segments,m_contracts,objective,residual_inf\n";
    for (const auto& r : rows)
        out << to_string(r.obs_date) << ',' << r.file << ',' << fmt_double(r.t0) << ','
            << fmt_double(r.tn) << ',' << r.n_segments << ',' << r.m_contracts << ','
            << fmt_double(r.objective) << ',' << fmt_double(r.residual_inf) << '\n';
}

inline std::vector<CurveIndexRow> read_curve_index(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open curve index " + path.string());
    std::vector<CurveIndexRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 || line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 8) throw ParseError("bad index row", lineno);
        CurveIndexRow r;
        r.obs_date = parse_date(f[0], lineno);
        r.file = f[1];
        r.t0 = std::stod(f[2]);
        r.tn = std::stod(f[3]);
        r.n_segments = std::stoul(f[4]);
        r.m_contracts = std::stoul(f[5]);
        r.objective = std::stod(f[6]);
        r.residual_inf = std::stod(f[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// In-memory copy of one emitted curve file.
struct CurveTable {
    Date obs_date{};
    long u_begin = 0;
    std::vector<double> forward;
    std::vector<double> seasonality;
    std::vector<double> adjustment;

    [[nodiscard]] bool covers(long u) const {
        return u >= u_begin && u < u_begin + long(forward.size());
    }
    [[nodiscard]] double forward_at(long u) const { return forward[std::size_t(u - u_begin)]; }
    [[nodiscard]] double adjustment_at(long u) const {
        return adjustment[std::size_t(u - u_begin)];
    }
};

inline CurveTable read_curve_csv(const fs::path& path, Date obs_date) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open curve file " + path.string());
    CurveTable t;
    t.obs_date = obs_date;
    std::string line;
    std::size_t lineno = 0;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 || line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 4) throw ParseError("bad curve row", lineno);
        long u = std::stol(f[0]);
        if (first_row) {
            t.u_begin = u;
            first_row = false;
        }
        t.forward.push_back(std::stod(f[1]));
        t.seasonality.push_back(std::stod(f[2]));
        t.adjustment.push_back(std::stod(f[3]));
    }
    return t;
}

/// `maturity_days,iteration,t_index,obs_date,size`; obs_date is the date
/// on which the jump lands (index t+1 of the section).
inline void write_jump_report(const fs::path& path, double maturity,
                              const VerticalSection& section, const JumpSet& jumps) {
    auto out = open_output(path);
    out << "maturity_days,iteration,t_index,obs_date,size\n";
    for (std::size_t it = 0; it < jumps.iteration_indices.size(); ++it) {
        for (std::size_t t : jumps.iteration_indices[it]) {
            double size = section.values[t + 1] - section.values[t];
            out << fmt_double(maturity) << ',' << (it + 1) << ',' << t << ','
                << to_string(section.dates[t + 1]) << ',' << fmt_double(size) << '\n';
        }
    }
}

struct JumpSummaryRow {
    double maturity = 0.0;
    std::size_t iter1 = 0;
    std::size_t iter2 = 0;
    std::size_t total = 0;
};

inline void write_jump_summary(const fs::path& path, std::span<const JumpSummaryRow> rows) {
    auto out = open_output(path);
    out << "maturity_days,iter1_count,iter2_count,total\n";
    for (const auto& r : rows)
        out << fmt_double(r.maturity) << ',' << r.iter1 << ',' << r.iter2 << ',' << r.total
            << '\n';
}

struct EstimationReport {
    double maturity = 0.0;
    std::size_t n_jumps = 0;
    double delta = 0.0;
    double a_tilde = 0.0;
    double sigma = 0.0;
    double lambda_poisson = 0.0;
    double gamma_branching = 0.0;
    HawkesFit hawkes;
    bool has_hawkes = false;
    std::string status = "ok";
};

inline json to_json(const EstimationReport& r) {
    json j{{"maturity_days", r.maturity}, {"n_jumps", r.n_jumps},   {"status", r.status},
           {"delta", r.delta},            {"a_tilde", r.a_tilde},   {"sigma", r.sigma},
           {"lambda_poisson", r.lambda_poisson},
           {"gamma_branching", r.gamma_branching}};
    if (r.has_hawkes) {
        j["hawkes"] = {{"lambda0", r.hawkes.params.lambda0}, {"alpha", r.hawkes.params.alpha},
                       {"beta", r.hawkes.params.beta},       {"loglik", r.hawkes.loglik},
                       {"stable", r.hawkes.params.stable()}, {"degenerate", r.hawkes.params.degenerate}};
    }
    return j;
}

struct GofRow {
    double maturity = 0.0;
    ModelKind model = ModelKind::poisson;
    KSResult result;
};

inline void write_gof_report(const fs::path& path, std::span<const GofRow> rows,
                             double level = 0.05) {
    auto out = open_output(path);
    out << "maturity_days,model,D_n,n,p_value,reject_at_5pct\n";
    for (const auto& r : rows)
        out << fmt_double(r.maturity) << ',' << to_string(r.model) << ','
            << fmt_double(r.result.statistic) << ',' << r.result.n << ','
            << fmt_double(r.result.p_value) << ',' << (r.result.reject(level) ? 1 : 0) << '\n';
}

inline void write_events_csv(const fs::path& path,
                             std::span<const std::pair<std::size_t, SimPath>> paths) {
    auto out = open_output(path);
    out << "path_id,event_time,mark,intensity_after\n";
    for (const auto& [id, p] : paths)
        for (const auto& e : p.events)
            out << id << ',' << fmt_double(e.time) << ',' << fmt_double(e.mark) << ','
                << fmt_double(e.intensity_after) << '\n';
}

inline void write_paths_csv(const fs::path& path,
                            std::span<const std::pair<std::size_t, SimPath>> paths) {
    auto out = open_output(path);
    out << "path_id,t,state\n";
    for (const auto& [id, p] : paths)
        for (std::size_t k = 0; k < p.times.size(); ++k)
            out << id << ',' << fmt_double(p.times[k]) << ',' << fmt_double(p.states[k]) << '\n';
}

inline std::uint64_t fnv1a_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
    json m;
    m["tool"] = "pfc";
    m["version"] = "0.1.0";
    m["command"] = command;
    m["config"] = config;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(config.dump())));
    m["config_hash"] = buf;
    auto out = open_output(dir / "manifest.json");
    out << m.dump(2) << '\n';
}

} // namespace pfc
