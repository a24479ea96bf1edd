#pragma once

#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pfc/curve_builder.hpp"
#include "pfc/reports.hpp"

namespace pfc {

struct RunConfig {
    std::string input;
    std::string output_dir = "out";
    std::vector<double> maturities{200.0, 400.0, 700.0};
    bool include_quarterly = false;
    std::size_t max_jump_iterations = 2;
    std::optional<SeasonalityParams> seasonality_override;
    std::uint64_t seed = 0;
    std::vector<ModelKind> models{ModelKind::poisson, ModelKind::hawkes, ModelKind::branching};
    std::size_t jobs = 0; // 0 = hardware concurrency
    std::string curves_dir; // analyze input; defaults to <output_dir>/curves

    [[nodiscard]] bool wants(ModelKind m) const {
        return std::find(models.begin(), models.end(), m) != models.end();
    }
    [[nodiscard]] fs::path curve_output() const { return fs::path(output_dir) / "curves"; }
    [[nodiscard]] fs::path analysis_output() const { return fs::path(output_dir) / "analysis"; }
    [[nodiscard]] fs::path sim_output() const { return fs::path(output_dir) / "sim"; }
    [[nodiscard]] fs::path curves_input() const {
        return curves_dir.empty() ? curve_output() : fs::path(curves_dir);
    }
};

inline json to_json(const RunConfig& c) {
    json j{{"input", c.input},
           {"output_dir", c.output_dir},
           {"maturities", c.maturities},
           {"include_quarterly", c.include_quarterly},
           {"max_jump_iterations", c.max_jump_iterations},
           {"seed", c.seed},
           {"jobs", c.jobs},
           {"curves_dir", c.curves_dir}};
    std::vector<std::string> models;
    for (auto m : c.models) models.emplace_back(to_string(m));
    j["models"] = models;
    if (c.seasonality_override)
        j["seasonality_override"] = {{"amp", c.seasonality_override->amp},
                                     {"phase", c.seasonality_override->phase}};
    return j;
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.input = j.value("input", c.input);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("maturities")) c.maturities = j["maturities"].get<std::vector<double>>();
    c.include_quarterly = j.value("include_quarterly", c.include_quarterly);
    c.max_jump_iterations = j.value("max_jump_iterations", c.max_jump_iterations);
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    c.curves_dir = j.value("curves_dir", c.curves_dir);
    if (j.contains("models")) {
        c.models.clear();
        for (const auto& m : j["models"]) {
            std::string s = m.get<std::string>();
            if (s == "poisson")
                c.models.push_back(ModelKind::poisson);
            else if (s == "hawkes")
                c.models.push_back(ModelKind::hawkes);
            else if (s == "branching")
                c.models.push_back(ModelKind::branching);
            else
                throw ValidationError("unknown model '" + s + "'");
        }
    }
    if (j.contains("seasonality_override") && !j["seasonality_override"].is_null()) {
        SeasonalityParams p;
        p.amp = j["seasonality_override"].at("amp").get<double>();
        p.phase = j["seasonality_override"].at("phase").get<double>();
        c.seasonality_override = p;
    }
    return c;
}

struct ItemFailure {
    std::string item;
    std::string message;
};

struct RunSummary {
    std::size_t n_ok = 0;
    std::vector<ItemFailure> failures;

    [[nodiscard]] int exit_code() const { return failures.empty() ? 0 : 1; }
};

inline void write_failures(const fs::path& dir, const std::vector<ItemFailure>& failures) {
    json arr = json::array();
    for (const auto& f : failures) arr.push_back({{"item", f.item}, {"message", f.message}});
    auto out = open_output(dir / "failures.json");
    out << arr.dump(2) << '\n';
}

/// Runs fn(i) for i in [0, n) on a small worker pool. Work items must be
/// independent; results should be written to pre-sized slots.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<std::size_t>(jobs, n ? n : 1);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

/// Ingests the quote CSV, fits (or takes) the seasonality, builds one
/// curve per observation date in parallel and writes per-date curve
/// files plus the index. Dates that fail to solve are recorded and
/// skipped; the run continues.
inline RunSummary cmd_curve(const RunConfig& cfg) {
    RunSummary summary;
    std::ifstream in(cfg.input);
    if (!in) throw ValidationError("cannot open input file " + cfg.input);
    std::vector<QuoteParseIssue> issues;
    auto quotes = parse_quotes_lenient(in, issues);
    for (const auto& iss : issues)
        summary.failures.push_back({"line " + std::to_string(iss.line), iss.message});
    if (quotes.empty()) throw ValidationError("no parsable quotes in " + cfg.input);

    SeasonalityParams seasonality =
        cfg.seasonality_override ? *cfg.seasonality_override : fit_seasonality(quotes);

    std::map<Date, std::vector<FuturesQuote>> by_date;
    for (auto& q : quotes) by_date[q.obs_date].push_back(q);
    std::vector<Date> dates;
    dates.reserve(by_date.size());
    for (const auto& [d, _] : by_date) dates.push_back(d);

    fs::path out_dir = cfg.curve_output();
    fs::create_directories(out_dir);

    CurveBuildOptions build_opts;
    build_opts.include_quarterly = cfg.include_quarterly;

    struct Slot {
        bool ok = false;
        CurveIndexRow row;
        std::string error;
    };
    std::vector<Slot> slots(dates.size());

    parallel_for(dates.size(), cfg.jobs, [&](std::size_t i) {
        Date d = dates[i];
        Slot& slot = slots[i];
        try {
            auto res = build_curve(by_date[d], seasonality, build_opts);
            std::string fname = "curve_" + to_string(d) + ".csv";
            write_curve_csv(out_dir / fname, res.curve);
            slot.row = {d,
                        fname,
                        res.curve.domain_begin(),
                        res.curve.domain_end(),
                        res.n_segments,
                        res.m_contracts,
                        res.objective,
                        res.residual_inf};
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });

    std::vector<CurveIndexRow> index;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (slots[i].ok) {
            index.push_back(slots[i].row);
            ++summary.n_ok;
        } else {
            summary.failures.push_back({to_string(dates[i]), slots[i].error});
        }
    }
    write_curve_index(out_dir / "index.csv", index);

    json cfg_json = to_json(cfg);
    cfg_json["seasonality"] = {{"amp", seasonality.amp}, {"phase", seasonality.phase}};
    write_failures(out_dir, summary.failures);
    write_manifest(out_dir, "curve", cfg_json);
    return summary;
}

struct MaturityAnalysis {
    double maturity = 0.0;
    VerticalSection section;               // seasonality-inclusive
    VerticalSection deseasonalized;
    JumpSet jumps;
    JumpSample sample;
    EstimationReport estimation;
    std::vector<GofRow> gof;
};

/// Per-maturity slice analysis: detect jumps, estimate all parameters,
/// run the selected goodness-of-fit tests.
inline MaturityAnalysis analyze_maturity(std::span<const CurveTable> tables, double maturity,
                                         const RunConfig& cfg) {
    MaturityAnalysis ma;
    ma.maturity = maturity;
    long u = std::lround(maturity);
    ma.section.maturity = maturity;
    ma.deseasonalized.maturity = maturity;
    ma.deseasonalized.deseasonalized = true;
    for (const auto& t : tables) {
        if (!t.covers(u)) {
            ma.section.excluded_dates.push_back(t.obs_date);
            continue;
        }
        ma.section.values.push_back(t.forward_at(u));
        ma.section.dates.push_back(t.obs_date);
        ma.deseasonalized.values.push_back(t.adjustment_at(u));
        ma.deseasonalized.dates.push_back(t.obs_date);
    }
    if (ma.section.values.size() < 3)
        throw InsufficientDataError("maturity not covered by at least 3 curves");

    ma.jumps = detect_jumps(ma.section, cfg.max_jump_iterations);
    ma.sample = make_jump_sample(ma.section, ma.jumps);
    ma.estimation.maturity = maturity;
    ma.estimation.n_jumps = ma.sample.count();

    if (ma.sample.count() == 0) {
        ma.estimation.status = "skipped_no_jumps";
        return ma;
    }

    std::string notes;
    auto attempt = [&notes](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            notes += std::string(notes.empty() ? "" : "; ") + what + ": " + e.what();
        }
    };
    attempt("delta", [&] { ma.estimation.delta = estimate_delta(ma.sample.sizes); });
    attempt("a_tilde", [&] {
        ma.estimation.a_tilde = estimate_mean_reversion(ma.deseasonalized, ma.jumps);
    });
    attempt("sigma", [&] { ma.estimation.sigma = estimate_sigma(ma.jumps); });
    attempt("lambda_poisson",
            [&] { ma.estimation.lambda_poisson = estimate_poisson(ma.sample); });
    attempt("gamma_branching", [&] {
        ma.estimation.gamma_branching = estimate_branching_gamma(ma.sample, ma.deseasonalized);
    });

    if (cfg.wants(ModelKind::hawkes) && ma.sample.count() >= 5) {
        attempt("hawkes_fit", [&] {
            ma.estimation.hawkes = fit_hawkes(ma.sample);
            ma.estimation.hawkes.params.delta = ma.estimation.delta;
            ma.estimation.has_hawkes = true;
        });
    }

    if (cfg.wants(ModelKind::poisson) && ma.sample.count() >= 2) {
        attempt("gof_poisson", [&] {
            ma.gof.push_back(
                {maturity, ModelKind::poisson,
                 test_poisson(ma.sample, ma.estimation.lambda_poisson)});
        });
    }
    if (cfg.wants(ModelKind::hawkes) && ma.estimation.has_hawkes && ma.sample.count() >= 2) {
        attempt("gof_hawkes", [&] {
            ma.gof.push_back(
                {maturity, ModelKind::hawkes, test_hawkes(ma.estimation.hawkes.params, ma.sample)});
        });
    }
    if (cfg.wants(ModelKind::branching) && ma.sample.count() >= 2) {
        attempt("gof_branching", [&] {
            ma.gof.push_back({maturity, ModelKind::branching, test_branching(ma.section, ma.sample)});
        });
    }
    if (!notes.empty()) ma.estimation.status = notes;
    return ma;
}

/// Loads built curves and runs the jump/estimation/GOF chain for every
/// configured maturity. Failing maturities are recorded; the others
/// proceed.
inline RunSummary cmd_analyze(const RunConfig& cfg) {
    RunSummary summary;
    fs::path curves = cfg.curves_input();
    auto index = read_curve_index(curves / "index.csv");
    if (index.empty()) throw ValidationError("curve index is empty");
    std::sort(index.begin(), index.end(),
              [](const CurveIndexRow& a, const CurveIndexRow& b) { return a.obs_date < b.obs_date; });

    std::vector<CurveTable> tables(index.size());
    parallel_for(index.size(), cfg.jobs, [&](std::size_t i) {
        tables[i] = read_curve_csv(curves / index[i].file, index[i].obs_date);
    });

    fs::path out_dir = cfg.analysis_output();
    fs::create_directories(out_dir);

    std::vector<JumpSummaryRow> jump_rows;
    std::vector<GofRow> gof_rows;
    for (double T : cfg.maturities) {
        std::string label = "T" + fmt_double(T, "%.10g");
        try {
            auto ma = analyze_maturity(tables, T, cfg);
            write_jump_report(out_dir / ("jumps_" + label + ".csv"), T, ma.section, ma.jumps);
            JumpSummaryRow jr;
            jr.maturity = T;
            jr.iter1 = ma.jumps.iteration_indices.size() > 0 ? ma.jumps.iteration_indices[0].size() : 0;
            jr.iter2 = ma.jumps.iteration_indices.size() > 1 ? ma.jumps.iteration_indices[1].size() : 0;
            jr.total = ma.jumps.total_count();
            jump_rows.push_back(jr);
            auto out = open_output(out_dir / ("estimation_" + label + ".json"));
            out << to_json(ma.estimation).dump(2) << '\n';
            gof_rows.insert(gof_rows.end(), ma.gof.begin(), ma.gof.end());
            ++summary.n_ok;
        } catch (const std::exception& e) {
            summary.failures.push_back({label, e.what()});
        }
    }
    write_jump_summary(out_dir / "jump_summary.csv", jump_rows);
    write_gof_report(out_dir / "gof.csv", gof_rows);
    write_failures(out_dir, summary.failures);
    write_manifest(out_dir, "analyze", to_json(cfg));
    return summary;
}

struct ScenarioConfig {
    std::string model = "hawkes"; // "cbi" or "hawkes"
    Measure measure = Measure::P;
    double horizon = 100.0;
    double dt = 0.1;
    std::size_t n_paths = 100;
    std::uint64_t seed = 1;
    CBIParams cbi;
    HawkesForwardParams hawkes;
};

inline ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig s;
    s.model = j.value("model", s.model);
    if (s.model != "cbi" && s.model != "hawkes")
        throw ValidationError("scenario model must be 'cbi' or 'hawkes'");
    std::string meas = j.value("measure", std::string("P"));
    if (meas == "P")
        s.measure = Measure::P;
    else if (meas == "Q")
        s.measure = Measure::Q;
    else
        throw ValidationError("measure must be 'P' or 'Q'");
    s.horizon = j.value("horizon", s.horizon);
    s.dt = j.value("dt", s.dt);
    s.n_paths = j.value("n_paths", s.n_paths);
    s.seed = j.value("seed", s.seed);
    if (j.contains("cbi")) {
        const auto& c = j["cbi"];
        s.cbi.a = c.value("a", 0.0);
        s.cbi.b = c.value("b", 0.0);
        s.cbi.sigma = c.value("sigma", 0.0);
        s.cbi.gamma = c.value("gamma", 0.0);
        s.cbi.delta = c.value("delta", 1.0);
        s.cbi.y0 = c.value("y0", 0.0);
        s.cbi.jump_mass = c.value("jump_mass", 1.0);
    }
    if (j.contains("hawkes")) {
        const auto& h = j["hawkes"];
        s.hawkes.c = h.value("c", 0.0);
        s.hawkes.sigma = h.value("sigma", 0.0);
        s.hawkes.lambda0 = h.value("lambda0", 0.0);
        s.hawkes.alpha = h.value("alpha", 0.0);
        s.hawkes.beta = h.value("beta", 0.0);
        s.hawkes.delta = h.value("delta", 1.0);
        s.hawkes.x0 = h.value("x0", 0.0);
        s.hawkes.jump_mass = h.value("jump_mass", 1.0);
        s.hawkes.marked = h.value("marked", true);
    }
    return s;
}

inline json to_json(const ScenarioConfig& s) {
    json j{{"model", s.model},
           {"measure", s.measure == Measure::P ? "P" : "Q"},
           {"horizon", s.horizon},
           {"dt", s.dt},
           {"n_paths", s.n_paths},
           {"seed", s.seed}};
    if (s.model == "cbi")
        j["cbi"] = {{"a", s.cbi.a},         {"b", s.cbi.b},   {"sigma", s.cbi.sigma},
                    {"gamma", s.cbi.gamma}, {"delta", s.cbi.delta}, {"y0", s.cbi.y0},
                    {"jump_mass", s.cbi.jump_mass}};
    else
        j["hawkes"] = {{"c", s.hawkes.c},           {"sigma", s.hawkes.sigma},
                       {"lambda0", s.hawkes.lambda0}, {"alpha", s.hawkes.alpha},
                       {"beta", s.hawkes.beta},     {"delta", s.hawkes.delta},
                       {"x0", s.hawkes.x0},         {"jump_mass", s.hawkes.jump_mass},
                       {"marked", s.hawkes.marked}};
    return j;
}

/// Simulates the scenario across seeded paths, writes event and path
/// files, and a summary with moment diagnostics (plus the transform
/// cross-check for the branching model).
inline RunSummary cmd_simulate(const RunConfig& cfg, const ScenarioConfig& scen) {
    RunSummary summary;
    fs::path out_dir = cfg.sim_output();
    fs::create_directories(out_dir);

    std::vector<std::pair<std::size_t, SimPath>> paths(scen.n_paths);
    std::vector<std::string> errors(scen.n_paths);
    parallel_for(scen.n_paths, cfg.jobs, [&](std::size_t i) {
        paths[i].first = i;
        try {
            std::uint64_t seed = derive_seed(scen.seed, i);
            if (scen.model == "cbi")
                paths[i].second = simulate_forward_factor(scen.cbi, scen.measure, scen.horizon,
                                                          scen.dt, seed);
            else
                paths[i].second = simulate_forward_factor(scen.hawkes, scen.measure,
                                                          scen.horizon, scen.dt, seed);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < scen.n_paths; ++i) {
        if (errors[i].empty())
            ++summary.n_ok;
        else
            summary.failures.push_back({"path " + std::to_string(i), errors[i]});
    }

    write_events_csv(out_dir / "events.csv", paths);
    write_paths_csv(out_dir / "paths.csv", paths);

    json diag;
    diag["n_paths"] = scen.n_paths;
    diag["partial"] = !summary.failures.empty();
    double mean_terminal = 0.0, mean_sq = 0.0, mean_events = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < scen.n_paths; ++i) {
        if (!errors[i].empty()) continue;
        const auto& p = paths[i].second;
        double terminal = p.states.empty() ? 0.0 : p.states.back();
        mean_terminal += terminal;
        mean_sq += terminal * terminal;
        mean_events += double(p.events.size());
        ++ok;
    }
    if (ok > 0) {
        mean_terminal /= double(ok);
        mean_sq /= double(ok);
        mean_events /= double(ok);
        diag["terminal_mean"] = mean_terminal;
        diag["terminal_variance"] = std::max(0.0, mean_sq - mean_terminal * mean_terminal);
        diag["mean_event_count"] = mean_events;
    }
    if (scen.model == "cbi" && scen.measure == Measure::P && ok > 0) {
        double t_check = std::min(1.0, scen.horizon);
        double xi = 0.5;
        auto idx = std::size_t(std::lround(t_check / scen.dt));
        double mc = 0.0;
        for (std::size_t i = 0; i < scen.n_paths; ++i) {
            if (!errors[i].empty()) continue;
            const auto& st = paths[i].second.states;
            mc += std::exp(-xi * st[std::min(idx, st.size() - 1)]);
        }
        mc /= double(ok);
        double exact = cbi_laplace(scen.cbi, xi, 0.0, t_check);
        diag["laplace_check"] = {{"t", t_check},
                                 {"xi", xi},
                                 {"monte_carlo", mc},
                                 {"transform", exact},
                                 {"rel_error", std::abs(mc - exact) / exact}};
    }
    {
        auto out = open_output(out_dir / "summary.json");
        out << diag.dump(2) << '\n';
    }
    {
        auto out = open_output(out_dir / "scenario.json");
        out << to_json(scen).dump(2) << '\n';
    }
    json cfg_json = to_json(cfg);
    cfg_json["scenario"] = to_json(scen);
    write_failures(out_dir, summary.failures);
    write_manifest(out_dir, "simulate", cfg_json);
    return summary;
}

/// Collates an analysis directory into a human-readable summary on the
/// given stream and writes it alongside the analysis outputs.
inline RunSummary cmd_report(const RunConfig& cfg, std::ostream& os) {
    RunSummary summary;
    fs::path dir = cfg.analysis_output();
    std::ostringstream body;

    auto echo_csv = [&body](const fs::path& p, const char* title) {
        std::ifstream in(p);
        if (!in) return false;
        body << "== " << title << " ==\n";
        std::string line;
        while (std::getline(in, line)) body << line << '\n';
        body << '\n';
        return true;
    };
    bool any = false;
    any |= echo_csv(dir / "jump_summary.csv", "jump counts per iteration");
    for (double T : cfg.maturities) {
        std::string label = "T" + fmt_double(T, "%.10g");
        fs::path p = dir / ("estimation_" + label + ".json");
        std::ifstream in(p);
        if (!in) continue;
        any = true;
        body << "== estimates at " << label << " ==\n";
        std::string line;
        while (std::getline(in, line)) body << line << '\n';
        body << '\n';
    }
    any |= echo_csv(dir / "gof.csv", "goodness of fit");
    if (!any) throw ValidationError("no analysis outputs under " + dir.string());

    os << body.str();
    auto out = open_output(dir / "report.txt");
    out << body.str();
    ++summary.n_ok;
    return summary;
}

} // namespace pfc
