#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "pfc/jump_detector.hpp"
#include "pfc/rng.hpp"

using namespace pfc;

namespace {

/// Discretized square-root diffusion around a level, in date steps.
std::vector<double> diffusive_series(std::size_t n, double level, double vol, double mean_rev,
                                     std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    v[0] = level;
    for (std::size_t t = 1; t < n; ++t) {
        double prev = v[t - 1];
        double next = prev + mean_rev * (level - prev) + vol * std::sqrt(prev) * rng.normal();
        v[t] = std::max(next, 1.0);
    }
    return v;
}

/// Reference recomputation of the iteration sigmas straight from the
/// stated formula, given the flagged index sets.
double sigma_from_formula(const std::vector<double>& v,
                          const std::vector<std::vector<std::size_t>>& prior_sets,
                          std::size_t iteration) {
    std::size_t n = v.size();
    std::vector<bool> removed(n - 1, false);
    std::size_t m_total = 0;
    for (const auto& s : prior_sets)
        for (std::size_t t : s) {
            removed[t] = true;
            ++m_total;
        }
    double denom = double(n) - double(m_total) - 1.0 - (iteration == 1 ? 1.0 : 0.0);
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        if (removed[t]) continue;
        double dv = v[t + 1] - v[t];
        sum += dv * dv / v[t];
    }
    return std::sqrt(sum / denom);
}

} // namespace

TEST_CASE("constant series produces no jumps at any iteration") {
    std::vector<double> v(64, 50.0);
    auto js = detect_jumps(v, 5);
    CHECK(js.total_count() == 0);
    for (const auto& it : js.iteration_indices) CHECK(it.empty());
}

TEST_CASE("vertical section of identical flat curves is constant") {
    SplineCurve s;
    s.knots = {0.0, 400.0};
    s.coeffs = {{0.0, 0.0, 0.0, 0.0, 50.0}};
    std::vector<ForwardCurve> curves;
    for (int i = 0; i < 5; ++i) {
        ForwardCurve c{SeasonalityParams{}, s};
        c.spline.obs_date = parse_date("2014-01-06") + std::chrono::days{i};
        curves.push_back(c);
    }
    auto sec = vertical_section(curves, 200.0);
    REQUIRE(sec.values.size() == 5);
    for (double v : sec.values) CHECK(v == 50.0);
    CHECK(sec.excluded_dates.empty());
}

TEST_CASE("vertical section excludes curves not covering the maturity") {
    SplineCurve wide;
    wide.knots = {0.0, 400.0};
    wide.coeffs = {{0.0, 0.0, 0.0, 0.0, 50.0}};
    SplineCurve narrow;
    narrow.knots = {0.0, 100.0};
    narrow.coeffs = {{0.0, 0.0, 0.0, 0.0, 50.0}};
    std::vector<ForwardCurve> curves;
    for (int i = 0; i < 4; ++i) curves.push_back({SeasonalityParams{}, wide});
    curves.push_back({SeasonalityParams{}, narrow});
    auto sec = vertical_section(curves, 200.0);
    CHECK(sec.values.size() == 4);
    CHECK(sec.excluded_dates.size() == 1);

    std::vector<ForwardCurve> few{curves[0], curves[4]};
    CHECK_THROWS_AS(vertical_section(few, 200.0), InsufficientDataError);
}

TEST_CASE("vertical section matches direct grid lookup on a synthetic surface") {
    // surface f(t, u) = 30 + t + u/100 encoded as exact linear splines
    std::vector<ForwardCurve> curves;
    for (int t = 0; t < 6; ++t) {
        SplineCurve s;
        s.knots = {0.0, 500.0};
        s.coeffs = {{0.0, 0.0, 0.0, 0.01, 30.0 + t}};
        curves.push_back({SeasonalityParams{}, s});
    }
    auto sec = vertical_section(curves, 250.0);
    REQUIRE(sec.values.size() == 6);
    for (int t = 0; t < 6; ++t)
        CHECK(sec.values[t] == Catch::Approx(30.0 + t + 2.5).epsilon(1e-14));
}

TEST_CASE("deseasonalized section subtracts the seasonality at the maturity") {
    SplineCurve s;
    s.knots = {0.0, 400.0};
    s.coeffs = {{0.0, 0.0, 0.0, 0.0, 50.0}};
    SeasonalityParams seas{10.0, 0.0};
    std::vector<ForwardCurve> curves(4, ForwardCurve{seas, s});
    auto plain = vertical_section(curves, 200.0, false);
    auto deseas = vertical_section(curves, 200.0, true);
    for (std::size_t i = 0; i < plain.values.size(); ++i)
        CHECK(plain.values[i] - deseas.values[i] ==
              Catch::Approx(seasonality_value(200.0, seas)).epsilon(1e-14));
}

TEST_CASE("planted upward shocks are detected within two iterations") {
    std::mt19937_64 meta(7);
    for (int rep = 0; rep < 5; ++rep) {
        std::uint64_t seed = meta();
        auto v = diffusive_series(2000, 50.0, 0.2, 0.01, seed);
        std::mt19937_64 places(seed ^ 0xabc);
        std::uniform_int_distribution<std::size_t> pos(1, v.size() - 2);
        std::vector<std::size_t> planted;
        while (planted.size() < 20) {
            std::size_t t = pos(places);
            // adjacent shocks distort each other's increments; keep them apart
            bool close = false;
            for (std::size_t p : planted)
                if (t + 1 >= p && t <= p + 1) close = true;
            if (close) continue;
            planted.push_back(t);
        }
        // plant a shock of 7 sigma sqrt(V) into the increment t -> t+1;
        // the shock also leaves a matching negative increment behind it,
        // which inflates the first-pass sigma
        for (std::size_t t : planted) v[t + 1] += 7.0 * 0.2 * std::sqrt(v[t]);

        auto js = detect_jumps(v, 2);
        auto found = js.all_indices();
        std::size_t hits = 0;
        for (std::size_t t : planted)
            if (std::binary_search(found.begin(), found.end(), t)) ++hits;
        CHECK(hits >= 19); // recall on this seed set
        CHECK(js.sigmas.size() == 2);
        CHECK(js.sigmas[1] <= js.sigmas[0]);
    }
}

TEST_CASE("iteration sigmas follow the stated denominators") {
    auto v = diffusive_series(64, 40.0, 0.3, 0.0, 11);
    v[10] += 10.0;
    v[30] += 12.0;
    auto js = detect_jumps(v, 3);
    REQUIRE(js.sigmas.size() >= 2);
    CHECK(js.sigmas[0] == Catch::Approx(sigma_from_formula(v, {}, 1)).epsilon(1e-12));
    CHECK(js.sigmas[1] ==
          Catch::Approx(sigma_from_formula(v, {js.iteration_indices[0]}, 2)).epsilon(1e-12));
    if (js.sigmas.size() >= 3)
        CHECK(js.sigmas[2] ==
              Catch::Approx(sigma_from_formula(
                                v, {js.iteration_indices[0], js.iteration_indices[1]}, 3))
                  .epsilon(1e-12));
}

TEST_CASE("detector properties: monotone sigma, disjoint sets, one-sided, deterministic") {
    std::mt19937_64 meta(13);
    for (int rep = 0; rep < 10; ++rep) {
        auto v = diffusive_series(500, 45.0, 0.25, 0.005, meta());
        // add some negative spikes that must never be flagged
        v[50] = std::max(1.0, v[50] - 20.0);
        v[200] = std::max(1.0, v[200] - 15.0);
        auto js = detect_jumps(v, 10);

        for (std::size_t i = 1; i < js.sigmas.size(); ++i) CHECK(js.sigmas[i] <= js.sigmas[i - 1]);

        std::vector<bool> seen(v.size(), false);
        for (const auto& set : js.iteration_indices)
            for (std::size_t t : set) {
                CHECK(!seen[t]);
                seen[t] = true;
                CHECK(v[t + 1] - v[t] > 0.0);
            }

        auto js2 = detect_jumps(v, 10);
        CHECK(js2.all_indices() == js.all_indices());
        CHECK(js2.sigmas == js.sigmas);
    }
}

TEST_CASE("non-positive values are a domain error; short series insufficient") {
    std::vector<double> bad{10.0, -1.0, 12.0, 13.0};
    CHECK_THROWS_AS(detect_jumps(bad), std::domain_error);
    std::vector<double> two{10.0, 11.0};
    CHECK_THROWS_AS(detect_jumps(two), InsufficientDataError);
}
