#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "pfc/dynamics.hpp"
#include "pfc/gof.hpp"
#include "pfc/rng.hpp"
#include "support/oracles.hpp"

using namespace pfc;

namespace {

JumpSample sample_from_times(std::vector<double> times) {
    JumpSample s;
    s.arrival_times = std::move(times);
    s.horizon = s.arrival_times.back();
    return s;
}

} // namespace

TEST_CASE("quantile-placed samples achieve the minimal statistic") {
    auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    for (std::size_t n : {5, 20, 86}) {
        std::vector<double> sample(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = (double(i) + 0.5) / double(n);
        CHECK(ks_statistic(sample, uniform_cdf) ==
              Catch::Approx(0.5 / double(n)).epsilon(1e-12));
    }
}

TEST_CASE("statistic matches the dense-grid supremum oracle") {
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> sample(40);
        for (auto& v : sample) v = u(gen);
        std::sort(sample.begin(), sample.end());
        double d = ks_statistic(sample, uniform_cdf);
        double brute = oracle::ks_sup_dense(sample, uniform_cdf, 0.0, 1.0);
        CHECK(d == Catch::Approx(brute).margin(1e-12));
    }
}

TEST_CASE("unsorted samples are rejected") {
    std::vector<double> s{0.5, 0.2, 0.9};
    CHECK_THROWS_AS(ks_statistic(s, [](double x) { return x; }), ValidationError);
}

TEST_CASE("asymptotic p-values") {
    CHECK(ks_pvalue(0.0, 100) == 1.0);
    // the classical 5% point
    for (std::size_t n : {50, 86, 500})
        CHECK(ks_pvalue(1.358 / std::sqrt(double(n)), n) == Catch::Approx(0.05).margin(0.005));
    // long-series oracle agreement on random arguments
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> d_d(0.01, 0.6);
    std::uniform_int_distribution<std::size_t> n_d(10, 2000);
    for (int rep = 0; rep < 50; ++rep) {
        double d = d_d(gen);
        std::size_t n = n_d(gen);
        CHECK(ks_pvalue(d, n) ==
              Catch::Approx(oracle::ks_pvalue_long_series(d, n)).margin(1e-12));
    }
}

TEST_CASE("statistic is invariant under increasing transforms") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> sample(30);
    for (auto& v : sample) v = u(gen);
    std::sort(sample.begin(), sample.end());
    auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    double d1 = ks_statistic(sample, cdf);

    auto transform = [](double x) { return std::exp(3.0 * x) - 1.0; };
    std::vector<double> mapped(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) mapped[i] = transform(sample[i]);
    auto mapped_cdf = [&](double y) { return cdf(std::log(y + 1.0) / 3.0); };
    double d2 = ks_statistic(mapped, mapped_cdf);
    CHECK(d1 == Catch::Approx(d2).epsilon(1e-12));
}

TEST_CASE("Poisson test at exponential quantiles and its calibration") {
    SECTION("exact quantile placement") {
        double rate = 0.25;
        std::size_t n = 40;
        std::vector<double> times;
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double q = (double(i) + 0.5) / double(n);
            t += -std::log(1.0 - q) / rate;
            times.push_back(t);
        }
        // inter-times are exactly the Exp quantiles in increasing order of q,
        // but test_poisson sorts them anyway
        auto res = test_poisson(sample_from_times(std::move(times)), rate);
        CHECK(res.statistic == Catch::Approx(0.5 / double(n)).epsilon(1e-10));
        CHECK(res.model == ModelKind::poisson);
    }
    SECTION("p-values are roughly uniform under the null") {
        Rng rng(555);
        double rate = 0.1;
        int reps = 200;
        double mean_p = 0.0;
        for (int r = 0; r < reps; ++r) {
            std::vector<double> times;
            double t = 0.0;
            for (int i = 0; i < 500; ++i) {
                t += rng.exponential(rate);
                times.push_back(t);
            }
            mean_p += test_poisson(sample_from_times(std::move(times)), rate).p_value;
        }
        mean_p /= reps;
        CHECK(mean_p > 0.45);
        CHECK(mean_p < 0.55);
    }
}

TEST_CASE("compensator closed form") {
    SECTION("excitation off rescales by the baseline") {
        HawkesParams p;
        p.lambda0 = 0.7;
        p.alpha = 0.0;
        p.beta = 1.0;
        auto s = sample_from_times({2.0, 5.0, 6.5});
        auto theta = hawkes_compensator(p, s);
        REQUIRE(theta.size() == 3);
        CHECK(theta[0] == Catch::Approx(1.4).epsilon(1e-14));
        CHECK(theta[1] == Catch::Approx(2.1).epsilon(1e-14));
        CHECK(theta[2] == Catch::Approx(1.05).epsilon(1e-14));
    }
    SECTION("two events against quadrature and the frozen value") {
        HawkesParams p;
        p.lambda0 = 1.0;
        p.alpha = 1.0;
        p.beta = 1.0;
        auto s = sample_from_times({1.0, 2.0});
        auto theta = hawkes_compensator(p, s);
        REQUIRE(theta.size() == 2);
        CHECK(theta[0] == Catch::Approx(1.0).epsilon(1e-14));
        CHECK(theta[1] == Catch::Approx(1.6321205588285577).epsilon(1e-14));
        std::vector<double> tau{1.0, 2.0};
        double quad = oracle::integrate(
            [&](double t) { return oracle::hawkes_intensity_direct(1.0, 1.0, 1.0, tau, t); }, 1.0,
            2.0, 1e-13);
        CHECK(theta[1] == Catch::Approx(quad).margin(1e-10));
    }
    SECTION("total rescaled time equals the integrated intensity") {
        HawkesForwardParams sim;
        sim.lambda0 = 0.5;
        sim.alpha = 0.8;
        sim.beta = 1.5;
        sim.delta = 1.0;
        sim.marked = false;
        auto path = simulate_hawkes(sim, 6000.0, 97);
        std::vector<double> tau;
        for (const auto& e : path.events) tau.push_back(e.time);
        REQUIRE(tau.size() > 2000);
        tau.resize(2000);
        HawkesParams p;
        p.lambda0 = 0.5;
        p.alpha = 0.8;
        p.beta = 1.5;
        auto s = sample_from_times(tau);
        auto theta = hawkes_compensator(p, s);
        double sum = 0.0;
        for (double x : theta) sum += x;
        // integrate the intensity over [0, tau_N] piecewise between events
        double quad = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < s.arrival_times.size(); ++i) {
            quad += oracle::integrate(
                [&](double t) {
                    return oracle::hawkes_intensity_direct(p.lambda0, p.alpha, p.beta,
                                                           s.arrival_times, t);
                },
                prev, s.arrival_times[i], 1e-13);
            prev = s.arrival_times[i];
        }
        CHECK(sum == Catch::Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("time-rescaled test at unit-exponential quantiles") {
    // choose arrivals so that the rescaled durations hit Exp(1) quantiles:
    // with alpha = 0 and lambda0 = 1 the rescaling is the identity
    std::size_t n = 25;
    std::vector<double> times;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += -std::log(1.0 - (double(i) + 0.5) / double(n));
        times.push_back(t);
    }
    HawkesParams p;
    p.lambda0 = 1.0;
    p.alpha = 0.0;
    p.beta = 1.0;
    auto res = test_hawkes(p, sample_from_times(std::move(times)));
    CHECK(res.statistic == Catch::Approx(0.5 / double(n)).epsilon(1e-10));
}

TEST_CASE("with excitation off the rescaled test reduces to the Poisson test") {
    Rng rng(31337);
    std::vector<double> times;
    double t = 0.0;
    for (int i = 0; i < 300; ++i) {
        t += rng.exponential(0.2);
        times.push_back(t);
    }
    auto s = sample_from_times(std::move(times));
    HawkesParams p;
    p.lambda0 = 0.2;
    p.alpha = 0.0;
    p.beta = 1.0;
    auto a = test_hawkes(p, s);
    auto b = test_poisson(s, 0.2);
    CHECK(a.statistic == Catch::Approx(b.statistic).epsilon(1e-12));
}

TEST_CASE("section-driven arrival CDF") {
    SECTION("constant section is uniform") {
        std::vector<double> v(101, 7.0);
        BranchingCdf cdf(v, 100.0);
        for (double t : {0.0, 10.0, 33.3, 50.0, 99.9, 100.0})
            CHECK(cdf(t) == Catch::Approx(t / 100.0).epsilon(1e-12).margin(1e-12));
    }
    SECTION("proportionality invariance") {
        std::mt19937_64 gen(41);
        std::uniform_real_distribution<double> u(5.0, 15.0);
        std::vector<double> v(200);
        for (auto& x : v) x = u(gen);
        BranchingCdf f1(v, 199.0);
        auto v2 = v;
        for (auto& x : v2) x *= 2.0;
        BranchingCdf f2(v2, 199.0);
        for (double t = 0.0; t <= 199.0; t += 7.3)
            CHECK(f1(t) == Catch::Approx(f2(t)).epsilon(1e-13).margin(1e-13));
    }
    SECTION("matches a fine Riemann-sum oracle") {
        std::mt19937_64 gen(43);
        std::uniform_real_distribution<double> u(5.0, 15.0);
        std::vector<double> v(150);
        for (auto& x : v) x = u(gen);
        double horizon = 149.0;
        BranchingCdf cdf(v, horizon);
        auto linear = [&](double t) {
            auto k = std::size_t(t);
            if (k >= v.size() - 1) return v.back();
            double frac = t - double(k);
            return v[k] * (1 - frac) + v[k + 1] * frac;
        };
        const int steps = 5000000;
        std::vector<double> checkpoints{13.7, 61.2, 100.0, 140.9};
        double acc = 0.0, total = 0.0;
        std::vector<double> raw(checkpoints.size(), 0.0);
        for (int i = 0; i < steps; ++i) {
            double t0 = horizon * double(i) / steps;
            double t1 = horizon * double(i + 1) / steps;
            double mid = 0.5 * (t0 + t1);
            acc += linear(mid) * (t1 - t0);
            for (std::size_t c = 0; c < checkpoints.size(); ++c)
                if (t1 <= checkpoints[c]) raw[c] = acc;
            total = acc;
        }
        for (std::size_t c = 0; c < checkpoints.size(); ++c)
            CHECK(cdf(checkpoints[c]) == Catch::Approx(raw[c] / total).margin(1e-6));
    }
    SECTION("non-positive sections are domain errors") {
        std::vector<double> v{1.0, 2.0, 0.0, 3.0};
        CHECK_THROWS_AS(BranchingCdf(v, 3.0), std::domain_error);
    }
}

TEST_CASE("branching test at quantile-placed arrivals") {
    std::vector<double> v(301, 4.0); // constant section -> uniform arrivals
    std::size_t n = 30;
    double horizon = 300.0;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = horizon * (double(i) + 0.5) / double(n);
    VerticalSection sec;
    sec.values = v;
    JumpSample s;
    s.arrival_times = times;
    s.horizon = horizon;
    auto res = test_branching(sec, s);
    CHECK(res.statistic == Catch::Approx(0.5 / double(n)).epsilon(1e-9));
    CHECK(res.model == ModelKind::branching);
}
