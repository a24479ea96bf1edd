#pragma once

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pfc/errors.hpp"
#include "pfc/rng.hpp"

namespace pfc {

/// Square-root branching diffusion with state-proportional exponential
/// jumps: dY = a (b - Y) dt + sigma sqrt(Y) dW + gamma dJ - compensator,
/// where jumps arrive at rate Y * jump_mass with Exp(delta) sizes.
/// jump_mass is 1 under the historical measure; an exponential tilt
/// rescales it together with the mark rate.
struct CBIParams {
    double a = 0.0;     // mean-reversion rate, 1/day
    double b = 0.0;     // immigration level, price units
    double sigma = 0.0; // diffusion coefficient
    double gamma = 0.0; // jump scale
    double delta = 1.0; // jump-size rate, 1/EUR
    double y0 = 0.0;
    double jump_mass = 1.0; // total mass of the jump measure
};

/// Forward-factor dynamics driven by a self-exciting counting process:
/// dX = -c X dt + sigma sqrt(X) dW + compensated jumps with Exp(delta)
/// marks arriving at the intensity of the counting process.
struct HawkesForwardParams {
    double c = 0.0;     // drift rate, 1/day
    double sigma = 0.0; // diffusion coefficient of the factor
    double lambda0 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 1.0;
    double x0 = 0.0;
    double jump_mass = 1.0;
    /// marked: the intensity jumps by alpha * mark and decays toward 0
    /// (the affine specification); unmarked: jumps by alpha and decays
    /// toward the constant baseline lambda0 (the likelihood
    /// specification).
    bool marked = true;
};

/// Equivalent-measure change: eta prices diffusion risk, theta tilts the
/// jump measure exponentially (theta > -delta of the tilted model).
struct MeasureChange {
    double eta = 0.0;
    double theta = 0.0;
};

enum class Measure { P, Q };

struct SimEvent {
    double time = 0.0;
    double mark = 0.0;
    double intensity_after = 0.0;
};

struct SimPath {
    std::vector<double> times;
    std::vector<double> states;
    std::vector<double> intensities; // per grid time where applicable
    std::vector<SimEvent> events;
    std::uint64_t seed = 0;
    double truncation_fraction = 0.0; // share of Euler steps hitting the positivity floor
    bool stability_warning = false;
};

inline constexpr std::uint64_t kEventSafetyCap = 10'000'000;

/// Intensity of the exponential-kernel counting process at time t given
/// the level `lam` held at time `t0` (just after the last event).
inline double decay_intensity(const HawkesForwardParams& p, double lam, double t0, double t) {
    double base = p.marked ? 0.0 : p.lambda0;
    return base + (lam - base) * std::exp(-p.beta * (t - t0));
}

/// Ogata thinning simulation of the self-exciting counting process.
/// Between events the intensity decays exponentially (toward zero for
/// the marked variant, toward the baseline for the unmarked one); at an
/// event it jumps by alpha * mark (marked) or alpha (unmarked). Marks
/// are Exp(delta). The event rate is intensity * jump_mass.
inline SimPath simulate_hawkes(const HawkesForwardParams& p, double horizon, std::uint64_t seed,
                               std::uint64_t event_cap = kEventSafetyCap) {
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (!(p.beta > 0.0) || !(p.lambda0 > 0.0) || p.alpha < 0.0)
        throw ValidationError("invalid intensity parameters");
    SimPath path;
    path.seed = seed;
    if (p.marked && p.delta > 0.0 && !(p.beta - p.alpha / p.delta > 0.0))
        path.stability_warning = true;

    Rng rng(seed);
    double t = 0.0;
    double lam = p.lambda0; // intensity just after time t
    while (true) {
        double bound = lam * p.jump_mass;
        if (!(bound > 0.0)) break;
        double step = rng.exponential(bound);
        double cand = t + step;
        if (cand > horizon) break;
        double lam_at = decay_intensity(p, lam, t, cand);
        double u = rng.uniform();
        t = cand;
        lam = lam_at;
        if (u * bound <= lam_at * p.jump_mass) {
            double mark = p.delta > 0.0 ? rng.exponential(p.delta) : 0.0;
            lam += p.marked ? p.alpha * mark : p.alpha;
            path.events.push_back({t, mark, lam});
            if (path.events.size() > event_cap)
                throw ExplosionError("event count exceeded the safety cap");
        }
    }
    return path;
}

/// Full-truncation Euler scheme for the branching diffusion. Jump counts
/// per step are Poisson with rate Y+ * jump_mass * dt; the compensator
/// contributes the explicit drift -gamma * Y+ * jump_mass / delta * dt.
/// The state is floored at zero after each update and the share of steps
/// where the floor was active is reported.
inline SimPath simulate_cbi(const CBIParams& p, double horizon, double dt, std::uint64_t seed) {
    if (!(horizon > 0.0) || !(dt > 0.0)) throw ValidationError("horizon and dt must be positive");
    if (p.gamma > 0.0 && !(p.delta > 0.0))
        throw ValidationError("jump scale requires a positive mark rate");
    SimPath path;
    path.seed = seed;
    Rng rng(seed);
    auto n_steps = std::size_t(std::ceil(horizon / dt - 1e-12));
    path.times.reserve(n_steps + 1);
    path.states.reserve(n_steps + 1);
    double y = std::max(p.y0, 0.0);
    path.times.push_back(0.0);
    path.states.push_back(y);
    std::size_t floored = 0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        double t0 = double(k) * dt;
        double h = std::min(dt, horizon - t0);
        double yp = std::max(y, 0.0);
        double jump_sum = 0.0;
        if (p.gamma > 0.0 && p.delta > 0.0 && yp > 0.0) {
            std::uint64_t n_jumps = rng.poisson(yp * p.jump_mass * h);
            for (std::uint64_t j = 0; j < n_jumps; ++j) {
                double z = rng.exponential(p.delta);
                jump_sum += z;
                path.events.push_back({t0 + h, z, 0.0});
            }
        }
        double compensator = (p.gamma > 0.0 && p.delta > 0.0)
                                 ? p.gamma * yp * p.jump_mass / p.delta * h
                                 : 0.0;
        double diff = p.sigma * std::sqrt(yp * h) * rng.normal();
        y = y + p.a * (p.b - yp) * h + diff + p.gamma * jump_sum - compensator;
        if (y < 0.0) {
            y = 0.0;
            ++floored;
        }
        path.times.push_back(t0 + h);
        path.states.push_back(y);
    }
    path.truncation_fraction = n_steps ? double(floored) / double(n_steps) : 0.0;
    return path;
}

/// Branching mechanism of the exponential-jump specification:
/// psi(q) = a q + sigma^2 q^2 / 2 + mass (delta/(delta + q gamma) - 1 + q gamma/delta).
inline double cbi_branching_mechanism(const CBIParams& p, double q) {
    double psi = p.a * q + 0.5 * p.sigma * p.sigma * q * q;
    if (p.gamma > 0.0 && p.delta > 0.0)
        psi += p.jump_mass *
               (p.delta / (p.delta + q * p.gamma) - 1.0 + q * p.gamma / p.delta);
    return psi;
}

/// Joint Laplace transform E[exp(-xi Y(t) - theta integral Y ds)] via the
/// Riccati equation v' = theta - psi(v), v(0) = xi, with the integral of
/// v accumulated as an augmented state; immigration enters through
/// Phi(q) = a b q.
inline double cbi_laplace(const CBIParams& p, double xi, double theta, double t) {
    if (xi < 0.0 || theta < 0.0) throw ValidationError("xi and theta must be non-negative");
    if (!(t >= 0.0)) throw ValidationError("t must be non-negative");
    if (t == 0.0) return std::exp(-p.y0 * xi);

    using state_type = std::array<double, 2>;
    state_type s{xi, 0.0};
    auto system = [&p, theta](const state_type& x, state_type& dxdt, double) {
        dxdt[0] = theta - cbi_branching_mechanism(p, x[0]);
        dxdt[1] = x[0];
    };
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<state_type>>(1e-12, 1e-9);
    try {
        ode::integrate_adaptive(stepper, system, s, 0.0, t, std::min(t, 0.01));
    } catch (const std::exception& e) {
        throw NumericalError(std::string("Riccati integration failed: ") + e.what());
    }
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
        throw NumericalError("Riccati integration diverged");
    return std::exp(-p.y0 * s[0] - p.a * p.b * s[1]);
}

/// Expected value of z (e^{-theta z} - 1) under the exponential jump
/// measure with the given rate and total mass, in closed form.
inline double exponential_tilt_integral(double delta, double mass, double theta) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    if (!(theta > -delta)) throw ValidationError("theta must exceed -delta");
    double shifted = delta + theta;
    return mass * (delta / (shifted * shifted) - 1.0 / delta);
}

/// Parameter map to the equivalent measure: the drift picks up the
/// diffusion risk premium and the jump-tilt integral, the immigration
/// level is rescaled to keep a*b invariant, and the jump measure becomes
/// (rate delta + theta, mass scaled by delta/(delta + theta)).
inline CBIParams change_measure_cbi(const CBIParams& p, const MeasureChange& mc) {
    CBIParams q = p;
    double tilt = p.gamma > 0.0 ? exponential_tilt_integral(p.delta, p.jump_mass, mc.theta) : 0.0;
    if (p.gamma > 0.0 && !(mc.theta > -p.delta))
        throw ValidationError("theta must exceed -delta");
    q.a = p.a - p.sigma * mc.eta - tilt;
    if (q.a == 0.0) {
        if (p.b != 0.0) throw NumericalError("immigration map is singular at zero drift");
        q.b = 0.0;
    } else {
        q.b = p.a * p.b / q.a;
    }
    if (p.gamma > 0.0) {
        q.delta = p.delta + mc.theta;
        q.jump_mass = p.jump_mass * p.delta / (p.delta + mc.theta);
    }
    return q;
}

/// Same tilt for the self-exciting factor: only the drift and the jump
/// measure change; sigma, alpha, beta are preserved.
inline HawkesForwardParams change_measure_hawkes(const HawkesForwardParams& p,
                                                 const MeasureChange& mc) {
    if (!(mc.theta > -p.delta)) throw ValidationError("theta must exceed -delta");
    HawkesForwardParams q = p;
    double tilt = exponential_tilt_integral(p.delta, p.jump_mass, mc.theta);
    q.c = p.c - p.sigma * mc.eta - tilt;
    q.delta = p.delta + mc.theta;
    q.jump_mass = p.jump_mass * p.delta / (p.delta + mc.theta);
    return q;
}

using ForwardFactorModel = std::variant<CBIParams, HawkesForwardParams>;

/// Simulates a forward factor under the historical or risk-neutral
/// measure. Under Q the drift is forced to zero (local-martingale
/// dynamics); everything else follows the model's simulator. For the
/// Hawkes factor the intensity is simulated exactly by thinning and the
/// factor by Euler with per-step jump aggregation and the exact
/// compensator drift -intensity * jump_mass / delta.
inline SimPath simulate_forward_factor(const ForwardFactorModel& model, Measure measure,
                                       double horizon, double dt, std::uint64_t seed) {
    if (std::holds_alternative<CBIParams>(model)) {
        CBIParams p = std::get<CBIParams>(model);
        if (measure == Measure::Q) p.a = 0.0;
        return simulate_cbi(p, horizon, dt, seed);
    }

    HawkesForwardParams p = std::get<HawkesForwardParams>(model);
    if (measure == Measure::Q) p.c = 0.0;
    SimPath events = simulate_hawkes(p, horizon, derive_seed(seed, 0));
    Rng rng(derive_seed(seed, 1));

    SimPath path;
    path.seed = seed;
    path.events = events.events;
    path.stability_warning = events.stability_warning;
    auto n_steps = std::size_t(std::ceil(horizon / dt - 1e-12));
    double x = std::max(p.x0, 0.0);
    path.times.push_back(0.0);
    path.states.push_back(x);
    path.intensities.push_back(p.lambda0);

    std::size_t ev = 0;
    double lam_t = 0.0, lam_level = p.lambda0;
    std::size_t floored = 0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        double t0 = double(k) * dt;
        double h = std::min(dt, horizon - t0);
        double lam_now = decay_intensity(p, lam_level, lam_t, t0);
        double xp = std::max(x, 0.0);
        double jump_sum = 0.0;
        while (ev < path.events.size() && path.events[ev].time <= t0 + h) {
            jump_sum += path.events[ev].mark;
            lam_t = path.events[ev].time;
            lam_level = path.events[ev].intensity_after;
            ++ev;
        }
        double compensator = p.delta > 0.0 ? lam_now * p.jump_mass / p.delta * h : 0.0;
        double diff = p.sigma * std::sqrt(xp * h) * rng.normal();
        x = x - p.c * xp * h + diff + jump_sum - compensator;
        if (x < 0.0) {
            x = 0.0;
            ++floored;
        }
        path.times.push_back(t0 + h);
        path.states.push_back(x);
        path.intensities.push_back(decay_intensity(p, lam_level, lam_t, t0 + h));
    }
    path.truncation_fraction = n_steps ? double(floored) / double(n_steps) : 0.0;
    return path;
}

/// Delivery-period average of a forward snapshot: trapezoidal weights on
/// the maturity grid restricted to [t1, t2]; both endpoints must be grid
/// members.
inline double futures_from_forward(std::span<const double> maturities,
                                   std::span<const double> values, double t1, double t2) {
    if (maturities.size() != values.size() || maturities.size() < 2)
        throw ValidationError("maturity and value grids must match and have >= 2 points");
    if (!(t1 < t2)) throw ValidationError("t1 must precede t2");
    constexpr double tol = 1e-9;
    std::size_t lo = maturities.size(), hi = maturities.size();
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (i > 0 && !(maturities[i] > maturities[i - 1]))
            throw ValidationError("maturity grid must be strictly increasing");
        if (std::abs(maturities[i] - t1) <= tol) lo = i;
        if (std::abs(maturities[i] - t2) <= tol) hi = i;
    }
    if (lo >= maturities.size() || hi >= maturities.size() || lo >= hi)
        throw ValidationError("delivery window endpoints are not on the maturity grid");
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        acc += 0.5 * (values[i] + values[i + 1]) * (maturities[i + 1] - maturities[i]);
    return acc / (t2 - t1);
}

} // namespace pfc
