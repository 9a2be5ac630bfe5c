#pragma once

// Dormand-Prince 5(4) integrator for complex-valued linear and nonlinear ODE
// systems y' = f(t, y), with the embedded 4th-order error estimate for step
// control and Hairer's continuous extension for dense output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "bth/errors.hpp"

namespace bth {

struct Dopri5Options {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.0;      ///< 0 means unbounded
    double initial_step = 0.0;  ///< 0 means automatic
    long max_steps = 50'000'000;
};

struct Dopri5Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

namespace dopri5 {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;

// 5th-order solution minus embedded 4th-order solution.
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Dense output coefficients (Hairer, Norsett & Wanner).
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace dopri5

/// Integrates y' = rhs(t, y) from t0 to t1 and reports the solution at every
/// entry of `out_times` (ascending, inside [t0, t1]) through
/// `observe(index, y)`. Output points are filled from the continuous
/// extension, so the step sequence does not depend on the output grid.
///
/// `rhs` has signature void(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt).
template <class Rhs, class Observer>
Dopri5Stats integrate_dopri5(Rhs&& rhs, double t0, double t1, const Eigen::VectorXcd& y0,
                             std::span<const double> out_times, Observer&& observe,
                             const Dopri5Options& opt) {
    using namespace dopri5;
    using Vec = Eigen::VectorXcd;

    if (!(t1 > t0)) throw InvalidInput("integrate_dopri5: t1 must exceed t0");
    if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0))
        throw InvalidInput("integrator: tolerances must be positive");

    const Eigen::Index n = y0.size();
    Vec y = y0, y1(n), ytmp(n), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), err(n);
    Vec r2(n), r3(n), r4(n), r5(n);
    Dopri5Stats stats;

    std::size_t next_out = 0;
    while (next_out < out_times.size() && out_times[next_out] <= t0) {
        observe(next_out, y);
        ++next_out;
    }

    const double span = t1 - t0;
    const double hmax = opt.max_step > 0.0 ? opt.max_step : span;

    rhs(t0, y, k1);
    ++stats.rhs_evals;

    // Starting step from the derivative scale (simplified Hairer heuristic).
    double h = opt.initial_step;
    if (!(h > 0.0)) {
        const double sc = opt.abs_tol + opt.rel_tol * y.cwiseAbs().maxCoeff();
        const double dnorm = k1.cwiseAbs().maxCoeff() / sc;
        h = dnorm > 1e-10 ? 0.01 / dnorm : 1e-6 * span;
        h = std::max(h, 1e-10 * span);
    }
    h = std::min(h, hmax);

    const auto error_norm = [&](const Vec& e, const Vec& ya, const Vec& yb) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sr =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(ya[i].real()), std::abs(yb[i].real()));
            const double si =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(ya[i].imag()), std::abs(yb[i].imag()));
            const double er = e[i].real() / sr;
            const double ei = e[i].imag() / si;
            acc += er * er + ei * ei;
        }
        return std::sqrt(acc / (2.0 * static_cast<double>(n)));
    };

    double t = t0;
    bool last_rejected = false;
    while (t < t1) {
        if (stats.accepted + stats.rejected >= opt.max_steps)
            throw NumericalFailure("integrator: exceeded the maximum number of steps");
        if (h < 1e-14 * std::max(std::abs(t), span))
            throw NumericalFailure("integrator: step size underflow at t = " + std::to_string(t) +
                                   " (stiff or invalid configuration)");
        bool final_step = false;
        if (t + h >= t1) {
            h = t1 - t;
            final_step = true;
        }

        ytmp = y + h * a21 * k1;
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double t_new = final_step ? t1 : t + h;
        rhs(t_new, ytmp, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t_new, y1, k7);
        stats.rhs_evals += 6;

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y1);
        if (!std::isfinite(en)) throw NumericalFailure("integrator: non-finite error estimate");

        if (en <= 1.0) {
            // Continuous extension on [t, t_new].
            r2 = y1 - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next_out < out_times.size() && out_times[next_out] <= t_new) {
                const double tt = out_times[next_out];
                if (tt == t_new) {
                    observe(next_out, y1);
                } else {
                    const double th = (tt - t) / h;
                    const double th1 = 1.0 - th;
                    ytmp = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                    observe(next_out, ytmp);
                }
                ++next_out;
            }

            t = t_new;
            y.swap(y1);
            k1.swap(k7);
            ++stats.accepted;

            double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h = std::min(h * fac, hmax);
            last_rejected = false;
        } else {
            ++stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
    }
    while (next_out < out_times.size()) {
        observe(next_out, y);
        ++next_out;
    }
    return stats;
}

}  // namespace bth
