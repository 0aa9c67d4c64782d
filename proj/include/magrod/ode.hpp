// Adaptive Dormand-Prince 5(4) integration with a 4th-order continuous
// extension, after Hairer, Norsett & Wanner ("Solving ODE I", DOPRI5).
// Templated on the state dimension so the same kernel drives the 4D flow and
// the 20D variational system of the shooting code. Integration runs forward
// or backward depending on the sign of t1 - t0.
#ifndef MAGROD_ODE_HPP
#define MAGROD_ODE_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "magrod/core.hpp"

namespace magrod {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    bool dense_output = true;
    long max_steps = 2000000;
};

// Dense solution on [t0, t1]: per accepted step the five interpolation
// vectors of the order-4 continuous extension.
template <int N>
class Trajectory {
public:
    using VecN = Eigen::Matrix<double, N, 1>;

    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    const VecN& y_begin() const { return y_begin_; }
    const VecN& y_end() const { return y_end_; }
    std::size_t steps() const { return node_t_.empty() ? 0 : node_t_.size() - 1; }

    // Accepted step nodes (including both endpoints).
    const std::vector<double>& times() const { return node_t_; }
    const std::vector<VecN>& states() const { return node_y_; }

    // Evaluate anywhere inside the integration span.
    VecN eval(double t) const {
        if (node_t_.size() < 2) return y_begin_;
        const bool fwd = t_end_ >= t_begin_;
        const double lo = fwd ? t_begin_ : t_end_;
        const double hi = fwd ? t_end_ : t_begin_;
        const double tol = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
        if (t < lo - tol || t > hi + tol) {
            std::ostringstream os;
            os << "dense evaluation at t = " << t << " outside ["
               << t_begin_ << ", " << t_end_ << "]";
            throw std::out_of_range(os.str());
        }
        // Locate the step containing t.
        std::size_t k;
        if (fwd) {
            k = std::upper_bound(node_t_.begin(), node_t_.end(), t) -
                node_t_.begin();
        } else {
            k = std::upper_bound(node_t_.begin(), node_t_.end(), t,
                                 std::greater<double>()) -
                node_t_.begin();
        }
        if (k == 0) k = 1;
        if (k >= node_t_.size()) k = node_t_.size() - 1;
        const std::size_t i = k - 1;
        const double h = node_t_[k] - node_t_[i];
        const double th = (h != 0.0) ? (t - node_t_[i]) / h : 0.0;
        const double th1 = 1.0 - th;
        const auto& r = cont_[i];
        return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
    }

    // Internal: used by integrate().
    void reset(double t0, const VecN& y0) {
        t_begin_ = t_end_ = t0;
        y_begin_ = y_end_ = y0;
        node_t_.assign(1, t0);
        node_y_.assign(1, y0);
        cont_.clear();
    }
    void push_step(double t_new, const VecN& y_new,
                   const std::array<VecN, 5>& rcont, bool keep_dense) {
        t_end_ = t_new;
        y_end_ = y_new;
        node_t_.push_back(t_new);
        node_y_.push_back(y_new);
        if (keep_dense)
            cont_.push_back(rcont);
        else  // degrade to linear interpolation between nodes
            cont_.push_back({rcont[0], rcont[1], VecN::Zero(), VecN::Zero(),
                             VecN::Zero()});
    }

private:
    double t_begin_ = 0.0, t_end_ = 0.0;
    VecN y_begin_ = VecN::Zero(), y_end_ = VecN::Zero();
    std::vector<double> node_t_;
    std::vector<VecN> node_y_;
    std::vector<std::array<VecN, 5>> cont_;
};

namespace detail {

// Butcher tableau of DOPRI5 (RK5(4)7M), FSAL.
inline constexpr double dp_c2 = 1.0 / 5.0, dp_c3 = 3.0 / 10.0,
                        dp_c4 = 4.0 / 5.0, dp_c5 = 8.0 / 9.0;
inline constexpr double dp_a21 = 1.0 / 5.0;
inline constexpr double dp_a31 = 3.0 / 40.0, dp_a32 = 9.0 / 40.0;
inline constexpr double dp_a41 = 44.0 / 45.0, dp_a42 = -56.0 / 15.0,
                        dp_a43 = 32.0 / 9.0;
inline constexpr double dp_a51 = 19372.0 / 6561.0, dp_a52 = -25360.0 / 2187.0,
                        dp_a53 = 64448.0 / 6561.0, dp_a54 = -212.0 / 729.0;
inline constexpr double dp_a61 = 9017.0 / 3168.0, dp_a62 = -355.0 / 33.0,
                        dp_a63 = 46732.0 / 5247.0, dp_a64 = 49.0 / 176.0,
                        dp_a65 = -5103.0 / 18656.0;
inline constexpr double dp_a71 = 35.0 / 384.0, dp_a73 = 500.0 / 1113.0,
                        dp_a74 = 125.0 / 192.0, dp_a75 = -2187.0 / 6784.0,
                        dp_a76 = 11.0 / 84.0;
// Error coefficients b - b_hat.
inline constexpr double dp_e1 = 71.0 / 57600.0, dp_e3 = -71.0 / 16695.0,
                        dp_e4 = 71.0 / 1920.0, dp_e5 = -17253.0 / 339200.0,
                        dp_e6 = 22.0 / 525.0, dp_e7 = -1.0 / 40.0;
// Dense-output coefficients.
inline constexpr double dp_d1 = -12715105075.0 / 11282082432.0,
                        dp_d3 = 87487479700.0 / 32700410799.0,
                        dp_d4 = -10690763975.0 / 1880347072.0,
                        dp_d5 = 701980252875.0 / 199316789632.0,
                        dp_d6 = -1453857185.0 / 822651844.0,
                        dp_d7 = 69997945.0 / 29380423.0;

} // namespace detail

// Integrate dy/dt = field(t, y) from t0 to t1. `field` must be callable as
// field(double, const VecN&) -> VecN; domain errors it throws (derived from
// magrod::Error) are treated as "step reached forbidden territory": the step
// is retried smaller, and only if the step size underflows is the failure
// reported as SingularityReached.
template <int N, class Field>
Trajectory<N> integrate(Field&& field,
                        const Eigen::Matrix<double, N, 1>& y0, double t0,
                        double t1, const IntegratorConfig& cfg = {}) {
    using VecN = Eigen::Matrix<double, N, 1>;
    using namespace detail;

    if (!(cfg.rel_tol > 0.0) || cfg.rel_tol > 1e-2 || !(cfg.abs_tol > 0.0) ||
        cfg.abs_tol > 1e-2)
        throw std::invalid_argument(
            "integrator tolerances must lie in (0, 1e-2]");
    if (!(cfg.max_step > 0.0))
        throw std::invalid_argument("max_step must be positive");

    Trajectory<N> traj;
    traj.reset(t0, y0);
    if (t1 == t0) return traj;

    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double uround = std::numeric_limits<double>::epsilon();

    double t = t0;
    VecN y = y0;
    VecN k1 = field(t, y);

    // Starting step size (Hairer's HINIT, order 5).
    double h;
    {
        double dnf = 0.0, dny = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            dnf += sq(k1[i] / sc);
            dny += sq(y[i] / sc);
        }
        double h0 = (dnf <= 1e-10 || dny <= 1e-10)
                        ? 1e-6
                        : 0.01 * std::sqrt(dny / dnf);
        h0 = std::min(h0, cfg.max_step);
        double h1 = h0;
        try {
            const VecN y1 = y + dir * h0 * k1;
            const VecN f1 = field(t + dir * h0, y1);
            double der2 = 0.0;
            for (int i = 0; i < N; ++i) {
                const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
                der2 += sq((f1[i] - k1[i]) / sc);
            }
            der2 = std::sqrt(der2) / h0;
            const double der12 = std::max(der2, std::sqrt(dnf));
            h1 = (der12 <= 1e-15)
                     ? std::max(1e-6, h0 * 1e-3)
                     : std::pow(0.01 / der12, 0.2);
        } catch (const Error&) {
            h1 = h0 * 1e-2;  // probe left the domain; start very small
        }
        h = std::min({100.0 * h0, h1, cfg.max_step, std::abs(t1 - t0)});
    }

    const double safe = 0.9, beta = 0.04;
    const double expo1 = 0.2 - beta * 0.75;
    double facold = 1e-4;
    bool last = false;
    long nstep = 0;

    while (true) {
        if (std::abs(t - t1) <= uround * std::max(std::abs(t), std::abs(t1)))
            break;
        if (++nstep > cfg.max_steps) {
            std::ostringstream os;
            os << "step count exceeded " << cfg.max_steps << " at t = " << t;
            throw StepUnderflow(os.str());
        }
        if (std::abs(h) <= uround * std::abs(t) * 16.0 || h < 1e-300) {
            std::ostringstream os;
            os << "step size underflow at t = " << t;
            throw StepUnderflow(os.str());
        }
        if ((t + dir * h - t1) * dir > 0.0) {
            h = std::abs(t1 - t);
            last = true;
        }

        const double hs = dir * h;  // signed step
        VecN k2, k3, k4, k5, k6, k7, ynew;
        bool domain_hit = false;
        try {
            k2 = field(t + dp_c2 * hs, y + hs * (dp_a21 * k1));
            k3 = field(t + dp_c3 * hs, y + hs * (dp_a31 * k1 + dp_a32 * k2));
            k4 = field(t + dp_c4 * hs,
                       y + hs * (dp_a41 * k1 + dp_a42 * k2 + dp_a43 * k3));
            k5 = field(t + dp_c5 * hs,
                       y + hs * (dp_a51 * k1 + dp_a52 * k2 + dp_a53 * k3 +
                                 dp_a54 * k4));
            k6 = field(t + hs,
                       y + hs * (dp_a61 * k1 + dp_a62 * k2 + dp_a63 * k3 +
                                 dp_a64 * k4 + dp_a65 * k5));
            ynew = y + hs * (dp_a71 * k1 + dp_a73 * k3 + dp_a74 * k4 +
                             dp_a75 * k5 + dp_a76 * k6);
            k7 = field(t + hs, ynew);
        } catch (const Error& err) {
            // A trial stage left the field's domain. Shrink and retry; only
            // give up when the step underflows, which means the solution
            // itself runs into the singular set.
            domain_hit = true;
            if (h < 1e-12 * std::max(1.0, std::abs(t))) {
                std::ostringstream os;
                os << "solution reached the field's singular set near t = "
                   << t << " (" << err.name() << ": " << err.what() << ")";
                throw SingularityReached(os.str());
            }
        }
        if (domain_hit) {
            h *= 0.5;
            last = false;
            continue;
        }

        const VecN erry = hs * (dp_e1 * k1 + dp_e3 * k3 + dp_e4 * k4 +
                                dp_e5 * k5 + dp_e6 * k6 + dp_e7 * k7);
        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::max(
                                  std::abs(y[i]), std::abs(ynew[i]));
            err += sq(erry[i] / sc);
        }
        err = std::sqrt(err / N);

        const double fac11 = std::pow(std::max(err, 1e-32), expo1);
        if (err <= 1.0) {
            // Accept; build the continuous extension.
            facold = std::max(err, 1e-4);
            std::array<VecN, 5> rcont;
            const VecN ydiff = ynew - y;
            const VecN bspl = hs * k1 - ydiff;
            rcont[0] = y;
            rcont[1] = ydiff;
            rcont[2] = bspl;
            rcont[3] = ydiff - hs * k7 - bspl;
            rcont[4] = hs * (dp_d1 * k1 + dp_d3 * k3 + dp_d4 * k4 +
                             dp_d5 * k5 + dp_d6 * k6 + dp_d7 * k7);
            t = last ? t1 : t + hs;
            y = ynew;
            k1 = k7;  // FSAL
            traj.push_step(t, y, rcont, cfg.dense_output);

            // h/fac with fac in [0.1, 5] caps growth at 10x per step.
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(0.1, std::min(5.0, fac / safe));
            h = std::min(h / fac, cfg.max_step);
            if (last && std::abs(t - t1) >
                            uround * std::max(std::abs(t), std::abs(t1)))
                last = false;
        } else {
            h = h / std::min(10.0, fac11 / safe);
            last = false;
        }
    }
    return traj;
}

} // namespace magrod

#endif
