// Damped Newton iteration with a finite-difference Jacobian, for the small
// square systems of this library (equilibrium refinement, crossing
// refinement). Step halving kicks in when the residual grows or when a trial
// point leaves the domain of f.
#ifndef MAGROD_NEWTON_HPP
#define MAGROD_NEWTON_HPP

#include <cmath>
#include <sstream>

#include "magrod/core.hpp"

namespace magrod {

struct NewtonConfig {
    double tol = 1e-12;   // on the max-norm of the residual
    int max_iter = 50;
    int max_backtrack = 8;
};

template <int N, class F>
Eigen::Matrix<double, N, 1> newton_solve(F&& f,
                                         const Eigen::Matrix<double, N, 1>& x0,
                                         const NewtonConfig& cfg = {}) {
    using VecN = Eigen::Matrix<double, N, 1>;
    using MatN = Eigen::Matrix<double, N, N>;
    const double fd = std::sqrt(std::numeric_limits<double>::epsilon());

    VecN x = x0;
    VecN r = f(x);
    double rn = r.template lpNorm<Eigen::Infinity>();

    for (int it = 0; it < cfg.max_iter; ++it) {
        if (rn <= cfg.tol) return x;

        MatN jac;
        for (int j = 0; j < N; ++j) {
            const double h = fd * std::max(1.0, std::abs(x[j]));
            VecN lo = x, hi = x;
            lo[j] -= h;
            hi[j] += h;
            jac.col(j) = (f(hi) - f(lo)) / (2.0 * h);
        }

        Eigen::FullPivLU<MatN> lu(jac);
        lu.setThreshold(1e-13);
        if (!lu.isInvertible()) {
            std::ostringstream os;
            os << "Jacobian numerically singular at iteration " << it
               << ", residual " << rn;
            throw SingularJacobian(os.str());
        }
        const VecN dx = lu.solve(-r);

        // Backtrack on residual growth or on domain errors from f.
        double lam = 1.0;
        bool moved = false;
        for (int bt = 0; bt <= cfg.max_backtrack; ++bt) {
            const VecN xt = x + lam * dx;
            try {
                const VecN rt = f(xt);
                const double rtn = rt.template lpNorm<Eigen::Infinity>();
                if (rtn < rn || rtn <= cfg.tol) {
                    x = xt;
                    r = rt;
                    rn = rtn;
                    moved = true;
                    break;
                }
            } catch (const Error&) {
                // trial point outside the domain; shorten the step
            }
            lam *= 0.5;
        }
        if (!moved) {
            // Take the shortest step even if the residual did not drop;
            // Newton sometimes needs to pass through a ridge.
            const VecN xt = x + lam * dx;
            try {
                r = f(xt);
                x = xt;
                rn = r.template lpNorm<Eigen::Infinity>();
            } catch (const Error& e) {
                std::ostringstream os;
                os << "no admissible Newton step at iteration " << it << " ("
                   << e.name() << ")";
                throw NoConvergence(os.str());
            }
        }
    }
    if (rn <= cfg.tol) return x;
    std::ostringstream os;
    os << "Newton stalled after " << cfg.max_iter
       << " iterations, residual " << rn << " > tol " << cfg.tol;
    throw NoConvergence(os.str());
}

} // namespace magrod

#endif
