// Melnikov machinery: the generic engine computes
//   M(kappa) = int grad K(x^h(t;kappa)) . J grad H1(x^h(t;kappa)) dt
// along a homoclinic family, plus the rod instantiation with hand-derived
// gradients of the H0/H1 split and of the extra integral K = F.
//
// The gradients are written out analytically rather than by finite
// differences: along the family theta decays like sech(delta t), and the
// cot(theta)-type factors amplify FD noise exponentially in |t| while the
// exact products stay bounded (the unbounded pieces of -K_pp H1_ps and
// -K_pt H1_th cancel identically).
#ifndef MAGROD_MELNIKOV_HPP
#define MAGROD_MELNIKOV_HPP

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "magrod/analytic.hpp"
#include "magrod/core.hpp"
#include "magrod/model.hpp"
#include "magrod/quadrature.hpp"

namespace magrod {

struct MelnikovProblem {
    std::function<Vec4(const Vec4&)> grad_H0;
    std::function<Vec4(const Vec4&)> grad_H1;
    std::function<Vec4(const Vec4&)> grad_K;
    std::function<Vec4(double, double)> family;  // (t, kappa) -> state
    std::array<double, 2> kappa_domain{0.0, 2.0 * pi};
};

struct MelnikovZero {
    double kappa;
    double dM;    // central-difference estimate of dM/dkappa
    bool simple;
};

struct MelnikovResult {
    std::vector<double> kappa_grid;
    std::vector<double> M_values;
    std::vector<MelnikovZero> zeros;
};

// Integrand of M(kappa) at time t. Non-finite values are taken as 0: they
// can only arise where the family has collapsed onto the saddle (far tail),
// and the exact integrand tends to 0 there.
inline double melnikov_integrand(const MelnikovProblem& pr, double t,
                                 double kappa) {
    try {
        const Vec4 x = pr.family(t, kappa);
        const Vec4 gk = pr.grad_K(x);
        const Vec4 g1 = pr.grad_H1(x);
        // grad K . J grad H1 with J the canonical symplectic matrix
        const double v = gk[0] * g1[2] + gk[1] * g1[3] - gk[2] * g1[0] -
                         gk[3] * g1[1];
        return std::isfinite(v) ? v : 0.0;
    } catch (const Error&) {
        return 0.0;  // domain error at the saddle limit: contributes nothing
    }
}

inline double melnikov(const MelnikovProblem& pr, double kappa,
                       const QuadratureConfig& qcfg) {
    const auto g = [&](double t) { return melnikov_integrand(pr, t, kappa); };
    return quad_realline(g, qcfg).value;
}

namespace detail {

struct RodGradients {
    double alpha, mu, nu, gamma_hat;

    Vec4 h0(const Vec4& x) const {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        const double sr = std::sqrt(mu - 2.0 * nu * x[3]);
        Vec4 g;
        g[0] = (x[3] - c) * (1.0 - x[3] * c) / (s * s * s) - alpha * s +
               c * cp * sr;
        g[1] = -s * sp * sr;
        g[2] = x[2];
        g[3] = (x[3] - c) / (s * s) - nu * s * cp / sr;
        return g;
    }

    Vec4 h1(const Vec4& x) const {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        const double r = mu - 2.0 * nu * x[3];
        const double sr = std::sqrt(r);
        Vec4 g;
        g[0] = gamma_hat * (-alpha * s * c + (c * c - s * s) * cp * sr +
                            s * c * cp * cp * r / alpha);
        g[1] = gamma_hat * (-s * c * sp * sr - s * s * cp * sp * r / alpha);
        g[2] = 0.0;
        g[3] = -1.0 -
               gamma_hat * nu * (s * c * cp / sr + s * s * cp * cp / alpha);
        return g;
    }

    Vec4 k(const Vec4& x) const {
        const double s = std::sin(x[0]), c = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        const double sr = std::sqrt(mu - 2.0 * nu * x[3]);
        const double bracket = x[2] * sp - cp * (1.0 - x[3] * c) / s;
        Vec4 g;
        g[0] = -nu * s / alpha + sr * cp * (x[3] - c) / (alpha * s * s);
        g[1] = -(sr / alpha) * (x[2] * cp + sp * (1.0 - x[3] * c) / s);
        g[2] = -(sr / alpha) * sp;
        g[3] = 1.0 + nu * bracket / (alpha * sr) - sr * cp * c / (alpha * s);
        return g;
    }
};

} // namespace detail

// Instantiate the Melnikov problem for the rod: H0/H1 the displayed split
// with gamma = eps * gamma_hat scaled out, K = F, family = leading-order
// homoclinic pair with p_psi = 1 and kappa = psi0. Enforces the asymptotic
// regime 0 < nu << mu << 1 loosely as nu < mu/4, mu < 0.2.
inline MelnikovProblem rod_problem(const Params& p, int branch = 1) {
    homoclinic_delta(p.alpha);
    if (!(p.mu > 0.0) || !(p.mu < 0.2) || p.nu < 0.0 || !(p.nu < p.mu / 4.0)) {
        std::ostringstream os;
        os << "parameters mu = " << p.mu << ", nu = " << p.nu
           << " outside the regime 0 <= nu < mu/4, 0 < mu < 0.2";
        throw RegimeViolation(os.str());
    }
    const detail::RodGradients gr{p.alpha, p.mu, p.nu, p.gamma_hat};
    const double alpha = p.alpha;
    const int br = (branch >= 0) ? 1 : -1;

    MelnikovProblem pr;
    pr.grad_H0 = [gr](const Vec4& x) { return gr.h0(x); };
    pr.grad_H1 = [gr](const Vec4& x) { return gr.h1(x); };
    pr.grad_K = [gr](const Vec4& x) { return gr.k(x); };
    pr.family = [alpha, br](double t, double kappa) {
        return HomoclinicFamily(alpha, br, kappa).state(t).vec();
    };
    pr.kappa_domain = {0.0, 2.0 * pi};
    return pr;
}

// The gamma_hat-free reduction of the rod integrand,
//   (sqrt(mu - 2 nu p_psi)/alpha) (p_theta cos psi
//                                  + sin psi (1 - p_psi cos theta)/sin theta),
// equal pointwise to the generic integrand when gamma_hat = 0.
inline double rod_simplified_integrand(const Params& p,
                                       const HomoclinicFamily& fam,
                                       double t) {
    const State x = fam.state(t);
    const double s = std::sin(x.theta), c = std::cos(x.theta);
    const double sr = std::sqrt(p.mu - 2.0 * p.nu * x.p_psi);
    const double v = (sr / p.alpha) *
                     (x.p_theta * std::cos(x.psi) +
                      std::sin(x.psi) * (1.0 - x.p_psi * c) / s);
    return std::isfinite(v) ? v : 0.0;
}

// Sample M on a uniform grid over kappa_domain, bracket sign changes, and
// refine each zero to 1e-10 in kappa by a bisection-secant hybrid. A grid
// point counts as a zero outright when |M| is negligible against the grid
// maximum; a deep dip of |M| without a sign change is chased by trisection
// to catch tangential (non-simple) zeros.
inline MelnikovResult find_simple_zeros(const MelnikovProblem& pr,
                                        int grid_size = 64,
                                        const QuadratureConfig& qcfg = {}) {
    if (grid_size < 4)
        throw std::invalid_argument("find_simple_zeros: grid_size must be >= 4");
    const double lo = pr.kappa_domain[0], hi = pr.kappa_domain[1];
    if (!(hi > lo))
        throw std::invalid_argument("find_simple_zeros: empty kappa domain");

    MelnikovResult res;
    const auto M = [&](double kappa) { return melnikov(pr, kappa, qcfg); };
    const double dk = (hi - lo) / grid_size;
    for (int i = 0; i < grid_size; ++i) {
        res.kappa_grid.push_back(lo + i * dk);
        res.M_values.push_back(M(res.kappa_grid.back()));
    }
    double scale = 0.0;
    for (double m : res.M_values) scale = std::max(scale, std::abs(m));

    const double kappa_tol = 1e-10;
    std::vector<double> cand;

    // Grid points that are already zeros (within rounding of the scale).
    for (int i = 0; i < grid_size; ++i)
        if (std::abs(res.M_values[i]) <= 1e-12 * scale)
            cand.push_back(res.kappa_grid[i]);

    // Sign-change brackets, refined by bisection with secant acceleration.
    for (int i = 0; i + 1 < grid_size; ++i) {
        double a = res.kappa_grid[i], b = res.kappa_grid[i + 1];
        double fa = res.M_values[i], fb = res.M_values[i + 1];
        if (fa == 0.0 || fb == 0.0 || fa * fb > 0.0) continue;
        while (b - a > kappa_tol) {
            double m = (std::abs(fb - fa) > 0.0)
                           ? a - fa * (b - a) / (fb - fa)
                           : 0.5 * (a + b);
            const double margin = 0.01 * (b - a);
            if (!(m > a + margin) || !(m < b - margin)) m = 0.5 * (a + b);
            const double fm = M(m);
            if (fm == 0.0) {
                a = b = m;
                break;
            }
            if (fa * fm < 0.0) {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
        }
        cand.push_back(0.5 * (a + b));
    }

    // Deep |M| dips without a sign change: tangential zeros.
    for (int i = 1; i + 1 < grid_size; ++i) {
        const double m0 = res.M_values[i - 1], m1 = res.M_values[i],
                     m2 = res.M_values[i + 1];
        if (!(std::abs(m1) < std::abs(m0)) || !(std::abs(m1) < std::abs(m2)))
            continue;
        if (m0 * m1 < 0.0 || m1 * m2 < 0.0) continue;  // handled above
        if (std::abs(m1) > 1e-3 * scale) continue;     // shallow dip: no zero
        double a = res.kappa_grid[i - 1], b = res.kappa_grid[i + 1];
        while (b - a > kappa_tol) {
            const double u = a + (b - a) / 3.0, v = b - (b - a) / 3.0;
            if (std::abs(M(u)) < std::abs(M(v)))
                b = v;
            else
                a = u;
        }
        const double k = 0.5 * (a + b);
        if (std::abs(M(k)) <= 1e-9 * std::max(scale, 1e-300))
            cand.push_back(k);
    }

    std::sort(cand.begin(), cand.end());
    const double h = std::max(1e-6, 1e-5 * (hi - lo));
    for (double k : cand) {
        if (!res.zeros.empty() &&
            std::abs(k - res.zeros.back().kappa) < 1e-7 * (hi - lo))
            continue;
        const double dm = (M(k + h) - M(k - h)) / (2.0 * h);
        res.zeros.push_back({k, dm, std::abs(dm) > 1e-6 * scale});
    }
    return res;
}

} // namespace magrod

#endif
