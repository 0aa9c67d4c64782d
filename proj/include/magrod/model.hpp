// The reduced two-degree-of-freedom system of the magnetically loaded
// extensible rod, in Euler-angle canonical coordinates (theta, psi, p_theta,
// p_psi). The twist angle phi is cyclic and already reduced out; its constant
// momentum enters only through the dimensionless groups.
//
// All evaluations are pure functions of (State, Params).
#ifndef MAGROD_MODEL_HPP
#define MAGROD_MODEL_HPP

#include <cmath>
#include <sstream>

#include "magrod/core.hpp"

namespace magrod {

struct State {
    double theta;
    double psi;
    double p_theta;
    double p_psi;

    Vec4 vec() const { return Vec4(theta, psi, p_theta, p_psi); }
    static State from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
};

// Dimensionless parameter bundle. gamma and gamma_hat are stored together;
// use scaled() when the shear correction is slaved to eps (gamma = eps *
// gamma_hat), direct() when gamma stands on its own.
struct Params {
    double alpha = 0.5;
    double mu = 0.0;
    double nu = 0.0;
    double eps = 0.0;
    double gamma = 0.0;
    double gamma_hat = 0.0;

    // Angle-singularity cutoff for |sin theta|; evaluations below it refuse
    // to produce a value.
    double tol_sing = 1e-10;

    static Params direct(double alpha, double mu, double nu, double eps,
                         double gamma) {
        Params p;
        p.alpha = alpha;
        p.mu = mu;
        p.nu = nu;
        p.eps = eps;
        p.gamma = gamma;
        p.gamma_hat = (eps != 0.0) ? gamma / eps : 0.0;
        return p;
    }

    static Params scaled(double alpha, double mu, double nu, double eps,
                         double gamma_hat) {
        Params p;
        p.alpha = alpha;
        p.mu = mu;
        p.nu = nu;
        p.eps = eps;
        p.gamma_hat = gamma_hat;
        p.gamma = eps * gamma_hat;
        return p;
    }

    static Params unperturbed(double alpha, double mu, double nu) {
        return direct(alpha, mu, nu, 0.0, 0.0);
    }
};

// Dimensional rod and field constants. The wire current and field strength
// appear only through their product lambda.
struct PhysicalParams {
    double B;       // bending stiffness
    double Jshear;  // shear stiffness
    double Kaxial;  // axial stiffness
    double lambda;  // magnetic loading (current times field)
    double C1;      // integration constant fixed by boundary conditions
    double C2;      // force component along the field direction
    double p_phi;   // constant twisting moment of the cyclic angle
};

struct Scales {
    double momentum;  // p_phi: divides momenta
    double energy;    // p_phi^2 / B: divides the Hamiltonian
};

struct Nondim {
    Params params;
    Scales scales;
};

namespace detail {

// Common sub-expressions of one (state, params) evaluation. Guards the two
// domain restrictions: the polar singularity sin(theta)=0 and the magnetic
// radicand mu - 2 nu p_psi. The radicand may be exactly zero as long as
// nothing divides by its square root, i.e. whenever nu = 0; callers that do
// divide (the psi-dot term of the vector field) pass need_positive_radicand.
struct EvalCtx {
    double s, c;       // sin, cos of theta
    double sp, cp;     // sin, cos of psi
    double rad;        // mu - 2 nu p_psi
    double sqrad;      // sqrt(rad)
};

inline EvalCtx prepare(const State& x, const Params& p,
                       bool need_positive_radicand = false) {
    EvalCtx e;
    e.s = std::sin(x.theta);
    e.c = std::cos(x.theta);
    if (std::abs(e.s) <= p.tol_sing) {
        std::ostringstream os;
        os << "evaluation at theta = " << x.theta << " with |sin theta| = "
           << std::abs(e.s) << " <= tol_sing = " << p.tol_sing;
        throw SingularState(os.str());
    }
    e.rad = p.mu - 2.0 * p.nu * x.p_psi;
    if (e.rad < 0.0 || (need_positive_radicand && p.nu != 0.0 && e.rad == 0.0)) {
        std::ostringstream os;
        os << "mu - 2 nu p_psi = " << e.rad << " at p_psi = " << x.p_psi;
        throw NegativeRadicand(os.str());
    }
    e.sp = std::sin(x.psi);
    e.cp = std::cos(x.psi);
    e.sqrad = std::sqrt(e.rad);
    return e;
}

} // namespace detail

// Dimensionless Hamiltonian of the reduced system, perturbation terms
// included: eps switches on the magnetic torsion coupling, gamma the
// shear/extension correction.
inline double hamiltonian(const State& x, const Params& p) {
    const auto e = detail::prepare(x, p);
    const double m = (x.p_psi - e.c) / e.s;
    return 0.5 * sq(x.p_theta) + 0.5 * sq(m)
         + p.alpha * e.c * (1.0 + 0.5 * p.gamma * e.c)
         + (1.0 + p.gamma * e.c) * e.s * e.cp * e.sqrad
         + (p.gamma / (2.0 * p.alpha)) * sq(e.s) * sq(e.cp) * e.rad
         - p.eps * x.p_psi;
}

// First integral of the eps = gamma = 0 system; reduces to p_psi when the
// magnetic terms vanish (mu = nu = 0).
inline double first_integral(const State& x, const Params& p) {
    const auto e = detail::prepare(x, p);
    const double bracket =
        x.p_theta * e.sp - e.cp * (1.0 - x.p_psi * e.c) / e.s;
    return x.p_psi + (p.nu / p.alpha) * e.c
         - (e.sqrad / p.alpha) * bracket;
}

// Canonical vector field x-dot = J grad H, written out explicitly. The
// gradient-consistency test certifies this against finite differences of
// hamiltonian().
inline State vector_field(const State& x, const Params& p) {
    const auto e = detail::prepare(x, p, /*need_positive_radicand=*/true);
    const double s = e.s, c = e.c, sp = e.sp, cp = e.cp;
    const double s2 = sq(s), s3 = s2 * s;

    State d;
    d.theta = x.p_theta;

    d.psi = (x.p_psi - c) / s2 - p.eps;
    if (p.nu != 0.0) {
        d.psi -= p.nu * (1.0 + p.gamma * c) * s * cp / e.sqrad;
        d.psi -= (p.gamma * p.nu / p.alpha) * s2 * sq(cp);
    }

    d.p_theta = -(x.p_psi - c) * (1.0 - x.p_psi * c) / s3
              + p.alpha * s * (1.0 + p.gamma * c)
              - (c + p.gamma * (sq(c) - s2)) * cp * e.sqrad
              - (p.gamma / p.alpha) * s * c * sq(cp) * e.rad;

    d.p_psi = (1.0 + p.gamma * c) * s * sp * e.sqrad
            + (p.gamma / p.alpha) * s2 * cp * sp * e.rad;

    return d;
}

// Jacobian of the vector field by central differences, step
// cbrt(machine epsilon) * max(1, ||x||). Hand-coding the perturbed partials
// is not worth the risk; the two closed-form equilibrium matrices serve as
// the oracle.
inline Mat4 jacobian(const State& x, const Params& p) {
    const double h =
        std::cbrt(std::numeric_limits<double>::epsilon()) *
        std::max(1.0, x.vec().norm());
    Mat4 jac;
    for (int j = 0; j < 4; ++j) {
        Vec4 lo = x.vec(), hi = x.vec();
        lo[j] -= h;
        hi[j] += h;
        const Vec4 flo = vector_field(State::from_vec(lo), p).vec();
        const Vec4 fhi = vector_field(State::from_vec(hi), p).vec();
        jac.col(j) = (fhi - flo) / (2.0 * h);
    }
    return jac;
}

// Map dimensional constants to the dimensionless groups, and report the
// scales needed to convert states and energies:
//   p_bar = p / p_phi,  H_bar = H B / p_phi^2.
inline Nondim nondimensionalize(const PhysicalParams& ph) {
    if (ph.p_phi == 0.0)
        throw ZeroScale("p_phi = 0: dimensionless groups are undefined");
    if (!(ph.B > 0.0) || !(ph.Jshear > 0.0) || !(ph.Kaxial > 0.0))
        throw ZeroScale("stiffnesses B, Jshear, Kaxial must be positive");

    const double pp2 = sq(ph.p_phi);
    Nondim n;
    n.params = Params::direct(
        /*alpha=*/ph.B * ph.C2 / pp2,
        /*mu=*/sq(ph.B) * (2.0 * ph.C1 - sq(ph.C2)) / sq(pp2),
        /*nu=*/ph.lambda * sq(ph.B) / (pp2 * ph.p_phi),
        /*eps=*/ph.lambda * ph.B / (ph.Jshear * ph.p_phi),
        /*gamma=*/ph.C2 * (1.0 / ph.Kaxial - 1.0 / ph.Jshear));
    n.scales.momentum = ph.p_phi;
    n.scales.energy = pp2 / ph.B;
    return n;
}

} // namespace magrod

#endif
