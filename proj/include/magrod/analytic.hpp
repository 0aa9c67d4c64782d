// Closed-form reference layer: the pair of homoclinic orbits of the
// degenerate (mu = nu = eps = gamma = 0) system, the hyperbolic equilibria of
// the mu > 0 integrable system with their eigenvalues, the amplitude
// Delta(alpha) of the leading Melnikov term, and that leading term itself.
// Everything here is an oracle for the numerical modules.
#ifndef MAGROD_ANALYTIC_HPP
#define MAGROD_ANALYTIC_HPP

#include <array>
#include <cmath>
#include <sstream>

#include "magrod/core.hpp"
#include "magrod/eigen4.hpp"
#include "magrod/model.hpp"

namespace magrod {

// delta = sqrt(alpha - 1/4): decay rate of the homoclinic orbit and real
// part of the saddle exponents in the degenerate limit. Requires the
// saddle-focus condition alpha > 1/4.
inline double homoclinic_delta(double alpha) {
    if (!(alpha > 0.25)) {
        std::ostringstream os;
        os << "alpha = " << alpha
           << " <= 1/4: the pole equilibrium is not a saddle focus and no "
              "homoclinic loop exists";
        throw NotSaddleFocus(os.str());
    }
    return std::sqrt(alpha - 0.25);
}

struct HomoclinicPoint {
    double theta;
    double p_theta;
    double psi;
};

// One orbit of the pair of homoclinic loops, selected by branch = +1
// (theta > 0) or -1 (theta < 0), with phase offset psi0 added to psi.
struct HomoclinicFamily {
    double alpha;
    int branch;
    double psi0;

    HomoclinicFamily(double alpha_, int branch_, double psi0_ = 0.0)
        : alpha(alpha_), branch(branch_), psi0(psi0_) {
        homoclinic_delta(alpha);  // validates alpha > 1/4
        if (branch != 1 && branch != -1)
            throw std::invalid_argument("homoclinic branch must be +1 or -1");
    }

    double delta() const { return std::sqrt(alpha - 0.25); }

    // theta(t) = branch * arccos(1 - (2 delta^2/alpha) sech^2(delta t)),
    // evaluated through asin of the half-angle, which keeps full precision
    // in the tails where arccos of 1-u loses half the digits.
    double theta(double t) const {
        const double d = delta();
        const double u = (2.0 * sq(d) / alpha) * sq(1.0 / std::cosh(d * t));
        return branch * 2.0 * std::asin(std::sqrt(0.5 * u));
    }

    // p_theta(t) = d(theta)/dt in closed form.
    double p_theta(double t) const {
        const double d = delta();
        const double sh = 1.0 / std::cosh(d * t);
        const double th = std::tanh(d * t);
        return -branch * 4.0 * sq(d) * sh * th /
               std::sqrt(4.0 * sq(d) * sq(th) + 1.0);
    }

    // psi(t) = t/2 + arctan(2 delta tanh(delta t)) + psi0.
    double psi(double t) const {
        const double d = delta();
        return 0.5 * t + std::atan(2.0 * d * std::tanh(d * t)) + psi0;
    }

    // The rewritten tail form sin(theta)/(1 + cos(theta)), i.e.
    // tan(theta/2), as a standalone expression. Agrees with the direct
    // theta(t) pointwise; the cross-check is a test invariant.
    double tan_half_theta(double t) const {
        const double d = delta();
        const double sh = 1.0 / std::cosh(d * t);
        const double th = std::tanh(d * t);
        return branch * 2.0 * d * sh / std::sqrt(4.0 * sq(d) * sq(th) + 1.0);
    }

    // Full 4D point of the leading-order family: p_psi is identically 1.
    State state(double t) const {
        return {theta(t), psi(t), p_theta(t), 1.0};
    }
};

inline HomoclinicPoint homoclinic_orbit(const HomoclinicFamily& fam,
                                        double t) {
    return {fam.theta(t), fam.p_theta(t), fam.psi(t)};
}

// A hyperbolic equilibrium with its spectral furniture: eigenvalues, the
// 2x4 left-eigenvector frames L_s (rows for the eigenvalues with negative
// real part) and L_u (positive real part), and the 4x2 right-eigenvector
// bases spanning the stable/unstable tangent planes. By biorthogonality
// L_s annihilates the unstable tangent plane, so ||L_s (x - state)|| -> 0
// as x approaches the local unstable manifold, and symmetrically for L_u.
struct Equilibrium {
    State state;
    Params params;
    std::array<Complex, 4> eigenvalues;   // Re desc, Im desc
    Eigen::Matrix<double, 2, 4> stable_frame;    // L_s
    Eigen::Matrix<double, 2, 4> unstable_frame;  // L_u
    Eigen::Matrix<double, 4, 2> stable_basis;    // right, Re(lambda) < 0
    Eigen::Matrix<double, 4, 2> unstable_basis;  // right, Re(lambda) > 0
};

namespace detail {

// Classify an eigen-decomposition as saddle-focus (a+bi, a-bi, -a+bi,
// -a-bi with a, b > 0) and fill the frames/bases of eq from it.
inline void attach_frames(Equilibrium& eq, const Eigen4& eg) {
    const double a = eg.values[0].real();
    const double b = eg.values[0].imag();
    const auto close = [](Complex x, Complex y) {
        return std::abs(x - y) <= 1e-8 * (1.0 + std::abs(x));
    };
    const bool focus =
        a > 0.0 && b > 0.0 && close(eg.values[1], std::conj(eg.values[0])) &&
        close(eg.values[2], Complex(-a, b)) &&
        close(eg.values[3], Complex(-a, -b));
    if (!focus) {
        std::ostringstream os;
        os << "spectrum is not a saddle-focus quadruple +-a +- bi: ";
        for (const auto& v : eg.values)
            os << "(" << v.real() << ", " << v.imag() << ") ";
        throw NotSaddleFocus(os.str());
    }
    eq.eigenvalues = eg.values;
    // Rows 0 and 2 carry the +bi member of each pair; realify_pair fixes the
    // sign deterministically.
    eq.unstable_frame = realify_pair(eg.left.row(0).transpose());
    eq.stable_frame = realify_pair(eg.left.row(2).transpose());
    eq.unstable_basis = realify_pair(eg.right.col(0)).transpose();
    eq.stable_basis = realify_pair(eg.right.col(2)).transpose();
}

} // namespace detail

// The two closed-form equilibria of the eps = gamma = nu = 0 system,
//   (theta, psi, p_theta, p_psi)
//     = (+-arctan(sqrt(mu)/alpha), {0, pi}, 0, alpha/sqrt(alpha^2+mu)),
// with the closed-form eigenvalues +-sqrt(sqrt(alpha^2+mu) - 1/4) +- i/2
// attached. Frames come from the numerical eigen-decomposition of the
// Jacobian; the eigenvalue agreement between the two routes is a test.
inline std::array<Equilibrium, 2> hyperbolic_equilibria(double alpha,
                                                        double mu) {
    homoclinic_delta(alpha);  // alpha > 1/4
    if (!(mu > 0.0)) {
        std::ostringstream os;
        os << "mu = " << mu
           << " <= 0: the equilibrium pair exists only off the polar axis "
              "(mu > 0)";
        throw NoEquilibrium(os.str());
    }
    const double root = std::sqrt(sq(alpha) + mu);
    const double th = std::atan(std::sqrt(mu) / alpha);
    const double pp = alpha / root;
    const double a = std::sqrt(root - 0.25);
    const std::array<Complex, 4> lam = {Complex(a, 0.5), Complex(a, -0.5),
                                        Complex(-a, 0.5), Complex(-a, -0.5)};

    std::array<Equilibrium, 2> out;
    out[0].state = {th, 0.0, 0.0, pp};
    out[1].state = {-th, pi, 0.0, pp};
    for (auto& eq : out) {
        eq.params = Params::unperturbed(alpha, mu, 0.0);
        detail::attach_frames(eq, eigen4(jacobian(eq.state, eq.params)));
        eq.eigenvalues = lam;  // closed form wins in the oracle layer
    }
    return out;
}

// Delta(alpha) = 2 pi sech(pi / (2 sqrt(4 alpha - 1))): the closed form of
// the integral int [tan(theta^h/2) cos psi^h - p_theta^h sin psi^h] dt.
inline double delta_amplitude(double alpha) {
    const double d = homoclinic_delta(alpha);
    return 2.0 * pi / std::cosh(pi / (4.0 * d));
}

// Leading-order Melnikov function
//   M(psi0) = branch * (sqrt(mu - 2 nu) Delta(alpha) / alpha) sin psi0,
// accurate to O(mu).
inline double melnikov_leading(double psi0, double alpha, double mu,
                               double nu, int branch = 1) {
    if (branch != 1 && branch != -1)
        throw std::invalid_argument("melnikov branch must be +1 or -1");
    const double rad = mu - 2.0 * nu;
    if (!(rad > 0.0)) {
        std::ostringstream os;
        os << "mu - 2 nu = " << rad
           << " <= 0: the perturbed equilibria and their manifolds require "
              "mu > 2 nu";
        throw RegimeViolation(os.str());
    }
    return branch * std::sqrt(rad) * delta_amplitude(alpha) / alpha *
           std::sin(psi0);
}

} // namespace magrod

#endif
