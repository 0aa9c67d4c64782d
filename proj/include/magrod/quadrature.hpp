// Real-line quadrature for exponentially decaying integrands: the integral
// is truncated to [-T, T] and evaluated by a composite 16-point
// Gauss-Legendre rule (default) or tanh-sinh. The reported error bound adds
// the rule error (estimated by panel-count halving) to an exponential tail
// bound fitted from envelope probes; if the probed decay is slower than
// exponential the extrapolation is invalid and TailTooFat is thrown.
#ifndef MAGROD_QUADRATURE_HPP
#define MAGROD_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <sstream>

#include "magrod/core.hpp"

namespace magrod {

enum class QuadScheme { composite_gauss, tanh_sinh };

struct QuadratureConfig {
    double half_width = 50.0;  // T
    int node_count = 1024;
    QuadScheme scheme = QuadScheme::composite_gauss;
};

struct QuadResult {
    double value;
    double error_bound;  // rule estimate + fitted tail bound
};

namespace detail {

// 16-point Gauss-Legendre rule on [-1, 1] (positive abscissae; symmetric).
inline constexpr double gl16_x[8] = {
    0.09501250983763744018531934,
    0.28160355077925891323046050,
    0.45801677765722738634241944,
    0.61787624440264374844667176,
    0.75540440835500303389510119,
    0.86563120238783174388046790,
    0.94457502307323257607798842,
    0.98940093499164993259615417,
};
inline constexpr double gl16_w[8] = {
    0.18945061045506849628539672,
    0.18260341504492358886676366,
    0.16915651939500253818931208,
    0.14959598881657673208150173,
    0.12462897125553387205247628,
    0.09515851168249278480992510,
    0.06225352393864789286284384,
    0.02715245941175409485178057,
};

template <class G>
double composite_gauss(G&& g, double lo, double hi, int panels) {
    const double w = (hi - lo) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * w;
        const double half = 0.5 * w;
        double s = 0.0;
        for (int i = 0; i < 8; ++i)
            s += gl16_w[i] *
                 (g(mid - half * gl16_x[i]) + g(mid + half * gl16_x[i]));
        sum += half * s;
    }
    return sum;
}

template <class G>
double tanh_sinh(G&& g, double half_width, int nodes, int stride) {
    // u-grid truncated where the weight underflows for doubles.
    const double umax = 3.6;
    const int n = std::max(4, nodes / 2);
    const double hu = umax / n;
    double sum = 0.0;
    for (int j = -n; j <= n; j += stride) {
        const double u = j * hu;
        const double sh = 0.5 * pi * std::sinh(u);
        const double x = std::tanh(sh);
        const double w = 0.5 * pi * std::cosh(u) / sq(std::cosh(sh));
        sum += w * g(half_width * x);
    }
    return sum * half_width * hu * stride;
}

} // namespace detail

template <class G>
QuadResult quad_realline(G&& g, const QuadratureConfig& cfg = {}) {
    if (!(cfg.half_width > 0.0))
        throw std::invalid_argument("quadrature half_width must be positive");
    if (cfg.node_count < 64)
        throw std::invalid_argument("quadrature node_count must be >= 64");

    const double T = cfg.half_width;

    // Probe the decay with max-|g| envelopes over three windows; envelopes
    // absorb the sign oscillations the Melnikov integrands carry. For a pure
    // exponential the two fitted rates agree; for any power law their ratio
    // equals the ratio of window centers (0.675/0.925 = 0.73), which is what
    // the 0.75 test keys on.
    auto envelope = [&](double f0, double f1) {
        double e = 0.0;
        for (int i = 0; i < 9; ++i) {
            const double t = (f0 + (f1 - f0) * i / 8.0) * T;
            e = std::max({e, std::abs(g(t)), std::abs(g(-t))});
        }
        return e;
    };
    const double env_a = envelope(0.35, 0.50);
    const double env_b = envelope(0.60, 0.75);
    const double env_c = envelope(0.85, 1.00);

    double tail_bound = 0.0;
    if (env_c > 1e-300 && env_a > 1e-300) {
        const double gap = 0.25 * T;  // distance between window centers
        if (env_c >= env_a) {
            std::ostringstream os;
            os << "integrand does not decay across [" << 0.425 * T << ", "
               << 0.925 * T << "]: envelopes " << env_a << " -> " << env_c;
            throw TailTooFat(os.str());
        }
        const double rho1 = std::log(std::max(env_a, 1e-300) /
                                     std::max(env_b, 1e-300)) / gap;
        const double rho2 = std::log(std::max(env_b, 1e-300) /
                                     std::max(env_c, 1e-300)) / gap;
        if (rho2 <= 0.0 || rho2 < 0.75 * rho1) {
            std::ostringstream os;
            os << "probed decay slows from rate " << rho1 << " to " << rho2
               << " between t ~ " << 0.55 * T << " and t ~ " << 0.8 * T
               << "; slower than exponential";
            throw TailTooFat(os.str());
        }
        tail_bound = 2.0 * env_c / rho2;
    }

    double fine = 0.0, coarse = 0.0;
    if (cfg.scheme == QuadScheme::composite_gauss) {
        const int panels = std::max(4, cfg.node_count / 16);
        fine = detail::composite_gauss(g, -T, T, panels);
        coarse = detail::composite_gauss(g, -T, T, std::max(2, panels / 2));
    } else {
        fine = detail::tanh_sinh(g, T, cfg.node_count, 1);
        coarse = detail::tanh_sinh(g, T, cfg.node_count, 2);
    }

    return {fine, std::abs(fine - coarse) + tail_bound};
}

} // namespace magrod

#endif
