// Dense 4x4 eigen-decomposition through the characteristic polynomial:
// Faddeev-LeVerrier for the coefficients, Durand-Kerner for simultaneous
// roots, then a multiplicity-aware Newton polish (a root of multiplicity m
// is a simple root of the (m-1)-th derivative, so clusters refine cleanly).
// Eigenvectors come from the rank-revealing kernel of A - lambda I with an
// inverse-iteration fallback. Everything is deterministic: fixed iteration
// counts, fixed tie-breaking, fixed phase convention.
//
// Designed for the saddle-focus Jacobians of this problem (two well-split
// complex pairs); accuracy degrades, as for any characteristic-polynomial
// method, when eigenvalues coalesce closer than ~1e-3 of the matrix scale.
#ifndef MAGROD_EIGEN4_HPP
#define MAGROD_EIGEN4_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <vector>

#include "magrod/core.hpp"

namespace magrod {

using Complex = std::complex<double>;
using Vec4c = Eigen::Vector4cd;
using Mat4c = Eigen::Matrix4cd;

struct Eigen4 {
    std::array<Complex, 4> values;  // sorted: Re descending, then Im descending
    Mat4c right;                    // column k: right eigenvector of values[k]
    Mat4c left;                     // row k: left (row) eigenvector of values[k]
};

namespace detail {

struct Quartic {
    // monic: z^4 + a3 z^3 + a2 z^2 + a1 z + a0
    double a3, a2, a1, a0;
    Complex eval(Complex z) const {
        return (((z + a3) * z + a2) * z + a1) * z + a0;
    }
    Complex d1(Complex z) const {
        return ((4.0 * z + 3.0 * a3) * z + 2.0 * a2) * z + a1;
    }
    Complex d2(Complex z) const {
        return (12.0 * z + 6.0 * a3) * z + 2.0 * a2;
    }
    Complex d3(Complex z) const { return 24.0 * z + 6.0 * a3; }
};

inline Quartic char_poly(const Mat4& a) {
    // Faddeev-LeVerrier: p(z) = z^4 - c1 z^3 - c2 z^2 - c3 z - c4.
    const Mat4 i4 = Mat4::Identity();
    const Mat4 b1 = a;
    const double c1 = b1.trace();
    const Mat4 b2 = a * (b1 - c1 * i4);
    const double c2 = b2.trace() / 2.0;
    const Mat4 b3 = a * (b2 - c2 * i4);
    const double c3 = b3.trace() / 3.0;
    const Mat4 b4 = a * (b3 - c3 * i4);
    const double c4 = b4.trace() / 4.0;
    return {-c1, -c2, -c3, -c4};
}

inline std::array<Complex, 4> durand_kerner(const Quartic& p) {
    const double bound =
        1.0 + std::max({std::abs(p.a3), std::abs(p.a2), std::abs(p.a1),
                        std::abs(p.a0)});
    std::array<Complex, 4> z;
    for (int k = 0; k < 4; ++k)
        z[k] = bound * std::polar(1.0, 0.7 + 0.5 * pi * k);
    for (int it = 0; it < 300; ++it) {
        double move = 0.0;
        for (int k = 0; k < 4; ++k) {
            Complex denom = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != k) denom *= z[k] - z[j];
            if (denom == Complex(0.0)) {
                z[k] += 1e-8 * bound;  // break exact collisions
                continue;
            }
            const Complex dz = p.eval(z[k]) / denom;
            z[k] -= dz;
            move = std::max(move, std::abs(dz));
        }
        if (move < 1e-15 * bound) break;
    }
    return z;
}

// Group roots lying within the cluster radius of each other (transitively),
// refine each group at its mean by Newton on the (m-1)-th derivative, and
// distribute the refined value to all members.
inline std::array<Complex, 4> polish_roots(const Quartic& p,
                                           std::array<Complex, 4> z) {
    const double bound =
        1.0 + std::max({std::abs(p.a3), std::abs(p.a2), std::abs(p.a1),
                        std::abs(p.a0)});
    // A quadruple root scatters Durand-Kerner iterates by about
    // eps^(1/4) ~ 1e-4 of scale, so the radius must sit above that.
    const double rc = 2e-3 * bound;

    std::array<int, 4> group{0, 1, 2, 3};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(z[i] - z[j]) < rc) {
                const int gi = group[i], gj = group[j];
                for (auto& g : group)
                    if (g == gi) g = gj;
            }

    for (int g = 0; g < 4; ++g) {
        std::vector<int> members;
        for (int i = 0; i < 4; ++i)
            if (group[i] == g) members.push_back(i);
        if (members.empty()) continue;
        const int m = static_cast<int>(members.size());
        Complex mean = 0.0;
        for (int i : members) mean += z[i];
        mean /= static_cast<double>(m);
        // Newton on p^(m-1), which has a simple zero at an m-fold root.
        Complex w = mean;
        for (int it = 0; it < 60; ++it) {
            Complex f, df;
            switch (m) {
                case 1: f = p.eval(w); df = p.d1(w); break;
                case 2: f = p.d1(w); df = p.d2(w); break;
                case 3: f = p.d2(w); df = p.d3(w); break;
                default: f = p.d3(w); df = 24.0; break;
            }
            if (std::abs(df) < 1e-300) break;
            const Complex dw = f / df;
            w -= dw;
            if (std::abs(dw) < 1e-16 * bound) break;
        }
        // Accept the polish only if it stayed inside the cluster; Newton on
        // a derivative can wander to a different stationary point.
        if (std::abs(w - mean) < rc)
            for (int i : members) z[i] = w;
        else
            for (int i : members) z[i] = mean;
    }

    // A real matrix has a conjugation-symmetric spectrum: snap tiny
    // imaginary parts, then enforce exact conjugate pairs.
    for (auto& zi : z)
        if (std::abs(zi.imag()) < 1e-10 * bound) zi = Complex(zi.real(), 0.0);
    std::array<bool, 4> used{false, false, false, false};
    for (int i = 0; i < 4; ++i) {
        if (used[i] || z[i].imag() <= 0.0) continue;
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 4; ++j) {
            if (used[j] || j == i || z[j].imag() >= 0.0) continue;
            const double d = std::abs(z[i] - std::conj(z[j]));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        if (best >= 0) {
            const Complex avg = 0.5 * (z[i] + std::conj(z[best]));
            z[i] = avg;
            z[best] = std::conj(avg);
            used[i] = used[best] = true;
        }
    }
    return z;
}

// Deterministic phase: rotate so the entry of largest magnitude (lowest
// index on near-ties) is real and positive, then normalize to unit length.
inline Vec4c fix_phase(Vec4c v) {
    int imax = 0;
    double amax = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double a = std::abs(v[i]);
        if (a > amax * (1.0 + 1e-12)) {
            amax = a;
            imax = i;
        }
    }
    if (amax == 0.0) return v;
    v *= std::conj(v[imax]) / std::abs(v[imax]);
    v /= v.norm();
    // scrub parasitic imaginary dust on real vectors
    double im = 0.0;
    for (int i = 0; i < 4; ++i) im = std::max(im, std::abs(v[i].imag()));
    if (im < 1e-13)
        for (int i = 0; i < 4; ++i) v[i] = Complex(v[i].real(), 0.0);
    return v;
}

// Eigenvectors of `a` for eigenvalue lambda with multiplicity m: kernel of
// (a - lambda I) when the rank drop shows at the threshold, otherwise
// inverse iteration from a fixed starting vector.
inline std::vector<Vec4c> eigvecs_for(const Mat4c& a, Complex lambda, int m,
                                      double scale) {
    Mat4c shifted = a;
    for (int i = 0; i < 4; ++i) shifted(i, i) -= lambda;

    Eigen::FullPivLU<Mat4c> lu(shifted);
    lu.setThreshold(1e-9);
    std::vector<Vec4c> out;
    if (lu.dimensionOfKernel() >= m) {
        const Eigen::MatrixXcd k = lu.kernel();
        // Orthonormalize deterministically (modified Gram-Schmidt).
        for (int c = 0; c < m; ++c) {
            Vec4c v = k.col(c);
            for (const auto& u : out) v -= u.dot(v) * u;
            const double n = v.norm();
            if (n < 1e-12) continue;
            out.push_back(fix_phase(v / n));
        }
    }
    if (static_cast<int>(out.size()) == m) return out;

    // Inverse iteration with a slightly displaced shift.
    out.clear();
    Mat4c it_m = a;
    const Complex displ = Complex(1e-10, 1e-10) * std::max(scale, 1.0);
    for (int i = 0; i < 4; ++i) it_m(i, i) -= (lambda + displ);
    Eigen::FullPivLU<Mat4c> itlu(it_m);
    Vec4c v;
    v << Complex(1.0, 0.0), Complex(0.5, 0.25), Complex(-0.3, 0.1),
        Complex(0.8, -0.15);
    v /= v.norm();
    for (int k = 0; k < 25; ++k) {
        v = itlu.solve(v);
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) break;
        v /= n;
    }
    const double resid = (a * v - lambda * v).norm();
    if (m > 1) {
        // A repeated eigenvalue whose kernel came up short: geometric
        // multiplicity below algebraic, i.e. a Jordan block.
        std::ostringstream os;
        os << "eigenvalue (" << lambda.real() << ", " << lambda.imag()
           << ") has algebraic multiplicity " << m
           << " but a deficient eigenspace";
        throw DefectiveMatrix(os.str());
    }
    if (!(resid <= 1e-7 * std::max(scale, 1.0))) {
        std::ostringstream os;
        os << "eigenvector refinement failed at lambda = (" << lambda.real()
           << ", " << lambda.imag() << "), residual " << resid;
        throw DefectiveMatrix(os.str());
    }
    out.push_back(fix_phase(v));
    return out;
}

} // namespace detail

inline Eigen4 eigen4(const Mat4& a) {
    if (!a.allFinite())
        throw std::invalid_argument("eigen4: matrix has non-finite entries");

    const double scale = a.cwiseAbs().maxCoeff();
    Eigen4 out;
    if (scale == 0.0) {
        out.values = {0.0, 0.0, 0.0, 0.0};
        out.right = Mat4c::Identity();
        out.left = Mat4c::Identity();
        return out;
    }

    // Work on the scaled matrix for a well-conditioned polynomial.
    const Mat4 as = a / scale;
    const auto poly = detail::char_poly(as);
    auto roots = detail::polish_roots(poly, detail::durand_kerner(poly));

    std::sort(roots.begin(), roots.end(), [](Complex x, Complex y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });

    for (int i = 0; i < 4; ++i) out.values[i] = roots[i] * scale;

    // Group equal roots and extract vectors once per distinct value.
    const Mat4c ac = as.cast<Complex>();
    const Mat4c atc = as.transpose().cast<Complex>();
    int i = 0;
    while (i < 4) {
        int j = i;
        while (j < 4 && roots[j] == roots[i]) ++j;
        const int m = j - i;
        const auto rv = detail::eigvecs_for(ac, roots[i], m, 1.0);
        const auto lv = detail::eigvecs_for(atc, roots[i], m, 1.0);
        for (int k = 0; k < m; ++k) {
            out.right.col(i + k) = rv[k];
            out.left.row(i + k) = lv[k].transpose();
        }
        i = j;
    }
    return out;
}

// Realify a complex eigenvector u + i w into the two rows/columns (u, w),
// with the sign fixed so the largest-magnitude entry of u is positive.
inline Eigen::Matrix<double, 2, 4> realify_pair(const Vec4c& v) {
    Eigen::Vector4d u = v.real(), w = v.imag();
    int imax = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
    if (u[imax] < 0.0) {
        u = -u;
        w = -w;
    }
    Eigen::Matrix<double, 2, 4> f;
    f.row(0) = u.transpose();
    f.row(1) = w.transpose();
    return f;
}

} // namespace magrod

#endif
