// Invariant-manifold machinery for the perturbed saddle-foci: equilibrium
// refinement, eigenframe boundary-value shooting for W^u / W^s, continuation
// of the orbit family, section slicing, transverse-homoclinic detection, and
// Poincare maps.
//
// Conventions. Unstable-side orbits live on t in [0, T] with the
// near-equilibrium end at t = 0; stable-side orbits live on t in [-T, 0]
// with the near end at t = 0. The near end carries the eigenframe condition
// ||L (x - eq)|| = 0 (L = L_s for the unstable side, L_u for the stable
// side), applied to the displacement from the equilibrium.
#ifndef MAGROD_MANIFOLDS_HPP
#define MAGROD_MANIFOLDS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "magrod/analytic.hpp"
#include "magrod/core.hpp"
#include "magrod/model.hpp"
#include "magrod/newton.hpp"
#include "magrod/ode.hpp"

namespace magrod {

enum class Side { unstable, stable };

// A section hyperplane. With angle = true the section is the set
// x[index] = value (mod 2 pi), implemented as a zero of sin(x[index] - value)
// restricted to the cos > 0 branch; with angle = false it is the plain
// coordinate hyperplane x[index] = value. direction picks the sign of the
// crossing speed (+1, -1, or 0 for both).
struct SectionSpec {
    bool angle = true;
    int index = 1;
    double value = 0.0;
    int direction = +1;
};

inline double section_g(const SectionSpec& s, const Vec4& x) {
    return s.angle ? std::sin(x[s.index] - s.value) : (x[s.index] - s.value);
}

inline bool section_branch_ok(const SectionSpec& s, const Vec4& x) {
    return !s.angle || std::cos(x[s.index] - s.value) > 0.0;
}

inline bool same_section(const SectionSpec& a, const SectionSpec& b) {
    return a.angle == b.angle && a.index == b.index &&
           std::abs(a.value - b.value) < 1e-12;
}

// Refine an equilibrium of the full field from a seed (the closed-form
// ones of the nu = eps = gamma = 0 system are the intended seeds) and attach
// its spectral data. Domain errors at or around the seed mean no equilibrium
// exists there (e.g. mu <= 2 nu, where the radicand is negative at p_psi
// near 1).
inline Equilibrium refine_equilibrium(const Params& p, const State& seed,
                                      const NewtonConfig& ncfg = {}) {
    const auto f = [&](const Vec4& x) {
        return vector_field(State::from_vec(x), p).vec();
    };
    Vec4 root;
    try {
        root = newton_solve<4>(f, seed.vec(), ncfg);
    } catch (const NoConvergence&) {
        throw;
    } catch (const Error& e) {
        std::ostringstream os;
        os << "no equilibrium reachable from seed (theta = " << seed.theta
           << ", p_psi = " << seed.p_psi << "): " << e.name() << ": "
           << e.what();
        throw NoEquilibrium(os.str());
    }
    Equilibrium eq;
    eq.state = State::from_vec(root);
    eq.params = p;
    detail::attach_frames(eq, eigen4(jacobian(eq.state, p)));
    return eq;
}

namespace detail {

inline Trajectory<4> flow(const Params& p, const Vec4& x0, double t0,
                          double t1, const IntegratorConfig& icfg) {
    const auto f = [&](double, const Vec4& y) {
        return vector_field(State::from_vec(y), p).vec();
    };
    return integrate<4>(f, x0, t0, t1, icfg);
}

// Flow map over duration h together with its state derivative, via the
// 20-dimensional variational system V-dot = Df(x) V, V(0) = I.
inline std::pair<Vec4, Mat4> flow_var(const Params& p, const Vec4& x0,
                                      double h,
                                      const IntegratorConfig& icfg) {
    using V20 = Eigen::Matrix<double, 20, 1>;
    const auto f = [&](double, const V20& y) {
        const State x = State::from_vec(y.template head<4>());
        V20 dy;
        dy.template head<4>() = vector_field(x, p).vec();
        const Mat4 df = jacobian(x, p);
        Eigen::Map<const Mat4> v(y.data() + 4);
        Eigen::Map<Mat4> dv(dy.data() + 4);
        dv = df * v;
        return dy;
    };
    V20 y0;
    y0.head<4>() = x0;
    Eigen::Map<Mat4>(y0.data() + 4) = Mat4::Identity();
    IntegratorConfig vc = icfg;
    vc.dense_output = false;
    const auto traj = integrate<20>(f, y0, 0.0, h, vc);
    const V20 ye = traj.y_end();
    Mat4 dphi = Eigen::Map<const Mat4>(ye.data() + 4);
    return {ye.head<4>(), dphi};
}

} // namespace detail

// Setup of one eigenframe boundary-value problem (the building block of the
// manifold computation): find an orbit of duration T whose near end lies in
// the linear unstable (resp. stable) plane of the equilibrium and whose far
// end hits `endpoint`.
struct BvpSetup {
    Equilibrium equilibrium;
    Side side = Side::unstable;
    double T = 10.0;
    Eigen::Matrix<double, 2, 4> frame;  // L_s if side=unstable, else L_u
    Vec4 endpoint = Vec4::Zero();
    double seed_radius = 1e-5;
    double bvp_tol = 1e-9;
    int segments = 8;
    IntegratorConfig icfg{};
};

inline BvpSetup make_bvp(const Equilibrium& eq, Side side, double T,
                         const Vec4& endpoint) {
    BvpSetup su;
    su.equilibrium = eq;
    su.side = side;
    su.T = T;
    su.frame = (side == Side::unstable) ? eq.stable_frame : eq.unstable_frame;
    su.endpoint = endpoint;
    return su;
}

// One computed manifold orbit: consecutive dense segments covering
// [t0, t0 + T] (t0 = 0 on the unstable side, -T on the stable side).
struct ManifoldOrbit {
    double cont_param = 0.0;
    double T = 0.0;
    double t0 = 0.0;
    std::vector<Trajectory<4>> segs;
    double residual = 0.0;

    Vec4 x_begin() const { return segs.front().y_begin(); }
    Vec4 x_end() const { return segs.back().y_end(); }
    Vec4 x_near() const { return (t0 == 0.0) ? x_begin() : x_end(); }
    Vec4 x_far() const { return (t0 == 0.0) ? x_end() : x_begin(); }

    Vec4 eval(double t) const {
        for (const auto& s : segs)
            if (t <= s.t_end() + 1e-12) return s.eval(std::max(t, s.t_begin()));
        return segs.back().y_end();
    }
};

struct ManifoldSheet {
    Side side = Side::unstable;
    Equilibrium equilibrium;
    std::vector<ManifoldOrbit> orbits;  // ordered by cont_param
};

namespace detail {

inline void validate_setup(const BvpSetup& su) {
    if (!(su.T > 0.0)) throw std::invalid_argument("BVP horizon T must be > 0");
    if (!(su.seed_radius >= 1e-7) || !(su.seed_radius <= 1e-3))
        throw std::invalid_argument("seed_radius must lie in [1e-7, 1e-3]");
    if (su.segments < 1 || su.segments > 64)
        throw std::invalid_argument("segment count must lie in [1, 64]");
    const auto& eq = su.equilibrium;
    const auto opp =
        (su.side == Side::unstable) ? eq.unstable_basis : eq.stable_basis;
    if ((su.frame * opp).norm() > 1e-8)
        throw std::invalid_argument(
            "boundary frame does not annihilate the opposite-subspace "
            "eigenvectors; frames and side are inconsistent");
}

// Closed-form linearized flow inside one spectral plane: the generator in
// the realified basis [u, w] of the eigenvector for lambda = a + bi acts as
// exp(t A)|span = e^(a t) [cos bt, sin bt; -sin bt, cos bt].
inline Eigen::Matrix2d plane_propagator(Complex lambda, double t) {
    const double e = std::exp(lambda.real() * t);
    const double cb = std::cos(lambda.imag() * t);
    const double sb = std::sin(lambda.imag() * t);
    Eigen::Matrix2d m;
    m << e * cb, e * sb, -e * sb, e * cb;
    return m;
}

// Default node initialization from the linearized system: project the
// endpoint displacement onto the relevant spectral plane and propagate it
// back toward the equilibrium.
inline std::vector<Vec4> linearized_nodes(const BvpSetup& su) {
    const auto& eq = su.equilibrium;
    const bool uns = (su.side == Side::unstable);
    const auto basis = uns ? eq.unstable_basis : eq.stable_basis;
    const Complex lambda = uns ? eq.eigenvalues[0] : eq.eigenvalues[2];
    const Vec4 d = su.endpoint - eq.state.vec();
    const Eigen::Vector2d c_far =
        (basis.transpose() * basis).ldlt().solve(basis.transpose() * d);
    const int m = su.segments;
    std::vector<Vec4> nodes(m + 1);
    for (int i = 0; i <= m; ++i) {
        // time of node i relative to the far end (t_far = T resp. -T)
        const double rel = uns ? (double(i) / m - 1.0) * su.T
                               : (double(i) / m) * su.T;
        nodes[i] = eq.state.vec() +
                   basis * (plane_propagator(lambda, rel) * c_far);
    }
    return nodes;
}

} // namespace detail

// Solve the two-point eigenframe BVP by multiple shooting. The system is
// overdetermined by two rows (2 frame + 4m matching + 4 endpoint conditions
// against 4(m+1) unknowns), consistent exactly when the endpoint lies on
// the manifold; a Levenberg-regularized Gauss-Newton iteration drives the
// residual below bvp_tol and errors out with NoConvergence otherwise.
inline ManifoldOrbit solve_manifold_bvp(const BvpSetup& su,
                                        std::vector<Vec4> nodes = {}) {
    detail::validate_setup(su);
    const auto& eq = su.equilibrium;
    const Params& p = eq.params;
    const int m = su.segments;
    const bool uns = (su.side == Side::unstable);
    const double h = su.T / m;
    if (nodes.empty()) nodes = detail::linearized_nodes(su);
    if (static_cast<int>(nodes.size()) != m + 1)
        throw std::invalid_argument("node count must equal segments + 1");

    const int nu = 4 * (m + 1);
    const int nr = 4 * m + 6;
    const int near_idx = uns ? 0 : m;
    const int far_idx = uns ? m : 0;

    Eigen::VectorXd z(nu);
    for (int i = 0; i <= m; ++i) z.segment<4>(4 * i) = nodes[i];

    std::vector<Mat4> dphi(m);
    std::vector<Vec4> phi(m);
    const auto residual = [&](const Eigen::VectorXd& zz, bool deriv,
                              Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        r.setZero(nr);
        if (deriv) jac.setZero(nr, nu);
        for (int i = 0; i < m; ++i) {
            const Vec4 xi = zz.segment<4>(4 * i);
            if (deriv) {
                auto [ph, dp] = detail::flow_var(p, xi, h, su.icfg);
                phi[i] = ph;
                dphi[i] = dp;
            } else {
                phi[i] = detail::flow(p, xi, 0.0, h, su.icfg).y_end();
            }
            r.segment<4>(4 * i) = phi[i] - zz.segment<4>(4 * (i + 1));
            if (deriv) {
                jac.block<4, 4>(4 * i, 4 * i) = dphi[i];
                jac.block<4, 4>(4 * i, 4 * (i + 1)) = -Mat4::Identity();
            }
        }
        const Vec4 dnear = zz.segment<4>(4 * near_idx) - eq.state.vec();
        r.segment<2>(4 * m) = su.frame * dnear;
        r.segment<4>(4 * m + 2) = zz.segment<4>(4 * far_idx) - su.endpoint;
        if (deriv) {
            jac.block<2, 4>(4 * m, 4 * near_idx) = su.frame;
            jac.block<4, 4>(4 * m + 2, 4 * far_idx) = Mat4::Identity();
        }
    };

    Eigen::VectorXd r(nr), rt(nr);
    Eigen::MatrixXd jac(nr, nu), jact(nr, nu);
    residual(z, true, r, jac);
    double rn = r.lpNorm<Eigen::Infinity>();
    double lm = 1e-10;

    for (int it = 0; it < 60 && rn > su.bvp_tol; ++it) {
        const Eigen::MatrixXd jtj =
            jac.transpose() * jac +
            lm * Eigen::MatrixXd::Identity(nu, nu);
        const Eigen::VectorXd dz =
            jtj.ldlt().solve(-(jac.transpose() * r).eval());
        bool accepted = false;
        try {
            const Eigen::VectorXd zt = z + dz;
            residual(zt, true, rt, jact);
            const double rtn = rt.lpNorm<Eigen::Infinity>();
            if (rtn < rn || rtn <= su.bvp_tol) {
                z = zt;
                r = rt;
                jac = jact;
                rn = rtn;
                lm = std::max(1e-12, lm * 0.3);
                accepted = true;
            }
        } catch (const Error&) {
            // trial nodes left the field's domain; retreat to a more
            // damped (shorter) step
        }
        if (!accepted) {
            lm *= 10.0;
            if (lm > 1e8) break;
        }
    }
    if (!(rn <= su.bvp_tol)) {
        std::ostringstream os;
        os << "manifold BVP stalled with residual " << rn << " > "
           << su.bvp_tol << " (T = " << su.T << ", side "
           << (uns ? "unstable" : "stable") << ")";
        throw NoConvergence(os.str());
    }

    ManifoldOrbit orb;
    orb.T = su.T;
    orb.t0 = uns ? 0.0 : -su.T;
    orb.residual = rn;
    for (int i = 0; i < m; ++i) {
        const double ta = orb.t0 + i * h;
        orb.segs.push_back(
            detail::flow(p, z.segment<4>(4 * i), ta, ta + h, su.icfg));
    }
    return orb;
}

// Configuration of sheet construction and continuation.
struct SheetConfig {
    double seed_radius = 1e-5;
    int segments = 8;
    double bvp_tol = 1e-9;
    double step = 0.02;        // target far-endpoint displacement per step
    double min_step = 1e-7;
    SectionSpec section{};     // the far end is pinned onto this section
    double lobe_theta_min = 1.0;  // initial crossing must have theta above
    double max_time = 120.0;
    // A walked branch ends where its connecting orbit grazes the polar
    // coordinate singularity (theta_min -> 0 along the dip); the endpoint
    // family accumulates there and Newton steps underflow. By default that
    // raises StallOut; with this flag the orbits accepted so far are
    // returned instead. Arcs beyond a grazing are reachable by seeding a
    // fresh initial orbit at a phase inside them.
    bool return_partial_on_stall = false;
    IntegratorConfig icfg{};
};

namespace detail {

// Active (in-section) coordinates: all but the section's own index.
inline std::array<int, 3> active_coords(const SectionSpec& s) {
    std::array<int, 3> a{};
    int k = 0;
    for (int i = 0; i < 4; ++i)
        if (i != s.index) a[k++] = i;
    return a;
}

// Scan a dense trajectory for refined section crossings; each accepted
// integrator step is subdivided so multiple crossings per step survive.
inline void scan_crossings(const Trajectory<4>& tr, const SectionSpec& sec,
                           std::vector<std::pair<double, Vec4>>& out) {
    const auto& times = tr.times();
    if (times.size() < 2) return;
    const bool fwd = times.back() >= times.front();

    const auto ok_dir = [&](double g0, double g1) {
        const double up = fwd ? (g1 - g0) : (g0 - g1);  // sign in flow time
        if (sec.direction > 0) return up > 0.0;
        if (sec.direction < 0) return up < 0.0;
        return true;
    };
    const auto refine = [&](double ta, double tb, double ga) {
        for (int k = 0; k < 200 && std::abs(tb - ta) > 1e-10; ++k) {
            const double tm = 0.5 * (ta + tb);
            const double gm = section_g(sec, tr.eval(tm));
            if (gm == 0.0) {
                ta = tb = tm;
                break;
            }
            if ((ga < 0.0) == (gm < 0.0)) {
                ta = tm;
                ga = gm;
            } else {
                tb = tm;
            }
        }
        return 0.5 * (ta + tb);
    };

    // boundary inclusion: an orbit starting on the section counts
    {
        const Vec4 x0 = tr.eval(times.front());
        const double g0 = section_g(sec, x0);
        if (std::abs(g0) < 1e-12 && section_branch_ok(sec, x0)) {
            const double t1 = times.front() + (fwd ? 1e-7 : -1e-7) *
                                                  std::max(1.0, std::abs(times.front()));
            const double g1 = section_g(sec, tr.eval(t1));
            if (ok_dir(g0, g1)) out.emplace_back(times.front(), x0);
        }
    }

    constexpr int sub = 4;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        for (int s = 0; s < sub; ++s) {
            const double ta = times[i] + (times[i + 1] - times[i]) * s / sub;
            const double tb =
                times[i] + (times[i + 1] - times[i]) * (s + 1) / sub;
            const double ga = section_g(sec, tr.eval(ta));
            const double gb = section_g(sec, tr.eval(tb));
            if (ga == 0.0 || (ga < 0.0) == (gb < 0.0)) continue;
            if (!ok_dir(ga, gb)) continue;
            const double tc = refine(ta, tb, ga);
            const Vec4 xc = tr.eval(tc);
            if (!section_branch_ok(sec, xc)) continue;
            out.emplace_back(tc, xc);
        }
    }
}

inline void scan_crossings(const ManifoldOrbit& orb, const SectionSpec& sec,
                           const Params& p,
                           std::vector<std::pair<double, Vec4>>& out,
                           const IntegratorConfig& icfg = {}) {
    for (const auto& s : orb.segs) scan_crossings(s, sec, out);

    // Sheet orbits have their far end pinned onto the section only within
    // the BVP tolerance; the true crossing may sit just outside the
    // computed time window. Polish it by Newton steps along the flow.
    const double t_far = (orb.t0 == 0.0) ? orb.t0 + orb.T : orb.t0;
    Vec4 x = orb.x_far();
    double g = section_g(sec, x);
    if (std::abs(g) < 1e-6 && std::abs(g) > 0.0 && section_branch_ok(sec, x)) {
        double t = t_far;
        bool ok = false;
        double gdot = 0.0;
        for (int it = 0; it < 8; ++it) {
            const Vec4 f = vector_field(State::from_vec(x), p).vec();
            gdot = sec.angle ? std::cos(x[sec.index] - sec.value) * f[sec.index]
                             : f[sec.index];
            if (std::abs(gdot) < 1e-12) break;
            const double dt = -g / gdot;
            if (std::abs(dt) > 0.5) break;
            if (dt != 0.0) x = flow(p, x, 0.0, dt, icfg).y_end();
            t += dt;
            g = section_g(sec, x);
            if (std::abs(g) <= 1e-13) {
                ok = true;
                break;
            }
        }
        const bool dir_ok = sec.direction == 0 ||
                            (sec.direction > 0) == (gdot > 0.0);
        if (ok && dir_ok && section_branch_ok(sec, x))
            out.emplace_back(t, x);
    }

    // a crossing just inside the window is found twice (sign scan and
    // endpoint polish); keep one copy
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const auto& a, const auto& b) {
                              return std::abs(a.first - b.first) < 1e-7;
                          }),
              out.end());
}

// Square continuation system: unknowns (x_0 .. x_m, T); residuals are the
// 2 frame rows, the seed-circle amplitude, 4m matching rows, the section
// pin at the far end, and the coordinate pin e_j . x_far = c.
struct ContSystem {
    const Equilibrium& eq;
    Side side;
    const SheetConfig& cfg;
    int pin;       // pinned coordinate at the far end
    double pin_c;  // its target value

    int m() const { return cfg.segments; }
    int nu() const { return 4 * (m() + 1) + 1; }

    bool unstable() const { return side == Side::unstable; }
    int near_idx() const { return unstable() ? 0 : m(); }
    int far_idx() const { return unstable() ? m() : 0; }

    void eval(const Eigen::VectorXd& z, bool deriv, Eigen::VectorXd& r,
              Eigen::MatrixXd& jac) const {
        const Params& p = eq.params;
        const int mm = m();
        const double T = z[4 * (mm + 1)];
        const double h = T / mm;
        r.setZero(nu());
        if (deriv) jac.setZero(nu(), nu());
        for (int i = 0; i < mm; ++i) {
            const Vec4 xi = z.segment<4>(4 * i);
            Vec4 ph;
            if (deriv) {
                auto [f, df] = flow_var(p, xi, h, cfg.icfg);
                ph = f;
                jac.block<4, 4>(4 * i, 4 * i) = df;
                jac.block<4, 4>(4 * i, 4 * (i + 1)) = -Mat4::Identity();
                jac.block<4, 1>(4 * i, 4 * (mm + 1)) =
                    vector_field(State::from_vec(f), p).vec() / mm;
            } else {
                ph = flow(p, xi, 0.0, h, cfg.icfg).y_end();
            }
            r.segment<4>(4 * i) = ph - z.segment<4>(4 * (i + 1));
        }
        const auto frame =
            unstable() ? eq.stable_frame : eq.unstable_frame;
        const Vec4 dnear = z.segment<4>(4 * near_idx()) - eq.state.vec();
        r.segment<2>(4 * mm) = frame * dnear;
        r[4 * mm + 2] = dnear.squaredNorm() - sq(cfg.seed_radius);
        const Vec4 xfar = z.segment<4>(4 * far_idx());
        r[4 * mm + 3] = section_g(cfg.section, xfar);
        r[4 * mm + 4] = xfar[pin] - pin_c;
        if (deriv) {
            jac.block<2, 4>(4 * mm, 4 * near_idx()) = frame;
            jac.block<1, 4>(4 * mm + 2, 4 * near_idx()) =
                2.0 * dnear.transpose();
            Eigen::RowVector4d gsec = Eigen::RowVector4d::Zero();
            gsec[cfg.section.index] =
                cfg.section.angle
                    ? std::cos(xfar[cfg.section.index] - cfg.section.value)
                    : 1.0;
            jac.block<1, 4>(4 * mm + 3, 4 * far_idx()) = gsec;
            jac(4 * mm + 4, 4 * far_idx() + pin) = 1.0;
        }
    }

    // Newton with step damping; returns false on failure to converge.
    bool solve(Eigen::VectorXd& z) const {
        Eigen::VectorXd r(nu()), rt(nu());
        Eigen::MatrixXd jac(nu(), nu()), jt(nu(), nu());
        try {
            eval(z, true, r, jac);
        } catch (const Error&) {
            return false;
        }
        double rn = r.lpNorm<Eigen::Infinity>();
        for (int it = 0; it < 25; ++it) {
            if (rn <= cfg.bvp_tol) return true;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
            if (!lu.isInvertible()) return false;
            const Eigen::VectorXd dz = lu.solve(-r);
            double lam = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 6; ++bt) {
                try {
                    const Eigen::VectorXd zt = z + lam * dz;
                    if (!(zt[4 * (m() + 1)] > 0.0)) {  // T must stay positive
                        lam *= 0.5;
                        continue;
                    }
                    eval(zt, true, rt, jt);
                    const double rtn = rt.lpNorm<Eigen::Infinity>();
                    if (rtn < rn || rtn <= cfg.bvp_tol) {
                        z = zt;
                        r = rt;
                        jac = jt;
                        rn = rtn;
                        moved = true;
                        break;
                    }
                } catch (const Error&) {
                }
                lam *= 0.5;
            }
            if (!moved) return false;
        }
        return rn <= cfg.bvp_tol;
    }
};

inline ManifoldOrbit orbit_from_solution(const Equilibrium& eq, Side side,
                                         const SheetConfig& cfg,
                                         const Eigen::VectorXd& z,
                                         double cont_param) {
    const int m = cfg.segments;
    const double T = z[4 * (m + 1)];
    ManifoldOrbit orb;
    orb.cont_param = cont_param;
    orb.T = T;
    orb.t0 = (side == Side::unstable) ? 0.0 : -T;
    double rmax = 0.0;
    for (int i = 0; i < m; ++i) {
        const double ta = orb.t0 + i * T / m;
        orb.segs.push_back(detail::flow(eq.params, z.segment<4>(4 * i), ta,
                                        ta + T / m, cfg.icfg));
        rmax = std::max(rmax, (orb.segs.back().y_end() -
                               Vec4(z.segment<4>(4 * (i + 1))))
                                  .lpNorm<Eigen::Infinity>());
    }
    orb.residual = rmax;
    return orb;
}

} // namespace detail

// Build the first sheet orbit by direct integration: leave the equilibrium
// along the unstable plane (or enter backward along the stable one), run to
// the first valid section crossing in the outer lobe (theta above
// lobe_theta_min), and polish with the square continuation system.
inline ManifoldOrbit initial_sheet_orbit(const Equilibrium& eq, Side side,
                                         const SheetConfig& cfg,
                                         double seed_phase = 0.0) {
    const bool uns = (side == Side::unstable);
    const auto basis = uns ? eq.unstable_basis : eq.stable_basis;
    const Vec4 x0 = eq.state.vec() +
                    cfg.seed_radius * (std::cos(seed_phase) * basis.col(0) +
                                       std::sin(seed_phase) * basis.col(1));
    const double t1 = uns ? cfg.max_time : -cfg.max_time;
    const auto tr = detail::flow(eq.params, x0, 0.0, t1, cfg.icfg);

    std::vector<std::pair<double, Vec4>> cross;
    detail::scan_crossings(tr, cfg.section, cross);
    std::optional<std::pair<double, Vec4>> hit;
    for (const auto& c : cross) {
        if (std::abs(c.second[0]) < cfg.lobe_theta_min) continue;
        if (!hit || std::abs(c.first) < std::abs(hit->first)) hit = c;
    }
    if (!hit) {
        std::ostringstream os;
        os << "no section crossing with |theta| > " << cfg.lobe_theta_min
           << " within |t| <= " << cfg.max_time << " ("
           << (uns ? "unstable" : "stable") << " side)";
        throw NoIntersection(os.str());
    }

    const double T = std::abs(hit->first);
    const int m = cfg.segments;
    Eigen::VectorXd z(4 * (m + 1) + 1);
    for (int i = 0; i <= m; ++i) {
        const double t = uns ? (T * i / m) : (-T + T * i / m);
        z.segment<4>(4 * i) = tr.eval(t);
    }
    z[4 * (m + 1)] = T;

    // polish holding the far endpoint's dominant in-section coordinate
    const auto act = detail::active_coords(cfg.section);
    const Vec4 xfar = hit->second;
    int pin = act[0];
    for (int a : act)
        if (std::abs(xfar[a]) > std::abs(xfar[pin])) pin = a;
    detail::ContSystem sys{eq, side, cfg, pin, xfar[pin]};
    if (!sys.solve(z))
        throw NoConvergence(
            "initial sheet orbit did not converge under the section pin");
    return detail::orbit_from_solution(eq, side, cfg, z, 0.0);
}

// Natural-parameter continuation of the sheet: the far endpoint walks along
// the slice curve in steps of roughly cfg.step (arclength in the in-section
// coordinates), with secant prediction, adaptive pin selection, and step
// halving; StallOut when the step underflows. The initial orbit is included
// in the returned sheet. direction (+1/-1) picks the walk orientation.
inline ManifoldSheet continue_sheet(const Equilibrium& eq,
                                    const ManifoldOrbit& initial,
                                    Side side, int direction, int steps,
                                    const SheetConfig& cfg) {
    ManifoldSheet sheet;
    sheet.side = side;
    sheet.equilibrium = eq;
    sheet.orbits.push_back(initial);

    const int m = cfg.segments;
    const auto act = detail::active_coords(cfg.section);
    const auto pack = [&](const ManifoldOrbit& o) {
        Eigen::VectorXd z(4 * (m + 1) + 1);
        for (int i = 0; i <= m; ++i) {
            const double t = o.t0 + o.T * i / m;
            z.segment<4>(4 * i) = o.eval(t);
        }
        z[4 * (m + 1)] = o.T;
        return z;
    };

    Eigen::VectorXd z_prev = pack(initial);
    Eigen::VectorXd z_curr = z_prev;
    bool have_prev = false;
    const int far_off = 4 * ((side == Side::unstable) ? m : 0);

    Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
    double ds = cfg.step * direction;
    double prev_advance = cfg.step;
    double accum = 0.0;

    bool stalled = false;
    for (int accepted = 0; accepted < steps && !stalled;) {
        // walk direction in the in-section coordinates
        Eigen::Vector3d dirv;
        if (have_prev) {
            for (int k = 0; k < 3; ++k)
                dirv[k] = z_curr[far_off + act[k]] - z_prev[far_off + act[k]];
            const double n = dirv.norm();
            if (n < 1e-14) dirv = tangent;
            else dirv /= n;
        } else {
            // first step: the curve tangent spans the kernel of the
            // system without its pin row
            dirv.setZero();
            dirv[0] = 1.0;
            try {
                detail::ContSystem sys{eq, side, cfg, act[0],
                                       z_curr[far_off + act[0]]};
                Eigen::VectorXd r;
                Eigen::MatrixXd jac;
                sys.eval(z_curr, true, r, jac);
                Eigen::FullPivLU<Eigen::MatrixXd> lu(
                    jac.topRows(jac.rows() - 1));
                if (lu.dimensionOfKernel() >= 1) {
                    const Eigen::VectorXd ker = lu.kernel().col(0);
                    Eigen::Vector3d t3;
                    for (int k = 0; k < 3; ++k)
                        t3[k] = ker[far_off + act[k]];
                    if (t3.norm() > 1e-12) dirv = t3.normalized();
                }
            } catch (const Error&) {
            }
        }
        tangent = dirv;

        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (std::abs(dirv[k]) > std::abs(dirv[best])) best = k;
        const int pin = act[best];

        bool ok = false;
        while (!ok && !stalled) {
            // the secant direction already encodes the walk orientation;
            // the sign of ds only orients the first (kernel-tangent) step
            const double advance = have_prev ? std::abs(ds) : ds;
            // secant predictor, scaled to the attempted step so halved
            // steps do not extrapolate into the strongly nonlinear zone
            Eigen::VectorXd z_try = z_curr;
            if (have_prev)
                z_try += (z_curr - z_prev) * (std::abs(advance) / prev_advance);
            const double c_new = z_curr[far_off + pin] + advance * dirv[best];
            detail::ContSystem sys{eq, side, cfg, pin, c_new};
            bool solved = sys.solve(z_try);
            if (!solved) {
                z_try = z_curr;  // retry without the predictor
                solved = sys.solve(z_try);
            }
            if (solved) {
                Eigen::Vector3d moved;
                for (int k = 0; k < 3; ++k)
                    moved[k] =
                        z_try[far_off + act[k]] - z_curr[far_off + act[k]];
                z_prev = z_curr;
                z_curr = z_try;
                have_prev = true;
                prev_advance = std::abs(advance);
                accum += (direction > 0 ? 1.0 : -1.0) * moved.norm();
                sheet.orbits.push_back(detail::orbit_from_solution(
                    eq, side, cfg, z_curr, accum));
                ++accepted;
                ok = true;
                if (std::abs(ds) < cfg.step)
                    ds = std::copysign(
                        std::min(std::abs(ds) * 1.5, cfg.step), ds);
            } else {
                ds *= 0.5;
                if (std::abs(ds) < cfg.min_step) {
                    if (cfg.return_partial_on_stall) {
                        stalled = true;
                        break;
                    }
                    std::ostringstream os;
                    os << "continuation step underflowed below "
                       << cfg.min_step << " after " << accepted
                       << " accepted steps (arclength " << accum << ")";
                    throw StallOut(os.str());
                }
            }
        }
    }
    if (direction < 0)
        std::reverse(sheet.orbits.begin(), sheet.orbits.end());
    return sheet;
}

// Union of two directional runs from the same initial orbit, ordered by
// cont_param; coincident continuation parameters keep a single copy.
inline ManifoldSheet merge_sheets(const ManifoldSheet& a,
                                  const ManifoldSheet& b) {
    ManifoldSheet out = a;
    out.orbits.insert(out.orbits.end(), b.orbits.begin(), b.orbits.end());
    std::sort(out.orbits.begin(), out.orbits.end(),
              [](const ManifoldOrbit& x, const ManifoldOrbit& y) {
                  return x.cont_param < y.cont_param;
              });
    out.orbits.erase(
        std::unique(out.orbits.begin(), out.orbits.end(),
                    [](const ManifoldOrbit& x, const ManifoldOrbit& y) {
                        return std::abs(x.cont_param - y.cont_param) < 1e-15;
                    }),
        out.orbits.end());
    return out;
}

struct SlicePoint {
    int orbit_id;
    double cont_param;
    State state;
    double t_cross;
};

struct SectionSlice {
    SectionSpec section;
    Params params;
    Equilibrium equilibrium;
    Side side = Side::unstable;
    double energy = 0.0;
    std::vector<SlicePoint> points;
};

// All refined transversal crossings of the sheet's orbits with the section.
inline SectionSlice slice(const ManifoldSheet& sheet,
                          const SectionSpec& sec) {
    SectionSlice out;
    out.section = sec;
    out.params = sheet.equilibrium.params;
    out.equilibrium = sheet.equilibrium;
    out.side = sheet.side;
    out.energy = hamiltonian(sheet.equilibrium.state,
                             sheet.equilibrium.params);
    for (std::size_t i = 0; i < sheet.orbits.size(); ++i) {
        std::vector<std::pair<double, Vec4>> cross;
        detail::scan_crossings(sheet.orbits[i], sec,
                               sheet.equilibrium.params, cross);
        for (const auto& c : cross)
            out.points.push_back({static_cast<int>(i),
                                  sheet.orbits[i].cont_param,
                                  State::from_vec(c.second), c.first});
    }
    return out;
}

struct DetectConfig {
    double angle_tol = 1e-3;       // below this the intersection is tangent
    double capture_radius = 0.05;  // max pre-refinement gap to accept
    double lobe_theta_min = 1.0;   // restrict candidates to the outer lobe
    double match_tol = 1e-8;       // Newton tolerance on the section gap
    double seed_radius = 1e-5;     // shooting seeds on the eigenplane circle
    double flank = 1e-4;           // phase offset for tangent estimation
    double max_time = 120.0;
    IntegratorConfig icfg{};
};

// A detected (refined) intersection of W^u and W^s on the section, glued
// into one orbit with t = 0 at the crossing.
struct HomoclinicConnection {
    State crossing;         // refined intersection point
    double angle = 0.0;     // transversality angle between the slice curves
    Vec4 gap_before = Vec4::Zero();  // nearest-approach vector pre-refinement
    double phase_u = 0.0, phase_s = 0.0;  // seed-circle phases
    double T_u = 0.0, T_s = 0.0;
    Trajectory<4> orbit_u;  // t in [-T_u, 0], ends at the crossing
    Trajectory<4> orbit_s;  // t in [0, T_s], starts at the crossing
    double endpoint_residual_u = 0.0;  // distance to the equilibrium
    double endpoint_residual_s = 0.0;
    Eigen::Vector3d tangent_u = Eigen::Vector3d::Zero();
    Eigen::Vector3d tangent_s = Eigen::Vector3d::Zero();
};

namespace detail {

// Shooting map of the detector: seed on the eigenplane circle at phase phi,
// integrate to the section, return the crossing nearest to `target` in the
// in-section coordinates (searching a window around the expected time).
struct CrossingMap {
    const Equilibrium& eq;
    Side side;
    const SectionSpec& sec;
    const DetectConfig& cfg;
    double t_expect;

    std::pair<Vec4, double> operator()(double phi,
                                       const Eigen::Vector3d& target) const {
        const bool uns = (side == Side::unstable);
        const auto basis = uns ? eq.unstable_basis : eq.stable_basis;
        const Vec4 x0 =
            eq.state.vec() + cfg.seed_radius * (std::cos(phi) * basis.col(0) +
                                                std::sin(phi) * basis.col(1));
        const double t1 = (uns ? 1.0 : -1.0) *
                          std::min(cfg.max_time, std::abs(t_expect) + 10.0);
        const auto tr = flow(eq.params, x0, 0.0, t1, cfg.icfg);
        std::vector<std::pair<double, Vec4>> cross;
        scan_crossings(tr, sec, cross);
        const auto act = active_coords(sec);
        double best = -1.0;
        std::pair<Vec4, double> hit{Vec4::Zero(), 0.0};
        for (const auto& c : cross) {
            if (std::abs(c.second[0]) < cfg.lobe_theta_min) continue;
            Eigen::Vector3d v;
            for (int k = 0; k < 3; ++k) v[k] = c.second[act[k]];
            const double d = (v - target).norm();
            if (best < 0.0 || d < best) {
                best = d;
                hit = {c.second, c.first};
            }
        }
        if (best < 0.0)
            throw NoIntersection(
                "shooting orbit lost the section crossing during "
                "refinement");
        return hit;
    }
};

inline double seg_param(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Eigen::Vector3d& q) {
    const Eigen::Vector3d d = b - a;
    const double dn = d.squaredNorm();
    if (dn < 1e-30) return 0.0;
    return std::clamp((q - a).dot(d) / dn, 0.0, 1.0);
}

} // namespace detail

// Locate a transverse intersection of the two slices: nearest approach of
// the two slice polylines in the in-section coordinates, then a 2x2 Newton
// iteration on the pair of seed-circle phases matching (theta, p_theta) on
// the section. Throws NoIntersection when no candidate pair comes within
// capture_radius and TangencyDetected when the refined crossing angle is
// below angle_tol.
inline HomoclinicConnection detect_homoclinic(const SectionSlice& wu,
                                              const SectionSlice& ws,
                                              const DetectConfig& cfg = {}) {
    if (wu.points.empty() || ws.points.empty())
        throw std::invalid_argument("both slices must be nonempty");
    if (!same_section(wu.section, ws.section))
        throw std::invalid_argument("slices lie on different sections");
    if (std::abs(wu.energy - ws.energy) > 1e-8)
        throw std::invalid_argument("slices lie on different energy levels");

    const auto& sec = wu.section;
    const auto act = detail::active_coords(sec);
    const auto lift = [&](const State& s) {
        Eigen::Vector3d v;
        const Vec4 x = s.vec();
        for (int k = 0; k < 3; ++k) v[k] = x[act[k]];
        return v;
    };

    // lobe points, ordered as given (slices are ordered by cont_param)
    std::vector<std::size_t> iu, is;
    for (std::size_t i = 0; i < wu.points.size(); ++i)
        if (std::abs(wu.points[i].state.theta) >= cfg.lobe_theta_min)
            iu.push_back(i);
    for (std::size_t i = 0; i < ws.points.size(); ++i)
        if (std::abs(ws.points[i].state.theta) >= cfg.lobe_theta_min)
            is.push_back(i);
    if (iu.empty() || is.empty())
        throw NoIntersection("no slice points in the outer lobe");

    // nearest approach over segment pairs of the two polylines
    double best = -1.0;
    Eigen::Vector3d gap3 = Eigen::Vector3d::Zero();
    std::size_t bu = 0, bs = 0;
    for (std::size_t a = 0; a + 1 < iu.size(); ++a) {
        const Eigen::Vector3d u0 = lift(wu.points[iu[a]].state);
        const Eigen::Vector3d u1 = lift(wu.points[iu[a + 1]].state);
        for (std::size_t b = 0; b + 1 < is.size(); ++b) {
            const Eigen::Vector3d s0 = lift(ws.points[is[b]].state);
            const Eigen::Vector3d s1 = lift(ws.points[is[b + 1]].state);
            // two cheap alternating projections approximate the
            // segment-segment nearest pair well enough for a candidate
            Eigen::Vector3d pu = 0.5 * (u0 + u1);
            Eigen::Vector3d ps = 0.5 * (s0 + s1);
            for (int it = 0; it < 4; ++it) {
                const double tu = detail::seg_param(u0, u1, ps);
                pu = u0 + tu * (u1 - u0);
                const double ts = detail::seg_param(s0, s1, pu);
                ps = s0 + ts * (s1 - s0);
            }
            const double d = (pu - ps).norm();
            if (best < 0.0 || d < best) {
                best = d;
                gap3 = pu - ps;
                bu = a;
                bs = b;
            }
        }
    }
    if (best < 0.0 || best > cfg.capture_radius) {
        std::ostringstream os;
        os << "nearest slice approach " << best << " exceeds capture radius "
           << cfg.capture_radius;
        throw NoIntersection(os.str());
    }

    Eigen::Vector3d target = lift(wu.points[iu[bu]].state);
    {
        const Eigen::Vector3d t2 = lift(ws.points[is[bs]].state);
        target = 0.5 * (target + (t2 + gap3));
    }

    const Equilibrium& equ = wu.equilibrium;
    const Equilibrium& eqs = ws.equilibrium;
    detail::CrossingMap cmu{equ, Side::unstable, sec, cfg,
                            wu.points[iu[bu]].t_cross};
    detail::CrossingMap cms{eqs, Side::stable, sec, cfg,
                            ws.points[is[bs]].t_cross};

    // scan each seed circle once for the phase whose crossing lands nearest
    // the candidate; the circle is only 2 pi long, so 64 probes suffice
    const auto phase_scan = [&](const detail::CrossingMap& cm) {
        double bestd = -1.0, bphi = 0.0;
        for (int k = 0; k < 64; ++k) {
            const double phi = 2.0 * pi * k / 64;
            try {
                const Vec4 x = cm(phi, target).first;
                Eigen::Vector3d v;
                for (int kk = 0; kk < 3; ++kk) v[kk] = x[act[kk]];
                const double d = (v - target).norm();
                if (bestd < 0.0 || d < bestd) {
                    bestd = d;
                    bphi = phi;
                }
            } catch (const Error&) {
            }
        }
        if (bestd < 0.0)
            throw NoIntersection("seed-circle scan found no lobe crossing");
        return bphi;
    };
    double phi_u = phase_scan(cmu);
    double phi_s = phase_scan(cms);

    // 2x2 Newton on (phi_u, phi_s): match theta and p_theta on the section
    struct GapEval {
        Eigen::Vector2d g;
        Vec4 xu, xs;
        double tu, ts;
    };
    const auto gapf = [&](double pu, double ps) {
        const auto hu = cmu(pu, target);
        const auto hs = cms(ps, target);
        return GapEval{Eigen::Vector2d(hu.first[0] - hs.first[0],
                                       hu.first[2] - hs.first[2]),
                       hu.first, hs.first, hu.second, hs.second};
    };
    GapEval ge = gapf(phi_u, phi_s);
    const double dphi = 1e-6;
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
        if (ge.g.norm() <= cfg.match_tol) {
            converged = true;
            break;
        }
        Eigen::Matrix2d J;
        J.col(0) = (gapf(phi_u + dphi, phi_s).g - ge.g) / dphi;
        J.col(1) = (gapf(phi_u, phi_s + dphi).g - ge.g) / dphi;
        const Eigen::Vector2d step = J.fullPivLu().solve(-ge.g);
        double lam = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 8; ++bt) {
            const GapEval gt =
                gapf(phi_u + lam * step[0], phi_s + lam * step[1]);
            if (gt.g.norm() < ge.g.norm()) {
                phi_u += lam * step[0];
                phi_s += lam * step[1];
                ge = gt;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!moved) break;
    }
    if (!converged && ge.g.norm() > 1e2 * cfg.match_tol) {
        std::ostringstream os;
        os << "homoclinic refinement stalled with section gap "
           << ge.g.norm();
        throw NoConvergence(os.str());
    }

    // tangents of the two slice curves at the crossing, from refined
    // flanking crossings
    const auto tangent_of = [&](const detail::CrossingMap& cm, double phi) {
        const auto [xp, tp] = cm(phi + cfg.flank, target);
        const auto [xm, tm] = cm(phi - cfg.flank, target);
        Eigen::Vector3d d;
        for (int k = 0; k < 3; ++k) d[k] = xp[act[k]] - xm[act[k]];
        const double n = d.norm();
        if (n < 1e-300)
            throw TangencyDetected(
                "slice tangent degenerated at the crossing");
        return Eigen::Vector3d(d / n);
    };
    const Eigen::Vector3d tu3 = tangent_of(cmu, phi_u);
    const Eigen::Vector3d ts3 = tangent_of(cms, phi_s);
    const double angle =
        std::atan2(tu3.cross(ts3).norm(), std::abs(tu3.dot(ts3)));
    if (angle < cfg.angle_tol) {
        std::ostringstream os;
        os << "slice curves meet at angle " << angle << " rad < "
           << cfg.angle_tol << " (no transversality at this tolerance)";
        throw TangencyDetected(os.str());
    }

    // glue: t = 0 at the crossing
    HomoclinicConnection hc;
    hc.crossing = State::from_vec(0.5 * (ge.xu + ge.xs));
    hc.angle = angle;
    hc.gap_before.setZero();
    for (int k = 0; k < 3; ++k) hc.gap_before[act[k]] = gap3[k];
    hc.phase_u = phi_u;
    hc.phase_s = phi_s;
    hc.tangent_u = tu3;
    hc.tangent_s = ts3;
    hc.T_u = ge.tu;
    hc.T_s = -ge.ts;  // stable crossing time is negative
    {
        const auto bu4 = equ.unstable_basis;
        const Vec4 su = equ.state.vec() +
                        cfg.seed_radius * (std::cos(phi_u) * bu4.col(0) +
                                           std::sin(phi_u) * bu4.col(1));
        hc.orbit_u = detail::flow(equ.params, su, -hc.T_u, 0.0, cfg.icfg);
        // the stable seed reaches the crossing backward in time; the glued
        // record runs forward from the crossing state toward the
        // equilibrium
        hc.orbit_s = detail::flow(eqs.params, ge.xs, 0.0, hc.T_s, cfg.icfg);
        hc.endpoint_residual_u =
            (hc.orbit_u.y_begin() - equ.state.vec()).norm();
        hc.endpoint_residual_s =
            (hc.orbit_s.y_end() - eqs.state.vec()).norm();
    }
    return hc;
}

struct PoincareConfig {
    double max_time = 1e5;
    double escape_bound = 1e3;  // on |theta|, |p_theta|, |p_psi|
    int complete_index = 2;     // coordinate solved from the energy level
    int complete_sign = +1;     // branch for the quadratic p_theta solve
    double chunk = 50.0;        // integration window per crossing scan
    IntegratorConfig icfg{};
};

// Solve one coordinate of `seed` so that it lies exactly on the section and
// on the energy level H = E.
inline State complete_on_section(const Params& p, const SectionSpec& sec,
                                 State seed, double energy,
                                 const PoincareConfig& cfg = {}) {
    Vec4 x = seed.vec();
    x[sec.index] = sec.value;
    const int j = cfg.complete_index;
    if (j == sec.index)
        throw std::invalid_argument(
            "completion coordinate coincides with the section coordinate");
    if (j == 2) {
        // closed form: H = p_theta^2 / 2 + rest
        Vec4 x0 = x;
        x0[2] = 0.0;
        const double rest = hamiltonian(State::from_vec(x0), p);
        const double disc = 2.0 * (energy - rest);
        if (disc < 0.0) {
            std::ostringstream os;
            os << "seed cannot reach the energy level: H at p_theta = 0 "
                  "already exceeds E by "
               << (rest - energy);
            throw NoConvergence(os.str());
        }
        x[2] = cfg.complete_sign * std::sqrt(disc);
    } else {
        // scalar Newton on the chosen coordinate
        double v = x[j];
        for (int it = 0; it < 80; ++it) {
            Vec4 xt = x;
            xt[j] = v;
            const double f = hamiltonian(State::from_vec(xt), p) - energy;
            if (std::abs(f) < 1e-14) break;
            const double hstep = 1e-7 * std::max(1.0, std::abs(v));
            xt[j] = v + hstep;
            const double fp = hamiltonian(State::from_vec(xt), p) - energy;
            const double df = (fp - f) / hstep;
            if (std::abs(df) < 1e-300)
                throw NoConvergence(
                    "energy completion hit a critical point");
            v -= f / df;
        }
        x[j] = v;
        if (std::abs(hamiltonian(State::from_vec(x), p) - energy) > 1e-10)
            throw NoConvergence(
                "energy completion did not reach the level set");
    }
    return State::from_vec(x);
}

// First-return map data: successive transversal section crossings of each
// seed's trajectory, refined in time to 1e-10.
inline SectionSlice poincare_map(const Params& p, double energy,
                                 const SectionSpec& sec,
                                 const std::vector<State>& seeds,
                                 int n_crossings,
                                 const PoincareConfig& cfg = {}) {
    SectionSlice out;
    out.section = sec;
    out.params = p;
    out.energy = energy;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        const State s0 = complete_on_section(p, sec, seeds[si], energy, cfg);
        const double g0 = std::abs(section_g(sec, s0.vec()));
        const double e0 =
            std::abs(hamiltonian(s0, p) - energy);
        if (g0 > 1e-10 || e0 > 1e-10) {
            std::ostringstream os;
            os << "seed " << si << " off section (" << g0
               << ") or off energy level (" << e0 << ") after completion";
            throw NoConvergence(os.str());
        }

        // a seed at a fixed point of the flow is a fixed point of the map
        if (vector_field(s0, p).vec().norm() < 1e-10) {
            for (int k = 0; k < n_crossings; ++k)
                out.points.push_back(
                    {static_cast<int>(si), double(si), s0, 0.0});
            continue;
        }

        Vec4 x = s0.vec();
        double t = 0.0;
        int found = 0;
        while (found < n_crossings && t < cfg.max_time) {
            const auto tr = detail::flow(p, x, t, t + cfg.chunk, cfg.icfg);
            for (const auto& ts : tr.states()) {
                if (std::max({std::abs(ts[0]), std::abs(ts[2]),
                              std::abs(ts[3])}) > cfg.escape_bound) {
                    std::ostringstream os;
                    os << "seed " << si << " escaped beyond "
                       << cfg.escape_bound << " before t = " << cfg.max_time;
                    throw EscapeDetected(os.str());
                }
            }
            std::vector<std::pair<double, Vec4>> cross;
            detail::scan_crossings(tr, sec, cross);
            for (const auto& c : cross) {
                if (c.first <= t + 1e-9) continue;  // skip the start point
                out.points.push_back({static_cast<int>(si), double(si),
                                      State::from_vec(c.second), c.first});
                if (++found >= n_crossings) break;
            }
            t += cfg.chunk;
            x = tr.y_end();
        }
        if (found < n_crossings) {
            std::ostringstream os;
            os << "seed " << si << " produced only " << found << " of "
               << n_crossings << " crossings within t <= " << cfg.max_time;
            throw NoConvergence(os.str());
        }
    }
    return out;
}

} // namespace magrod

#endif
