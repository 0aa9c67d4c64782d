#include <catch2/catch_amalgamated.hpp>

#include "magrod/manifolds.hpp"

using namespace magrod;

namespace {

const Params figure = Params::direct(0.5, 0.1, 0.01, 0.01, 0.0);

Equilibrium refined_figure_eq() {
    const auto seeds = hyperbolic_equilibria(figure.alpha, figure.mu);
    return refine_equilibrium(figure, seeds[0].state);
}

} // namespace

TEST_CASE("equilibrium refinement under the full perturbation") {
    const Equilibrium eq = refined_figure_eq();
    CHECK(eq.state.theta == Catch::Approx(0.546818560).epsilon(1e-8));
    CHECK(eq.state.psi == Catch::Approx(0.0).margin(1e-12));
    CHECK(eq.state.p_theta == Catch::Approx(0.0).margin(1e-12));
    CHECK(eq.state.p_psi == Catch::Approx(0.861773548).epsilon(1e-8));
    CHECK(vector_field(eq.state, figure).vec().norm() < 1e-11);
    CHECK(hamiltonian(eq.state, figure) ==
          Catch::Approx(0.568170293949725).epsilon(1e-12));
    CHECK(eq.eigenvalues[0].real() == Catch::Approx(0.56494002).epsilon(1e-7));
    CHECK(eq.eigenvalues[0].imag() == Catch::Approx(0.46833772).epsilon(1e-7));
    // the spectrum keeps the saddle-focus symmetry under perturbation
    CHECK(std::abs(eq.eigenvalues[0] + eq.eigenvalues[3]) < 1e-10);
    CHECK(std::abs(eq.eigenvalues[1] + eq.eigenvalues[2]) < 1e-10);
}

TEST_CASE("equilibria exist only above the magnetic-moment boundary") {
    const auto mk = [](double mu) {
        return Params::direct(0.5, mu, 0.01, 0.01, 0.0);
    };
    const auto seeds = hyperbolic_equilibria(0.5, 0.021);
    const Equilibrium eq = refine_equilibrium(mk(0.021), seeds[0].state);
    CHECK(eq.state.theta == Catch::Approx(0.068684).epsilon(1e-4));
    CHECK(eq.state.p_psi == Catch::Approx(0.997789).epsilon(1e-5));
    const auto seeds2 = hyperbolic_equilibria(0.5, 0.019);
    CHECK_THROWS_AS(refine_equilibrium(mk(0.019), seeds2[0].state),
                    NoEquilibrium);
}

TEST_CASE("boundary-value setup is validated") {
    const Equilibrium eq = refined_figure_eq();
    BvpSetup su = make_bvp(eq, Side::unstable, 20.0, Vec4::Zero());
    su.segments = 100;
    CHECK_THROWS_AS(detail::validate_setup(su), std::invalid_argument);
    su.segments = 8;
    su.seed_radius = 1e-2;
    CHECK_THROWS_AS(detail::validate_setup(su), std::invalid_argument);
    su.seed_radius = 1e-5;
    su.T = -1.0;
    CHECK_THROWS_AS(detail::validate_setup(su), std::invalid_argument);
    // swapping in the wrong frame is caught by the annihilation test
    su.T = 20.0;
    su.frame = eq.unstable_frame;
    CHECK_THROWS_AS(detail::validate_setup(su), std::invalid_argument);
}

TEST_CASE("initial connecting orbits leave and enter along the eigenplanes") {
    const Equilibrium eq = refined_figure_eq();
    SheetConfig cfg;

    const auto u = initial_sheet_orbit(eq, Side::unstable, cfg, 0.0);
    CHECK(u.T == Catch::Approx(22.775303).epsilon(1e-5));
    CHECK(u.residual < cfg.bvp_tol);
    CHECK((u.x_near() - eq.state.vec()).norm() <
          5.0 * cfg.seed_radius);
    const Vec4 far = u.x_far();
    CHECK(far[0] == Catch::Approx(1.936844).epsilon(1e-5));
    CHECK(far[2] == Catch::Approx(0.477214).epsilon(1e-5));
    CHECK(far[3] == Catch::Approx(0.429125).epsilon(1e-5));
    // the orbit lives on the equilibrium energy level
    const double E = hamiltonian(eq.state, figure);
    CHECK(hamiltonian(State::from_vec(far), figure) ==
          Catch::Approx(E).margin(1e-8));

    const auto s = initial_sheet_orbit(eq, Side::stable, cfg, 0.0);
    CHECK(s.T == Catch::Approx(26.491095).epsilon(1e-5));
    CHECK(s.residual < cfg.bvp_tol);
    CHECK(hamiltonian(State::from_vec(s.x_far()), figure) ==
          Catch::Approx(E).margin(1e-8));
}

TEST_CASE("continuation walks a coherent one-parameter family") {
    const Equilibrium eq = refined_figure_eq();
    SheetConfig cfg;
    const auto init = initial_sheet_orbit(eq, Side::unstable, cfg, 0.0);
    const auto plus = continue_sheet(eq, init, Side::unstable, +1, 3, cfg);
    const auto minus = continue_sheet(eq, init, Side::unstable, -1, 3, cfg);
    REQUIRE(plus.orbits.size() == 4);
    REQUIRE(minus.orbits.size() == 4);

    const auto sheet = merge_sheets(plus, minus);
    REQUIRE(sheet.orbits.size() == 7);  // shared initial orbit deduplicated
    const double E = hamiltonian(eq.state, figure);
    for (std::size_t i = 0; i < sheet.orbits.size(); ++i) {
        const auto& o = sheet.orbits[i];
        if (i > 0)
            CHECK(o.cont_param > sheet.orbits[i - 1].cont_param);
        CHECK(o.residual < cfg.bvp_tol);
        CHECK(hamiltonian(State::from_vec(o.x_far()), figure) ==
              Catch::Approx(E).margin(1e-8));
        // eval() parameterizes the orbit over its own time interval
        CHECK((o.eval(o.t0) - o.x_near()).norm() < 1e-12);
        CHECK((o.eval(o.t0 + o.T) - o.x_far()).norm() < 1e-12);
    }
}

TEST_CASE("without perturbation the sheet stays inside both level sets") {
    const Params p = Params::direct(0.5, 0.1, 0.01, 0.0, 0.0);
    const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
    const Equilibrium eq = refine_equilibrium(p, seeds[0].state);
    SheetConfig cfg;
    const auto init = initial_sheet_orbit(eq, Side::unstable, cfg, 0.7);
    const auto sheet = continue_sheet(eq, init, Side::unstable, +1, 4, cfg);
    const double E = hamiltonian(eq.state, p);
    const double F = first_integral(eq.state, p);
    for (const auto& o : sheet.orbits) {
        CHECK(hamiltonian(State::from_vec(o.x_far()), p) ==
              Catch::Approx(E).margin(1e-8));
        CHECK(first_integral(State::from_vec(o.x_far()), p) ==
              Catch::Approx(F).margin(1e-6));
    }
}

TEST_CASE("section slices satisfy the section and energy equations") {
    const Equilibrium eq = refined_figure_eq();
    SheetConfig cfg;
    const auto init = initial_sheet_orbit(eq, Side::unstable, cfg, 0.0);
    const auto sheet = continue_sheet(eq, init, Side::unstable, +1, 3, cfg);

    SectionSpec psi0;  // defaults: the angle section psi = 0
    const auto sl = slice(sheet, psi0);
    REQUIRE(!sl.points.empty());
    CHECK(sl.energy == Catch::Approx(hamiltonian(eq.state, figure)));
    for (const auto& q : sl.points) {
        CHECK(std::abs(wrap_angle(q.state.psi)) < 1e-9);
        CHECK(q.t_cross > 0.0);  // unstable orbits run forward from the saddle
        CHECK(hamiltonian(q.state, figure) ==
              Catch::Approx(sl.energy).margin(1e-8));
        CHECK(q.orbit_id < static_cast<int>(sheet.orbits.size()));
    }

    SectionSpec pth;
    pth.angle = false;
    pth.index = 2;
    pth.value = 0.0;
    const auto sl2 = slice(sheet, pth);
    for (const auto& q : sl2.points)
        CHECK(std::abs(q.state.p_theta) < 1e-9);

    // stable-side crossing times are negative: those orbits run into the
    // saddle as t increases to 0
    const auto inits = initial_sheet_orbit(eq, Side::stable, cfg, 0.0);
    const auto ssheet = continue_sheet(eq, inits, Side::stable, -1, 2, cfg);
    const auto sls = slice(ssheet, psi0);
    REQUIRE(!sls.points.empty());
    for (const auto& q : sls.points) CHECK(q.t_cross < 0.0);
}

TEST_CASE("a branch that walks into the pole stalls out") {
    const Equilibrium eq = refined_figure_eq();
    SheetConfig cfg;
    cfg.step = 0.1;
    const auto init = initial_sheet_orbit(eq, Side::unstable, cfg, 0.0);
    CHECK_THROWS_AS(continue_sheet(eq, init, Side::unstable, +1, 60, cfg),
                    StallOut);
    cfg.return_partial_on_stall = true;
    const auto part = continue_sheet(eq, init, Side::unstable, +1, 60, cfg);
    CHECK(part.orbits.size() > 10);
    CHECK(part.orbits.size() < 61);
}

TEST_CASE("slices that never come close are reported as disjoint") {
    const Equilibrium eq = refined_figure_eq();
    SheetConfig cfg;
    const auto iu = initial_sheet_orbit(eq, Side::unstable, cfg, 0.0);
    const auto su = slice(continue_sheet(eq, iu, Side::unstable, +1, 3, cfg),
                          cfg.section);
    const auto is = initial_sheet_orbit(eq, Side::stable, cfg, 0.0);
    const auto ss = slice(continue_sheet(eq, is, Side::stable, -1, 3, cfg),
                          cfg.section);
    CHECK_THROWS_AS(detect_homoclinic(su, ss, {}), NoIntersection);
}

TEST_CASE("return map fixed point and invariant spread") {
    SectionSpec sec;  // psi = 0 crossings
    PoincareConfig pc;
    pc.max_time = 5000.0;

    // seeding at the equilibrium returns the fixed point verbatim
    const Equilibrium eq = refined_figure_eq();
    const double E = hamiltonian(eq.state, figure);
    const auto fp = poincare_map(figure, E, sec, {eq.state}, 5, pc);
    REQUIRE(fp.points.size() == 5);
    for (const auto& q : fp.points)
        CHECK((q.state.vec() - eq.state.vec()).norm() < 1e-10);

    // integrable flow: the first integral is constant across returns
    const Params integ = Params::direct(0.5, 0.1, 0.01, 0.0, 0.0);
    const auto seeds = hyperbolic_equilibria(integ.alpha, integ.mu);
    const Equilibrium eqi = refine_equilibrium(integ, seeds[0].state);
    const double Ei = hamiltonian(eqi.state, integ);
    const State seed =
        complete_on_section(integ, sec, {1.2, 0.0, 0.0, 0.70}, Ei, pc);
    CHECK(seed.p_theta > 0.0);
    CHECK(hamiltonian(seed, integ) == Catch::Approx(Ei).margin(1e-12));
    const auto sl = poincare_map(integ, Ei, sec, {seed}, 15, pc);
    REQUIRE(sl.points.size() == 15);
    const double F0 = first_integral(seed, integ);
    for (const auto& q : sl.points) {
        CHECK(std::abs(first_integral(q.state, integ) - F0) < 1e-8);
        CHECK(std::abs(wrap_angle(q.state.psi)) < 1e-9);
        CHECK(hamiltonian(q.state, integ) == Catch::Approx(Ei).margin(1e-8));
    }

    // perturbed flow: returns wander but stay on the energy level
    const auto slp = poincare_map(figure, E, sec,
                                  {complete_on_section(
                                      figure, sec, {2.2, 0.0, 0.0, 0.26}, E,
                                      pc)},
                                  30, pc);
    REQUIRE(slp.points.size() == 30);
    for (const auto& q : slp.points)
        CHECK(hamiltonian(q.state, figure) == Catch::Approx(E).margin(1e-7));
}
